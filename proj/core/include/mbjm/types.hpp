#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mbjm {

// Ingestion-time transform applied to a biomarker column.
struct Transform {
    enum class Kind { Identity, Log, Sqrt, AffinePower };
    Kind kind = Kind::Identity;
    // AffinePower: y = (scale * x + shift)^power
    double scale = 1.0, shift = 0.0, power = 1.0;

    double apply(double x) const {
        switch (kind) {
            case Kind::Identity: return x;
            case Kind::Log: return std::log(x);
            case Kind::Sqrt: return std::sqrt(x);
            case Kind::AffinePower: return std::pow(scale * x + shift, power);
        }
        return x;
    }
    static Transform identity() { return {}; }
    static Transform log() { return {Kind::Log}; }
    static Transform sqrt() { return {Kind::Sqrt}; }
};

enum class BiomarkerKind { Continuous, CategoricalBinary };

struct BiomarkerSpec {
    std::string name;
    BiomarkerKind kind = BiomarkerKind::Continuous;
    Transform transform;
    int layer_index = 0;  // 1..M
};

struct VisitRow {
    double time = 0.0;  // years since baseline
    // one entry per biomarker, in biomarker_specs order; nullopt = missing
    std::vector<std::optional<double>> values;
};

struct SubjectRecord {
    std::string subject_id;
    std::vector<double> covariates;  // V
    double observed_time = 0.0;      // T = min(Ttilde, C)
    int event_indicator = 0;         // delta
    std::vector<VisitRow> visits;    // sorted by time, t < T
};

struct LongitudinalDataset {
    std::vector<SubjectRecord> subjects;
    std::vector<BiomarkerSpec> biomarker_specs;
    std::vector<std::string> covariate_names;

    std::size_t n_subjects() const { return subjects.size(); }
    std::size_t n_biomarkers() const { return biomarker_specs.size(); }
    std::size_t n_events() const {
        std::size_t k = 0;
        for (const auto& s : subjects) k += s.event_indicator;
        return k;
    }
};

enum class ModelVariant { EX, TP };
enum class GTransform { Identity, Log, Sqrt };
enum class RandomEffects { Intercept, InterceptSlope };

inline double apply_g(GTransform g, double t) {
    switch (g) {
        case GTransform::Identity: return t;
        case GTransform::Log: return std::log(t);
        case GTransform::Sqrt: return std::sqrt(t);
    }
    return t;
}

struct ModelConfig {
    ModelVariant variant = ModelVariant::EX;
    double tau_max = std::numeric_limits<double>::infinity();  // finite iff TP
    GTransform g_transform = GTransform::Identity;
    RandomEffects random_effects = RandomEffects::Intercept;
    int quadrature_nodes = 15;       // Q
    int integration_nodes = 64;      // initial Gauss-Legendre panel size
    double integration_rel_tol = 1e-6;
    int integration_max_nodes = 4096;
    int bootstrap_reps = 200;        // B
    std::uint64_t rng_seed = 12345;

    void check() const {
        const bool finite_tau = std::isfinite(tau_max);
        if ((variant == ModelVariant::TP) != finite_tau)
            throw std::invalid_argument("tau_max must be finite iff variant is TP");
        if (quadrature_nodes < 5) throw std::invalid_argument("quadrature_nodes must be >= 5");
        if (bootstrap_reps < 1) throw std::invalid_argument("bootstrap_reps must be >= 1");
    }
};

}  // namespace mbjm
