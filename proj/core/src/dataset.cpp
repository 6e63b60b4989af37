#include "mbjm/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace mbjm {

std::size_t ValidationReport::count(const std::string& invariant) const {
    std::size_t c = 0;
    for (const auto& v : violations)
        if (v.invariant == invariant) ++c;
    return c;
}

std::string ValidationReport::summary() const {
    std::ostringstream os;
    os << "checked " << n_subjects_checked << " subjects, " << violations.size()
       << " violation(s)\n";
    for (const auto& v : violations)
        os << "  [" << v.invariant << "] subject " << v.subject_id << ": " << v.detail << "\n";
    return os.str();
}

ValidationReport validate_dataset(const LongitudinalDataset& ds) {
    ValidationReport rep;
    rep.n_subjects_checked = ds.subjects.size();
    const std::size_t M = ds.biomarker_specs.size();
    const std::size_t p = ds.covariate_names.size();

    // layer indices must form exactly {1..M}
    std::set<int> layers;
    for (const auto& spec : ds.biomarker_specs) layers.insert(spec.layer_index);
    if (M > 0 && (layers.size() != M || *layers.begin() != 1 || *layers.rbegin() != (int)M))
        rep.violations.push_back({"layer-index-set", "<config>",
                                  "layer_index values do not form {1..M}"});

    std::size_t n_events = 0;
    for (const auto& s : ds.subjects) {
        n_events += s.event_indicator;
        if (s.covariates.size() != p)
            rep.violations.push_back({"covariate-dimension", s.subject_id,
                                      "covariate vector length mismatch"});
        if (!(s.observed_time > 0))
            rep.violations.push_back({"positive-observed-time", s.subject_id,
                                      "T <= 0"});
        if (s.event_indicator != 0 && s.event_indicator != 1)
            rep.violations.push_back({"event-indicator-binary", s.subject_id,
                                      "delta not in {0,1}"});
        double prev = -1.0;
        for (const auto& visit : s.visits) {
            if (visit.time < 0 || visit.time >= s.observed_time) {
                std::ostringstream d;
                d << "visit time " << visit.time << " outside [0, T=" << s.observed_time << ")";
                rep.violations.push_back({"visit-time-range", s.subject_id, d.str()});
            }
            if (visit.time <= prev)
                rep.violations.push_back({"visit-times-increasing", s.subject_id,
                                          "visit times not strictly increasing"});
            prev = visit.time;
            if (visit.values.size() != M)
                rep.violations.push_back({"visit-value-count", s.subject_id,
                                          "value count != biomarker count"});
            for (std::size_t m = 0; m < std::min(visit.values.size(), M); ++m) {
                const auto& v = visit.values[m];
                if (!v) continue;
                if (!std::isfinite(*v))
                    rep.violations.push_back({"finite-values", s.subject_id,
                                              ds.biomarker_specs[m].name + " not finite"});
                else if (ds.biomarker_specs[m].kind == BiomarkerKind::CategoricalBinary &&
                         *v != 0.0 && *v != 1.0)
                    rep.violations.push_back({"categorical-binary", s.subject_id,
                                              ds.biomarker_specs[m].name + " not in {0,1}"});
            }
        }
    }
    if (!ds.subjects.empty() && n_events == 0)
        rep.violations.push_back({"at-least-one-event", "<dataset>", "no events observed"});
    return rep;
}

FoldSplit split_folds(const LongitudinalDataset& ds, int k, std::uint64_t seed) {
    const std::size_t n = ds.subjects.size();
    if (k < 2) throw std::invalid_argument("split_folds: k must be >= 2");
    if ((std::size_t)k > n) throw std::invalid_argument("split_folds: k exceeds subject count");

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);

    FoldSplit split;
    split.k = k;
    split.assignment.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) split.assignment[perm[i]] = (int)(i % k);
    return split;
}

std::vector<std::size_t> FoldSplit::train_indices(int fold) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < assignment.size(); ++i)
        if (assignment[i] != fold) idx.push_back(i);
    return idx;
}

std::vector<std::size_t> FoldSplit::test_indices(int fold) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < assignment.size(); ++i)
        if (assignment[i] == fold) idx.push_back(i);
    return idx;
}

LongitudinalDataset subset(const LongitudinalDataset& ds, const std::vector<std::size_t>& idx) {
    LongitudinalDataset out;
    out.biomarker_specs = ds.biomarker_specs;
    out.covariate_names = ds.covariate_names;
    out.subjects.reserve(idx.size());
    for (auto i : idx) out.subjects.push_back(ds.subjects.at(i));
    return out;
}

}  // namespace mbjm
