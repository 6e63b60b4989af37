#include "mbjm/serialize.hpp"

#include <cctype>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace mbjm {

using nlohmann::json;

namespace {

// All document-level entry points funnel through this so that malformed
// text and missing/mistyped keys surface as ParseError rather than the
// json library's own exception hierarchy.
json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("json: ") + e.what());
    }
}

[[noreturn]] void rethrow_parse(const json::exception& e) {
    throw ParseError(std::string("json: ") + e.what());
}

json vec_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Eigen::VectorXd vec_from_json(const json& a) {
    Eigen::VectorXd v((Eigen::Index)a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v(i) = a[i].get<double>();
    return v;
}

json mat_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

Eigen::MatrixXd mat_from_json(const json& rows) {
    const int r = (int)rows.size();
    const int c = r > 0 ? (int)rows[0].size() : 0;
    Eigen::MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = rows[i][j].get<double>();
    return m;
}

json layer_to_json(const LayerFit& layer) {
    json j;
    j["layer"] = layer.design.layer;
    j["n_covariates"] = layer.design.n_covariates;
    j["n_prev"] = layer.design.n_prev;
    j["has_g_column"] = layer.design.has_g_column;
    j["random_slope"] = layer.design.random_slope;
    j["kind"] = layer.is_glmm ? "logistic" : "linear";
    if (layer.is_glmm) {
        j["beta"] = vec_to_json(layer.glmm.beta);
        j["omega"] = mat_to_json(layer.glmm.omega);
        j["loglik"] = layer.glmm.loglik;
    } else {
        j["beta"] = vec_to_json(layer.lmm.beta);
        j["omega"] = mat_to_json(layer.lmm.omega);
        j["sigma2"] = layer.lmm.sigma2;
        j["loglik"] = layer.lmm.loglik;
    }
    return j;
}

LayerFit layer_from_json(const json& j, GTransform g) {
    LayerFit layer;
    layer.design.layer = j.at("layer");
    layer.design.n_covariates = j.at("n_covariates");
    layer.design.n_prev = j.at("n_prev");
    layer.design.has_g_column = j.at("has_g_column");
    layer.design.random_slope = j.at("random_slope");
    layer.design.g = g;
    layer.is_glmm = j.at("kind") == "logistic";
    if (layer.is_glmm) {
        layer.glmm.beta = vec_from_json(j.at("beta"));
        layer.glmm.omega = mat_from_json(j.at("omega"));
        layer.glmm.loglik = j.value("loglik", 0.0);
    } else {
        layer.lmm.beta = vec_from_json(j.at("beta"));
        layer.lmm.omega = mat_from_json(j.at("omega"));
        layer.lmm.sigma2 = j.at("sigma2");
        layer.lmm.loglik = j.value("loglik", 0.0);
    }
    return layer;
}

std::string g_name(GTransform g) {
    switch (g) {
        case GTransform::Identity: return "identity";
        case GTransform::Log: return "log";
        case GTransform::Sqrt: return "sqrt";
    }
    return "identity";
}

GTransform g_from_name(const std::string& s) {
    if (s == "log") return GTransform::Log;
    if (s == "sqrt") return GTransform::Sqrt;
    if (s == "identity") return GTransform::Identity;
    throw std::invalid_argument("unknown g transform: " + s);
}

json config_to_json(const ModelConfig& c) {
    json j;
    j["variant"] = c.variant == ModelVariant::TP ? "TP" : "EX";
    if (std::isfinite(c.tau_max)) j["tau_max"] = c.tau_max;
    j["g_transform"] = g_name(c.g_transform);
    j["random_effects"] =
        c.random_effects == RandomEffects::InterceptSlope ? "intercept+slope" : "intercept";
    j["quadrature_nodes"] = c.quadrature_nodes;
    j["integration_nodes"] = c.integration_nodes;
    j["integration_rel_tol"] = c.integration_rel_tol;
    j["integration_max_nodes"] = c.integration_max_nodes;
    j["bootstrap_reps"] = c.bootstrap_reps;
    j["rng_seed"] = c.rng_seed;
    return j;
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    std::string variant = j.value("variant", "ex");
    for (auto& ch : variant) ch = (char)std::tolower((unsigned char)ch);
    if (variant == "tp") c.variant = ModelVariant::TP;
    else if (variant == "ex") c.variant = ModelVariant::EX;
    else throw std::invalid_argument("unknown model variant: " + variant);
    c.tau_max = j.value("tau_max", std::numeric_limits<double>::infinity());
    if (c.variant == ModelVariant::EX) c.tau_max = std::numeric_limits<double>::infinity();
    c.g_transform = g_from_name(j.value("g_transform", "identity"));
    c.random_effects = j.value("random_effects", "intercept") == "intercept+slope"
                           ? RandomEffects::InterceptSlope
                           : RandomEffects::Intercept;
    c.quadrature_nodes = j.value("quadrature_nodes", 15);
    c.integration_nodes = j.value("integration_nodes", 64);
    c.integration_rel_tol = j.value("integration_rel_tol", 1e-6);
    c.integration_max_nodes = j.value("integration_max_nodes", 4096);
    c.bootstrap_reps = j.value("bootstrap_reps", 200);
    c.rng_seed = j.value("rng_seed", (std::uint64_t)12345);
    return c;
}

}  // namespace

std::string model_to_json(const FittedMbjm& model) {
    json j;
    j["survival"]["shape"] = model.survival.shape;
    j["survival"]["coefficients"] = vec_to_json(model.survival.coefficients);
    j["survival"]["covariate_names"] = model.survival.covariate_names;
    j["config"] = config_to_json(model.config);
    j["covariate_names"] = model.covariate_names;
    j["layer_names"] = model.layer_names;
    j["layer_to_biomarker"] = model.layer_to_biomarker;
    j["unified_group_size"] = model.unified_group_size;
    j["lts_count"] = model.lts_count;
    json layers = json::array();
    for (const auto& l : model.layers) layers.push_back(layer_to_json(l));
    j["layers"] = layers;
    if (!model.lts_layers.empty()) {
        json lts = json::array();
        for (const auto& l : model.lts_layers) lts.push_back(layer_to_json(l));
        j["lts_layers"] = lts;
    }
    return j.dump(2);
}

FittedMbjm model_from_json(const std::string& text) {
    const json j = parse_json(text);
    try {
        FittedMbjm model;
        model.survival.shape = j.at("survival").at("shape");
        model.survival.coefficients = vec_from_json(j.at("survival").at("coefficients"));
        model.survival.covariate_names =
            j.at("survival").at("covariate_names").get<std::vector<std::string>>();
        model.config = config_from_json(j.at("config"));
        model.covariate_names = j.at("covariate_names").get<std::vector<std::string>>();
        model.layer_names = j.at("layer_names").get<std::vector<std::string>>();
        model.layer_to_biomarker = j.at("layer_to_biomarker").get<std::vector<int>>();
        model.unified_group_size = j.value("unified_group_size", (std::size_t)0);
        model.lts_count = j.value("lts_count", (std::size_t)0);
        for (const auto& l : j.at("layers"))
            model.layers.push_back(layer_from_json(l, model.config.g_transform));
        if (j.contains("lts_layers"))
            for (const auto& l : j.at("lts_layers"))
                model.lts_layers.push_back(layer_from_json(l, model.config.g_transform));
        return model;
    } catch (const json::exception& e) {
        rethrow_parse(e);
    }
}

std::string bootstrap_to_json(const BootstrapResult& result) {
    json j;
    j["parameter_names"] = result.parameter_names;
    j["point_estimate"] = result.point_estimate;
    j["standard_error"] = result.standard_error;
    j["replicates"] = result.replicates;
    j["n_failed"] = result.n_failed;
    j["se_defined"] = result.se_defined;
    return j.dump();
}

BootstrapResult bootstrap_from_json(const std::string& text) {
    const json j = parse_json(text);
    try {
        BootstrapResult r;
        r.parameter_names = j.at("parameter_names").get<std::vector<std::string>>();
        r.point_estimate = j.at("point_estimate").get<std::vector<double>>();
        r.standard_error = j.at("standard_error").get<std::vector<double>>();
        r.replicates = j.at("replicates").get<std::vector<std::vector<double>>>();
        r.n_failed = j.value("n_failed", (std::size_t)0);
        r.se_defined = j.value("se_defined", true);
        return r;
    } catch (const json::exception& e) {
        rethrow_parse(e);
    }
}

RunConfig run_config_from_json(const std::string& text) {
    const json j = parse_json(text);
    try {
        RunConfig rc;
        const json& cols = j.at("columns");
        rc.schema.subject_id_col = cols.value("subject_id", "subject_id");
        rc.schema.time_col = cols.value("time", "time");
        rc.schema.event_time_col = cols.value("event_time", "event_time");
        rc.schema.event_indicator_col = cols.value("event_indicator", "event_indicator");
        rc.schema.covariate_cols = cols.at("covariates").get<std::vector<std::string>>();
        rc.schema.time_rescale = j.value("time_rescale", 1.0);
        int next_layer = 1;
        for (const auto& b : j.at("biomarkers")) {
            BiomarkerSpec spec;
            spec.name = b.at("column");
            const std::string kind = b.value("kind", "continuous");
            spec.kind = kind == "categorical" ? BiomarkerKind::CategoricalBinary
                                              : BiomarkerKind::Continuous;
            const std::string tf = b.value("transform", "identity");
            if (tf == "log") spec.transform = Transform::log();
            else if (tf == "sqrt") spec.transform = Transform::sqrt();
            else if (tf == "affine-power") {
                spec.transform.kind = Transform::Kind::AffinePower;
                spec.transform.scale = b.value("scale", 1.0);
                spec.transform.shift = b.value("shift", 0.0);
                spec.transform.power = b.value("power", 1.0);
            }
            spec.layer_index = b.value("layer", next_layer);
            ++next_layer;
            rc.schema.biomarkers.push_back(spec);
        }
        if (j.contains("model")) rc.model = config_from_json(j.at("model"));
        return rc;
    } catch (const json::exception& e) {
        rethrow_parse(e);
    }
}

std::string run_config_to_json(const RunConfig& rc) {
    json j;
    j["columns"]["subject_id"] = rc.schema.subject_id_col;
    j["columns"]["time"] = rc.schema.time_col;
    j["columns"]["event_time"] = rc.schema.event_time_col;
    j["columns"]["event_indicator"] = rc.schema.event_indicator_col;
    j["columns"]["covariates"] = rc.schema.covariate_cols;
    j["time_rescale"] = rc.schema.time_rescale;
    json bios = json::array();
    for (const auto& b : rc.schema.biomarkers) {
        json jb;
        jb["column"] = b.name;
        jb["kind"] = b.kind == BiomarkerKind::CategoricalBinary ? "categorical" : "continuous";
        jb["layer"] = b.layer_index;
        switch (b.transform.kind) {
            case Transform::Kind::Identity: jb["transform"] = "identity"; break;
            case Transform::Kind::Log: jb["transform"] = "log"; break;
            case Transform::Kind::Sqrt: jb["transform"] = "sqrt"; break;
            case Transform::Kind::AffinePower:
                jb["transform"] = "affine-power";
                jb["scale"] = b.transform.scale;
                jb["shift"] = b.transform.shift;
                jb["power"] = b.transform.power;
                break;
        }
        bios.push_back(jb);
    }
    j["biomarkers"] = bios;
    j["model"] = config_to_json(rc.model);
    return j.dump(2);
}

SimScenario scenario_from_json(const std::string& text) {
    const json j = parse_json(text);
    try {
        const std::string kind = j.value("kind", "mbjm-ex");
        const int n = j.value("n", 500);
        const std::uint64_t seed = j.value("seed", (std::uint64_t)1);
        SimScenario sc;
        if (kind == "mbjm-ex") sc = SimScenario::default_mbjm_ex(n, seed);
        else if (kind == "mbjm-tp") sc = SimScenario::default_mbjm_tp(n, seed);
        else if (kind == "sjm") sc = SimScenario::default_sjm(n, seed);
        else throw std::invalid_argument("unknown scenario kind: " + kind);
        sc.target_censoring = j.value("target_censoring", sc.target_censoring);
        if (j.contains("tau_max")) sc.tau_max = j.at("tau_max");
        sc.visit_spacing = j.value("visit_spacing", sc.visit_spacing);
        sc.visit_jitter = j.value("visit_jitter", sc.visit_jitter);
        sc.max_followup = j.value("max_followup", sc.max_followup);
        if (j.contains("weibull_shape")) sc.weibull_shape = j.at("weibull_shape");
        if (j.contains("weibull_gamma")) sc.weibull_gamma = vec_from_json(j.at("weibull_gamma"));
        return sc;
    } catch (const json::exception& e) {
        rethrow_parse(e);
    }
}

std::string scenario_to_json(const SimScenario& sc) {
    json j;
    switch (sc.kind) {
        case SimScenario::Kind::MbjmEx: j["kind"] = "mbjm-ex"; break;
        case SimScenario::Kind::MbjmTp: j["kind"] = "mbjm-tp"; break;
        case SimScenario::Kind::Sjm: j["kind"] = "sjm"; break;
    }
    j["n"] = sc.n;
    j["seed"] = sc.seed;
    j["target_censoring"] = sc.target_censoring;
    if (std::isfinite(sc.tau_max)) j["tau_max"] = sc.tau_max;
    j["visit_spacing"] = sc.visit_spacing;
    j["visit_jitter"] = sc.visit_jitter;
    j["max_followup"] = sc.max_followup;
    j["weibull_shape"] = sc.weibull_shape;
    j["weibull_gamma"] = vec_to_json(sc.weibull_gamma);
    return j.dump(2);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << content;
}

}  // namespace mbjm
