#include "mbjm/engine.hpp"

#include <algorithm>
#include <cmath>

#include "mbjm/quadrature.hpp"

namespace mbjm {

namespace {

// Biomarker indices sorted by layer_index.
std::vector<int> layer_order(const LongitudinalDataset& ds) {
    std::vector<int> order(ds.biomarker_specs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = (int)i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return ds.biomarker_specs[a].layer_index < ds.biomarker_specs[b].layer_index;
    });
    return order;
}

// Complete-case rows for layer m (0-based position in layer order): the
// outcome and all lower-layer values must be present at a visit.
SubjectRows build_subject_rows(const SubjectRecord& subject, const std::vector<int>& order,
                               int m, const LayerDesign& design, double g_value) {
    const int p = design.fixed_dim();
    const int q = design.random_dim();
    std::vector<const VisitRow*> usable;
    for (const auto& visit : subject.visits) {
        bool ok = true;
        for (int l = 0; l <= m && ok; ++l)
            if (!visit.values[order[l]]) ok = false;
        if (ok) usable.push_back(&visit);
    }
    SubjectRows rows;
    rows.X.resize(usable.size(), p);
    rows.U.resize(usable.size(), q);
    rows.y.resize(usable.size());
    for (std::size_t j = 0; j < usable.size(); ++j) {
        const VisitRow& visit = *usable[j];
        int c = 0;
        rows.X(j, c++) = 1.0;
        rows.X(j, c++) = visit.time;
        for (double v : subject.covariates) rows.X(j, c++) = v;
        for (int l = 0; l < m; ++l) rows.X(j, c++) = *visit.values[order[l]];
        if (design.has_g_column) rows.X(j, c++) = g_value;
        rows.U(j, 0) = 1.0;
        if (q == 2) rows.U(j, 1) = visit.time;
        rows.y(j) = *visit.values[order[m]];
    }
    return rows;
}

SubjectRows build_query_rows(const RiskQuery& query, int m, const LayerDesign& design,
                             double g_value) {
    const int p = design.fixed_dim();
    const int q = design.random_dim();
    const std::size_t nv = query.visit_times.size();
    SubjectRows rows;
    rows.X.resize(nv, p);
    rows.U.resize(nv, q);
    rows.y.resize(nv);
    for (std::size_t j = 0; j < nv; ++j) {
        int c = 0;
        rows.X(j, c++) = 1.0;
        rows.X(j, c++) = query.visit_times[j];
        for (int v = 0; v < query.covariates.size(); ++v) rows.X(j, c++) = query.covariates(v);
        for (int l = 0; l < m; ++l) rows.X(j, c++) = query.visit_values[j][l];
        if (design.has_g_column) rows.X(j, c++) = g_value;
        rows.U(j, 0) = 1.0;
        if (q == 2) rows.U(j, 1) = query.visit_times[j];
        rows.y(j) = query.visit_values[j][m];
    }
    return rows;
}

LayerFit fit_layer(const LongitudinalDataset& ds, const std::vector<std::size_t>& group,
                   const std::vector<int>& order, int m, bool has_g,
                   const ModelConfig& config) {
    LayerFit layer;
    layer.design.layer = m + 1;
    layer.design.n_covariates = (int)ds.covariate_names.size();
    layer.design.n_prev = m;
    layer.design.has_g_column = has_g;
    layer.design.random_slope = config.random_effects == RandomEffects::InterceptSlope;
    layer.design.g = config.g_transform;
    layer.is_glmm = ds.biomarker_specs[order[m]].kind == BiomarkerKind::CategoricalBinary;

    std::vector<SubjectRows> data;
    data.reserve(group.size());
    for (auto i : group) {
        const auto& subject = ds.subjects[i];
        const double gv = has_g ? apply_g(config.g_transform, subject.observed_time) : 0.0;
        SubjectRows rows = build_subject_rows(subject, order, m, layer.design, gv);
        if (rows.y.size() > 0) data.push_back(std::move(rows));
    }
    try {
        if (layer.is_glmm) layer.glmm = fit_glmm(data, layer.design, config.quadrature_nodes);
        else layer.lmm = fit_lmm(data, layer.design);
    } catch (const FitError& e) {
        throw FitError("layer " + std::to_string(m + 1) + ": " + e.what());
    }
    return layer;
}

}  // namespace

void RiskQuery::check() const {
    if (!(horizon > 0)) throw std::invalid_argument("RiskQuery: horizon must be > 0");
    if (visit_values.size() != visit_times.size())
        throw std::invalid_argument("RiskQuery: times/values size mismatch");
    for (double t : visit_times)
        if (t > s) throw std::invalid_argument("RiskQuery: visit time beyond prediction time");
}

std::vector<std::size_t> UnifiedGroup::all() const {
    std::vector<std::size_t> out = non_lts;
    out.insert(out.end(), lts.begin(), lts.end());
    return out;
}

UnifiedGroup select_unified_group(const LongitudinalDataset& ds, const ModelConfig& config) {
    UnifiedGroup group;
    const double tau = config.tau_max;
    for (std::size_t i = 0; i < ds.subjects.size(); ++i) {
        const auto& s = ds.subjects[i];
        const bool is_lts = s.event_indicator == 1 ? s.observed_time > tau
                                                   : s.observed_time >= tau;
        if (is_lts) group.lts.push_back(i);
        else if (s.event_indicator == 1) group.non_lts.push_back(i);
    }
    if (group.non_lts.empty() && group.lts.empty())
        throw FitError("select_unified_group: empty unified group");
    return group;
}

FittedMbjm fit_mbjm(const LongitudinalDataset& ds, const ModelConfig& config) {
    config.check();
    FittedMbjm model;
    model.config = config;
    model.covariate_names = ds.covariate_names;
    model.survival = fit_parametric_survival(ds);

    const auto order = layer_order(ds);
    model.layer_to_biomarker = order;
    for (int b : order) model.layer_names.push_back(ds.biomarker_specs[b].name);

    const auto group = select_unified_group(ds, config);
    model.unified_group_size = group.non_lts.size() + group.lts.size();
    model.lts_count = group.lts.size();

    const int M = (int)order.size();
    for (int m = 0; m < M; ++m)
        model.layers.push_back(fit_layer(ds, group.non_lts, order, m, true, config));
    if (config.variant == ModelVariant::TP) {
        for (int m = 0; m < M; ++m)
            model.lts_layers.push_back(fit_layer(ds, group.lts, order, m, false, config));
    }
    return model;
}

double trajectory_loglik(const FittedMbjm& model, const RiskQuery& query, double u) {
    const int M = (int)model.layers.size();
    double ll = 0.0;
    for (int m = 0; m < M; ++m) {
        const auto& layer = model.layers[m];
        const double gv = apply_g(model.config.g_transform, u);
        const SubjectRows rows = build_query_rows(query, m, layer.design, gv);
        ll += layer.marginal_loglik(rows, model.config.quadrature_nodes);
    }
    return ll;
}

double trajectory_loglik_lts(const FittedMbjm& model, const RiskQuery& query) {
    double ll = 0.0;
    for (std::size_t m = 0; m < model.lts_layers.size(); ++m) {
        const auto& layer = model.lts_layers[m];
        const SubjectRows rows = build_query_rows(query, (int)m, layer.design, 0.0);
        ll += layer.marginal_loglik(rows, model.config.quadrature_nodes);
    }
    return ll;
}

RiskResult dynamic_risk(const FittedMbjm& model, const RiskQuery& query) {
    query.check();
    for (const auto& vals : query.visit_values)
        for (double v : vals)
            if (!std::isfinite(v))
                throw std::invalid_argument("dynamic_risk: query history has missing values");

    const double s = query.s;
    const double delta = query.horizon;
    const auto& surv = model.survival;
    const Eigen::VectorXd& V = query.covariates;
    const bool tp = model.config.variant == ModelVariant::TP;
    const bool no_history = model.layers.empty() || query.visit_times.empty();

    if (no_history) {
        // longitudinal factor is 1: pure survival conditional
        const double Ss = surv.survival(s, V);
        double num;
        if (tp && s + delta > model.config.tau_max)
            num = Ss - std::max(surv.survival(s + delta, V),
                                0.0);  // parametric tail still defines S beyond tau
        else
            num = Ss - surv.survival(s + delta, V);
        RiskResult r;
        r.risk = num / Ss;
        return r;
    }

    const double u_cap = tp ? model.config.tau_max
                            : std::max(surv.quantile(1e-9, V), s + delta + 1e-6);
    const double split = std::min(s + delta, u_cap);

    auto log_integrand = [&](double u) {
        return trajectory_loglik(model, query, u) + surv.log_density(u, V);
    };

    // TP tail term, constant in u
    double log_tail = -std::numeric_limits<double>::infinity();
    if (tp) {
        const double Stau = surv.survival(model.config.tau_max, V);
        if (Stau > 0)
            log_tail = trajectory_loglik_lts(model, query) + std::log(Stau);
    }

    struct PanelSum {
        double log_num, log_den;
    };
    auto evaluate = [&](int nodes_per_panel) {
        std::vector<double> xs, ws;
        std::vector<int> in_num;
        auto add_panel = [&](double a, double b, bool numerator_panel) {
            if (b <= a) return;
            const QuadRule rule = gauss_legendre_on(nodes_per_panel, a, b);
            for (int i = 0; i < nodes_per_panel; ++i) {
                xs.push_back(rule.nodes[i]);
                ws.push_back(rule.weights[i]);
                in_num.push_back(numerator_panel ? 1 : 0);
            }
        };
        add_panel(s, split, true);
        add_panel(split, u_cap, false);

        std::vector<double> logs(xs.size());
        double shift = log_tail;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            logs[i] = log_integrand(xs[i]);
            shift = std::max(shift, logs[i] + std::log(ws[i]));
        }
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double term = ws[i] * std::exp(logs[i] - shift);
            den += term;
            if (in_num[i]) num += term;
        }
        if (tp && std::isfinite(log_tail)) {
            const double tail = std::exp(log_tail - shift);
            den += tail;
            if (s + delta > model.config.tau_max) {
                // event window extends past tau_max: the LTS factor applies on
                // (tau_max, s+delta]
                const double frac =
                    1.0 - surv.survival(s + delta, V) / surv.survival(model.config.tau_max, V);
                num += tail * frac;
            }
        }
        return PanelSum{std::log(num) + shift, std::log(den) + shift};
    };

    int nodes = std::max(8, model.config.integration_nodes);
    PanelSum cur = evaluate(nodes);
    while (2 * nodes <= model.config.integration_max_nodes) {
        const PanelSum next = evaluate(2 * nodes);
        const double r1 = std::exp(cur.log_num - cur.log_den);
        const double r2 = std::exp(next.log_num - next.log_den);
        cur = next;
        nodes *= 2;
        if (std::abs(r2 - r1) < model.config.integration_rel_tol) break;
    }

    if (!std::isfinite(cur.log_den) || cur.log_den < std::log(1e-300))
        throw FitError("dynamic_risk: history has vanishing likelihood under model");

    RiskResult res;
    res.numerator_log = cur.log_num;
    res.denominator_log = cur.log_den;
    res.nodes_used = nodes;
    res.risk = std::exp(cur.log_num - cur.log_den);
    res.risk = std::clamp(res.risk, 0.0, 1.0);
    return res;
}

std::vector<RiskPoint> risk_trajectory(const FittedMbjm& model,
                                       const Eigen::VectorXd& covariates,
                                       const std::vector<double>& visit_times,
                                       const std::vector<std::vector<double>>& visit_values,
                                       double horizon) {
    std::vector<RiskPoint> series;
    for (std::size_t j = 0; j < visit_times.size(); ++j) {
        RiskQuery q;
        q.covariates = covariates;
        q.s = visit_times[j];
        q.horizon = horizon;
        q.visit_times.assign(visit_times.begin(), visit_times.begin() + j + 1);
        q.visit_values.assign(visit_values.begin(), visit_values.begin() + j + 1);
        series.push_back({q.s, dynamic_risk(model, q).risk});
    }
    return series;
}

RiskQuery make_query(const FittedMbjm& model, const SubjectRecord& subject, double s,
                     double horizon) {
    RiskQuery q;
    q.covariates = Eigen::Map<const Eigen::VectorXd>(subject.covariates.data(),
                                                     (Eigen::Index)subject.covariates.size());
    q.s = s;
    q.horizon = horizon;
    for (const auto& visit : subject.visits) {
        if (visit.time > s) break;
        bool complete = true;
        std::vector<double> vals(model.layer_to_biomarker.size());
        for (std::size_t m = 0; m < model.layer_to_biomarker.size(); ++m) {
            const auto& v = visit.values[model.layer_to_biomarker[m]];
            if (!v) {
                complete = false;
                break;
            }
            vals[m] = *v;
        }
        if (!complete) continue;  // prediction uses complete rows only
        q.visit_times.push_back(visit.time);
        q.visit_values.push_back(std::move(vals));
    }
    return q;
}

}  // namespace mbjm
