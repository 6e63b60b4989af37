#include "mbjm/evaluate.hpp"

#include <cmath>
#include <mutex>
#include <random>

#include "mbjm/dataset.hpp"
#include "mbjm/parallel.hpp"

namespace mbjm {

namespace {

void flatten_layer(const LayerFit& layer, const std::string& prefix,
                   std::vector<std::pair<std::string, double>>& out) {
    const Eigen::VectorXd& beta = layer.is_glmm ? layer.glmm.beta : layer.lmm.beta;
    const Eigen::MatrixXd& omega = layer.is_glmm ? layer.glmm.omega : layer.lmm.omega;
    for (int i = 0; i < beta.size(); ++i)
        out.emplace_back(prefix + ".beta" + std::to_string(i), beta(i));
    for (int i = 0; i < omega.rows(); ++i)
        for (int j = 0; j <= i; ++j)
            out.emplace_back(prefix + ".omega" + std::to_string(i) + std::to_string(j),
                             omega(i, j));
    if (!layer.is_glmm) out.emplace_back(prefix + ".sigma2", layer.lmm.sigma2);
}

}  // namespace

std::vector<std::pair<std::string, double>> flatten_parameters(const FittedMbjm& model) {
    std::vector<std::pair<std::string, double>> out;
    out.emplace_back("survival.shape", model.survival.shape);
    for (int i = 0; i < model.survival.coefficients.size(); ++i)
        out.emplace_back("survival.gamma" + std::to_string(i), model.survival.coefficients(i));
    for (std::size_t m = 0; m < model.layers.size(); ++m)
        flatten_layer(model.layers[m], "layer" + std::to_string(m + 1), out);
    for (std::size_t m = 0; m < model.lts_layers.size(); ++m)
        flatten_layer(model.lts_layers[m], "lts" + std::to_string(m + 1), out);
    return out;
}

namespace {

void unflatten_layer(LayerFit& layer, const std::vector<double>& values, std::size_t& pos) {
    Eigen::VectorXd& beta = layer.is_glmm ? layer.glmm.beta : layer.lmm.beta;
    Eigen::MatrixXd& omega = layer.is_glmm ? layer.glmm.omega : layer.lmm.omega;
    for (int i = 0; i < beta.size(); ++i) beta(i) = values.at(pos++);
    for (int i = 0; i < omega.rows(); ++i)
        for (int j = 0; j <= i; ++j) {
            omega(i, j) = values.at(pos++);
            omega(j, i) = omega(i, j);
        }
    if (!layer.is_glmm) layer.lmm.sigma2 = values.at(pos++);
}

}  // namespace

void apply_parameters(FittedMbjm& model, const std::vector<double>& values) {
    if (values.size() != flatten_parameters(model).size())
        throw std::invalid_argument("apply_parameters: parameter count mismatch");
    std::size_t pos = 0;
    model.survival.shape = values.at(pos++);
    for (int i = 0; i < model.survival.coefficients.size(); ++i)
        model.survival.coefficients(i) = values.at(pos++);
    for (auto& layer : model.layers) unflatten_layer(layer, values, pos);
    for (auto& layer : model.lts_layers) unflatten_layer(layer, values, pos);
    if (pos != values.size())
        throw std::invalid_argument("apply_parameters: parameter count mismatch");
}

namespace {

struct ScoredCell {
    std::vector<ScoredPrediction> mbjm;
    std::vector<ScoredPrediction> spm;
};

// Scores one dataset's at-risk subjects at (s, horizon) under both models.
// The at-risk set is restricted to subjects with a complete visit at or
// before s so both models see identical subjects.
void score_dataset(const FittedMbjm& model, const SpmModel& spm,
                   const LongitudinalDataset& ds, double s, double horizon, bool use_ipcw,
                   const CensoringKm& km, ScoredCell& cell, int n_threads) {
    std::vector<const SubjectRecord*> at_risk;
    for (const auto& subject : ds.subjects) {
        if (subject.observed_time <= s) continue;
        Eigen::VectorXd cur;
        if (!spm_current_values(subject, s, cur)) continue;
        at_risk.push_back(&subject);
    }
    std::vector<ScoredPrediction> mbjm_scores(at_risk.size()), spm_scores(at_risk.size());
    parallel_for(
        at_risk.size(),
        [&](std::size_t i) {
            const SubjectRecord& subject = *at_risk[i];
            const RiskQuery query = make_query(model, subject, s, horizon);
            const double p_mbjm = dynamic_risk(model, query).risk;
            Eigen::VectorXd cur;
            spm_current_values(subject, s, cur);
            const Eigen::VectorXd V = Eigen::Map<const Eigen::VectorXd>(
                subject.covariates.data(), (Eigen::Index)subject.covariates.size());
            const double p_spm = spm_predict(spm, V, cur, horizon);

            ScoredPrediction base;
            if (use_ipcw) {
                base = ipcw_score(0.0, subject.observed_time, subject.event_indicator, s,
                                  horizon, km);
            } else {
                base.status = subject.observed_time <= s + horizon ? 1 : 0;
                base.weight = 1.0;
            }
            mbjm_scores[i] = base;
            mbjm_scores[i].p = p_mbjm;
            spm_scores[i] = base;
            spm_scores[i].p = p_spm;
        },
        n_threads);
    cell.mbjm.insert(cell.mbjm.end(), mbjm_scores.begin(), mbjm_scores.end());
    cell.spm.insert(cell.spm.end(), spm_scores.begin(), spm_scores.end());
}

AccuracyCell summarize(const std::vector<ScoredPrediction>& scored, double s, double horizon) {
    AccuracyCell cell;
    cell.s = s;
    cell.horizon = horizon;
    const AucResult auc = td_auc(scored);
    cell.auc = auc.value;
    cell.brier = brier(scored);
    for (const auto& sp : scored) {
        ++cell.n_at_risk;
        if (sp.status == 1) ++cell.n_cases;
    }
    return cell;
}

}  // namespace

CvResult cross_validate(const LongitudinalDataset& ds, const ModelConfig& config,
                        const CvOptions& opts) {
    const FoldSplit split = split_folds(ds, opts.k, opts.seed);
    CvResult result;
    result.mbjm.model_tag = config.variant == ModelVariant::TP ? "MBJM-TP" : "MBJM-EX";
    result.spm.model_tag = "SPM";

    std::vector<std::vector<ScoredCell>> fold_cells(opts.k);
    std::vector<std::string> warnings;
    std::mutex mu;

    parallel_for(
        (std::size_t)opts.k,
        [&](std::size_t f) {
            const LongitudinalDataset train = subset(ds, split.train_indices((int)f));
            const LongitudinalDataset test = subset(ds, split.test_indices((int)f));
            try {
                const FittedMbjm model = fit_mbjm(train, config);
                const SpmModel spm = fit_spm(train);
                std::vector<double> tt;
                std::vector<int> dd;
                for (const auto& subj : train.subjects) {
                    tt.push_back(subj.observed_time);
                    dd.push_back(subj.event_indicator);
                }
                const CensoringKm km(tt, dd);
                std::vector<ScoredCell> cells;
                for (double s : opts.landmarks)
                    for (double h : opts.horizons) {
                        ScoredCell cell;
                        score_dataset(model, spm, test, s, h, opts.use_ipcw, km, cell, 1);
                        cells.push_back(std::move(cell));
                    }
                fold_cells[f] = std::move(cells);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(mu);
                warnings.push_back("fold " + std::to_string(f) + " skipped: " + e.what());
            }
        },
        opts.n_threads);

    std::size_t ci = 0;
    for (double s : opts.landmarks)
        for (double h : opts.horizons) {
            ScoredCell pooled;
            for (int f = 0; f < opts.k; ++f) {
                if (fold_cells[f].empty()) continue;
                const ScoredCell& c = fold_cells[f][ci];
                pooled.mbjm.insert(pooled.mbjm.end(), c.mbjm.begin(), c.mbjm.end());
                pooled.spm.insert(pooled.spm.end(), c.spm.begin(), c.spm.end());
            }
            result.mbjm.cells.push_back(summarize(pooled.mbjm, s, h));
            result.spm.cells.push_back(summarize(pooled.spm, s, h));
            ++ci;
        }
    result.fold_warnings = warnings;
    result.folds_used = opts.k - (int)warnings.size();
    return result;
}

ExternalEval evaluate_external(const FittedMbjm& model, const SpmModel& spm,
                               const LongitudinalDataset& validation,
                               const std::vector<double>& landmarks,
                               const std::vector<double>& horizons, bool use_ipcw,
                               int n_threads) {
    ExternalEval eval;
    eval.mbjm.model_tag = model.config.variant == ModelVariant::TP ? "MBJM-TP" : "MBJM-EX";
    eval.spm.model_tag = "SPM";
    std::vector<double> tt;
    std::vector<int> dd;
    for (const auto& subj : validation.subjects) {
        tt.push_back(subj.observed_time);
        dd.push_back(subj.event_indicator);
    }
    const CensoringKm km(tt, dd);
    for (double s : landmarks)
        for (double h : horizons) {
            ScoredCell cell;
            score_dataset(model, spm, validation, s, h, use_ipcw, km, cell, n_threads);
            eval.mbjm.cells.push_back(summarize(cell.mbjm, s, h));
            eval.spm.cells.push_back(summarize(cell.spm, s, h));
        }
    return eval;
}

BootstrapResult bootstrap_fit(const LongitudinalDataset& ds, const ModelConfig& config, int B,
                              std::uint64_t seed, int n_threads) {
    if (B < 1) throw std::invalid_argument("bootstrap_fit: B must be >= 1");
    BootstrapResult result;

    const FittedMbjm point = fit_mbjm(ds, config);
    const auto flat = flatten_parameters(point);
    for (const auto& [name, value] : flat) {
        result.parameter_names.push_back(name);
        result.point_estimate.push_back(value);
    }

    std::vector<std::vector<double>> reps(B);
    std::vector<char> ok(B, 0);
    parallel_for(
        (std::size_t)B,
        [&](std::size_t b) {
            std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ULL * (b + 1));
            std::uniform_int_distribution<std::size_t> pick(0, ds.subjects.size() - 1);
            std::vector<std::size_t> idx(ds.subjects.size());
            for (auto& i : idx) i = pick(rng);
            const LongitudinalDataset resampled = subset(ds, idx);
            try {
                const FittedMbjm fit = fit_mbjm(resampled, config);
                const auto f = flatten_parameters(fit);
                std::vector<double> v;
                v.reserve(f.size());
                for (const auto& [name, value] : f) v.push_back(value);
                reps[b] = std::move(v);
                ok[b] = 1;
            } catch (const std::exception&) {
                ok[b] = 0;
            }
        },
        n_threads);

    for (int b = 0; b < B; ++b) {
        if (ok[b]) result.replicates.push_back(std::move(reps[b]));
        else ++result.n_failed;
    }

    const std::size_t R = result.replicates.size();
    const std::size_t P = result.parameter_names.size();
    result.standard_error.assign(P, std::numeric_limits<double>::quiet_NaN());
    if (R >= 2) {
        for (std::size_t j = 0; j < P; ++j) {
            double mean = 0.0;
            for (const auto& r : result.replicates) mean += r[j];
            mean /= (double)R;
            double ss = 0.0;
            for (const auto& r : result.replicates) ss += (r[j] - mean) * (r[j] - mean);
            result.standard_error[j] = std::sqrt(ss / (double)(R - 1));
        }
    } else {
        result.se_defined = false;
    }
    return result;
}

}  // namespace mbjm
