#include "mbjm/simulate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "mbjm/evaluate.hpp"
#include "mbjm/parallel.hpp"

namespace mbjm {

namespace {

std::vector<BiomarkerSpec> pbc_like_specs() {
    std::vector<BiomarkerSpec> specs;
    const char* names[] = {"ascites", "hepatomegaly", "bilirubin", "prothrombin",
                           "albumin", "alkaline",     "sgot"};
    for (int m = 0; m < 7; ++m) {
        BiomarkerSpec s;
        s.name = names[m];
        s.kind = m < 2 ? BiomarkerKind::CategoricalBinary : BiomarkerKind::Continuous;
        s.layer_index = m + 1;
        specs.push_back(s);
    }
    return specs;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd x((Eigen::Index)v.size());
    Eigen::Index i = 0;
    for (double d : v) x(i++) = d;
    return x;
}

void fill_default_layers(SimScenario& sc) {
    // column order per layer m: [1, t, V1, V2, Y_1..Y_{m-1}, g(T)]
    auto make = [](bool cat, Eigen::VectorXd beta, double omega2, double sigma2) {
        LayerTruth lt;
        lt.categorical = cat;
        lt.beta = std::move(beta);
        lt.omega2 = omega2;
        lt.sigma2 = sigma2;
        // LTS variant: same coefficients without the g column, level shifted to
        // roughly the non-LTS mean at long survival (clamped so categorical
        // LTS layers keep both outcome classes), wider residual variance
        lt.lts_beta = lt.beta.head(lt.beta.size() - 1);
        lt.lts_beta(0) +=
            std::clamp(lt.beta(lt.beta.size() - 1) * 14.0, -2.5, 2.5);
        lt.lts_omega2 = omega2;
        lt.lts_sigma2 = 1.3 * sigma2;
        return lt;
    };
    // The survival signal is concentrated in the categorical layers (large
    // logit-scale g coefficients with intercepts centred so both outcome
    // classes stay common) while the continuous layers are noisy and only
    // weakly associated: a single current measurement is then weakly
    // informative, but the accumulated visit history is strongly informative.
    // Coefficient magnitudes are deliberately bimodal (<= 0.08 or >= 0.3) so
    // every parameter is either comfortably in the absolute-bias regime or
    // large relative to its sampling error.
    sc.layers.clear();
    sc.layers.push_back(make(true, vec({1.0, 0.08, 0.08, -0.08, -0.5}), 0.09, 0.0));
    sc.layers.push_back(make(true, vec({1.0, -0.08, -0.08, 0.08, 0.08, -0.45}), 0.09, 0.0));
    sc.layers.push_back(
        make(false, vec({2.0, 0.4, 0.4, -0.08, 0.08, 0.08, -0.05}), 0.09, 1.6));
    sc.layers.push_back(
        make(false, vec({0.64, 0.4, -0.08, 0.08, 0.08, 0.08, 0.3, -0.04}), 0.08, 1.4));
    sc.layers.push_back(
        make(false, vec({0.7, 0.08, 0.4, -0.08, 0.08, 0.08, 0.3, 0.3, -0.05}), 0.09, 1.6));
    sc.layers.push_back(make(
        false, vec({1.5, -0.4, 0.08, 0.4, 0.08, 0.08, 0.3, 0.08, 0.3, -0.04}), 0.08, 1.4));
    sc.layers.push_back(make(
        false, vec({0.7, 0.4, -0.4, 0.08, 0.08, 0.08, 0.3, 0.08, 0.08, 0.3, -0.045}), 0.09,
        1.6));
}

double expit_(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct TrueSubject {
    Eigen::VectorXd V;
    double ttilde = 0.0;
    bool lts = false;  // Ttilde > tau_max (TP only)
    std::vector<double> visit_schedule;
    std::vector<std::vector<double>> values;  // visit x layer
};

// draws the full uncensored trajectory for one subject
TrueSubject draw_subject(const SimScenario& sc, std::mt19937_64& rng) {
    std::normal_distribution<double> stdnorm(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    TrueSubject s;
    s.V.resize(2);
    s.V(0) = stdnorm(rng);
    s.V(1) = unif(rng) < 0.5 ? 1.0 : 0.0;

    const double eta = sc.weibull_gamma(0) + sc.weibull_gamma(1) * s.V(0) +
                       sc.weibull_gamma(2) * s.V(1);
    const double lambda = std::exp(eta);
    const bool sjm = sc.kind == SimScenario::Kind::Sjm;

    const int M = (int)sc.layers.size();
    std::vector<double> b(M);
    for (int m = 0; m < M; ++m) b[m] = std::sqrt(sc.layers[m].omega2) * stdnorm(rng);

    if (sjm) {
        double assoc = 0.0;
        for (int m = 0; m < M; ++m) assoc += sc.sjm_association(m) * b[m];
        const double e = -std::log(std::max(unif(rng), 1e-300));
        s.ttilde = lambda * std::pow(e * std::exp(-assoc), 1.0 / sc.weibull_shape);
    } else {
        const double u = std::max(unif(rng), 1e-300);
        s.ttilde = lambda * std::pow(-std::log(u), 1.0 / sc.weibull_shape);
    }
    s.lts = std::isfinite(sc.tau_max) && s.ttilde > sc.tau_max;

    // baseline visit plus jittered regular visits, truncated at Ttilde
    const double t_end = std::min(s.ttilde, sc.max_followup);
    s.visit_schedule.push_back(0.0);
    std::uniform_real_distribution<double> jit(-sc.visit_jitter, sc.visit_jitter);
    for (int j = 1;; ++j) {
        double t = j * sc.visit_spacing + jit(rng);
        if (t <= s.visit_schedule.back()) t = s.visit_schedule.back() + 1e-3;
        if (t >= t_end) break;
        s.visit_schedule.push_back(t);
    }

    const bool use_lts_models = s.lts && !sjm;
    const double gT = apply_g(sc.g_transform, s.ttilde);
    for (double t : s.visit_schedule) {
        std::vector<double> row(M);
        for (int m = 0; m < M; ++m) {
            const LayerTruth& lt = sc.layers[m];
            const Eigen::VectorXd& beta = use_lts_models ? lt.lts_beta : lt.beta;
            double lp = beta(0) + beta(1) * t + beta(2) * s.V(0) + beta(3) * s.V(1);
            if (!sjm) {
                for (int l = 0; l < m; ++l) lp += beta(4 + l) * row[l];
                if (!use_lts_models) lp += beta(beta.size() - 1) * gT;
            }
            lp += use_lts_models ? std::sqrt(lt.lts_omega2 / lt.omega2) * b[m] : b[m];
            if (lt.categorical) {
                row[m] = unif(rng) < expit_(lp) ? 1.0 : 0.0;
            } else {
                const double sig = use_lts_models ? std::sqrt(lt.lts_sigma2)
                                                  : std::sqrt(lt.sigma2);
                row[m] = lp + sig * stdnorm(rng);
            }
        }
        s.values.push_back(std::move(row));
    }
    return s;
}

SubjectRecord to_record(const TrueSubject& s, int id, double observed_time, int delta) {
    SubjectRecord rec;
    rec.subject_id = "S" + std::to_string(id);
    rec.covariates = {s.V(0), s.V(1)};
    rec.observed_time = observed_time;
    rec.event_indicator = delta;
    for (std::size_t j = 0; j < s.visit_schedule.size(); ++j) {
        if (s.visit_schedule[j] >= observed_time) break;
        VisitRow row;
        row.time = s.visit_schedule[j];
        for (double v : s.values[j]) row.values.push_back(v);
        rec.visits.push_back(std::move(row));
    }
    return rec;
}

SimData generate_impl(const SimScenario& sc) {
    std::mt19937_64 rng(sc.seed);
    std::vector<TrueSubject> train_pop, valid_pop;
    train_pop.reserve(sc.n);
    valid_pop.reserve(sc.n);
    for (int i = 0; i < sc.n; ++i) train_pop.push_back(draw_subject(sc, rng));
    for (int i = 0; i < sc.n; ++i) valid_pop.push_back(draw_subject(sc, rng));

    // exponential censoring rate tuned by bisection against the realized
    // Ttilde draws; TP adds administrative censoring at tau_max
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> cens_exp(sc.n);
    for (int i = 0; i < sc.n; ++i)
        cens_exp[i] = -std::log(std::max(unif(rng), 1e-300));

    const double tau = sc.tau_max;
    auto censored_fraction = [&](double rate) {
        int c = 0;
        for (int i = 0; i < sc.n; ++i) {
            const double C = std::min(cens_exp[i] / rate, tau);
            if (C < train_pop[i].ttilde) ++c;
        }
        return (double)c / sc.n;
    };

    double lo = 1e-8, hi = 1e4;
    const double f_lo = censored_fraction(lo), f_hi = censored_fraction(hi);
    if (sc.target_censoring < f_lo || sc.target_censoring > f_hi) {
        std::ostringstream os;
        os << "generate_data: censoring target " << sc.target_censoring
           << " unattainable; achievable range is [" << f_lo << ", " << f_hi << "]";
        throw std::invalid_argument(os.str());
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = std::sqrt(lo * hi);
        if (censored_fraction(mid) < sc.target_censoring) lo = mid;
        else hi = mid;
    }
    const double rate = std::sqrt(lo * hi);

    SimData data;
    data.training.biomarker_specs = pbc_like_specs();
    data.training.covariate_names = {"age_std", "female"};
    data.validation.biomarker_specs = data.training.biomarker_specs;
    data.validation.covariate_names = data.training.covariate_names;

    int n_cens = 0, n_tau_cens = 0;
    for (int i = 0; i < sc.n; ++i) {
        const TrueSubject& s = train_pop[i];
        const double C = std::min(cens_exp[i] / rate, tau);
        double T;
        int delta;
        if (C < s.ttilde) {
            T = C;
            delta = 0;
            ++n_cens;
            if (std::isfinite(tau) && C == tau) ++n_tau_cens;
        } else {
            T = s.ttilde;
            delta = 1;
        }
        data.training.subjects.push_back(to_record(s, i, T, delta));
    }
    for (int i = 0; i < sc.n; ++i) {
        const TrueSubject& s = valid_pop[i];
        data.validation.subjects.push_back(to_record(s, sc.n + i, s.ttilde, 1));
    }
    data.realized_censoring = (double)n_cens / sc.n;
    data.realized_tau_censoring = (double)n_tau_cens / sc.n;
    return data;
}

}  // namespace

SimScenario SimScenario::default_mbjm_ex(int n, std::uint64_t seed) {
    SimScenario sc;
    sc.kind = Kind::MbjmEx;
    sc.n = n;
    sc.seed = seed;
    sc.weibull_shape = 1.4;
    sc.weibull_gamma = vec({std::log(8.0), -0.08, 0.08});
    fill_default_layers(sc);
    return sc;
}

SimScenario SimScenario::default_mbjm_tp(int n, std::uint64_t seed) {
    SimScenario sc = default_mbjm_ex(n, seed);
    sc.kind = Kind::MbjmTp;
    sc.tau_max = 12.0;
    // heavier tail so a noticeable fraction survives past tau_max
    sc.weibull_shape = 1.1;
    sc.weibull_gamma = vec({std::log(10.0), -0.08, 0.08});
    return sc;
}

SimScenario SimScenario::default_sjm(int n, std::uint64_t seed) {
    SimScenario sc;
    sc.kind = Kind::Sjm;
    sc.n = n;
    sc.seed = seed;
    sc.weibull_shape = 1.4;
    sc.weibull_gamma = vec({std::log(8.0), -0.08, 0.08});
    fill_default_layers(sc);
    // SJM layers are marginal on [1, t, V]; keep those coefficient positions.
    // The shared random effects carry the survival association here, so they
    // need substantial variance relative to the measurement noise.
    for (auto& lt : sc.layers) {
        lt.beta = lt.beta.head(4).eval();
        lt.omega2 = 0.8;
        if (!lt.categorical) lt.sigma2 = 0.3;
    }
    sc.sjm_association = vec({0.4, 0.4, -0.5, 0.5, -0.4, 0.4, -0.4});
    return sc;
}

ModelConfig SimScenario::model_config() const {
    ModelConfig cfg;
    cfg.variant = kind == Kind::MbjmTp ? ModelVariant::TP : ModelVariant::EX;
    cfg.tau_max = kind == Kind::MbjmTp ? tau_max
                                       : std::numeric_limits<double>::infinity();
    cfg.g_transform = g_transform;
    cfg.random_effects = RandomEffects::Intercept;
    cfg.rng_seed = seed;
    return cfg;
}

SimData generate_mbjm_data(const SimScenario& sc) {
    if (sc.kind == SimScenario::Kind::Sjm)
        throw std::invalid_argument("generate_mbjm_data: scenario kind is Sim-SJM");
    return generate_impl(sc);
}

SimData generate_sjm_data(const SimScenario& sc) {
    if (sc.kind != SimScenario::Kind::Sjm)
        throw std::invalid_argument("generate_sjm_data: scenario kind is not Sim-SJM");
    return generate_impl(sc);
}

SimData generate_data(const SimScenario& sc) { return generate_impl(sc); }

std::vector<std::pair<std::string, double>> true_parameters(const SimScenario& sc) {
    std::vector<std::pair<std::string, double>> out;
    out.emplace_back("survival.shape", sc.weibull_shape);
    for (int i = 0; i < sc.weibull_gamma.size(); ++i)
        out.emplace_back("survival.gamma" + std::to_string(i), sc.weibull_gamma(i));
    auto emit = [&](const std::string& prefix, const Eigen::VectorXd& beta, double omega2,
                    bool categorical, double sigma2) {
        for (int i = 0; i < beta.size(); ++i)
            out.emplace_back(prefix + ".beta" + std::to_string(i), beta(i));
        out.emplace_back(prefix + ".omega00", omega2);
        if (!categorical) out.emplace_back(prefix + ".sigma2", sigma2);
    };
    for (std::size_t m = 0; m < sc.layers.size(); ++m) {
        const auto& lt = sc.layers[m];
        emit("layer" + std::to_string(m + 1), lt.beta, lt.omega2, lt.categorical, lt.sigma2);
    }
    if (sc.kind == SimScenario::Kind::MbjmTp) {
        for (std::size_t m = 0; m < sc.layers.size(); ++m) {
            const auto& lt = sc.layers[m];
            emit("lts" + std::to_string(m + 1), lt.lts_beta, lt.lts_omega2, lt.categorical,
                 lt.lts_sigma2);
        }
    }
    return out;
}

std::string BiasTable::to_csv() const {
    std::ostringstream os;
    os << "n,parameter,truth,mean_estimate,scale,bias\n";
    for (const auto& r : rows)
        os << n << "," << r.name << "," << r.truth << "," << r.mean_estimate << ","
           << (r.percent_scale ? "percent" : "absolute") << "," << r.bias << "\n";
    return os.str();
}

std::vector<BiasTable> bias_experiment(const SimScenario& sc, const std::vector<int>& n_grid,
                                       int reps, int n_threads) {
    std::vector<BiasTable> tables;
    const auto truth = true_parameters(sc);
    for (int n : n_grid) {
        BiasTable table;
        table.n = n;
        table.reps = reps;
        std::vector<std::vector<double>> estimates(reps);
        std::vector<char> ok(reps, 0);
        parallel_for(
            (std::size_t)reps,
            [&](std::size_t r) {
                SimScenario rep_sc = sc;
                rep_sc.n = n;
                rep_sc.seed = sc.seed + 1000003ULL * (std::uint64_t)n + r;
                try {
                    const SimData data = generate_impl(rep_sc);
                    const FittedMbjm fit = fit_mbjm(data.training, rep_sc.model_config());
                    const auto flat = flatten_parameters(fit);
                    std::vector<double> v;
                    v.reserve(flat.size());
                    for (const auto& [name, value] : flat) v.push_back(value);
                    estimates[r] = std::move(v);
                    ok[r] = 1;
                } catch (const std::exception&) {
                    ok[r] = 0;
                }
            },
            n_threads);

        std::vector<double> mean(truth.size(), 0.0);
        int good = 0;
        for (int r = 0; r < reps; ++r) {
            if (!ok[r]) continue;
            ++good;
            for (std::size_t j = 0; j < truth.size(); ++j) mean[j] += estimates[r][j];
        }
        table.failures = reps - good;
        if (good == 0) throw FitError("bias_experiment: all replicates failed");
        for (auto& m : mean) m /= good;

        for (std::size_t j = 0; j < truth.size(); ++j) {
            BiasRow row;
            row.name = truth[j].first;
            row.truth = truth[j].second;
            row.mean_estimate = mean[j];
            row.percent_scale = std::abs(row.truth) >= 0.1;
            row.bias = row.percent_scale
                           ? 100.0 * (row.mean_estimate - row.truth) / std::abs(row.truth)
                           : row.mean_estimate - row.truth;
            table.rows.push_back(std::move(row));
        }
        tables.push_back(std::move(table));
    }
    return tables;
}

std::vector<TimingRow> timing_benchmark(const SimScenario& sc, const std::vector<int>& n_grid,
                                        int reps) {
    std::vector<TimingRow> rows;
    for (int n : n_grid) {
        TimingRow row;
        row.n = n;
        row.reps = reps;
        double total = 0.0;
        for (int r = 0; r < reps; ++r) {
            SimScenario rep_sc = sc;
            rep_sc.n = n;
            rep_sc.seed = sc.seed + 7777ULL * (std::uint64_t)n + r;
            const SimData data = generate_impl(rep_sc);
            const auto t0 = std::chrono::steady_clock::now();
            try {
                (void)fit_mbjm(data.training, rep_sc.model_config());
                ++row.converged;
            } catch (const std::exception&) {
            }
            const auto t1 = std::chrono::steady_clock::now();
            total += std::chrono::duration<double>(t1 - t0).count();
        }
        row.mean_seconds = total / reps;
        rows.push_back(row);
    }
    return rows;
}

double sjm_oracle_risk(const SimScenario& sc, const RiskQuery& query, int n_draws,
                       std::uint64_t seed) {
    if (sc.kind != SimScenario::Kind::Sjm)
        throw std::invalid_argument("sjm_oracle_risk: scenario kind is not Sim-SJM");
    const int M = (int)sc.layers.size();
    const double eta = sc.weibull_gamma(0) + sc.weibull_gamma(1) * query.covariates(0) +
                       sc.weibull_gamma(2) * query.covariates(1);
    const double lambda = std::exp(eta);
    const double k = sc.weibull_shape;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> stdnorm(0.0, 1.0);

    double num = 0.0, den = 0.0;
    std::vector<double> logw_buf(n_draws);
    std::vector<double> assoc_buf(n_draws);
    double logw_max = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < n_draws; ++r) {
        double logw = 0.0, assoc = 0.0;
        for (int m = 0; m < M; ++m) {
            const LayerTruth& lt = sc.layers[m];
            const double b = std::sqrt(lt.omega2) * stdnorm(rng);
            assoc += sc.sjm_association(m) * b;
            for (std::size_t j = 0; j < query.visit_times.size(); ++j) {
                const double t = query.visit_times[j];
                const double y = query.visit_values[j][m];
                const double lp = lt.beta(0) + lt.beta(1) * t +
                                  lt.beta(2) * query.covariates(0) +
                                  lt.beta(3) * query.covariates(1) + b;
                if (lt.categorical) {
                    logw += y * lp - (lp > 0 ? lp + std::log1p(std::exp(-lp))
                                             : std::log1p(std::exp(lp)));
                } else {
                    const double e = y - lp;
                    logw += -0.5 * (std::log(2.0 * M_PI * lt.sigma2) + e * e / lt.sigma2);
                }
            }
        }
        logw_buf[r] = logw;
        assoc_buf[r] = assoc;
        logw_max = std::max(logw_max, logw);
    }
    for (int r = 0; r < n_draws; ++r) {
        const double w = std::exp(logw_buf[r] - logw_max);
        const double ea = std::exp(assoc_buf[r]);
        const double Ss = std::exp(-std::pow(query.s / lambda, k) * ea);
        const double Sh = std::exp(-std::pow((query.s + query.horizon) / lambda, k) * ea);
        num += w * (Ss - Sh);
        den += w * Ss;
    }
    if (den <= 0) return 0.0;
    return num / den;
}

}  // namespace mbjm
