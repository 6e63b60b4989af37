#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mbjm/cmt.hpp"
#include "mbjm/dataset.hpp"
#include "mbjm/evaluate.hpp"
#include "mbjm/metrics.hpp"
#include "mbjm/parallel.hpp"
#include "mbjm/serialize.hpp"
#include "mbjm/simulate.hpp"

namespace {

using namespace mbjm;

struct CliArgs {
    std::string config_path, input_path, model_path, out_path, scenario_path, bootstrap_file;
    std::string biomarker, strata_spec = "0-11";
    std::uint64_t seed = 12345;
    int threads = 0;
    int folds = 0;
    int bootstrap = 0;
    int reps = 5;
    double bin_width = 1.0 / 12.0;
    std::vector<double> horizons;
    std::vector<double> landmarks;
    std::vector<int> n_grid = {200, 500, 1000, 1500, 2000, 3000};
    int verbosity = 0;
};

int run_fit(const CliArgs& args) {
    const RunConfig rc = run_config_from_json(read_file(args.config_path));
    LongitudinalDataset ds = load_csv_long(args.input_path, rc.schema);
    ModelConfig config = rc.model;
    if (config.variant == ModelVariant::EX && std::isfinite(config.tau_max)) {
        std::cerr << "warning: tau_max set under EX variant; ignoring\n";
        config.tau_max = std::numeric_limits<double>::infinity();
    }
    config.rng_seed = args.seed;

    const FittedMbjm model = fit_mbjm(ds, config);
    if (!args.out_path.empty()) write_file(args.out_path, model_to_json(model));

    std::cout << "fit report\n";
    std::cout << "  subjects: " << ds.n_subjects() << ", events: " << ds.n_events() << "\n";
    std::cout << "  unified group: " << model.unified_group_size
              << " (LTS: " << model.lts_count << ")\n";
    std::cout << "  survival: shape " << model.survival.shape << ", loglik "
              << model.survival.loglik << "\n";
    for (std::size_t m = 0; m < model.layers.size(); ++m) {
        const auto& l = model.layers[m];
        std::cout << "  layer " << m + 1 << " (" << model.layer_names[m] << ", "
                  << (l.is_glmm ? "logistic" : "linear") << "): loglik "
                  << (l.is_glmm ? l.glmm.loglik : l.lmm.loglik);
        const auto& warnings = l.is_glmm ? l.glmm.warnings : l.lmm.warnings;
        for (const auto& w : warnings) std::cout << " [warning: " << w << "]";
        std::cout << "\n";
    }

    if (args.folds >= 2) {
        CvOptions opts;
        opts.k = args.folds;
        opts.seed = args.seed;
        opts.n_threads = args.threads;
        if (!args.landmarks.empty()) opts.landmarks = args.landmarks;
        if (!args.horizons.empty()) opts.horizons = args.horizons;
        const CvResult cv = cross_validate(ds, config, opts);
        for (const auto& w : cv.fold_warnings) std::cerr << "warning: " << w << "\n";
        const std::string cv_path =
            args.out_path.empty() ? "cv_accuracy.csv" : args.out_path + ".cv.csv";
        std::ofstream out(cv_path);
        out << cv.mbjm.to_csv() << cv.spm.to_csv();
        std::cout << "  cross-validation written to " << cv_path << "\n";
    }

    if (args.bootstrap >= 1) {
        const BootstrapResult boot =
            bootstrap_fit(ds, config, args.bootstrap, args.seed, args.threads);
        const std::string boot_path =
            args.out_path.empty() ? "bootstrap.json" : args.out_path + ".bootstrap.json";
        write_file(boot_path, bootstrap_to_json(boot));
        std::cout << "  bootstrap (" << args.bootstrap << " reps, " << boot.n_failed
                  << " failed) written to " << boot_path << "\n";
        if (!boot.se_defined)
            std::cerr << "warning: standard errors undefined with < 2 replicates\n";
    }
    return 0;
}

int run_predict(const CliArgs& args) {
    const RunConfig rc = run_config_from_json(read_file(args.config_path));
    const FittedMbjm model = model_from_json(read_file(args.model_path));
    const LongitudinalDataset ds = load_csv_long(args.input_path, rc.schema);
    const double horizon = args.horizons.empty() ? 3.0 : args.horizons.front();

    std::vector<FittedMbjm> replicate_models;
    if (!args.bootstrap_file.empty()) {
        const BootstrapResult boot = bootstrap_from_json(read_file(args.bootstrap_file));
        for (const auto& rep : boot.replicates) {
            FittedMbjm m = model;
            apply_parameters(m, rep);
            replicate_models.push_back(std::move(m));
        }
    }

    std::ostringstream out;
    out << "subject_id,s,risk";
    if (!replicate_models.empty()) out << ",lo,hi";
    out << "\n";
    for (const auto& subject : ds.subjects) {
        for (const auto& visit : subject.visits) {
            try {
                const RiskQuery q = make_query(model, subject, visit.time, horizon);
                if (q.visit_times.empty() || q.visit_times.back() < visit.time) {
                    std::cerr << "warning: subject " << subject.subject_id
                              << " visit at " << visit.time
                              << " skipped (incomplete row)\n";
                    continue;
                }
                const double risk = dynamic_risk(model, q).risk;
                out << subject.subject_id << "," << visit.time << "," << risk;
                if (!replicate_models.empty()) {
                    std::vector<double> logits;
                    for (const auto& m : replicate_models) {
                        const double r =
                            std::clamp(dynamic_risk(m, q).risk, 1e-6, 1.0 - 1e-6);
                        logits.push_back(logit(r));
                    }
                    double mean = 0.0;
                    for (double l : logits) mean += l;
                    mean /= (double)logits.size();
                    double ss = 0.0;
                    for (double l : logits) ss += (l - mean) * (l - mean);
                    const double se = std::sqrt(ss / std::max<std::size_t>(logits.size() - 1, 1));
                    const auto [lo, hi] = ci_logit(risk, se);
                    out << "," << lo << "," << hi;
                }
                out << "\n";
            } catch (const std::exception& e) {
                std::cerr << "warning: subject " << subject.subject_id << " at s="
                          << visit.time << " skipped: " << e.what() << "\n";
            }
        }
    }
    if (args.out_path.empty()) std::cout << out.str();
    else write_file(args.out_path, out.str());
    return 0;
}

int run_validate(const CliArgs& args) {
    const RunConfig rc = run_config_from_json(read_file(args.config_path));
    const LongitudinalDataset ds = load_csv_long(args.input_path, rc.schema);
    const ValidationReport report = validate_dataset(ds);
    std::cout << report.summary();
    return report.clean() ? 0 : 2;
}

int run_simulate(const CliArgs& args) {
    SimScenario sc = scenario_from_json(read_file(args.scenario_path));
    sc.seed = args.seed;
    const SimData data = generate_data(sc);
    const std::string prefix = args.out_path.empty() ? "sim" : args.out_path;
    export_csv_long(data.training, prefix + "_train.csv");
    export_csv_long(data.validation, prefix + "_valid.csv");
    std::cout << "simulated n=" << sc.n << ", realized censoring "
              << data.realized_censoring;
    if (std::isfinite(sc.tau_max))
        std::cout << " (at tau_max: " << data.realized_tau_censoring << ")";
    std::cout << "\nwrote " << prefix << "_train.csv and " << prefix << "_valid.csv\n";
    return 0;
}

int run_bench(const CliArgs& args) {
    SimScenario sc = args.scenario_path.empty()
                         ? SimScenario::default_mbjm_ex(500, args.seed)
                         : scenario_from_json(read_file(args.scenario_path));
    const auto rows = timing_benchmark(sc, args.n_grid, args.reps);
    std::ostringstream out;
    out << "n,mean_seconds,converged,reps\n";
    for (const auto& r : rows)
        out << r.n << "," << r.mean_seconds << "," << r.converged << "," << r.reps << "\n";
    if (args.out_path.empty()) std::cout << out.str();
    else write_file(args.out_path, out.str());
    return 0;
}

std::vector<int> parse_strata(const std::string& spec) {
    std::vector<int> strata;
    const auto dash = spec.find('-');
    if (dash != std::string::npos) {
        const int lo = std::stoi(spec.substr(0, dash));
        const int hi = std::stoi(spec.substr(dash + 1));
        for (int y = lo; y <= hi; ++y) strata.push_back(y);
    } else {
        std::istringstream ss(spec);
        std::string tok;
        while (std::getline(ss, tok, ',')) strata.push_back(std::stoi(tok));
    }
    return strata;
}

int run_cmt(const CliArgs& args) {
    const RunConfig rc = run_config_from_json(read_file(args.config_path));
    const LongitudinalDataset ds = load_csv_long(args.input_path, rc.schema);
    const CmtTable table = conditional_mean_trajectory(ds, args.biomarker,
                                                      parse_strata(args.strata_spec),
                                                      args.bin_width);
    if (args.out_path.empty()) std::cout << table.to_csv();
    else write_file(args.out_path, table.to_csv());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-layer backward joint model: fitting, prediction, evaluation"};
    app.require_subcommand(1);
    CliArgs args;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--seed", args.seed, "RNG seed");
        cmd->add_option("--threads", args.threads,
                        "worker threads (default: MBJM_THREADS env or hardware)");
        cmd->add_option("--out", args.out_path, "output path");
        cmd->add_flag("-v,--verbose", args.verbosity, "verbosity");
    };

    auto* fit = app.add_subcommand("fit", "fit an MBJM from a long CSV");
    fit->add_option("--config", args.config_path, "JSON config")->required();
    fit->add_option("--input", args.input_path, "long-format CSV")->required();
    fit->add_option("--folds", args.folds, "also run k-fold cross-validation");
    fit->add_option("--landmark", args.landmarks, "CV landmark times (repeatable)");
    fit->add_option("--horizon", args.horizons, "CV horizons (repeatable)");
    fit->add_option("--bootstrap", args.bootstrap, "bootstrap replicates");
    add_common(fit);

    auto* predict = app.add_subcommand("predict", "risk trajectories for query subjects");
    predict->add_option("--config", args.config_path, "JSON config")->required();
    predict->add_option("--model", args.model_path, "fitted model JSON")->required();
    predict->add_option("--input", args.input_path, "query CSV")->required();
    predict->add_option("--horizon", args.horizons, "prediction horizon");
    predict->add_option("--bootstrap-file", args.bootstrap_file,
                        "bootstrap replicates JSON for CIs");
    add_common(predict);

    auto* validate = app.add_subcommand("validate", "dataset invariant report");
    validate->add_option("--config", args.config_path, "JSON config")->required();
    validate->add_option("--input", args.input_path, "long-format CSV")->required();
    add_common(validate);

    auto* simulate = app.add_subcommand("simulate", "generate scenario datasets");
    simulate->add_option("--scenario", args.scenario_path, "scenario JSON")->required();
    add_common(simulate);

    auto* bench = app.add_subcommand("bench", "fit wall-time over a sample-size grid");
    bench->add_option("--scenario", args.scenario_path, "scenario JSON");
    bench->add_option("--n-grid", args.n_grid, "sample sizes");
    bench->add_option("--reps", args.reps, "repetitions per size");
    add_common(bench);

    auto* cmt = app.add_subcommand("cmt", "conditional mean trajectory table");
    cmt->add_option("--config", args.config_path, "JSON config")->required();
    cmt->add_option("--input", args.input_path, "long-format CSV")->required();
    cmt->add_option("--biomarker", args.biomarker, "biomarker name")->required();
    cmt->add_option("--strata", args.strata_spec, "event-year strata, e.g. 0-11 or 1,3,5");
    cmt->add_option("--bin-width", args.bin_width, "time bin width in years");
    add_common(cmt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (fit->parsed()) return run_fit(args);
        if (predict->parsed()) return run_predict(args);
        if (validate->parsed()) return run_validate(args);
        if (simulate->parsed()) return run_simulate(args);
        if (bench->parsed()) return run_bench(args);
        if (cmt->parsed()) return run_cmt(args);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
