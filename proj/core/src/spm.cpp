#include "mbjm/spm.hpp"

namespace mbjm {

SpmModel fit_spm(const LongitudinalDataset& ds) {
    const int pv = (int)ds.covariate_names.size();
    const int M = (int)ds.biomarker_specs.size();

    std::vector<Eigen::VectorXd> rows;
    std::vector<double> times;
    std::vector<int> deltas;
    std::size_t excluded = 0;
    for (const auto& s : ds.subjects) {
        // earliest complete visit serves as the baseline measurement
        const VisitRow* baseline = nullptr;
        for (const auto& v : s.visits) {
            bool complete = true;
            for (const auto& y : v.values)
                if (!y) complete = false;
            if (complete) {
                baseline = &v;
                break;
            }
        }
        if (!baseline) {
            ++excluded;
            continue;
        }
        Eigen::VectorXd x(1 + pv + M);
        x(0) = 1.0;
        for (int j = 0; j < pv; ++j) x(1 + j) = s.covariates[j];
        for (int m = 0; m < M; ++m) x(1 + pv + m) = *baseline->values[m];
        rows.push_back(std::move(x));
        times.push_back(s.observed_time);
        deltas.push_back(s.event_indicator);
    }
    if (rows.empty()) throw FitError("fit_spm: no subjects with a baseline visit");

    const int n = (int)rows.size();
    Eigen::MatrixXd X(n, 1 + pv + M);
    Eigen::VectorXd t(n);
    Eigen::VectorXi delta(n);
    for (int i = 0; i < n; ++i) {
        X.row(i) = rows[i].transpose();
        t(i) = times[i];
        delta(i) = deltas[i];
    }
    std::vector<std::string> names = {"(intercept)"};
    names.insert(names.end(), ds.covariate_names.begin(), ds.covariate_names.end());
    for (const auto& b : ds.biomarker_specs) names.push_back(b.name + "(0)");

    SpmModel m;
    m.weibull = fit_weibull(t, delta, X, std::move(names));
    m.n_covariates = pv;
    m.n_biomarkers = M;
    m.n_excluded = excluded;
    return m;
}

double spm_predict(const SpmModel& m, const Eigen::VectorXd& covariates,
                   const Eigen::VectorXd& current_values, double horizon) {
    if ((int)current_values.size() != m.n_biomarkers)
        throw std::invalid_argument("spm_predict: wrong current-value dimension");
    for (int i = 0; i < current_values.size(); ++i)
        if (!std::isfinite(current_values(i)))
            throw std::invalid_argument("spm_predict: missing current value");
    Eigen::VectorXd x(m.n_covariates + m.n_biomarkers);
    x << covariates, current_values;
    return 1.0 - m.weibull.survival(horizon, x);
}

bool spm_current_values(const SubjectRecord& subject, double s, Eigen::VectorXd& out) {
    const VisitRow* latest = nullptr;
    for (const auto& v : subject.visits) {
        if (v.time > s) break;
        bool complete = true;
        for (const auto& y : v.values)
            if (!y) complete = false;
        if (complete) latest = &v;
    }
    if (!latest) return false;
    out.resize((Eigen::Index)latest->values.size());
    for (Eigen::Index m = 0; m < out.size(); ++m) out(m) = *latest->values[m];
    return true;
}

}  // namespace mbjm
