#pragma once

#include <optional>
#include <string>
#include <vector>

namespace mbjm {

// One at-risk subject's prediction with its event-in-window status.
// status: 1 = event in (s, s+Delta], 0 = event-free through s+Delta,
// -1 = censored inside the window (weight carries the IPCW handling).
struct ScoredPrediction {
    double p = 0.0;
    int status = 0;
    double weight = 1.0;
};

struct AucResult {
    std::optional<double> value;
    std::string reason;  // set when undefined
};

// Weighted pair concordance over case-control pairs, ties counted 1/2.
AucResult td_auc(const std::vector<ScoredPrediction>& scored);

// Weighted mean squared difference between the event indicator and the
// predicted event probability.
double brier(const std::vector<ScoredPrediction>& scored);

// Kaplan-Meier estimator of the censoring distribution G(t) = P(C > t),
// fit on (T, 1-delta).
class CensoringKm {
  public:
    CensoringKm() = default;
    CensoringKm(const std::vector<double>& observed_times,
                const std::vector<int>& event_indicators);
    double survival(double t) const;  // G(t), left-continuous steps

  private:
    std::vector<double> times_;
    std::vector<double> surv_;
};

// Graf-style IPCW status/weights for an at-risk subject with follow-up
// (T, delta) relative to the window (s, s+Delta].
ScoredPrediction ipcw_score(double p, double observed_time, int event_indicator, double s,
                            double delta, const CensoringKm& km);

// Wald interval on the logit scale, back-transformed. p outside (0,1) is
// clamped to [1e-6, 1-1e-6].
std::pair<double, double> ci_logit(double p, double se_logit, double level = 0.95);

double expit(double x);
double logit(double p);

struct AccuracyCell {
    double s = 0.0;
    double horizon = 0.0;
    std::optional<double> auc;
    double brier = 0.0;
    std::size_t n_at_risk = 0;
    std::size_t n_cases = 0;
};

struct AccuracyReport {
    std::string model_tag;
    std::vector<AccuracyCell> cells;
    const AccuracyCell* find(double s, double horizon) const;
    std::string to_csv() const;
};

}  // namespace mbjm
