#include "mbjm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mbjm {

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double p) { return std::log(p / (1.0 - p)); }

AucResult td_auc(const std::vector<ScoredPrediction>& scored) {
    double num = 0.0, den = 0.0;
    for (const auto& a : scored) {
        if (a.status != 1 || a.weight <= 0) continue;
        for (const auto& b : scored) {
            if (b.status != 0 || b.weight <= 0) continue;
            const double w = a.weight * b.weight;
            den += w;
            if (a.p > b.p) num += w;
            else if (a.p == b.p) num += 0.5 * w;
        }
    }
    AucResult res;
    if (den == 0.0) {
        res.reason = "no weighted case-control pairs";
        return res;
    }
    res.value = num / den;
    return res;
}

double brier(const std::vector<ScoredPrediction>& scored) {
    double num = 0.0, den = 0.0;
    for (const auto& s : scored) {
        if (s.status < 0 || s.weight <= 0) continue;
        const double e = (s.status == 1 ? 1.0 : 0.0) - s.p;
        num += s.weight * e * e;
        den += s.weight;
    }
    if (den == 0.0) throw std::invalid_argument("brier: empty at-risk set");
    return num / den;
}

CensoringKm::CensoringKm(const std::vector<double>& observed_times,
                         const std::vector<int>& event_indicators) {
    std::vector<std::pair<double, int>> data;  // (T, censoring event = 1-delta)
    for (std::size_t i = 0; i < observed_times.size(); ++i)
        data.emplace_back(observed_times[i], 1 - event_indicators[i]);
    std::sort(data.begin(), data.end());

    double surv = 1.0;
    std::size_t at_risk = data.size();
    std::size_t i = 0;
    while (i < data.size()) {
        const double t = data[i].first;
        std::size_t d = 0, n = 0;
        while (i < data.size() && data[i].first == t) {
            d += data[i].second;
            ++n;
            ++i;
        }
        if (d > 0) {
            surv *= 1.0 - (double)d / (double)at_risk;
            times_.push_back(t);
            surv_.push_back(surv);
        }
        at_risk -= n;
    }
}

double CensoringKm::survival(double t) const {
    double s = 1.0;
    for (std::size_t i = 0; i < times_.size(); ++i) {
        if (times_[i] > t) break;
        s = surv_[i];
    }
    return s;
}

ScoredPrediction ipcw_score(double p, double observed_time, int event_indicator, double s,
                            double delta, const CensoringKm& km) {
    ScoredPrediction sp;
    sp.p = p;
    const double gs = km.survival(s);
    const double horizon_end = s + delta;
    if (observed_time > horizon_end) {
        sp.status = 0;
        sp.weight = gs / std::max(km.survival(horizon_end), 1e-10);
    } else if (event_indicator == 1) {
        sp.status = 1;
        sp.weight = gs / std::max(km.survival(observed_time), 1e-10);
    } else {
        sp.status = -1;  // censored inside the window
        sp.weight = 0.0;
    }
    return sp;
}

std::pair<double, double> ci_logit(double p, double se_logit, double level) {
    const double pc = std::clamp(p, 1e-6, 1.0 - 1e-6);
    // normal quantile via Acklam-style inverse CDF is overkill here; the
    // standard levels cover practical use
    double z;
    if (std::abs(level - 0.95) < 1e-9) z = 1.959963984540054;
    else if (std::abs(level - 0.90) < 1e-9) z = 1.6448536269514722;
    else if (std::abs(level - 0.99) < 1e-9) z = 2.5758293035489004;
    else throw std::invalid_argument("ci_logit: supported levels are 0.90, 0.95, 0.99");
    const double l = logit(pc);
    return {expit(l - z * se_logit), expit(l + z * se_logit)};
}

const AccuracyCell* AccuracyReport::find(double s, double horizon) const {
    for (const auto& c : cells)
        if (c.s == s && c.horizon == horizon) return &c;
    return nullptr;
}

std::string AccuracyReport::to_csv() const {
    std::ostringstream os;
    os << "model,s,horizon,auc,brier,n_at_risk,n_cases\n";
    for (const auto& c : cells) {
        os << model_tag << "," << c.s << "," << c.horizon << ",";
        if (c.auc) os << *c.auc;
        else os << "NA";
        os << "," << c.brier << "," << c.n_at_risk << "," << c.n_cases << "\n";
    }
    return os.str();
}

}  // namespace mbjm
