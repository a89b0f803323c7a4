#include "papi/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace papi {

StabilityValue stability_ratio(const LossTriple& triple) {
    const double denom = triple.loss_random - triple.loss_snapshot;
    if (denom == 0.0) throw NumericError("degenerate stability normalization");
    StabilityValue s;
    s.degenerate = denom < 0.0;
    s.raw = 1.0 - (triple.loss_current - triple.loss_snapshot) / denom;
    s.clamped = std::clamp(s.raw, 0.0, 1.0);
    return s;
}

double average_stability(const std::vector<double>& values) {
    if (values.empty()) throw ContractError("average stability undefined before task 2");
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

double plasticity_ratio(double loss_random, double loss_after, double loss_before) {
    const double denom = loss_random - loss_before;
    if (denom == 0.0) throw NumericError("degenerate plasticity normalization");
    return (loss_random - loss_after) / denom;
}

double forgetting(double loss_after_t, double loss_at_snapshot) {
    if (!std::isfinite(loss_after_t) || !std::isfinite(loss_at_snapshot))
        throw NumericError("forgetting needs finite losses");
    return loss_after_t - loss_at_snapshot;
}

void MetricsReport::add(int i, int t, std::string metric, double value) {
    rows.push_back(MetricRow{i, t, std::move(metric), value});
}

std::string MetricsReport::csv() const {
    std::string out = "run,method,i,t,metric,value\n";
    for (const MetricRow& r : rows) {
        out += run;
        out += ',';
        out += method;
        out += ',';
        out += std::to_string(r.i);
        out += ',';
        out += std::to_string(r.t);
        out += ',';
        out += r.metric;
        out += ',';
        out += format_double(r.value);
        out += '\n';
    }
    return out;
}

}  // namespace papi
