#pragma once

#include <string>
#include <vector>

#include "papi/common.hpp"

namespace papi {

struct LossTriple {
    double loss_current = 0.0;   // task i under the present parameters
    double loss_snapshot = 0.0;  // task i right after training it
    double loss_random = 0.0;    // task i under random init, the normalizer
};

struct StabilityValue {
    double raw = 0.0;
    double clamped = 0.0;  // raw cut to [0,1]
    bool degenerate = false;  // random baseline not above snapshot loss
};

// S = 1 - (current - snapshot) / (random - snapshot). Zero denominator
// throws; a negative one is flagged degenerate and reported anyway.
StabilityValue stability_ratio(const LossTriple& triple);

// mean of the per-task stabilities; empty input means t < 2 and has no value
double average_stability(const std::vector<double>& values);

// P = (random - after) / (random - before), reported raw; a warm start that
// beats random before training pushes it above 1.
double plasticity_ratio(double loss_random, double loss_after, double loss_before);

double forgetting(double loss_after_t, double loss_at_snapshot);

struct MetricRow {
    int i = 0;  // task the metric is about, 0 for per-step metrics
    int t = 0;  // step the metric was measured at
    std::string metric;
    double value = 0.0;

    bool operator==(const MetricRow&) const = default;
};

struct MetricsReport {
    std::string run;
    std::string method;
    std::vector<MetricRow> rows;

    void add(int i, int t, std::string metric, double value);
    // long format: run,method,i,t,metric,value
    std::string csv() const;

    bool operator==(const MetricsReport&) const = default;
};

}  // namespace papi
