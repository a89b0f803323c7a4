#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "papi/common.hpp"

namespace papi {

enum class Phase : int { train = 0, inference = 1, routing = 2 };
enum class Counter : int { flops = 0, param_accesses = 1, messages = 2 };

inline const char* phase_name(Phase p) {
    switch (p) {
        case Phase::train: return "train";
        case Phase::inference: return "inference";
        case Phase::routing: return "routing";
    }
    return "?";
}

inline const char* counter_name(Counter c) {
    switch (c) {
        case Counter::flops: return "flops";
        case Counter::param_accesses: return "param_accesses";
        case Counter::messages: return "messages";
    }
    return "?";
}

// Abstract cost model: counters convert to energy (abstract joules) by
// linear coefficients. Compute/memory/communication components.
struct CostModel {
    double joules_per_flop = 1.0;
    double joules_per_param_access = 0.1;
    double joules_per_routing_msg = 5.0;

    void validate() const {
        if (!(joules_per_flop > 0.0) || !(joules_per_param_access > 0.0) ||
            !(joules_per_routing_msg > 0.0))
            throw ConfigError("cost model coefficients must be strictly positive");
    }
    double coeff(Counter c) const {
        switch (c) {
            case Counter::flops: return joules_per_flop;
            case Counter::param_accesses: return joules_per_param_access;
            case Counter::messages: return joules_per_routing_msg;
        }
        return 0.0;
    }

    bool operator==(const CostModel&) const = default;
};

struct PhaseFilter {
    bool train = true;
    bool inference = true;
    bool routing = true;

    static PhaseFilter all() { return {}; }
    static PhaseFilter only(Phase p) {
        PhaseFilter f{false, false, false};
        f.set(p, true);
        return f;
    }
    static PhaseFilter except(Phase p) {
        PhaseFilter f;
        f.set(p, false);
        return f;
    }
    void set(Phase p, bool v) {
        if (p == Phase::train) train = v;
        else if (p == Phase::inference) inference = v;
        else routing = v;
    }
    bool has(Phase p) const {
        if (p == Phase::train) return train;
        if (p == Phase::inference) return inference;
        return routing;
    }
};

// Monotone cumulative counters per (phase, counter). Add-only.
class EnergyLedger {
public:
    void add(Phase p, Counter c, std::uint64_t n) { c_[idx(p)][cidx(c)] += n; }
    void add_flops(Phase p, std::uint64_t n) { add(p, Counter::flops, n); }
    void add_param_accesses(Phase p, std::uint64_t n) { add(p, Counter::param_accesses, n); }
    void add_messages(Phase p, std::uint64_t n) { add(p, Counter::messages, n); }

    std::uint64_t get(Phase p, Counter c) const { return c_[idx(p)][cidx(c)]; }

    void merge(const EnergyLedger& other) {
        for (int p = 0; p < 3; ++p)
            for (int c = 0; c < 3; ++c) c_[p][c] += other.c_[p][c];
    }

    bool operator==(const EnergyLedger&) const = default;

private:
    static int idx(Phase p) { return static_cast<int>(p); }
    static int cidx(Counter c) { return static_cast<int>(c); }
    std::array<std::array<std::uint64_t, 3>, 3> c_{};
};

double total_energy(const EnergyLedger& ledger, const CostModel& cm,
                    const PhaseFilter& filter = PhaseFilter::all());

struct BudgetCheck {
    bool ok = true;
    double margin = 0.0;  // budget - total; negative on violation
};

// Closed constraint: total <= budget is ok.
BudgetCheck check_budget(const EnergyLedger& ledger, const CostModel& cm, double e_budget);

struct BoundCheck {
    bool holds = true;
    double slack = 0.0;  // rhs - lhs
};

// E_papi <= E_full / K + delta_E
BoundCheck verify_energy_bound(double e_papi, double e_full, int k, double delta_e);

struct RatioPair {
    double energy_ratio = 0.0;  // inference-phase energy, papi / mono
    double param_ratio = 0.0;   // |active| / |total| of the pathway store
};

// Compares inference-phase energy of a pathway run against a monolithic run
// over the same evaluation workload; the routing phase never enters. Both
// sides must have evaluated the same number of samples.
RatioPair active_ratio_check(const EnergyLedger& papi_ledger, const EnergyLedger& mono_ledger,
                             const CostModel& cm, std::int64_t active_params,
                             std::int64_t total_params, std::int64_t papi_calls,
                             std::int64_t mono_calls);

std::string ledger_csv(const EnergyLedger& ledger);
std::string ledger_totals_json(const EnergyLedger& ledger, const CostModel& cm);

}  // namespace papi
