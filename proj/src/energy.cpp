#include "papi/energy.hpp"

#include <sstream>

namespace papi {

double total_energy(const EnergyLedger& ledger, const CostModel& cm, const PhaseFilter& filter) {
    cm.validate();
    double total = 0.0;
    for (Phase p : {Phase::train, Phase::inference, Phase::routing}) {
        if (!filter.has(p)) continue;
        for (Counter c : {Counter::flops, Counter::param_accesses, Counter::messages})
            total += static_cast<double>(ledger.get(p, c)) * cm.coeff(c);
    }
    return total;
}

BudgetCheck check_budget(const EnergyLedger& ledger, const CostModel& cm, double e_budget) {
    if (!(e_budget > 0.0)) throw ConfigError("energy budget must be positive");
    const double total = total_energy(ledger, cm);
    BudgetCheck r;
    r.margin = e_budget - total;
    r.ok = total <= e_budget;
    return r;
}

BoundCheck verify_energy_bound(double e_papi, double e_full, int k, double delta_e) {
    if (k < 1) throw ConfigError("K must be >= 1");
    if (e_papi < 0.0 || e_full < 0.0 || delta_e < 0.0)
        throw ConfigError("energies must be nonnegative");
    BoundCheck r;
    const double rhs = e_full / static_cast<double>(k) + delta_e;
    r.slack = rhs - e_papi;
    r.holds = e_papi <= rhs;
    return r;
}

RatioPair active_ratio_check(const EnergyLedger& papi_ledger, const EnergyLedger& mono_ledger,
                             const CostModel& cm, std::int64_t active_params,
                             std::int64_t total_params, std::int64_t papi_calls,
                             std::int64_t mono_calls) {
    if (papi_calls != mono_calls) throw ContractError("mismatched inference call counts");
    if (active_params < 1 || total_params < active_params)
        throw ShapeError("bad parameter counts for active-ratio check");
    const double e_papi = total_energy(papi_ledger, cm, PhaseFilter::only(Phase::inference));
    const double e_mono = total_energy(mono_ledger, cm, PhaseFilter::only(Phase::inference));
    if (e_mono == 0.0) throw NumericError("monolithic inference energy is zero");
    RatioPair r;
    r.energy_ratio = e_papi / e_mono;
    r.param_ratio = static_cast<double>(active_params) / static_cast<double>(total_params);
    return r;
}

std::string ledger_csv(const EnergyLedger& ledger) {
    std::ostringstream out;
    out << "phase,counter,value\n";
    for (Phase p : {Phase::train, Phase::inference, Phase::routing})
        for (Counter c : {Counter::flops, Counter::param_accesses, Counter::messages})
            out << phase_name(p) << ',' << counter_name(c) << ',' << ledger.get(p, c) << '\n';
    return out.str();
}

std::string ledger_totals_json(const EnergyLedger& ledger, const CostModel& cm) {
    std::ostringstream out;
    out << "{";
    bool first = true;
    for (Phase p : {Phase::train, Phase::inference, Phase::routing}) {
        if (!first) out << ",";
        first = false;
        out << "\"" << phase_name(p)
            << "\":" << format_double(total_energy(ledger, cm, PhaseFilter::only(p)));
    }
    out << ",\"total\":" << format_double(total_energy(ledger, cm)) << "}";
    return out.str();
}

}  // namespace papi
