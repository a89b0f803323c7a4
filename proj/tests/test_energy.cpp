#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "papi/energy.hpp"

using namespace papi;

namespace {

EnergyLedger sample_ledger() {
    EnergyLedger l;
    l.add_flops(Phase::train, 100);
    l.add_param_accesses(Phase::train, 50);
    l.add_flops(Phase::inference, 30);
    l.add_param_accesses(Phase::inference, 20);
    l.add_messages(Phase::routing, 2);
    l.add_flops(Phase::routing, 8);
    return l;
}

}  // namespace

TEST_CASE("counters accumulate per phase and merge adds") {
    EnergyLedger l;
    CHECK(l.get(Phase::train, Counter::flops) == 0);
    l.add_flops(Phase::train, 10);
    l.add_flops(Phase::train, 5);
    l.add_messages(Phase::routing, 1);
    CHECK(l.get(Phase::train, Counter::flops) == 15);
    CHECK(l.get(Phase::inference, Counter::flops) == 0);
    CHECK(l.get(Phase::routing, Counter::messages) == 1);

    EnergyLedger other;
    other.add_flops(Phase::train, 7);
    other.add_param_accesses(Phase::inference, 3);
    l.merge(other);
    CHECK(l.get(Phase::train, Counter::flops) == 22);
    CHECK(l.get(Phase::inference, Counter::param_accesses) == 3);
}

TEST_CASE("energy is the linear functional of the counters") {
    const EnergyLedger l = sample_ledger();
    CostModel cm;  // 1.0 / 0.1 / 5.0
    CHECK(total_energy(l, cm) ==
          doctest::Approx(100 + 5.0 + 30 + 2.0 + 10.0 + 8).epsilon(1e-12));

    // phases partition the total
    const double sum = total_energy(l, cm, PhaseFilter::only(Phase::train)) +
                       total_energy(l, cm, PhaseFilter::only(Phase::inference)) +
                       total_energy(l, cm, PhaseFilter::only(Phase::routing));
    CHECK(total_energy(l, cm) == doctest::Approx(sum).epsilon(1e-12));
    CHECK(total_energy(l, cm, PhaseFilter::except(Phase::routing)) ==
          doctest::Approx(total_energy(l, cm) -
                          total_energy(l, cm, PhaseFilter::only(Phase::routing))));

    // doubling one coefficient adds exactly that component
    CostModel cm2 = cm;
    cm2.joules_per_flop *= 2.0;
    CHECK(total_energy(l, cm2) - total_energy(l, cm) == doctest::Approx(138.0));

    CostModel bad;
    bad.joules_per_flop = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("budget check is closed at the boundary") {
    const EnergyLedger l = sample_ledger();
    CostModel cm;
    const double total = total_energy(l, cm);

    const BudgetCheck under = check_budget(l, cm, total + 1.0);
    CHECK(under.ok);
    CHECK(under.margin == doctest::Approx(1.0));

    const BudgetCheck exact = check_budget(l, cm, total);
    CHECK(exact.ok);
    CHECK(exact.margin == doctest::Approx(0.0));

    const BudgetCheck over = check_budget(l, cm, total - 1.0);
    CHECK_FALSE(over.ok);
    CHECK(over.margin == doctest::Approx(-1.0));

    CHECK_THROWS_AS(check_budget(l, cm, 0.0), ConfigError);
}

TEST_CASE("partition energy bound") {
    const BoundCheck ok = verify_energy_bound(105.0, 400.0, 4, 10.0);
    CHECK(ok.holds);
    CHECK(ok.slack == doctest::Approx(5.0));

    const BoundCheck fail = verify_energy_bound(120.0, 400.0, 4, 10.0);
    CHECK_FALSE(fail.holds);
    CHECK(fail.slack == doctest::Approx(-10.0));

    // K = 1 degenerates to e_papi <= e_full + delta
    const BoundCheck one = verify_energy_bound(400.0, 400.0, 1, 0.0);
    CHECK(one.holds);
    CHECK(one.slack == doctest::Approx(0.0));

    CHECK_THROWS_AS(verify_energy_bound(1.0, 1.0, 0, 0.0), ConfigError);
    CHECK_THROWS_AS(verify_energy_bound(-1.0, 1.0, 2, 0.0), ConfigError);
}

TEST_CASE("active ratio compares inference phases only") {
    CostModel cm;
    EnergyLedger papi;
    papi.add_flops(Phase::inference, 60);
    papi.add_param_accesses(Phase::inference, 40);
    papi.add_flops(Phase::routing, 999);  // must not enter
    papi.add_messages(Phase::routing, 50);
    EnergyLedger mono;
    mono.add_flops(Phase::inference, 120);
    mono.add_param_accesses(Phase::inference, 80);
    mono.add_flops(Phase::train, 12345);  // must not enter

    const RatioPair r = active_ratio_check(papi, mono, cm, 5, 10, 200, 200);
    CHECK(r.energy_ratio == doctest::Approx(64.0 / 128.0));
    CHECK(r.param_ratio == doctest::Approx(0.5));

    CHECK_THROWS_AS(active_ratio_check(papi, mono, cm, 5, 10, 200, 100), ContractError);
    CHECK_THROWS_AS(active_ratio_check(papi, mono, cm, 0, 10, 200, 200), ShapeError);
    CHECK_THROWS_AS(active_ratio_check(papi, mono, cm, 11, 10, 200, 200), ShapeError);
    EnergyLedger empty;
    CHECK_THROWS_AS(active_ratio_check(papi, empty, cm, 5, 10, 200, 200), NumericError);
}

TEST_CASE("ledger serialization") {
    const EnergyLedger l = sample_ledger();
    CHECK(ledger_csv(l) ==
          "phase,counter,value\n"
          "train,flops,100\n"
          "train,param_accesses,50\n"
          "train,messages,0\n"
          "inference,flops,30\n"
          "inference,param_accesses,20\n"
          "inference,messages,0\n"
          "routing,flops,8\n"
          "routing,param_accesses,0\n"
          "routing,messages,2\n");

    CostModel cm;
    const std::string js = ledger_totals_json(l, cm);
    const std::string expect = std::string("{\"train\":") + format_double(105.0) +
                               ",\"inference\":" + format_double(32.0) +
                               ",\"routing\":" + format_double(18.0) +
                               ",\"total\":" + format_double(155.0) + "}";
    CHECK(js == expect);
}
