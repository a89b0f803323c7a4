#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "papi/harness.hpp"
#include "papi/serialize.hpp"

using namespace papi;

namespace {

// small but complete: two rotated tasks, tiny pathway net, short training
RunConfig tiny_config(Method m, int k) {
    RunConfig c;
    c.method = m;
    c.seed = 7;
    c.K = k;
    c.stream.kind = TaskKind::rotated_gaussians;
    c.stream.n_tasks = 2;
    c.stream.knobs.input_dim = 4;
    c.stream.knobs.angle_gap_deg = 120.0;
    c.stream.knobs.class_radius = 1.2;
    c.stream.knobs.noise_sigma = 0.4;
    c.stream.train_samples = 64;
    c.stream.eval_samples = 48;
    c.layout.encoder_widths = {4};
    c.layout.head_hidden = 6;
    c.epochs_per_task = 1;
    c.batch_size = 16;
    c.fisher_samples = 32;
    c.baseline_inits = 4;
    c.router.embed_dim = 3;
    c.router.hidden = 0;
    c.router.samples_per_task = 32;
    c.router.steps = 25;
    c.router.batch = 16;
    return c;
}

}  // namespace

TEST_CASE("gradient projection removes only the conflicting component") {
    const Vec ref{1.0, 0.0};

    const Vec aligned = agem_project({0.5, 2.0}, ref);
    CHECK(aligned == Vec{0.5, 2.0});  // no conflict, untouched

    const Vec conflicting = agem_project({-1.0, 2.0}, ref);
    CHECK(conflicting[0] == doctest::Approx(0.0));
    CHECK(conflicting[1] == doctest::Approx(2.0));
    // projected gradient no longer opposes the reference
    double dot = 0.0;
    for (std::size_t j = 0; j < ref.size(); ++j) dot += conflicting[j] * ref[j];
    CHECK(dot == doctest::Approx(0.0));

    const Vec zero_ref = agem_project({-1.0, 2.0}, {0.0, 0.0});
    CHECK(zero_ref == Vec{-1.0, 2.0});

    CHECK_THROWS_AS(agem_project({1.0}, {1.0, 2.0}), ShapeError);
}

TEST_CASE("config parses from minimal json with defaults") {
    const RunConfig c = config_from_json_text(R"({"method":"naive","seed":3})");
    CHECK(c.method == Method::naive);
    CHECK(c.seed == 3);
    CHECK(c.K == 1);
    CHECK(c.stream.n_tasks == 3);
    CHECK(c.layout.head_hidden == 32);
    CHECK(c.lambda == 1000.0);
    CHECK(c.fisher_samples == 500);
    CHECK(c.router.samples_per_task == 1000);
    CHECK_FALSE(c.energy_budget.has_value());
    // default encoder width tracks the stream input dim
    CHECK(c.layout.encoder_widths == std::vector<int>{8});
}

TEST_CASE("config json round trips exactly") {
    RunConfig c = tiny_config(Method::papi, 2);
    c.energy_budget = 123.5;
    c.papi_use_ewc = true;
    c.schedule = LrSchedule{0.05, LrSchedule::Mode::inverse_t, 0.01};
    const std::string text = config_to_json_text(c);
    const RunConfig c2 = config_from_json_text(text);
    CHECK(c2 == c);
    CHECK(config_to_json_text(c2) == text);
    CHECK(config_hash(c2) == config_hash(c));
    CHECK(config_hash_hex(c).size() == 16);

    RunConfig c3 = c;
    c3.seed = 8;
    CHECK(config_hash(c3) != config_hash(c));
}

TEST_CASE("config parser is strict") {
    CHECK_THROWS_AS(config_from_json_text(R"({"seed":3})"), ConfigError);          // no method
    CHECK_THROWS_AS(config_from_json_text(R"({"method":"naive"})"), ConfigError);  // no seed
    CHECK_THROWS_AS(config_from_json_text(R"({"method":"bogus","seed":1})"), ConfigError);
    CHECK_THROWS_AS(config_from_json_text(R"({"method":"naive","seed":-1})"), ConfigError);
    CHECK_THROWS_AS(config_from_json_text(R"({"method":"naive","seed":1,"typo":2})"),
                    ConfigError);
    CHECK_THROWS_AS(
        config_from_json_text(R"({"method":"naive","seed":1,"stream":{"n_tasks":"x"}})"),
        ConfigError);
    CHECK_THROWS_AS(
        config_from_json_text(R"({"method":"naive","seed":1,"stream":{"typo":2}})"),
        ConfigError);
    CHECK_THROWS_AS(config_from_json_text("]["), IoError);

    // monolithic methods are single-pathway by definition
    RunConfig mono = tiny_config(Method::ewc_mono, 2);
    CHECK_THROWS_AS(mono.validate(), ConfigError);
    RunConfig ok = tiny_config(Method::papi, 2);
    CHECK_NOTHROW(ok.validate());
}

TEST_CASE("every method runs end to end on a tiny stream") {
    for (Method m : {Method::naive, Method::ewc_mono, Method::agem_lite, Method::papi,
                     Method::papi_oracle_routing}) {
        const int k = is_papi_method(m) ? 2 : 1;
        const RunReport r = run_method(tiny_config(m, k));
        CHECK(r.metrics.method == method_name(m));
        CHECK(find_metric(r.metrics, 1, 1, "loss").has_value());
        CHECK(find_metric(r.metrics, 1, 2, "loss").has_value());
        CHECK(find_metric(r.metrics, 1, 2, "stability").has_value());
        CHECK(find_metric(r.metrics, 2, 2, "plasticity").has_value());
        CHECK(find_metric(r.metrics, 0, 2, "avg_stability").has_value());
        CHECK(find_metric(r.metrics, 1, 2, "forgetting").has_value());
        CHECK(r.snapshots.size() == 2);
        CHECK(!r.final_theta.empty());
        CHECK(r.ledger.get(Phase::train, Counter::flops) > 0);
        CHECK(r.ledger.get(Phase::inference, Counter::flops) > 0);
        if (m == Method::papi) {
            CHECK(r.ledger.get(Phase::routing, Counter::messages) > 0);
            CHECK(find_metric(r.metrics, 0, 2, "routing_accuracy").has_value());
            CHECK(!r.routing.empty());
        }
        if (m == Method::papi_oracle_routing) {
            // the oracle consults no meta-network and pays nothing for routing
            CHECK(r.ledger.get(Phase::routing, Counter::flops) == 0);
            CHECK(r.ledger.get(Phase::routing, Counter::messages) == 0);
        }
        if (m == Method::ewc_mono)
            CHECK(find_metric(r.metrics, 1, 2, "predicted_forgetting").has_value());
    }
}

TEST_CASE("runs are deterministic across thread counts") {
    const RunConfig c = tiny_config(Method::papi, 2);
    const int restore = par::max_threads();
    par::set_threads(1);
    const RunReport a = run_method(c);
    par::set_threads(4);
    const RunReport b = run_method(c);
    par::set_threads(restore);
    CHECK(a.equivalent(b));
    CHECK(a.final_theta == b.final_theta);
    CHECK(a.metrics.rows == b.metrics.rows);
}

TEST_CASE("pathway isolation holds through a full run") {
    // oracle routing with K = n_tasks: task 1's head is bitwise frozen after
    // its snapshot even while task 2 trains
    const RunConfig c = tiny_config(Method::papi_oracle_routing, 2);
    const RunReport r = run_method(c);
    REQUIRE(r.snapshots.size() == 2);
    const ParamStore probe = build(c.make_layout(), c.K, 0);  // index geometry only
    REQUIRE(probe.theta.size() == r.final_theta.size());
    for (int idx : probe.ps_idx[0]) {
        CHECK(r.final_theta[static_cast<std::size_t>(idx)] ==
              r.snapshots[0].theta[static_cast<std::size_t>(idx)]);
    }
    // and its measured stability is exactly 1
    const auto s = find_metric(r.metrics, 1, 2, "stability");
    REQUIRE(s.has_value());
    CHECK(*s == 1.0);
}

TEST_CASE("budget status reports violations without aborting") {
    RunConfig c = tiny_config(Method::naive, 1);
    c.energy_budget = 1.0;  // absurdly small, must be violated
    const RunReport r = run_method(c);
    CHECK(r.budget.checked);
    CHECK_FALSE(r.budget.ok);
    CHECK(r.budget.margin < 0.0);
    CHECK(find_metric(r.metrics, 0, 2, "budget_margin").has_value());

    const RunReport free_run = run_method(tiny_config(Method::naive, 1));
    CHECK_FALSE(free_run.budget.checked);
}

TEST_CASE("report json round trips") {
    const RunReport r = run_method(tiny_config(Method::papi, 2));
    const std::string text = report_to_json_text(r);
    const RunReport r2 = report_from_json_text(text);
    CHECK(r2.equivalent(r));
    CHECK(report_to_json_text(r2) == text);
    CHECK_THROWS_AS(report_from_json_text("{}"), IoError);
}

TEST_CASE("emitted artifacts are byte-stable") {
    namespace fs = std::filesystem;
    const RunReport r = run_method(tiny_config(Method::ewc_mono, 1));
    const fs::path base = fs::temp_directory_path() / "papi_harness_emit";
    fs::remove_all(base);
    const std::string dir_a = (base / "a").string();
    const std::string dir_b = (base / "b").string();
    emit_report(r, dir_a);
    emit_report(r, dir_b);

    const std::string hash = config_hash_hex(r.config);
    for (const std::string& name :
         {"metrics_" + hash + ".csv", "ledger_" + hash + ".csv", "series_" + hash + ".csv",
          "summary_" + hash + ".json"}) {
        const std::string a = read_text_file(dir_a + "/" + name);
        const std::string b = read_text_file(dir_b + "/" + name);
        CHECK(a == b);
        CHECK(!a.empty());
    }

    const std::string digest = report_summary_text(dir_a);
    CHECK(digest.find(hash) != std::string::npos);
    CHECK(digest.find("ewc_mono") != std::string::npos);
    CHECK_THROWS_AS(report_summary_text((base / "empty").string()), IoError);
    fs::remove_all(base);
}

TEST_CASE("sweep runs one row per K at matched capacity") {
    RunConfig base = tiny_config(Method::papi_oracle_routing, 1);
    base.layout.head_hidden = 8;
    const std::vector<SweepRow> rows = sweep_k(base, {2, 1});
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].K == 1);  // sorted ascending
    CHECK(rows[1].K == 2);
    for (const SweepRow& row : rows) {
        CHECK_FALSE(row.failed);
        CHECK(row.e_total > 0.0);
        CHECK(row.s_t >= 0.0);
        CHECK(row.s_t <= 1.0);
    }
    const std::string csv = sweep_csv(rows);
    CHECK(csv.rfind("K,avg_stability,plasticity,energy_total,error\n", 0) == 0);

    CHECK_THROWS_AS(sweep_k(tiny_config(Method::naive, 1), {1, 2}), ConfigError);
    CHECK_THROWS_AS(sweep_k(base, {}), ConfigError);
}

TEST_CASE("compare scores ordering claims per pair") {
    const std::vector<RunConfig> cfgs{tiny_config(Method::naive, 1),
                                      tiny_config(Method::ewc_mono, 1),
                                      tiny_config(Method::papi, 2)};
    const CompareReport rep = compare(cfgs);
    CHECK(rep.runs.size() == 3);
    CHECK(rep.rows.size() == 9);  // 3 checks x 3 pairs
    for (const CompareRow& row : rep.rows) {
        CHECK((row.observed == -1 || row.observed == 0 || row.observed == 1));
        if (row.check == "final_loss") CHECK(row.expected == 0);
    }
    const std::string csv = compare_csv(rep.rows);
    CHECK(csv.rfind("check,method_a,method_b,value_a,value_b,observed,expected,holds\n", 0) ==
          0);

    // mismatched streams are rejected up front
    RunConfig other = tiny_config(Method::naive, 1);
    other.stream.n_tasks = 3;
    CHECK_THROWS_AS(compare({tiny_config(Method::naive, 1), other}), ConfigError);
    // so are mismatched seeds
    RunConfig reseeded = tiny_config(Method::ewc_mono, 1);
    reseeded.seed = 99;
    CHECK_THROWS_AS(compare({tiny_config(Method::naive, 1), reseeded}), ConfigError);

    // a method compared against itself ties on every check
    const CompareReport self =
        compare({tiny_config(Method::naive, 1), tiny_config(Method::naive, 1)});
    for (const CompareRow& row : self.rows) {
        CHECK(row.observed == 0);
        CHECK(row.holds);
    }
}
