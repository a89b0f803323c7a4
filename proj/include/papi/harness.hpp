#pragma once

#include <optional>
#include <string>
#include <vector>

#include "papi/metrics.hpp"
#include "papi/regularization.hpp"
#include "papi/router.hpp"
#include "papi/tasks.hpp"

namespace papi {

enum class Method { naive, ewc_mono, agem_lite, papi, papi_oracle_routing };

const char* method_name(Method m);
Method parse_method(const std::string& s);
// pathway-partitioned training and routing (trained or oracle)
bool is_papi_method(Method m);

struct StreamConfig {
    TaskKind kind = TaskKind::rotated_gaussians;
    int n_tasks = 3;
    Ordering ordering = Ordering::fixed;
    StreamKnobs knobs;
    int train_samples = 2000;
    int eval_samples = 500;

    bool operator==(const StreamConfig&) const = default;
};

struct LayoutConfig {
    std::vector<int> encoder_widths = {8};  // single width = identity encoder
    int head_hidden = 32;
    Activation act = Activation::tanh;

    bool operator==(const LayoutConfig&) const = default;
};

struct RouterTrainConfig {
    int embed_dim = 8;
    int hidden = 16;
    int samples_per_task = 1000;
    double eta0 = 0.05;
    int steps = 100;
    int batch = 16;

    bool operator==(const RouterTrainConfig&) const = default;
};

struct RunConfig {
    Method method = Method::naive;
    std::uint64_t seed = 0;
    StreamConfig stream;
    LayoutConfig layout;
    int K = 1;
    int epochs_per_task = 3;
    int batch_size = 32;
    LrSchedule schedule{0.01, LrSchedule::Mode::constant, 0.0};
    double lambda = 1000.0;
    std::int64_t fisher_samples = 500;
    double pathway_reg_weight = 1.0;
    bool papi_use_ewc = false;
    int agem_memory = 64;
    RouterTrainConfig router;
    CostModel cost_model;
    std::optional<double> energy_budget;
    int baseline_inits = 16;

    void validate() const;
    PathwayLayout make_layout() const;
    int pathway_of_task(int task_id) const;  // ground truth: (id-1) % K + 1

    bool operator==(const RunConfig&) const = default;
};

// Strict parse: unknown keys anywhere are rejected, seed is mandatory.
RunConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const RunConfig& config);
std::uint64_t config_hash(const RunConfig& config);
std::string config_hash_hex(const RunConfig& config);

// routed-evaluation tallies for one (evaluation step, task) pair
struct RoutingStat {
    int t = 0;
    int task = 0;
    std::vector<std::int64_t> count_per_k;
    std::int64_t correct = 0;
    std::int64_t total = 0;

    bool operator==(const RoutingStat&) const = default;
};

struct BudgetStatus {
    bool checked = false;
    bool ok = true;
    double margin = 0.0;

    bool operator==(const BudgetStatus&) const = default;
};

struct RunReport {
    RunConfig config;
    MetricsReport metrics;
    EnergyLedger ledger;
    std::vector<RoutingStat> routing;
    BudgetStatus budget;
    std::vector<TaskSnapshot> snapshots;
    Vec final_theta;
    double wall_time_s = 0.0;  // informational only: not serialized, not compared

    bool equivalent(const RunReport& other) const;
};

RunReport run_method(const RunConfig& config, par::Exec exec = par::Exec::parallel);

// project away the conflicting component against the reference gradient
Vec agem_project(const Vec& grad, const Vec& ref_grad);

std::optional<double> find_metric(const MetricsReport& metrics, int i, int t,
                                  const std::string& name);

struct SweepRow {
    int K = 0;
    double s_t = 0.0;
    double p_t = 0.0;
    double e_total = 0.0;
    bool failed = false;
    std::string error;

    bool operator==(const SweepRow&) const = default;
};

// One run per K at matched capacity (head width scales as 1/K); failures are
// recorded per row instead of aborting the sweep.
std::vector<SweepRow> sweep_k(const RunConfig& base, const std::vector<int>& k_list,
                              par::Exec exec = par::Exec::parallel);
std::string sweep_csv(const std::vector<SweepRow>& rows);

struct CompareRow {
    std::string check;
    std::string method_a;
    std::string method_b;
    double value_a = 0.0;
    double value_b = 0.0;
    int observed = 0;  // sign(value_a - value_b)
    int expected = 0;  // -1: a below b claimed; 0: no claim; +1: a above b
    bool holds = true;

    bool operator==(const CompareRow&) const = default;
};

struct CompareReport {
    std::vector<RunReport> runs;
    std::vector<CompareRow> rows;
};

// Runs every config (shared stream and seed required) and scores the
// forgetting, energy, and final-loss orderings for each config pair.
CompareReport compare(const std::vector<RunConfig>& configs,
                      par::Exec exec = par::Exec::parallel);
std::string compare_csv(const std::vector<CompareRow>& rows);

std::string report_to_json_text(const RunReport& report);
RunReport report_from_json_text(const std::string& text);

// metrics_<hash>.csv, ledger_<hash>.csv, series_<hash>.csv, summary_<hash>.json
void emit_report(const RunReport& report, const std::string& out_dir);

// digest of every summary_*.json under dir, one block per run
std::string report_summary_text(const std::string& dir);

}  // namespace papi
