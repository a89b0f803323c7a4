#pragma once

#include <cstdint>
#include <vector>

#include "papi/pathway.hpp"

namespace papi {

enum class TaskKind { rotated_gaussians, permuted_features, linear_teacher };
enum class Ordering { iid, fixed, correlated };

const char* task_kind_name(TaskKind k);
const char* ordering_name(Ordering o);
TaskKind parse_task_kind(const std::string& s);
Ordering parse_ordering(const std::string& s);

// One synthetic distribution D_t. rotated_gaussians places class means on a
// circle in the first two coordinates; permuted_features shuffles the
// coordinates of the angle-0 mixture; linear_teacher is noiseless regression
// against a fixed random teacher (n_classes doubles as the output width).
struct TaskSpec {
    int task_id = 0;
    TaskKind kind = TaskKind::rotated_gaussians;
    int input_dim = 8;
    int n_classes = 2;
    double angle_deg = 0.0;
    double class_radius = 0.9;
    double noise_sigma = 1.0;
    std::uint64_t perm_seed = 0;
    Vec teacher;  // n_classes x input_dim, row-major

    void validate() const;
    bool operator==(const TaskSpec&) const = default;
};

// true mean of class c (0-based); angle is reduced mod 360 first
Vec class_mean(const TaskSpec& spec, int c);

struct TaskStream {
    std::vector<TaskSpec> tasks;
    Ordering ordering = Ordering::fixed;

    int size() const { return static_cast<int>(tasks.size()); }
    bool operator==(const TaskStream&) const = default;
};

struct StreamKnobs {
    int input_dim = 8;
    int n_classes = 2;
    double angle_gap_deg = 60.0;
    double class_radius = 0.9;
    double noise_sigma = 1.0;

    bool operator==(const StreamKnobs&) const = default;
};

// Task i of a rotated stream sits at angle (i-1) * gap. iid shuffles the
// stream order, correlated sorts by ascending angle; ids follow stream
// position either way.
TaskStream make_stream(TaskKind kind, int n_tasks, const StreamKnobs& knobs, Ordering ordering,
                       std::uint64_t seed);

// Balanced labels (exact up to rounding), deterministic per (spec, seed).
Dataset sample_batch(const TaskSpec& spec, int n, std::uint64_t seed);

// Mean eval loss of freshly initialized stores through pathway k.
double random_baseline_loss(const TaskSpec& spec, const PathwayLayout& layout, int k,
                            int n_inits, int n_eval, std::uint64_t seed,
                            par::Exec exec = par::Exec::parallel,
                            EnergyLedger* ledger = nullptr, Phase phase = Phase::inference);

}  // namespace papi
