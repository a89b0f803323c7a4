#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "papi/router.hpp"

namespace papi {

// Fixed finite routing problem with a linear scorer and frozen embeddings.
// The ridge term makes the objective strongly convex, so the minimizer psi*
// exists and 1/t-schedule SGD contracts toward it at the textbook rate.
struct SurrogateProblem {
    int K = 0;
    int d_h = 0;
    int d = 0;
    double ridge = 0.1;
    std::vector<RoutePoint> points;  // task_id doubles as target pathway
    std::map<int, Vec> embeddings;

    int dim() const { return d_h + d; }
    std::int64_t psi_len() const { return static_cast<std::int64_t>(K) * (dim() + 1); }
};

// K clusters of h-features around well-separated means; embeddings make the
// classes linearly separable even where the clusters overlap.
SurrogateProblem make_surrogate_problem(int K, int d_h, int d, int n_points, double ridge,
                                        std::uint64_t seed);

// Linear-scorer router sharing the problem's frozen embeddings.
Router surrogate_router(const SurrogateProblem& prob, const Vec& psi);

// Mean regularized cross-entropy gradient over the whole point set.
double surrogate_full_grad(const SurrogateProblem& prob, const Vec& psi, Vec& grad_out);

// Full-batch gradient descent to the minimizer; throws ContractError when the
// gradient norm does not reach tol within max_iters.
Vec solve_reference(const SurrogateProblem& prob, double eta = 0.2, double tol = 1e-12,
                    std::int64_t max_iters = 500000);

struct Trajectory {
    std::vector<std::int64_t> checkpoints;
    std::vector<Vec> psi_at;  // psi after the checkpointed step
};

// Single-sample SGD from the seeded init, eta_t from the schedule.
Trajectory sgd_trajectory(const SurrogateProblem& prob, const LrSchedule& schedule,
                          const std::vector<std::int64_t>& checkpoints, std::uint64_t seed);

// count log-spaced integers in [lo, hi], deduplicated, ascending
std::vector<std::int64_t> log_checkpoints(std::int64_t lo, std::int64_t hi, int count);

// least-squares slope of log10(y) against log10(x)
double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

double squared_distance(const Vec& a, const Vec& b);

}  // namespace papi
