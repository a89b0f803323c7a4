#pragma once

#include <cstdint>
#include <vector>

#include "papi/energy.hpp"
#include "papi/pathway.hpp"

namespace papi {

// Parameters at the end of one task plus how often each parameter's pathway
// was routed while training it. Shared parameters sit in every routed
// pathway, so their usage is the total routed fraction.
struct TaskSnapshot {
    int task = 0;
    Vec theta;
    Vec usage;

    void validate() const;
    bool operator==(const TaskSnapshot&) const = default;
};

enum class FisherKind { diagonal, full };

struct FisherInfo {
    int task = 0;
    FisherKind kind = FisherKind::diagonal;
    int dim = 0;
    Vec diag;            // diagonal kind: dim entries
    Vec full;            // full kind: dim x dim, row-major, symmetric
    std::int64_t n_samples = 0;

    void validate() const;
    double at(int i, int j) const { return full[static_cast<std::size_t>(i) * dim + j]; }
};

// usage-weighted quadratic pull toward every stored snapshot
double pathway_reg_loss(const Vec& theta, const std::vector<TaskSnapshot>& snapshots);
Vec pathway_reg_grad(const Vec& theta, const std::vector<TaskSnapshot>& snapshots);

// (lambda/2) * sum_j F_jj (theta_j - snapshot_j)^2
double ewc_penalty(const Vec& theta, const TaskSnapshot& snapshot, const Vec& fisher_diag,
                   double lambda);
Vec ewc_penalty_grad(const Vec& theta, const TaskSnapshot& snapshot, const Vec& fisher_diag,
                     double lambda);

// Monte-Carlo Fisher diagonal with labels drawn from the model's own
// predictive distribution. Inputs cycle through data rows; the draw for
// sample i depends only on (seed, i), so the estimate is order-independent.
FisherInfo estimate_fisher_diag(const NetArch& arch, const Vec& params, const Dataset& data,
                                std::int64_t n_samples, std::uint64_t seed,
                                par::Exec exec = par::Exec::parallel,
                                EnergyLedger* ledger = nullptr, Phase phase = Phase::train);

// Pathway form: full-theta-length diagonal, zero outside active_params(k).
FisherInfo estimate_fisher_diag(const ParamStore& store, const PathwayLayout& layout, int k,
                                const Dataset& data, std::int64_t n_samples, std::uint64_t seed,
                                par::Exec exec = par::Exec::parallel,
                                EnergyLedger* ledger = nullptr, Phase phase = Phase::train);

// Dense mean outer product of score vectors; parameter count guarded at 500.
FisherInfo estimate_fisher_full(const NetArch& arch, const Vec& params, const Dataset& data,
                                std::int64_t n_samples, std::uint64_t seed,
                                par::Exec exec = par::Exec::parallel,
                                EnergyLedger* ledger = nullptr, Phase phase = Phase::train);

FisherInfo estimate_fisher_full(const ParamStore& store, const PathwayLayout& layout,
                                const Dataset& data, std::int64_t n_samples, std::uint64_t seed,
                                int k = 1, par::Exec exec = par::Exec::parallel,
                                EnergyLedger* ledger = nullptr, Phase phase = Phase::train);

struct LambdaMax {
    double value = 0.0;
    bool converged = false;
    int iters = 0;
};

// Power iteration on a full Fisher matrix with a seeded start vector.
LambdaMax lambda_max(const FisherInfo& fisher, int max_iters = 1000, double tol = 1e-10,
                     std::uint64_t seed = 7);

struct ForgettingPrediction {
    double quadratic = 0.0;  // 0.5 * delta' F delta
    double bound = 0.0;      // 0.5 * lambda_max * ||delta||^2, >= quadratic
};

ForgettingPrediction predict_forgetting(const Vec& delta_theta, const FisherInfo& fisher);

}  // namespace papi
