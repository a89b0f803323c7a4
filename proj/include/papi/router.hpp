#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "papi/energy.hpp"
#include "papi/nn.hpp"

namespace papi {

// Meta-network pathway selector. Scores are computed per sample from the
// concatenation z = [h_shared | tau] where tau is the task embedding.
struct Router {
    int K = 0;
    int d = 0;    // embedding width
    int d_h = 0;  // shared-feature width
    int hidden = 0;
    std::uint64_t seed = 0;
    NetArch meta;                  // (d_h + d) -> [hidden] -> K
    Vec psi;                       // meta-network weights
    std::map<int, Vec> embed;      // task_id -> tau, rows allocated lazily

    void validate() const;
};

Router make_router(int K, int d_h, int d, int hidden, std::uint64_t seed);

// Lazily allocates a fresh seeded row per task id. Rows depend only on
// (seed, task_id), not on allocation order.
const Vec& embed_task(Router& router, int task_id);

struct RouteDecision {
    int k = 0;  // 1-based pathway, argmax with lowest-index tie-break
    Vec alpha;
};

struct RoutingRecord {
    std::int64_t input_id = 0;
    int task_id = 0;
    int k = 0;
    Vec alpha;
};

// Books 1 routing message plus the meta-network pass to the routing phase.
RouteDecision route(const Router& router, const Vec& h_shared, const Vec& tau,
                    EnergyLedger* ledger = nullptr);

struct RouterSample {
    Vec h;
    int task_id = 0;
    int target_k = 0;  // 1..K
};

// One SGD step on psi and the embedding rows touched by the batch. Returns
// the batch mean cross-entropy. Cost is booked to the routing phase.
double train_router_step(Router& router, const std::vector<RouterSample>& batch,
                         const LrSchedule& schedule, std::int64_t t,
                         EnergyLedger* ledger = nullptr);

struct RoutePoint {
    Vec h;
    int task_id = 0;
    int target_k = 0;  // ground-truth pathway where labeled, else 0
};

// mean ||e_a - e_b||^2 over the eval set = 2 * disagreement fraction
double routing_discrepancy(Router& a, Router& b, const std::vector<RoutePoint>& eval_set);

double routing_accuracy(Router& router, const std::vector<RoutePoint>& labeled_set);

}  // namespace papi
