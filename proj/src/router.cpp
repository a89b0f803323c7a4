#include "papi/router.hpp"

#include <cmath>

#include "papi/rng.hpp"

namespace papi {

void Router::validate() const {
    if (K < 1) throw ConfigError("router needs K >= 1");
    if (d < 1) throw ConfigError("router embedding width must be >= 1");
    if (d_h < 1) throw ConfigError("router feature width must be >= 1");
    if (hidden < 0) throw ConfigError("router hidden width must be >= 0");
    if (static_cast<std::int64_t>(psi.size()) != meta.param_count())
        throw ShapeError("psi length does not match meta arch");
    for (const auto& [id, tau] : embed) {
        if (static_cast<int>(tau.size()) != d) throw ShapeError("embedding row width mismatch");
        check_finite(tau, "task embedding");
    }
}

Router make_router(int K, int d_h, int d, int hidden, std::uint64_t seed) {
    Router r;
    r.K = K;
    r.d = d;
    r.d_h = d_h;
    r.hidden = hidden;
    r.seed = seed;
    if (hidden > 0)
        r.meta = NetArch{{d_h + d, hidden, K}, Activation::tanh, Head::softmax_xent};
    else
        r.meta = NetArch{{d_h + d, K}, Activation::tanh, Head::softmax_xent};
    r.psi = init_params(r.meta, mix64(seed, 0x707369ull));
    r.validate();
    return r;
}

const Vec& embed_task(Router& router, int task_id) {
    auto it = router.embed.find(task_id);
    if (it != router.embed.end()) return it->second;
    Rng rng = derive_rng(router.seed, {0x656d62ull, static_cast<std::uint64_t>(task_id)});
    Vec tau(static_cast<std::size_t>(router.d));
    const double s = 1.0 / std::sqrt(static_cast<double>(router.d));
    for (double& v : tau) v = s * rng.normal();
    return router.embed.emplace(task_id, std::move(tau)).first->second;
}

namespace {

Vec concat_z(const Router& router, const Vec& h, const Vec& tau) {
    if (static_cast<int>(h.size()) != router.d_h)
        throw ShapeError("h_shared width does not match router");
    if (static_cast<int>(tau.size()) != router.d)
        throw ShapeError("embedding width does not match router");
    Vec z;
    z.reserve(h.size() + tau.size());
    z.insert(z.end(), h.begin(), h.end());
    z.insert(z.end(), tau.begin(), tau.end());
    return z;
}

}  // namespace

RouteDecision route(const Router& router, const Vec& h_shared, const Vec& tau,
                    EnergyLedger* ledger) {
    const Vec z = concat_z(router, h_shared, tau);
    RouteDecision d;
    d.alpha = forward(router.meta, router.psi, z);
    d.k = argmax_lowest(d.alpha) + 1;
    if (ledger) {
        ledger->add_messages(Phase::routing, 1);
        ledger->add_flops(Phase::routing, static_cast<std::uint64_t>(router.meta.forward_flops()));
        ledger->add_param_accesses(Phase::routing, static_cast<std::uint64_t>(router.psi.size()));
    }
    return d;
}

double train_router_step(Router& router, const std::vector<RouterSample>& batch,
                         const LrSchedule& schedule, std::int64_t t, EnergyLedger* ledger) {
    if (batch.empty()) throw ShapeError("router training batch is empty");
    const std::size_t n = batch.size();
    const double inv = 1.0 / static_cast<double>(n);

    double loss_sum = 0.0;
    Vec psi_grad(router.psi.size(), 0.0);
    std::map<int, Vec> embed_grad;  // mean dL/dtau per touched row

    for (const auto& s : batch) {
        if (s.target_k < 1 || s.target_k > router.K)
            throw ContractError("router target pathway out of range");
        const Vec& tau = embed_task(router, s.task_id);
        const Vec z = concat_z(router, s.h, tau);
        FwdCache cache;
        const Vec alpha = forward(router.meta, router.psi, z, &cache);
        loss_sum += loss_value(router.meta, alpha, Target::label(s.target_k - 1));
        Vec z_grad;
        const Vec g =
            backward(router.meta, router.psi, cache, Target::label(s.target_k - 1), &z_grad);
        for (std::size_t j = 0; j < psi_grad.size(); ++j) psi_grad[j] += g[j];
        auto [it, fresh] = embed_grad.try_emplace(s.task_id, Vec(router.d, 0.0));
        for (int j = 0; j < router.d; ++j) it->second[j] += z_grad[router.d_h + j];
    }

    const double loss = loss_sum * inv;
    if (!std::isfinite(loss)) throw NumericError("non-finite router loss");
    for (double& g : psi_grad) g *= inv;
    sgd_step(router.psi, psi_grad, schedule, t);
    const double eta = schedule.rate(t);
    for (auto& [id, g] : embed_grad) {
        Vec& tau = router.embed.at(id);
        for (int j = 0; j < router.d; ++j) tau[j] -= eta * inv * g[j];
    }

    if (ledger) {
        const auto fwd = static_cast<std::uint64_t>(router.meta.forward_flops());
        ledger->add_flops(Phase::routing, 3ull * fwd * n);
        ledger->add_param_accesses(Phase::routing, 2ull * router.psi.size() * n);
    }
    return loss;
}

double routing_discrepancy(Router& a, Router& b, const std::vector<RoutePoint>& eval_set) {
    if (eval_set.empty()) throw ShapeError("routing_discrepancy on empty eval set");
    if (a.K != b.K) throw ContractError("routers must share K");
    std::int64_t disagree = 0;
    for (const auto& p : eval_set) {
        const int ka = route(a, p.h, embed_task(a, p.task_id)).k;
        const int kb = route(b, p.h, embed_task(b, p.task_id)).k;
        if (ka != kb) ++disagree;
    }
    // ||e_i - e_j||^2 is 2 whenever i != j
    return 2.0 * static_cast<double>(disagree) / static_cast<double>(eval_set.size());
}

double routing_accuracy(Router& router, const std::vector<RoutePoint>& labeled_set) {
    if (labeled_set.empty()) throw ShapeError("routing_accuracy on empty set");
    std::int64_t hit = 0;
    for (const auto& p : labeled_set) {
        if (p.target_k < 1 || p.target_k > router.K)
            throw ContractError("routing label out of range");
        if (route(router, p.h, embed_task(router, p.task_id)).k == p.target_k) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(labeled_set.size());
}

}  // namespace papi
