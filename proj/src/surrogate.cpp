#include "papi/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "papi/rng.hpp"

namespace papi {

namespace {

NetArch scorer_arch(const SurrogateProblem& prob) {
    return NetArch{{prob.dim(), prob.K}, Activation::tanh, Head::softmax_xent};
}

Vec point_z(const SurrogateProblem& prob, const RoutePoint& p) {
    const Vec& tau = prob.embeddings.at(p.task_id);
    Vec z;
    z.reserve(p.h.size() + tau.size());
    z.insert(z.end(), p.h.begin(), p.h.end());
    z.insert(z.end(), tau.begin(), tau.end());
    return z;
}

// gradient of xent(softmax(psi z), class) at one point, plus ridge term
double point_grad(const SurrogateProblem& prob, const NetArch& arch, const Vec& psi,
                  const RoutePoint& p, Vec& grad_out) {
    const Vec z = point_z(prob, p);
    FwdCache cache;
    const Vec alpha = forward(arch, psi, z, &cache);
    const Target target = Target::label(p.task_id - 1);
    grad_out = backward(arch, psi, cache, target);
    for (std::size_t j = 0; j < psi.size(); ++j) grad_out[j] += prob.ridge * psi[j];
    return loss_value(arch, alpha, target);
}

}  // namespace

SurrogateProblem make_surrogate_problem(int K, int d_h, int d, int n_points, double ridge,
                                        std::uint64_t seed) {
    if (K < 2) throw ConfigError("surrogate problem needs K >= 2");
    if (d_h < 2 || d < 1) throw ConfigError("surrogate feature widths too small");
    if (n_points < K) throw ConfigError("surrogate problem needs at least K points");
    if (!(ridge > 0.0)) throw ConfigError("surrogate ridge must be positive");

    SurrogateProblem prob;
    prob.K = K;
    prob.d_h = d_h;
    prob.d = d;
    prob.ridge = ridge;

    Rng emb_rng = derive_rng(seed, {0x737572ull, 1});
    const double s = 1.0 / std::sqrt(static_cast<double>(d));
    for (int k = 1; k <= K; ++k) {
        Vec tau(static_cast<std::size_t>(d));
        for (double& v : tau) v = s * emb_rng.normal();
        prob.embeddings.emplace(k, std::move(tau));
    }

    // class means on a circle in the first two h coordinates
    Rng pt_rng = derive_rng(seed, {0x737572ull, 2});
    const double radius = 1.0;
    const double sigma = 0.3;
    const double pi = std::acos(-1.0);
    prob.points.reserve(static_cast<std::size_t>(n_points));
    for (int i = 0; i < n_points; ++i) {
        const int k = i % K + 1;
        const double ang = 2.0 * pi * (k - 1) / K;
        RoutePoint p;
        p.task_id = k;
        p.target_k = k;
        p.h.assign(static_cast<std::size_t>(d_h), 0.0);
        p.h[0] = radius * std::cos(ang);
        p.h[1] = radius * std::sin(ang);
        for (double& v : p.h) v += sigma * pt_rng.normal();
        prob.points.push_back(std::move(p));
    }
    return prob;
}

Router surrogate_router(const SurrogateProblem& prob, const Vec& psi) {
    Router r = make_router(prob.K, prob.d_h, prob.d, 0, 0);
    if (static_cast<std::int64_t>(psi.size()) != r.meta.param_count())
        throw ShapeError("psi length does not match the linear scorer");
    r.psi = psi;
    r.embed = prob.embeddings;
    return r;
}

double surrogate_full_grad(const SurrogateProblem& prob, const Vec& psi, Vec& grad_out) {
    const NetArch arch = scorer_arch(prob);
    const std::size_t n = prob.points.size();
    grad_out.assign(psi.size(), 0.0);
    Vec g;
    double loss = 0.0;
    for (const auto& p : prob.points) {
        const Vec z = point_z(prob, p);
        FwdCache cache;
        const Vec alpha = forward(arch, psi, z, &cache);
        const Target target = Target::label(p.task_id - 1);
        loss += loss_value(arch, alpha, target);
        g = backward(arch, psi, cache, target);
        for (std::size_t j = 0; j < psi.size(); ++j) grad_out[j] += g[j];
    }
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t j = 0; j < psi.size(); ++j)
        grad_out[j] = grad_out[j] * inv + prob.ridge * psi[j];
    const double sq = 0.5 * prob.ridge *
                      std::inner_product(psi.begin(), psi.end(), psi.begin(), 0.0);
    return loss * inv + sq;
}

Vec solve_reference(const SurrogateProblem& prob, double eta, double tol,
                    std::int64_t max_iters) {
    const NetArch arch = scorer_arch(prob);
    Vec psi(static_cast<std::size_t>(arch.param_count()), 0.0);
    Vec grad;
    for (std::int64_t it = 0; it < max_iters; ++it) {
        surrogate_full_grad(prob, psi, grad);
        double gmax = 0.0;
        for (double g : grad) gmax = std::max(gmax, std::abs(g));
        if (gmax < tol) return psi;
        for (std::size_t j = 0; j < psi.size(); ++j) psi[j] -= eta * grad[j];
    }
    throw ContractError("surrogate reference solve did not converge");
}

Trajectory sgd_trajectory(const SurrogateProblem& prob, const LrSchedule& schedule,
                          const std::vector<std::int64_t>& checkpoints, std::uint64_t seed) {
    if (checkpoints.empty()) throw ContractError("sgd_trajectory needs checkpoints");
    if (!std::is_sorted(checkpoints.begin(), checkpoints.end()))
        throw ContractError("checkpoints must be ascending");

    const NetArch arch = scorer_arch(prob);
    Vec psi = init_params(arch, mix64(seed, 0x737364ull));
    Rng rng = derive_rng(seed, {0x737572ull, 3});

    Trajectory traj;
    traj.checkpoints = checkpoints;
    std::size_t next = 0;
    Vec grad;
    const std::int64_t t_max = checkpoints.back();
    for (std::int64_t t = 1; t <= t_max; ++t) {
        const auto& p = prob.points[rng.pick(prob.points.size())];
        point_grad(prob, arch, psi, p, grad);
        const double eta = schedule.rate(t);
        for (std::size_t j = 0; j < psi.size(); ++j) psi[j] -= eta * grad[j];
        while (next < checkpoints.size() && checkpoints[next] == t) {
            traj.psi_at.push_back(psi);
            ++next;
        }
    }
    return traj;
}

std::vector<std::int64_t> log_checkpoints(std::int64_t lo, std::int64_t hi, int count) {
    if (lo < 1 || hi <= lo || count < 2) throw ContractError("bad checkpoint range");
    std::vector<std::int64_t> cps;
    const double llo = std::log10(static_cast<double>(lo));
    const double lhi = std::log10(static_cast<double>(hi));
    for (int i = 0; i < count; ++i) {
        const double f = llo + (lhi - llo) * i / (count - 1);
        const auto t = static_cast<std::int64_t>(std::llround(std::pow(10.0, f)));
        if (cps.empty() || t > cps.back()) cps.push_back(t);
    }
    return cps;
}

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ShapeError("slope fit needs >= 2 points");
    const std::size_t n = x.size();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw NumericError("slope fit needs positive data");
        const double lx = std::log10(x[i]);
        const double ly = std::log10(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw NumericError("slope fit is degenerate");
    return (n * sxy - sx * sy) / denom;
}

double squared_distance(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw ShapeError("squared_distance length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace papi
