#include "papi/regularization.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "papi/rng.hpp"

namespace papi {

void TaskSnapshot::validate() const {
    if (theta.size() != usage.size()) throw ShapeError("snapshot usage length mismatch");
    for (double u : usage)
        if (!(u >= 0.0)) throw ContractError("snapshot usage must be nonnegative");
}

void FisherInfo::validate() const {
    if (kind == FisherKind::diagonal) {
        if (static_cast<int>(diag.size()) != dim) throw ShapeError("fisher diagonal length mismatch");
        for (double v : diag)
            if (!(v >= 0.0)) throw ContractError("fisher diagonal must be nonnegative");
        return;
    }
    if (static_cast<std::int64_t>(full.size()) != static_cast<std::int64_t>(dim) * dim)
        throw ShapeError("fisher matrix size mismatch");
    for (int i = 0; i < dim; ++i) {
        if (!(at(i, i) >= 0.0)) throw ContractError("fisher diagonal must be nonnegative");
        for (int j = i + 1; j < dim; ++j)
            if (at(i, j) != at(j, i)) throw ContractError("fisher matrix must be symmetric");
    }
}

double pathway_reg_loss(const Vec& theta, const std::vector<TaskSnapshot>& snapshots) {
    double loss = 0.0;
    for (const auto& snap : snapshots) {
        snap.validate();
        if (snap.theta.size() != theta.size()) throw ShapeError("snapshot length mismatch");
        for (std::size_t j = 0; j < theta.size(); ++j) {
            const double d = theta[j] - snap.theta[j];
            loss += snap.usage[j] * d * d;
        }
    }
    return loss;
}

Vec pathway_reg_grad(const Vec& theta, const std::vector<TaskSnapshot>& snapshots) {
    Vec grad(theta.size(), 0.0);
    for (const auto& snap : snapshots) {
        snap.validate();
        if (snap.theta.size() != theta.size()) throw ShapeError("snapshot length mismatch");
        for (std::size_t j = 0; j < theta.size(); ++j)
            grad[j] += 2.0 * snap.usage[j] * (theta[j] - snap.theta[j]);
    }
    return grad;
}

double ewc_penalty(const Vec& theta, const TaskSnapshot& snapshot, const Vec& fisher_diag,
                   double lambda) {
    if (lambda < 0.0) throw ContractError("ewc lambda must be nonnegative");
    if (theta.size() != snapshot.theta.size() || theta.size() != fisher_diag.size())
        throw ShapeError("ewc penalty length mismatch");
    double s = 0.0;
    for (std::size_t j = 0; j < theta.size(); ++j) {
        if (!(fisher_diag[j] >= 0.0)) throw ContractError("negative fisher entry");
        const double d = theta[j] - snapshot.theta[j];
        s += fisher_diag[j] * d * d;
    }
    return 0.5 * lambda * s;
}

Vec ewc_penalty_grad(const Vec& theta, const TaskSnapshot& snapshot, const Vec& fisher_diag,
                     double lambda) {
    if (lambda < 0.0) throw ContractError("ewc lambda must be nonnegative");
    if (theta.size() != snapshot.theta.size() || theta.size() != fisher_diag.size())
        throw ShapeError("ewc penalty length mismatch");
    Vec grad(theta.size());
    for (std::size_t j = 0; j < theta.size(); ++j) {
        if (!(fisher_diag[j] >= 0.0)) throw ContractError("negative fisher entry");
        grad[j] = lambda * fisher_diag[j] * (theta[j] - snapshot.theta[j]);
    }
    return grad;
}

namespace {

// label draw by inverse CDF over the predictive distribution
int draw_label(const Vec& probs, double u) {
    double c = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        c += probs[i];
        if (u < c) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}

void book_passes(EnergyLedger* ledger, Phase phase, std::int64_t n_samples,
                 std::int64_t fwd_flops, std::int64_t n_params) {
    if (!ledger) return;
    ledger->add_flops(phase, static_cast<std::uint64_t>(n_samples) * 3ull *
                                 static_cast<std::uint64_t>(fwd_flops));
    ledger->add_param_accesses(phase, static_cast<std::uint64_t>(n_samples) * 2ull *
                                          static_cast<std::uint64_t>(n_params));
}

}  // namespace

FisherInfo estimate_fisher_diag(const NetArch& arch, const Vec& params, const Dataset& data,
                                std::int64_t n_samples, std::uint64_t seed, par::Exec exec,
                                EnergyLedger* ledger, Phase phase) {
    if (arch.head != Head::softmax_xent)
        throw ContractError("fisher estimation needs a softmax head");
    if (n_samples < 1) throw ContractError("fisher estimation needs n_samples >= 1");
    if (data.size() == 0) throw ShapeError("fisher estimation on empty dataset");

    const std::int64_t dim = arch.param_count();
    FisherInfo info;
    info.kind = FisherKind::diagonal;
    info.dim = static_cast<int>(dim);
    info.n_samples = n_samples;
    info.diag.assign(static_cast<std::size_t>(dim), 0.0);

    auto one = [&](std::int64_t i, double* acc) {
        const int row = static_cast<int>(i % data.size());
        FwdCache cache;
        const Vec probs = forward(arch, params, data.row(row), &cache);
        Rng rng = derive_rng(seed, {0x666973ull, static_cast<std::uint64_t>(i)});
        const int y = draw_label(probs, rng.uniform());
        const Vec g = backward(arch, params, cache, Target::label(y));
        for (std::int64_t j = 0; j < dim; ++j) acc[j] += g[static_cast<std::size_t>(j)] *
                                                         g[static_cast<std::size_t>(j)];
    };
    if (exec == par::Exec::parallel)
        par::block_sum_vec(n_samples, dim, info.diag.data(), one);
    else
        par::serial_sum_vec(n_samples, dim, info.diag.data(), one);
    for (double& v : info.diag) v /= static_cast<double>(n_samples);

    book_passes(ledger, phase, n_samples, arch.forward_flops(), dim);
    return info;
}

FisherInfo estimate_fisher_diag(const ParamStore& store, const PathwayLayout& layout, int k,
                                const Dataset& data, std::int64_t n_samples, std::uint64_t seed,
                                par::Exec exec, EnergyLedger* ledger, Phase phase) {
    if (layout.heads[k - 1].head != Head::softmax_xent)
        throw ContractError("fisher estimation needs a softmax head");
    if (n_samples < 1) throw ContractError("fisher estimation needs n_samples >= 1");
    if (data.size() == 0) throw ShapeError("fisher estimation on empty dataset");

    const std::int64_t dim = layout.total_params();
    FisherInfo info;
    info.kind = FisherKind::diagonal;
    info.dim = static_cast<int>(dim);
    info.n_samples = n_samples;
    info.diag.assign(static_cast<std::size_t>(dim), 0.0);

    const std::uint64_t theta_hash = store_fingerprint(layout, store);
    auto one = [&](std::int64_t i, double* acc) {
        const int row = static_cast<int>(i % data.size());
        PathCache cache;
        cache.k = k;
        cache.theta_hash = theta_hash;
        cache.h_shared =
            encoder_forward(store, layout, data.row(row), nullptr, phase, &cache.enc);
        const Vec probs = head_forward(store, layout, k, cache.h_shared, nullptr, phase,
                                       &cache.head);
        Rng rng = derive_rng(seed, {0x666973ull, static_cast<std::uint64_t>(i)});
        const int y = draw_label(probs, rng.uniform());
        const Vec g = pathway_backward(store, layout, k, cache, Target::label(y));
        for (std::int64_t j = 0; j < dim; ++j) acc[j] += g[static_cast<std::size_t>(j)] *
                                                         g[static_cast<std::size_t>(j)];
    };
    if (exec == par::Exec::parallel)
        par::block_sum_vec(n_samples, dim, info.diag.data(), one);
    else
        par::serial_sum_vec(n_samples, dim, info.diag.data(), one);
    for (double& v : info.diag) v /= static_cast<double>(n_samples);

    const std::int64_t active_flops =
        layout.encoder_forward_flops() + layout.heads[k - 1].forward_flops();
    const std::int64_t active_n = layout.encoder_param_count() + layout.head_param_count(k);
    book_passes(ledger, phase, n_samples, active_flops, active_n);
    return info;
}

namespace {

FisherInfo fisher_full_from_scores(std::int64_t dim, std::int64_t n_samples,
                                   const std::function<Vec(std::int64_t)>& score_of,
                                   par::Exec exec) {
    if (dim > 500) throw ContractError("full fisher limited to 500 parameters");
    FisherInfo info;
    info.kind = FisherKind::full;
    info.dim = static_cast<int>(dim);
    info.n_samples = n_samples;
    info.full.assign(static_cast<std::size_t>(dim) * dim, 0.0);

    auto one = [&](std::int64_t i, double* acc) {
        const Vec g = score_of(i);
        for (std::int64_t a = 0; a < dim; ++a) {
            const double ga = g[static_cast<std::size_t>(a)];
            double* row = acc + a * dim;
            for (std::int64_t b = 0; b < dim; ++b) row[b] += ga * g[static_cast<std::size_t>(b)];
        }
    };
    if (exec == par::Exec::parallel)
        par::block_sum_vec(n_samples, dim * dim, info.full.data(), one);
    else
        par::serial_sum_vec(n_samples, dim * dim, info.full.data(), one);
    for (double& v : info.full) v /= static_cast<double>(n_samples);
    return info;
}

}  // namespace

FisherInfo estimate_fisher_full(const NetArch& arch, const Vec& params, const Dataset& data,
                                std::int64_t n_samples, std::uint64_t seed, par::Exec exec,
                                EnergyLedger* ledger, Phase phase) {
    if (arch.head != Head::softmax_xent)
        throw ContractError("fisher estimation needs a softmax head");
    if (n_samples < 1) throw ContractError("fisher estimation needs n_samples >= 1");
    if (data.size() == 0) throw ShapeError("fisher estimation on empty dataset");

    const std::int64_t dim = arch.param_count();
    auto score_of = [&](std::int64_t i) {
        const int row = static_cast<int>(i % data.size());
        FwdCache cache;
        const Vec probs = forward(arch, params, data.row(row), &cache);
        Rng rng = derive_rng(seed, {0x666973ull, static_cast<std::uint64_t>(i)});
        const int y = draw_label(probs, rng.uniform());
        return backward(arch, params, cache, Target::label(y));
    };
    FisherInfo info = fisher_full_from_scores(dim, n_samples, score_of, exec);
    book_passes(ledger, phase, n_samples, arch.forward_flops(), dim);
    return info;
}

FisherInfo estimate_fisher_full(const ParamStore& store, const PathwayLayout& layout,
                                const Dataset& data, std::int64_t n_samples, std::uint64_t seed,
                                int k, par::Exec exec, EnergyLedger* ledger, Phase phase) {
    if (layout.heads[k - 1].head != Head::softmax_xent)
        throw ContractError("fisher estimation needs a softmax head");
    if (n_samples < 1) throw ContractError("fisher estimation needs n_samples >= 1");
    if (data.size() == 0) throw ShapeError("fisher estimation on empty dataset");

    const std::int64_t dim = layout.total_params();
    const std::uint64_t theta_hash = store_fingerprint(layout, store);
    auto score_of = [&](std::int64_t i) {
        const int row = static_cast<int>(i % data.size());
        PathCache cache;
        cache.k = k;
        cache.theta_hash = theta_hash;
        cache.h_shared =
            encoder_forward(store, layout, data.row(row), nullptr, phase, &cache.enc);
        const Vec probs = head_forward(store, layout, k, cache.h_shared, nullptr, phase,
                                       &cache.head);
        Rng rng = derive_rng(seed, {0x666973ull, static_cast<std::uint64_t>(i)});
        const int y = draw_label(probs, rng.uniform());
        return pathway_backward(store, layout, k, cache, Target::label(y));
    };
    FisherInfo info = fisher_full_from_scores(dim, n_samples, score_of, exec);
    const std::int64_t active_flops =
        layout.encoder_forward_flops() + layout.heads[k - 1].forward_flops();
    const std::int64_t active_n = layout.encoder_param_count() + layout.head_param_count(k);
    book_passes(ledger, phase, n_samples, active_flops, active_n);
    return info;
}

LambdaMax lambda_max(const FisherInfo& fisher, int max_iters, double tol, std::uint64_t seed) {
    if (fisher.kind != FisherKind::full) throw ContractError("lambda_max needs a full fisher");
    fisher.validate();
    const int d = fisher.dim;

    Rng rng = derive_rng(seed, {0x706f77ull});
    Vec v(static_cast<std::size_t>(d));
    for (double& x : v) x = rng.normal();
    double nv = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    for (double& x : v) x /= nv;

    LambdaMax out;
    Vec w(static_cast<std::size_t>(d));
    double prev = 0.0;
    for (int it = 1; it <= max_iters; ++it) {
        for (int i = 0; i < d; ++i) {
            double acc = 0.0;
            for (int j = 0; j < d; ++j) acc += fisher.at(i, j) * v[j];
            w[static_cast<std::size_t>(i)] = acc;
        }
        const double lam = std::inner_product(v.begin(), v.end(), w.begin(), 0.0);
        const double nw = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
        out.value = std::max(lam, 0.0);
        out.iters = it;
        if (nw == 0.0) {  // zero matrix: lambda_max is exactly 0
            out.converged = true;
            return out;
        }
        for (int i = 0; i < d; ++i) v[static_cast<std::size_t>(i)] = w[i] / nw;
        if (it > 1 && std::abs(lam - prev) <= tol * std::max(1.0, std::abs(lam))) {
            out.converged = true;
            return out;
        }
        prev = lam;
    }
    out.converged = false;
    return out;
}

ForgettingPrediction predict_forgetting(const Vec& delta_theta, const FisherInfo& fisher) {
    if (static_cast<int>(delta_theta.size()) != fisher.dim)
        throw ShapeError("predict_forgetting shape mismatch");

    ForgettingPrediction out;
    double nd2 = 0.0;
    for (double d : delta_theta) nd2 += d * d;
    if (nd2 == 0.0) return out;

    if (fisher.kind == FisherKind::diagonal) {
        double q = 0.0;
        double fmax = 0.0;
        for (std::size_t j = 0; j < delta_theta.size(); ++j) {
            q += fisher.diag[j] * delta_theta[j] * delta_theta[j];
            fmax = std::max(fmax, fisher.diag[j]);
        }
        out.quadratic = 0.5 * q;
        out.bound = 0.5 * fmax * nd2;
        return out;
    }

    double q = 0.0;
    for (int i = 0; i < fisher.dim; ++i) {
        double acc = 0.0;
        for (int j = 0; j < fisher.dim; ++j) acc += fisher.at(i, j) * delta_theta[j];
        q += delta_theta[static_cast<std::size_t>(i)] * acc;
    }
    out.quadratic = 0.5 * q;
    // The Rayleigh quotient 2q/||d||^2 is a lower bound on lambda_max, so the
    // max keeps bound >= quadratic even when power iteration stops short.
    const double lam = std::max(lambda_max(fisher).value, q / nd2);
    out.bound = 0.5 * lam * nd2;
    return out;
}

}  // namespace papi
