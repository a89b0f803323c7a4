#include "papi/pathway.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "papi/rng.hpp"

namespace papi {

std::int64_t PathwayLayout::encoder_param_count() const {
    std::int64_t n = 0;
    for (std::size_t l = 0; l + 1 < encoder_widths.size(); ++l)
        n += static_cast<std::int64_t>(encoder_widths[l + 1]) * (encoder_widths[l] + 1);
    return n;
}

std::int64_t PathwayLayout::encoder_forward_flops() const {
    std::int64_t f = 0;
    for (std::size_t l = 0; l + 1 < encoder_widths.size(); ++l)
        f += 2ll * encoder_widths[l + 1] * encoder_widths[l] + encoder_widths[l + 1];
    return f;
}

std::int64_t PathwayLayout::head_offset(int k) const {
    std::int64_t off = encoder_param_count();
    for (int j = 1; j < k; ++j) off += heads[j - 1].param_count();
    return off;
}

std::int64_t PathwayLayout::total_params() const {
    std::int64_t n = encoder_param_count();
    for (const auto& h : heads) n += h.param_count();
    return n;
}

void PathwayLayout::validate() const {
    if (encoder_widths.empty()) throw ConfigError("encoder needs at least one width");
    for (int w : encoder_widths)
        if (w < 1) throw ConfigError("encoder widths must be >= 1");
    if (heads.empty()) throw ConfigError("layout needs at least one head");
    for (const auto& h : heads) {
        h.validate();
        if (h.input_dim() != feature_dim())
            throw ConfigError("head input width must match encoder feature width");
        if (h.act != act)
            throw ConfigError("heads must use the layout activation");
    }
}

namespace {

void check_store(const PathwayLayout& layout, const ParamStore& store) {
    if (static_cast<std::int64_t>(store.theta.size()) != layout.total_params())
        throw ShapeError("theta length does not match layout");
    if (store.pathways() != layout.pathways())
        throw ShapeError("store pathway count does not match layout");
}

void check_pathway_index(const ParamStore& store, int k) {
    if (k < 1 || k > store.pathways()) throw ContractError("pathway index out of range");
}

std::span<const double> head_span(const ParamStore& store, const PathwayLayout& layout, int k) {
    return std::span<const double>(store.theta.data() + layout.head_offset(k),
                                   static_cast<std::size_t>(layout.head_param_count(k)));
}

// flops for one forward pass through P_k
std::int64_t active_forward_flops(const PathwayLayout& layout, int k) {
    return layout.encoder_forward_flops() + layout.heads[k - 1].forward_flops();
}

std::int64_t active_param_count(const PathwayLayout& layout, int k) {
    return layout.encoder_param_count() + layout.head_param_count(k);
}

}  // namespace

ParamStore build(const PathwayLayout& layout, int k_pathways, std::uint64_t seed) {
    layout.validate();
    if (k_pathways < 1) throw ConfigError("pathway count must be >= 1");
    if (k_pathways != layout.pathways())
        throw ConfigError("pathway count does not match the number of heads");

    ParamStore store;
    store.theta.assign(static_cast<std::size_t>(layout.total_params()), 0.0);

    const std::int64_t n_enc = layout.encoder_param_count();
    if (n_enc > 0) {
        NetArch enc{layout.encoder_widths, layout.act, Head::mse};
        const Vec p = init_params(enc, mix64(seed, 0x656e63ull));
        std::copy(p.begin(), p.end(), store.theta.begin());
    }
    for (int k = 1; k <= k_pathways; ++k) {
        const Vec p = init_params(layout.heads[k - 1], mix64(mix64(seed, 0x68656164ull), k));
        std::copy(p.begin(), p.end(), store.theta.begin() + layout.head_offset(k));
    }

    store.shared_idx.resize(static_cast<std::size_t>(n_enc));
    std::iota(store.shared_idx.begin(), store.shared_idx.end(), 0);
    store.ps_idx.resize(static_cast<std::size_t>(k_pathways));
    for (int k = 1; k <= k_pathways; ++k) {
        auto& ps = store.ps_idx[k - 1];
        ps.resize(static_cast<std::size_t>(layout.head_param_count(k)));
        std::iota(ps.begin(), ps.end(), static_cast<int>(layout.head_offset(k)));
    }
    return store;
}

std::vector<int> active_params(const ParamStore& store, int k) {
    check_pathway_index(store, k);
    const auto& ps = store.ps_idx[k - 1];
    std::vector<int> idx;
    idx.reserve(store.shared_idx.size() + ps.size());
    std::merge(store.shared_idx.begin(), store.shared_idx.end(), ps.begin(), ps.end(),
               std::back_inserter(idx));
    return idx;
}

std::uint64_t store_fingerprint(const PathwayLayout& layout, const ParamStore& store) {
    std::uint64_t h = fnv1a64(layout.encoder_widths.data(),
                              layout.encoder_widths.size() * sizeof(int));
    for (const auto& head : layout.heads)
        h = fnv1a64(head.widths.data(), head.widths.size() * sizeof(int), h);
    return hash_vec(store.theta, h);
}

Vec encoder_forward(const ParamStore& store, const PathwayLayout& layout,
                    std::span<const double> x, EnergyLedger* ledger, Phase phase,
                    FwdCache* cache) {
    check_store(layout, store);
    if (static_cast<int>(x.size()) != layout.input_dim())
        throw ShapeError("input length does not match layout");

    const int L = static_cast<int>(layout.encoder_widths.size()) - 1;
    Vec cur(x.begin(), x.end());
    if (cache) {
        cache->input = cur;
        cache->pre.assign(L, {});
        cache->post.assign(L, {});
        cache->params_hash = 0;
    }
    // Encoder output is a hidden representation, so the activation applies to
    // every encoder layer including the last.
    std::size_t off = 0;
    for (int l = 0; l < L; ++l) {
        const int m = layout.encoder_widths[l];
        const int n = layout.encoder_widths[l + 1];
        const double* W = store.theta.data() + off;
        const double* b = W + static_cast<std::size_t>(n) * m;
        Vec z(n);
        for (int i = 0; i < n; ++i) {
            double acc = b[i];
            const double* wrow = W + static_cast<std::size_t>(i) * m;
            for (int j = 0; j < m; ++j) acc += wrow[j] * cur[j];
            z[i] = acc;
        }
        Vec a(n);
        for (int i = 0; i < n; ++i) a[i] = activate(layout.act, z[i]);
        if (cache) {
            cache->pre[l] = z;
            cache->post[l] = a;
        }
        cur = std::move(a);
        off += static_cast<std::size_t>(n) * (m + 1);
    }
    if (ledger) {
        ledger->add_flops(phase, static_cast<std::uint64_t>(layout.encoder_forward_flops()));
        ledger->add_param_accesses(phase,
                                   static_cast<std::uint64_t>(layout.encoder_param_count()));
    }
    return cur;
}

Vec head_forward(const ParamStore& store, const PathwayLayout& layout, int k,
                 const Vec& h_shared, EnergyLedger* ledger, Phase phase, FwdCache* cache) {
    check_store(layout, store);
    check_pathway_index(store, k);
    if (static_cast<int>(h_shared.size()) != layout.feature_dim())
        throw ShapeError("feature length does not match layout");
    Vec out = forward(layout.heads[k - 1], head_span(store, layout, k), h_shared, cache);
    if (ledger) {
        ledger->add_flops(phase,
                          static_cast<std::uint64_t>(layout.heads[k - 1].forward_flops()));
        ledger->add_param_accesses(phase,
                                   static_cast<std::uint64_t>(layout.head_param_count(k)));
    }
    return out;
}

std::pair<Vec, PathCache> pathway_forward(const ParamStore& store, const PathwayLayout& layout,
                                          int k, std::span<const double> x,
                                          EnergyLedger* ledger, Phase phase) {
    PathCache cache;
    cache.k = k;
    cache.h_shared = encoder_forward(store, layout, x, ledger, phase, &cache.enc);
    Vec out = head_forward(store, layout, k, cache.h_shared, ledger, phase, &cache.head);
    cache.theta_hash = store_fingerprint(layout, store);
    return {std::move(out), std::move(cache)};
}

Vec pathway_backward(const ParamStore& store, const PathwayLayout& layout, int k,
                     const PathCache& cache, const Target& target, EnergyLedger* ledger,
                     Phase phase) {
    check_store(layout, store);
    check_pathway_index(store, k);
    if (cache.k != k) throw ContractError("cache was built for a different pathway");
    if (cache.theta_hash != store_fingerprint(layout, store))
        throw ContractError("stale pathway cache");

    Vec grad(store.theta.size(), 0.0);

    const NetArch& head = layout.heads[k - 1];
    Vec dh;
    const Vec head_grad = backward(head, head_span(store, layout, k), cache.head, target, &dh);
    std::copy(head_grad.begin(), head_grad.end(), grad.begin() + layout.head_offset(k));

    const int L = static_cast<int>(layout.encoder_widths.size()) - 1;
    if (L > 0) {
        std::vector<std::size_t> offsets(L);
        std::size_t off = 0;
        for (int l = 0; l < L; ++l) {
            offsets[l] = off;
            off += static_cast<std::size_t>(layout.encoder_widths[l + 1]) *
                   (layout.encoder_widths[l] + 1);
        }
        // dh is w.r.t. the post-activation encoder output
        Vec delta(dh.size());
        for (std::size_t j = 0; j < dh.size(); ++j)
            delta[j] = dh[j] * activate_deriv(layout.act, cache.enc.pre[L - 1][j]);
        for (int l = L - 1; l >= 0; --l) {
            const int m = layout.encoder_widths[l];
            const int n = layout.encoder_widths[l + 1];
            const Vec& in = (l == 0) ? cache.enc.input : cache.enc.post[l - 1];
            double* gW = grad.data() + offsets[l];
            double* gb = gW + static_cast<std::size_t>(n) * m;
            for (int i = 0; i < n; ++i) {
                const double d = delta[i];
                double* grow = gW + static_cast<std::size_t>(i) * m;
                for (int j = 0; j < m; ++j) grow[j] += d * in[j];
                gb[i] += d;
            }
            if (l > 0) {
                const double* W = store.theta.data() + offsets[l];
                Vec prev(m, 0.0);
                for (int i = 0; i < n; ++i) {
                    const double d = delta[i];
                    const double* wrow = W + static_cast<std::size_t>(i) * m;
                    for (int j = 0; j < m; ++j) prev[j] += d * wrow[j];
                }
                for (int j = 0; j < m; ++j)
                    prev[j] *= activate_deriv(layout.act, cache.enc.pre[l - 1][j]);
                delta = std::move(prev);
            }
        }
    }

    if (ledger) {
        ledger->add_flops(phase, 2ull * static_cast<std::uint64_t>(active_forward_flops(layout, k)));
        ledger->add_param_accesses(phase,
                                   static_cast<std::uint64_t>(active_param_count(layout, k)));
    }
    return grad;
}

namespace {

// forward through P_k with no cache and no booking; batch kernels book the
// aggregate analytically
Vec fwd_one(const ParamStore& store, const PathwayLayout& layout, int k,
            std::span<const double> x) {
    Vec h = encoder_forward(store, layout, x);
    return forward(layout.heads[k - 1], head_span(store, layout, k), h);
}

}  // namespace

EvalResult pathway_eval(const ParamStore& store, const PathwayLayout& layout, int k,
                        const Dataset& data, par::Exec exec, EnergyLedger* ledger,
                        Phase phase) {
    check_store(layout, store);
    check_pathway_index(store, k);
    const int n = data.size();
    if (n == 0) throw ShapeError("pathway_eval on empty dataset");
    bool labeled = true;
    for (const auto& t : data.targets)
        if (!t.is_label()) labeled = false;

    auto one = [&](std::int64_t i, double* acc) {
        const Vec out = fwd_one(store, layout, k, data.row(static_cast<int>(i)));
        acc[0] += loss_value(layout.heads[k - 1], out, data.targets[i]);
        if (labeled && argmax_lowest(out) == data.targets[i].cls) acc[1] += 1.0;
    };
    double acc[2] = {0.0, 0.0};
    if (exec == par::Exec::parallel)
        par::block_sum_vec(n, 2, acc, one);
    else
        par::serial_sum_vec(n, 2, acc, one);

    if (ledger) {
        ledger->add_flops(phase, static_cast<std::uint64_t>(n) *
                                     static_cast<std::uint64_t>(active_forward_flops(layout, k)));
        ledger->add_param_accesses(
            phase, static_cast<std::uint64_t>(n) *
                       static_cast<std::uint64_t>(active_param_count(layout, k)));
    }
    EvalResult r;
    r.mean_loss = acc[0] / n;
    r.accuracy = labeled ? acc[1] / n : std::nan("");
    return r;
}

double pathway_mean_grad(const ParamStore& store, const PathwayLayout& layout, int k,
                         const Dataset& data, std::span<const int> idx, Vec& grad_out,
                         par::Exec exec, EnergyLedger* ledger, Phase phase) {
    check_store(layout, store);
    check_pathway_index(store, k);
    const std::int64_t n = static_cast<std::int64_t>(idx.size());
    if (n == 0) throw ShapeError("pathway_mean_grad on empty batch");
    const std::int64_t dim = layout.total_params();
    grad_out.assign(static_cast<std::size_t>(dim), 0.0);

    const std::uint64_t theta_hash = store_fingerprint(layout, store);
    std::vector<double> buf(static_cast<std::size_t>(dim) + 1, 0.0);
    auto one = [&](std::int64_t i, double* acc) {
        const int row = idx[static_cast<std::size_t>(i)];
        PathCache cache;
        cache.k = k;
        cache.theta_hash = theta_hash;
        cache.h_shared = encoder_forward(store, layout, data.row(row), nullptr,
                                         Phase::train, &cache.enc);
        const Vec out = forward(layout.heads[k - 1], head_span(store, layout, k),
                                cache.h_shared, &cache.head);
        acc[0] += loss_value(layout.heads[k - 1], out, data.targets[row]);
        const Vec g = pathway_backward(store, layout, k, cache, data.targets[row]);
        for (std::int64_t j = 0; j < dim; ++j) acc[j + 1] += g[static_cast<std::size_t>(j)];
    };
    if (exec == par::Exec::parallel)
        par::block_sum_vec(n, dim + 1, buf.data(), one);
    else
        par::serial_sum_vec(n, dim + 1, buf.data(), one);

    if (ledger) {
        ledger->add_flops(phase, static_cast<std::uint64_t>(n) * 3ull *
                                     static_cast<std::uint64_t>(active_forward_flops(layout, k)));
        ledger->add_param_accesses(
            phase, static_cast<std::uint64_t>(n) * 2ull *
                       static_cast<std::uint64_t>(active_param_count(layout, k)));
    }
    const double inv = 1.0 / static_cast<double>(n);
    for (std::int64_t j = 0; j < dim; ++j) grad_out[static_cast<std::size_t>(j)] = buf[j + 1] * inv;
    return buf[0] * inv;
}

}  // namespace papi
