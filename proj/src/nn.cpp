#include "papi/nn.hpp"

#include <algorithm>
#include <cmath>

#include "papi/rng.hpp"

namespace papi {

void NetArch::validate() const {
    if (widths.size() < 2) throw ConfigError("NetArch needs at least 2 layers");
    for (int w : widths)
        if (w < 1) throw ConfigError("NetArch widths must be >= 1");
}

std::int64_t NetArch::param_count() const {
    std::int64_t n = 0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l)
        n += static_cast<std::int64_t>(widths[l + 1]) * (widths[l] + 1);
    return n;
}

std::int64_t NetArch::forward_flops() const {
    std::int64_t f = 0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l)
        f += 2ll * widths[l + 1] * widths[l] + widths[l + 1];
    return f;
}

double LrSchedule::rate(std::int64_t t) const {
    if (t < 1) throw ContractError("sgd step index must be >= 1");
    if (mode == Mode::constant) return eta0;
    return eta0 / (1.0 + beta * static_cast<double>(t));
}

void LrSchedule::validate() const {
    if (!(eta0 > 0.0)) throw ConfigError("schedule eta0 must be positive");
    if (beta < 0.0) throw ConfigError("schedule beta must be nonnegative");
}

double activate(Activation a, double z) {
    switch (a) {
        case Activation::relu: return z > 0.0 ? z : 0.0;
        case Activation::tanh: return std::tanh(z);
        case Activation::identity: return z;
    }
    return z;
}

double activate_deriv(Activation a, double z) {
    switch (a) {
        case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::tanh: {
            const double t = std::tanh(z);
            return 1.0 - t * t;
        }
        case Activation::identity: return 1.0;
    }
    return 1.0;
}

Vec softmax(const Vec& logits) {
    Vec p(logits.size());
    double m = logits[0];
    for (double z : logits) m = std::max(m, z);
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - m);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

Vec init_params(const NetArch& arch, std::uint64_t seed) {
    arch.validate();
    Vec params(static_cast<std::size_t>(arch.param_count()), 0.0);
    Rng rng = derive_rng(seed, {0x696e6974ull});
    std::size_t off = 0;
    for (int l = 0; l + 1 < static_cast<int>(arch.widths.size()); ++l) {
        const int fan_in = arch.widths[l];
        const int fan_out = arch.widths[l + 1];
        const double s = std::sqrt(6.0 / (fan_in + fan_out));
        for (int i = 0; i < fan_out * fan_in; ++i) params[off + i] = rng.uniform(-s, s);
        off += static_cast<std::size_t>(fan_out) * fan_in;
        off += fan_out;  // biases stay zero
    }
    return params;
}

std::uint64_t params_fingerprint(const NetArch& arch, std::span<const double> params) {
    std::uint64_t h = fnv1a64(arch.widths.data(), arch.widths.size() * sizeof(int));
    h = fnv1a64(params.data(), params.size_bytes(), h);
    return h;
}

Vec forward(const NetArch& arch, std::span<const double> params, std::span<const double> x,
            FwdCache* cache) {
    arch.validate();
    if (static_cast<std::int64_t>(params.size()) != arch.param_count())
        throw ShapeError("params length does not match arch");
    if (static_cast<int>(x.size()) != arch.input_dim())
        throw ShapeError("input length does not match arch");

    const int L = arch.layers();
    Vec cur(x.begin(), x.end());
    if (cache) {
        cache->input = cur;
        cache->pre.assign(L, {});
        cache->post.assign(L, {});
        cache->params_hash = params_fingerprint(arch, params);
    }
    std::size_t off = 0;
    for (int l = 0; l < L; ++l) {
        const int m = arch.widths[l];
        const int n = arch.widths[l + 1];
        const double* W = params.data() + off;
        const double* b = params.data() + off + static_cast<std::size_t>(n) * m;
        Vec z(n);
        for (int i = 0; i < n; ++i) {
            double acc = b[i];
            const double* wrow = W + static_cast<std::size_t>(i) * m;
            for (int j = 0; j < m; ++j) acc += wrow[j] * cur[j];
            z[i] = acc;
        }
        const bool last = (l == L - 1);
        Vec a(n);
        for (int i = 0; i < n; ++i) a[i] = last ? z[i] : activate(arch.act, z[i]);
        if (last && arch.head == Head::softmax_xent) a = softmax(a);
        if (cache) {
            cache->pre[l] = z;
            cache->post[l] = a;
        }
        cur = std::move(a);
        off += static_cast<std::size_t>(n) * (m + 1);
    }
    return cur;
}

double loss_value(const NetArch& arch, const Vec& output, const Target& target) {
    if (arch.head == Head::softmax_xent) {
        if (!target.is_label()) throw ShapeError("softmax_xent head needs a class label");
        if (target.cls >= static_cast<int>(output.size()))
            throw ShapeError("class label out of range");
        return -std::log(std::max(output[target.cls], 1e-300));
    }
    if (target.values.size() != output.size()) throw ShapeError("mse target length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < output.size(); ++i) {
        const double d = output[i] - target.values[i];
        s += d * d;
    }
    return 0.5 * s;
}

Vec backward(const NetArch& arch, std::span<const double> params, const FwdCache& cache,
             const Target& target, Vec* input_grad) {
    arch.validate();
    if (static_cast<std::int64_t>(params.size()) != arch.param_count())
        throw ShapeError("params length does not match arch");
    if (cache.params_hash != params_fingerprint(arch, params))
        throw ContractError("stale forward cache");

    const int L = arch.layers();
    const Vec& out = cache.post.back();

    // dL/d(final pre-activation)
    Vec delta;
    if (arch.head == Head::softmax_xent) {
        if (!target.is_label()) throw ShapeError("softmax_xent head needs a class label");
        delta = out;
        delta[target.cls] -= 1.0;
    } else {
        if (target.values.size() != out.size()) throw ShapeError("mse target length mismatch");
        delta.resize(out.size());
        for (std::size_t i = 0; i < out.size(); ++i) delta[i] = out[i] - target.values[i];
    }

    Vec grad(params.size(), 0.0);
    std::vector<std::size_t> offsets(L);
    {
        std::size_t off = 0;
        for (int l = 0; l < L; ++l) {
            offsets[l] = off;
            off += static_cast<std::size_t>(arch.widths[l + 1]) * (arch.widths[l] + 1);
        }
    }
    for (int l = L - 1; l >= 0; --l) {
        const int m = arch.widths[l];
        const int n = arch.widths[l + 1];
        const Vec& in = (l == 0) ? cache.input : cache.post[l - 1];
        double* gW = grad.data() + offsets[l];
        double* gb = gW + static_cast<std::size_t>(n) * m;
        for (int i = 0; i < n; ++i) {
            const double d = delta[i];
            double* grow = gW + static_cast<std::size_t>(i) * m;
            for (int j = 0; j < m; ++j) grow[j] += d * in[j];
            gb[i] += d;
        }
        if (l > 0 || input_grad) {
            const double* W = params.data() + offsets[l];
            Vec prev(m, 0.0);
            for (int i = 0; i < n; ++i) {
                const double d = delta[i];
                const double* wrow = W + static_cast<std::size_t>(i) * m;
                for (int j = 0; j < m; ++j) prev[j] += d * wrow[j];
            }
            if (l > 0) {
                for (int j = 0; j < m; ++j)
                    prev[j] *= activate_deriv(arch.act, cache.pre[l - 1][j]);
                delta = std::move(prev);
            } else {
                *input_grad = std::move(prev);
            }
        }
    }
    return grad;
}

void sgd_step(Vec& params, const Vec& grad, const LrSchedule& schedule, std::int64_t t) {
    if (params.size() != grad.size()) throw ShapeError("sgd_step length mismatch");
    check_finite(grad, "gradient");
    const double eta = schedule.rate(t);
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= eta * grad[i];
}

EvalResult eval_dataset(const NetArch& arch, const Vec& params, const Dataset& data,
                        par::Exec exec) {
    const int n = data.size();
    if (n == 0) throw ShapeError("eval_dataset on empty dataset");
    bool labeled = true;
    for (const auto& t : data.targets)
        if (!t.is_label()) labeled = false;

    auto one = [&](std::int64_t i, double* acc) {
        const Vec out = forward(arch, params, data.row(static_cast<int>(i)));
        acc[0] += loss_value(arch, out, data.targets[i]);
        if (labeled && argmax_lowest(out) == data.targets[i].cls) acc[1] += 1.0;
    };
    double acc[2] = {0.0, 0.0};
    if (exec == par::Exec::parallel)
        par::block_sum_vec(n, 2, acc, one);
    else
        par::serial_sum_vec(n, 2, acc, one);
    EvalResult r;
    r.mean_loss = acc[0] / n;
    r.accuracy = labeled ? acc[1] / n : std::nan("");
    return r;
}

double mean_loss_grad(const NetArch& arch, const Vec& params, const Dataset& data,
                      std::span<const int> idx, Vec& grad_out, par::Exec exec) {
    const std::int64_t n = static_cast<std::int64_t>(idx.size());
    if (n == 0) throw ShapeError("mean_loss_grad on empty batch");
    const std::int64_t dim = arch.param_count();
    grad_out.assign(static_cast<std::size_t>(dim), 0.0);

    // slot 0 holds the loss, the rest the gradient
    std::vector<double> buf(static_cast<std::size_t>(dim) + 1, 0.0);
    auto one = [&](std::int64_t i, double* acc) {
        const int row = idx[static_cast<std::size_t>(i)];
        FwdCache cache;
        const Vec out = forward(arch, params, data.row(row), &cache);
        acc[0] += loss_value(arch, out, data.targets[row]);
        const Vec g = backward(arch, params, cache, data.targets[row]);
        for (std::int64_t j = 0; j < dim; ++j) acc[j + 1] += g[static_cast<std::size_t>(j)];
    };
    if (exec == par::Exec::parallel)
        par::block_sum_vec(n, dim + 1, buf.data(), one);
    else
        par::serial_sum_vec(n, dim + 1, buf.data(), one);

    const double inv = 1.0 / static_cast<double>(n);
    for (std::int64_t j = 0; j < dim; ++j) grad_out[static_cast<std::size_t>(j)] = buf[j + 1] * inv;
    return buf[0] * inv;
}

}  // namespace papi
