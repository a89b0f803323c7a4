#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "papi/common.hpp"
#include "papi/parallel.hpp"

namespace papi {

enum class Activation { relu, tanh, identity };
enum class Head { softmax_xent, mse };

// Dense feed-forward topology. Parameters live in one flat vector; per layer
// l the block is W_l (widths[l+1] x widths[l], row-major) followed by b_l.
struct NetArch {
    std::vector<int> widths;
    Activation act = Activation::relu;
    Head head = Head::softmax_xent;

    int layers() const { return static_cast<int>(widths.size()) - 1; }
    int input_dim() const { return widths.front(); }
    int output_dim() const { return widths.back(); }
    std::int64_t param_count() const;
    // flops for one forward pass: 2*m*n + n per dense layer
    std::int64_t forward_flops() const;
    void validate() const;

    bool operator==(const NetArch&) const = default;
};

struct LrSchedule {
    enum class Mode { constant, inverse_t };
    double eta0 = 0.01;
    Mode mode = Mode::constant;
    double beta = 0.0;

    // eta_t = eta0 / (1 + beta*t) in inverse_t mode, t >= 1
    double rate(std::int64_t t) const;
    void validate() const;

    bool operator==(const LrSchedule&) const = default;
};

// Either a class label (softmax_xent head) or a regression vector (mse head).
struct Target {
    int cls = -1;
    Vec values;

    static Target label(int c) { return Target{c, {}}; }
    static Target regress(Vec v) { return Target{-1, std::move(v)}; }
    bool is_label() const { return cls >= 0; }
};

struct FwdCache {
    Vec input;
    std::vector<Vec> pre;   // pre-activation per layer
    std::vector<Vec> post;  // post-activation per layer; back() is the net output
    std::uint64_t params_hash = 0;
};

Vec init_params(const NetArch& arch, std::uint64_t seed);

Vec forward(const NetArch& arch, std::span<const double> params, std::span<const double> x,
            FwdCache* cache = nullptr);

double loss_value(const NetArch& arch, const Vec& output, const Target& target);

// Gradient of the head loss w.r.t. every parameter. The cache must come from
// forward() on the same params; a mismatch throws ContractError. When
// input_grad is non-null it receives dL/dx.
Vec backward(const NetArch& arch, std::span<const double> params, const FwdCache& cache,
             const Target& target, Vec* input_grad = nullptr);

void sgd_step(Vec& params, const Vec& grad, const LrSchedule& schedule, std::int64_t t);

double activate(Activation a, double z);
double activate_deriv(Activation a, double z);
Vec softmax(const Vec& logits);

// ---- datasets and batch kernels -------------------------------------------

struct Dataset {
    int dim = 0;
    std::vector<double> features;  // n x dim, row-major
    std::vector<Target> targets;

    int size() const { return static_cast<int>(targets.size()); }
    std::span<const double> row(int i) const {
        return std::span<const double>(features.data() + static_cast<std::size_t>(i) * dim, dim);
    }
};

struct EvalResult {
    double mean_loss = 0.0;
    double accuracy = 0.0;  // NaN when the dataset has regression targets
};

EvalResult eval_dataset(const NetArch& arch, const Vec& params, const Dataset& data,
                        par::Exec exec = par::Exec::parallel);

// Mean loss and mean gradient over data[idx]. Returns the mean loss.
double mean_loss_grad(const NetArch& arch, const Vec& params, const Dataset& data,
                      std::span<const int> idx, Vec& grad_out,
                      par::Exec exec = par::Exec::parallel);

std::uint64_t params_fingerprint(const NetArch& arch, std::span<const double> params);

}  // namespace papi
