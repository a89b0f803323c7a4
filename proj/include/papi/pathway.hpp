#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "papi/energy.hpp"
#include "papi/nn.hpp"

namespace papi {

// Shared encoder + one head per pathway. An encoder with a single width is
// the identity map with zero parameters (fully disjoint pathways).
struct PathwayLayout {
    std::vector<int> encoder_widths;
    Activation act = Activation::relu;
    std::vector<NetArch> heads;

    int input_dim() const { return encoder_widths.front(); }
    int feature_dim() const { return encoder_widths.back(); }
    int pathways() const { return static_cast<int>(heads.size()); }
    std::int64_t encoder_param_count() const;
    std::int64_t encoder_forward_flops() const;
    std::int64_t head_param_count(int k) const { return heads[k - 1].param_count(); }
    std::int64_t head_offset(int k) const;  // offset of head k's block in theta
    std::int64_t total_params() const;
    void validate() const;

    bool operator==(const PathwayLayout&) const = default;
};

// Flat parameter vector partitioned into the shared block and one
// pathway-specific block per head. Index sets are disjoint and exhaustive.
struct ParamStore {
    Vec theta;
    std::vector<int> shared_idx;
    std::vector<std::vector<int>> ps_idx;  // ps_idx[k-1] for pathway k

    int pathways() const { return static_cast<int>(ps_idx.size()); }
    bool operator==(const ParamStore&) const = default;
};

ParamStore build(const PathwayLayout& layout, int k_pathways, std::uint64_t seed);

// shared_idx U ps_idx[k], sorted
std::vector<int> active_params(const ParamStore& store, int k);

struct PathCache {
    int k = 0;
    FwdCache enc;   // unused for the identity encoder
    FwdCache head;
    Vec h_shared;
    std::uint64_t theta_hash = 0;
};

std::uint64_t store_fingerprint(const PathwayLayout& layout, const ParamStore& store);

// Encoder features for one input. Books encoder forward cost to `phase`.
Vec encoder_forward(const ParamStore& store, const PathwayLayout& layout,
                    std::span<const double> x, EnergyLedger* ledger = nullptr,
                    Phase phase = Phase::inference, FwdCache* cache = nullptr);

// Full pathway pass: encoder then head k. Only P_k = shared U ps[k] is read;
// the ledger compute counter grows by the exact multiply-add count of the
// active layers and the memory counter by |active_params|.
std::pair<Vec, PathCache> pathway_forward(const ParamStore& store, const PathwayLayout& layout,
                                          int k, std::span<const double> x,
                                          EnergyLedger* ledger = nullptr,
                                          Phase phase = Phase::inference);

// Head-only pass over precomputed features (used when routing already paid
// for the encoder).
Vec head_forward(const ParamStore& store, const PathwayLayout& layout, int k,
                 const Vec& h_shared, EnergyLedger* ledger = nullptr,
                 Phase phase = Phase::inference, FwdCache* cache = nullptr);

// Dense gradient over theta with zeros outside active_params(store, k).
Vec pathway_backward(const ParamStore& store, const PathwayLayout& layout, int k,
                     const PathCache& cache, const Target& target,
                     EnergyLedger* ledger = nullptr, Phase phase = Phase::train);

// Batch kernels (block-deterministic when exec == parallel).
EvalResult pathway_eval(const ParamStore& store, const PathwayLayout& layout, int k,
                        const Dataset& data, par::Exec exec = par::Exec::parallel,
                        EnergyLedger* ledger = nullptr, Phase phase = Phase::inference);

double pathway_mean_grad(const ParamStore& store, const PathwayLayout& layout, int k,
                         const Dataset& data, std::span<const int> idx, Vec& grad_out,
                         par::Exec exec = par::Exec::parallel, EnergyLedger* ledger = nullptr,
                         Phase phase = Phase::train);

}  // namespace papi
