// SPDX-License-Identifier: Apache-2.0
#ifndef DOCLAB_POLICY_PARAM_STORE_HPP_
#define DOCLAB_POLICY_PARAM_STORE_HPP_

#include <algorithm>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "doclab/numcore/tensor.hpp"
#include "doclab/util/error.hpp"
#include "doclab/util/rng.hpp"

namespace doclab::policy {

using doclab::num::Tensor;
using doclab::num::Var;

// Low-rank adapter pair for one base weight W0 stored [in x out].
// A is [rank x in], B is [out x rank]; the adapted layer computes
//   y = x.W0 + scale * (x.A^T).B^T
// B starts at zero so a fresh adapter leaves the base layer untouched.
template <class Real>
struct AdapterPair {
    Var<Real> A;
    Var<Real> B;
    bool enabled = true;
    Real scale = Real(1);
};

template <class Real>
struct ParamEntry {
    Var<Real> weight;
    bool frozen = false;
    std::optional<AdapterPair<Real>> adapter;
};

// Named model parameters: base tensors with a frozen flag plus optional
// adapters. Iteration order is insertion order everywhere, so optimizer
// updates and checkpoints are deterministic.
template <class Real>
class ParamStore {
public:
    Var<Real> add(const std::string& name, Tensor<Real> t) {
        if (entries_.count(name)) throw UsageError("duplicate parameter: " + name);
        auto node = std::make_shared<Tensor<Real>>(std::move(t));
        entries_[name] = ParamEntry<Real>{node, false, std::nullopt};
        order_.push_back(name);
        return node;
    }

    bool has(const std::string& name) const { return entries_.count(name) > 0; }

    ParamEntry<Real>& entry(const std::string& name) {
        auto it = entries_.find(name);
        if (it == entries_.end()) throw UsageError("unknown parameter: " + name);
        return it->second;
    }
    const ParamEntry<Real>& entry(const std::string& name) const {
        auto it = entries_.find(name);
        if (it == entries_.end()) throw UsageError("unknown parameter: " + name);
        return it->second;
    }

    Var<Real> weight(const std::string& name) const { return entry(name).weight; }

    const std::vector<std::string>& names() const { return order_; }

    uint64_t version() const { return version_; }
    void bump_version() { ++version_; }

    void freeze_all() {
        for (const auto& n : order_) entries_[n].frozen = true;
    }
    void unfreeze_all() {
        for (const auto& n : order_) entries_[n].frozen = false;
    }

    bool has_adapters() const {
        for (const auto& n : order_)
            if (entries_.at(n).adapter.has_value()) return true;
        return false;
    }

    // Attaches fresh adapters to the named base weights. A is drawn from a
    // fan-in-scaled normal (the usual low-rank init), B is zeros, so the
    // adapted model equals the base model exactly until the first optimizer
    // step. Pass a_init_std > 0 to override the fan-in scaling.
    void inject_adapters(const std::vector<std::string>& target_names, int rank, Real scale,
                         Rng& rng, Real a_init_std = Real(0)) {
        if (rank <= 0) throw UsageError("adapter rank must be positive");
        for (const auto& name : target_names) {
            auto& e = entry(name);
            if (e.adapter.has_value()) throw UsageError("adapter already present on " + name);
            if (e.weight->shape.size() != 2)
                throw ShapeError("adapters attach to 2-D weights only: " + name);
            const int64_t in = e.weight->shape[0], out = e.weight->shape[1];
            if (rank * 4 >= std::min(in, out))
                throw UsageError("adapter rank too large for " + name);
            const Real a_std = a_init_std > Real(0)
                                   ? a_init_std
                                   : Real(1) / static_cast<Real>(std::sqrt(double(in)));
            AdapterPair<Real> pair;
            pair.A = std::make_shared<Tensor<Real>>(Tensor<Real>::randn({rank, in}, rng, a_std));
            pair.B = std::make_shared<Tensor<Real>>(Tensor<Real>({out, rank}));
            pair.enabled = true;
            pair.scale = scale;
            e.adapter = std::move(pair);
        }
        bump_version();
    }

    void set_adapters_enabled(bool enabled) {
        for (const auto& n : order_) {
            auto& e = entries_[n];
            if (e.adapter) e.adapter->enabled = enabled;
        }
    }

    // Trainable parameters in deterministic order: unfrozen base weights
    // first (per insertion order), then adapter pairs. Frozen bases never
    // appear, which is how base freezing is enforced end to end.
    std::vector<std::pair<std::string, Var<Real>>> trainable() const {
        std::vector<std::pair<std::string, Var<Real>>> out;
        for (const auto& n : order_) {
            const auto& e = entries_.at(n);
            if (!e.frozen) out.emplace_back(n, e.weight);
        }
        for (const auto& n : order_) {
            const auto& e = entries_.at(n);
            if (e.adapter) {
                out.emplace_back(n + ".lora_A", e.adapter->A);
                out.emplace_back(n + ".lora_B", e.adapter->B);
            }
        }
        return out;
    }

    // Marks trainable tensors so the tape propagates gradients to them.
    void mark_grads() const {
        for (const auto& n : order_) {
            const auto& e = entries_.at(n);
            e.weight->needs_grad = !e.frozen;
            if (e.weight->needs_grad) e.weight->ensure_grad();
            if (e.adapter) {
                e.adapter->A->needs_grad = true;
                e.adapter->A->ensure_grad();
                e.adapter->B->needs_grad = true;
                e.adapter->B->ensure_grad();
            }
        }
    }

    void clear_grad_marks() const {
        for (const auto& n : order_) {
            const auto& e = entries_.at(n);
            e.weight->needs_grad = false;
            if (e.adapter) {
                e.adapter->A->needs_grad = false;
                e.adapter->B->needs_grad = false;
            }
        }
    }

    ParamStore clone() const {
        ParamStore out;
        out.version_ = version_;
        for (const auto& n : order_) {
            const auto& e = entries_.at(n);
            out.add(n, *e.weight);
            auto& ne = out.entry(n);
            ne.frozen = e.frozen;
            if (e.adapter) {
                AdapterPair<Real> pair;
                pair.A = std::make_shared<Tensor<Real>>(*e.adapter->A);
                pair.B = std::make_shared<Tensor<Real>>(*e.adapter->B);
                pair.enabled = e.adapter->enabled;
                pair.scale = e.adapter->scale;
                ne.adapter = std::move(pair);
            }
        }
        return out;
    }

    // Folds every adapter into its base weight and drops the pair:
    //   W' = W0 + scale * A^T.B^T   (both stored [in x out]).
    // Merging twice is a no-op because no adapters remain.
    ParamStore merged() const {
        ParamStore out = clone();
        for (const auto& n : out.order_) {
            auto& e = out.entries_[n];
            if (!e.adapter) continue;
            const auto& A = *e.adapter->A;  // [r x in]
            const auto& B = *e.adapter->B;  // [out x r]
            const int64_t r = A.shape[0], in = A.shape[1], cols = B.shape[0];
            auto& w = *e.weight;  // [in x out]
            for (int64_t i = 0; i < in; ++i)
                for (int64_t j = 0; j < cols; ++j) {
                    Real s = 0;
                    for (int64_t k = 0; k < r; ++k) s += A.at(k, i) * B.at(j, k);
                    w.at(i, j) += e.adapter->scale * s;
                }
            e.adapter.reset();
        }
        out.bump_version();
        return out;
    }

private:
    std::vector<std::string> order_;
    std::unordered_map<std::string, ParamEntry<Real>> entries_;
    uint64_t version_ = 0;
};

}  // namespace doclab::policy

#endif  // DOCLAB_POLICY_PARAM_STORE_HPP_
