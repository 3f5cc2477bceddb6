// SPDX-License-Identifier: Apache-2.0
#ifndef DOCLAB_NUMCORE_OPTIMIZER_HPP_
#define DOCLAB_NUMCORE_OPTIMIZER_HPP_

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "doclab/numcore/tensor.hpp"
#include "doclab/util/error.hpp"

namespace doclab::num {

// Adaptive moment estimation with bias correction and decoupled weight decay.
template <class Real>
struct AdamConfig {
    Real lr = Real(1e-3);
    Real beta1 = Real(0.9);
    Real beta2 = Real(0.999);
    Real eps = Real(1e-8);
    Real weight_decay = Real(0);
};

template <class Real>
class Adam {
public:
    explicit Adam(AdamConfig<Real> cfg = {}) : cfg_(cfg) {
        if (cfg_.lr <= 0 || cfg_.beta1 <= 0 || cfg_.beta1 >= 1 || cfg_.beta2 <= 0 ||
            cfg_.beta2 >= 1 || cfg_.eps <= 0)
            throw UsageError("Adam hyperparameters out of range");
    }

    const AdamConfig<Real>& config() const { return cfg_; }
    int64_t step_count() const { return step_; }

    void set_lr(Real lr) {
        if (lr <= 0) throw UsageError("learning rate must be positive");
        cfg_.lr = lr;
    }

    // Applies one update to every named parameter and zeroes its gradient.
    // NaN or Inf in a gradient aborts with the tensor named, before any
    // parameter has been touched.
    void step(const std::vector<std::pair<std::string, Var<Real>>>& params) {
        for (const auto& [name, p] : params) {
            if (p->grad.size() != p->data.size())
                throw UsageError("parameter has no gradient: " + name);
            for (Real g : p->grad)
                if (!std::isfinite(static_cast<double>(g)))
                    throw NumericError("non-finite gradient in tensor '" + name + "'");
        }
        ++step_;
        const Real bc1 = Real(1) - std::pow(cfg_.beta1, static_cast<Real>(step_));
        const Real bc2 = Real(1) - std::pow(cfg_.beta2, static_cast<Real>(step_));
        for (const auto& [name, p] : params) {
            auto& slot = slots_[name];
            if (slot.m.size() != p->data.size()) {
                slot.m.assign(p->data.size(), Real(0));
                slot.v.assign(p->data.size(), Real(0));
            }
            for (size_t i = 0; i < p->data.size(); ++i) {
                const Real g = p->grad[i];
                slot.m[i] = cfg_.beta1 * slot.m[i] + (Real(1) - cfg_.beta1) * g;
                slot.v[i] = cfg_.beta2 * slot.v[i] + (Real(1) - cfg_.beta2) * g * g;
                const Real mhat = slot.m[i] / bc1;
                const Real vhat = slot.v[i] / bc2;
                p->data[i] -= cfg_.lr * (mhat / (std::sqrt(vhat) + cfg_.eps) +
                                         cfg_.weight_decay * p->data[i]);
            }
            p->zero_grad();
        }
    }

private:
    struct Slot {
        std::vector<Real> m;
        std::vector<Real> v;
    };

    AdamConfig<Real> cfg_;
    std::map<std::string, Slot> slots_;
    int64_t step_ = 0;
};

}  // namespace doclab::num

#endif  // DOCLAB_NUMCORE_OPTIMIZER_HPP_
