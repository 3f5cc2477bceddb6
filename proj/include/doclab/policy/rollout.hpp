// SPDX-License-Identifier: Apache-2.0
#ifndef DOCLAB_POLICY_ROLLOUT_HPP_
#define DOCLAB_POLICY_ROLLOUT_HPP_

#include <vector>

#include "doclab/rewards/rewards.hpp"
#include "doclab/util/error.hpp"

namespace doclab::policy {

// One sampled response. The log-probabilities are those of the response
// tokens under the sampling policy and sampling parameters, recorded at
// generation time; they are what the surrogate ratio denominators use.
struct Rollout {
    std::vector<int> prompt;
    std::vector<int> response;          // includes forced prefill and EOS if hit
    std::vector<double> logprobs;       // one per response token, all <= 0
    rewards::RewardBreakdown reward;
    double advantage = 0.0;

    void check() const {
        if (logprobs.size() != response.size())
            throw UsageError("rollout log-prob list length must match response length");
        for (double lp : logprobs)
            if (lp > 0.0) throw NumericError("rollout log-probability above zero");
    }
};

}  // namespace doclab::policy

#endif  // DOCLAB_POLICY_ROLLOUT_HPP_
