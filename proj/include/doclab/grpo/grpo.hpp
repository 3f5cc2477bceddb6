// SPDX-License-Identifier: Apache-2.0
#ifndef DOCLAB_GRPO_GRPO_HPP_
#define DOCLAB_GRPO_GRPO_HPP_

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "doclab/numcore/optimizer.hpp"
#include "doclab/numcore/tape.hpp"
#include "doclab/policy/model.hpp"
#include "doclab/policy/rollout.hpp"
#include "doclab/rewards/rewards.hpp"
#include "doclab/textio/vocab.hpp"
#include "doclab/util/io.hpp"

namespace doclab::grpo {

using doclab::num::Tape;
using doclab::num::Var;
using doclab::policy::Model;
using doclab::policy::ParamStore;
using doclab::policy::Rollout;

struct GrpoConfig {
    int group_size = 8;
    double clip_eps = 0.2;
    double kl_beta = 0.04;
    double temperature = 1.0;
    int max_new = 64;
    int steps = 500;
    int prompts_per_step = 4;
    double learning_rate = 2e-3;
    uint64_t seed = 0;

    void validate() const {
        if (group_size < 2) throw UsageError("group size must be at least 2");
        if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw UsageError("clip epsilon must be in (0,1)");
        if (kl_beta < 0.0) throw UsageError("KL coefficient must be non-negative");
        if (!(temperature > 0.0)) throw UsageError("sampling temperature must be positive");
        if (max_new <= 0 || steps < 0 || prompts_per_step <= 0 || learning_rate <= 0.0)
            throw UsageError("GRPO loop sizes must be positive");
    }
};

// G rollouts sharing one prompt: the normalization unit for advantages.
struct GroupBatch {
    std::vector<int> prompt;
    std::string gold_label;  // normalized
    std::vector<Rollout> rollouts;
    bool degenerate = false;           // zero reward variance
    bool advantages_computed = false;

    void check() const {
        if (rollouts.size() < 2) throw UsageError("a group needs at least two rollouts");
        for (const auto& r : rollouts) {
            r.check();
            if (r.prompt != prompt) throw UsageError("group rollouts must share the prompt");
        }
    }
};

// ---------------------------------------------------------------------------
// Pure per-token pieces of the objective
// ---------------------------------------------------------------------------

// PPO-style clipped surrogate term: min(rho*A, clip(rho, 1-eps, 1+eps)*A).
template <class Real>
inline Real clipped_surrogate(Real rho, Real advantage, Real eps) {
    const Real clipped = std::min(std::max(rho, Real(1) - eps), Real(1) + eps);
    return std::min(rho * advantage, clipped * advantage);
}

// Non-negative k3 KL estimator: exp(d) - d - 1 with d = lp_ref - lp_theta.
// Zero exactly when the two log-probabilities agree.
template <class Real>
inline Real k3_estimate(Real lp_ref, Real lp_theta) {
    const Real d = lp_ref - lp_theta;
    return std::exp(d) - d - 1;
}

// One rollout's contribution to the objective (to be maximised):
//   (1/m) * sum_t [ min(rho_t*A, clip(rho_t)*A) - beta * k3_t ]
// where rho_t = exp(lp_theta_t - lp_old_t). lp_old and lp_ref are constants
// recorded at sampling time / computed from the adapter-disabled reference.
template <class Real>
Var<Real> rollout_objective(Tape<Real>& tape, const Var<Real>& lp_theta,
                            const std::vector<Real>& lp_old, const std::vector<Real>& lp_ref,
                            Real advantage, Real clip_eps, Real kl_beta) {
    const size_t m = lp_theta->data.size();
    if (m == 0) throw UsageError("rollout objective needs at least one token");
    if (lp_old.size() != m || lp_ref.size() != m)
        throw UsageError("log-probability lists disagree in length");

    // Forward value plus cached per-token gradient factors.
    auto dfactor = std::make_shared<std::vector<Real>>(m, Real(0));
    Real total = 0;
    for (size_t t = 0; t < m; ++t) {
        const Real rho = std::exp(lp_theta->data[t] - lp_old[t]);
        if (!std::isfinite(static_cast<double>(rho)))
            throw NumericError("non-finite policy ratio in tensor 'lp_theta'");
        const Real unclipped = rho * advantage;
        const Real term = clipped_surrogate(rho, advantage, clip_eps);
        const Real delta = lp_ref[t] - lp_theta->data[t];
        total += term - kl_beta * k3_estimate(lp_ref[t], lp_theta->data[t]);
        // d(term)/d(lp_theta): rho*A when the unclipped branch is active
        // (min picks it), else 0 since the clipped branch is constant there.
        const Real dsurr = term == unclipped ? unclipped : Real(0);
        const Real dkl = Real(1) - std::exp(delta);
        (*dfactor)[t] = dsurr - kl_beta * dkl;
    }
    const Real inv_m = Real(1) / static_cast<Real>(m);
    auto out = tape.make(num::Tensor<Real>::scalar_of(total * inv_m), lp_theta->needs_grad);
    tape.push([lp_theta, dfactor, inv_m, out]() {
        if (!lp_theta->needs_grad) return;
        lp_theta->ensure_grad();
        for (size_t t = 0; t < dfactor->size(); ++t)
            lp_theta->grad[t] += out->grad[0] * inv_m * (*dfactor)[t];
    });
    return out;
}

// ---------------------------------------------------------------------------
// Group sampling and advantages
// ---------------------------------------------------------------------------

// Samples G rollouts with distinct sub-seeds, parses and scores each.
// Rollouts are independent and are produced by parallel workers; results are
// slotted by index so thread scheduling cannot change the batch.
template <class Real>
GroupBatch sample_group(const Model<Real>& model, const ParamStore<Real>& store,
                        const std::vector<int>& prompt, const std::string& gold,
                        const GrpoConfig& cfg, const text::Vocab& vocab, uint64_t group_seed) {
    cfg.validate();
    GroupBatch batch;
    batch.prompt = prompt;
    batch.gold_label = text::normalize(gold);
    batch.rollouts.resize(static_cast<size_t>(cfg.group_size));
    parallel_for(static_cast<size_t>(cfg.group_size), [&](size_t i) {
        typename Model<Real>::SampleOptions opts;
        opts.temperature = static_cast<Real>(cfg.temperature);
        opts.max_new = cfg.max_new;
        opts.seed = derive_seed(group_seed, 0x6A0, i);
        Rollout r = model.sample(store, prompt, opts, /*adapters_on=*/true);
        r.reward = rewards::score_response(r.response, gold, vocab);
        batch.rollouts[i] = std::move(r);
    });
    batch.check();
    return batch;
}

// Group-normalized advantages (population standard deviation). A group with
// zero reward variance is degenerate: advantages are zero and only the KL
// term will produce gradient.
inline void compute_advantages(GroupBatch& batch) {
    batch.check();
    const size_t g = batch.rollouts.size();
    double mean = 0.0;
    for (const auto& r : batch.rollouts) mean += r.reward.total;
    mean /= static_cast<double>(g);
    double var = 0.0;
    for (const auto& r : batch.rollouts) {
        const double d = r.reward.total - mean;
        var += d * d;
    }
    var /= static_cast<double>(g);
    const double sd = std::sqrt(var);
    batch.degenerate = sd == 0.0;
    for (auto& r : batch.rollouts) r.advantage = batch.degenerate ? 0.0 : (r.reward.total - mean) / sd;
    batch.advantages_computed = true;
}

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

struct LossStats {
    double mean_kl = 0.0;          // mean k3 over all response tokens
    double mean_ratio_dev = 0.0;   // mean |rho - 1|, diagnostic
};

// Negative of the Eq.-style group objective, averaged 1/G over rollouts and
// 1/|o_i| over each rollout's tokens. The reference log-probabilities come
// from the same store with adapters disabled.
template <class Real>
Var<Real> loss(Tape<Real>& tape, const Model<Real>& model, const ParamStore<Real>& store,
               const GroupBatch& batch, const GrpoConfig& cfg, LossStats* stats = nullptr) {
    cfg.validate();
    if (!batch.advantages_computed)
        throw UsageError("grpo loss requires advantages to be computed first");
    const Real inv_temp = Real(1) / static_cast<Real>(cfg.temperature);

    std::vector<Var<Real>> objectives;
    double kl_sum = 0.0, ratio_dev_sum = 0.0;
    size_t token_count = 0;
    for (const auto& r : batch.rollouts) {
        if (r.logprobs.empty()) throw UsageError("rollout is missing sampling log-probs");
        std::vector<int> tokens = r.prompt;
        tokens.insert(tokens.end(), r.response.begin(), r.response.end());

        auto logits = model.forward(tape, store, tokens, /*adapters_on=*/true);
        std::vector<std::pair<int, int>> row_token;
        for (size_t pos = r.prompt.size(); pos < tokens.size(); ++pos)
            row_token.emplace_back(static_cast<int>(pos - 1), tokens[pos]);
        auto lp_theta = num::token_log_probs(tape, logits, row_token, inv_temp);

        const auto lp_ref_real =
            model.logprobs(store, tokens, r.prompt.size(), /*adapters_on=*/false,
                           static_cast<Real>(cfg.temperature));
        std::vector<Real> lp_old(r.logprobs.size());
        for (size_t t = 0; t < lp_old.size(); ++t) lp_old[t] = static_cast<Real>(r.logprobs[t]);

        for (size_t t = 0; t < lp_old.size(); ++t) {
            kl_sum += static_cast<double>(k3_estimate(lp_ref_real[t], lp_theta->data[t]));
            ratio_dev_sum += std::fabs(
                static_cast<double>(std::exp(lp_theta->data[t] - lp_old[t])) - 1.0);
            ++token_count;
        }
        objectives.push_back(rollout_objective(tape, lp_theta, lp_old, lp_ref_real,
                                               static_cast<Real>(r.advantage),
                                               static_cast<Real>(cfg.clip_eps),
                                               static_cast<Real>(cfg.kl_beta)));
    }
    if (stats && token_count > 0) {
        stats->mean_kl = kl_sum / static_cast<double>(token_count);
        stats->mean_ratio_dev = ratio_dev_sum / static_cast<double>(token_count);
    }
    // Minimize the negated objective.
    return num::scale(tape, num::sum_scalars(tape, objectives),
                      -Real(1) / static_cast<Real>(batch.rollouts.size()));
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct PromptExample {
    std::vector<int> prompt;
    std::string gold_label;
};

struct GrpoLogRow {
    int step = 0;
    double mean_total_reward = 0.0;
    double mean_format_reward = 0.0;
    double sample_accuracy = 0.0;
    double mean_kl = 0.0;
    double degenerate_fraction = 0.0;
    double mean_response_length = 0.0;
};

struct GrpoLog {
    std::vector<GrpoLogRow> rows;

    std::string to_csv() const {
        std::string out =
            "step,mean_total_reward,mean_format_reward,sample_accuracy,mean_kl,"
            "degenerate_fraction,mean_response_length\n";
        for (const auto& r : rows) {
            out += std::to_string(r.step) + "," + format_fixed(r.mean_total_reward) + "," +
                   format_fixed(r.mean_format_reward) + "," + format_fixed(r.sample_accuracy) +
                   "," + format_fixed(r.mean_kl) + "," + format_fixed(r.degenerate_fraction) +
                   "," + format_fixed(r.mean_response_length) + "\n";
        }
        return out;
    }
};

// Optional observer invoked once per step after the update, e.g. for rollout
// traces or early stopping. Returning false stops training.
using StepObserver = std::function<bool(int step, const GrpoLogRow& row,
                                        const std::vector<GroupBatch>& batches)>;

// One optimizer step per sampled batch of groups: the sampling policy is the
// old policy, so ratios start at exactly 1 every step.
template <class Real>
GrpoLog train(const Model<Real>& model, const std::vector<PromptExample>& dataset,
              const GrpoConfig& cfg, ParamStore<Real>& store, const text::Vocab& vocab,
              const StepObserver& observer = nullptr) {
    cfg.validate();
    if (dataset.empty()) throw UsageError("training dataset is empty");
    if (!store.has_adapters()) throw UsageError("train_grpo requires injected adapters");
    for (const auto& name : store.names())
        if (!store.entry(name).frozen)
            throw UsageError("train_grpo requires frozen base weights: " + name);

    num::AdamConfig<Real> acfg;
    acfg.lr = static_cast<Real>(cfg.learning_rate);
    num::Adam<Real> opt(acfg);
    const auto trainable = store.trainable();

    GrpoLog log;
    Rng order_rng(derive_seed(cfg.seed, 0x0D3));
    std::vector<size_t> order;
    size_t cursor = 0;
    auto next_example = [&]() -> const PromptExample& {
        if (cursor >= order.size()) {
            order.resize(dataset.size());
            for (size_t i = 0; i < order.size(); ++i) order[i] = i;
            order_rng.shuffle(order);
            cursor = 0;
        }
        return dataset[order[cursor++]];
    };

    for (int step = 1; step <= cfg.steps; ++step) {
        // Sampling phase: read-only fan-out per group.
        std::vector<GroupBatch> batches;
        batches.reserve(static_cast<size_t>(cfg.prompts_per_step));
        for (int p = 0; p < cfg.prompts_per_step; ++p) {
            const auto& ex = next_example();
            batches.push_back(sample_group(model, store, ex.prompt, ex.gold_label, cfg, vocab,
                                           derive_seed(cfg.seed, 0xB0B, step, p)));
            compute_advantages(batches.back());
        }

        // Update phase: exclusive. Gradients accumulate across groups.
        store.mark_grads();
        GrpoLogRow row;
        row.step = step;
        const Real inv_groups = Real(1) / static_cast<Real>(batches.size());
        for (const auto& batch : batches) {
            Tape<Real> tape;
            LossStats stats;
            auto l = loss(tape, model, store, batch, cfg, &stats);
            tape.backward(num::scale(tape, l, inv_groups));
            row.mean_kl += stats.mean_kl;
            row.degenerate_fraction += batch.degenerate ? 1.0 : 0.0;
            for (const auto& r : batch.rollouts) {
                row.mean_total_reward += r.reward.total;
                row.mean_format_reward += r.reward.format;
                row.sample_accuracy += r.reward.classification;
                row.mean_response_length += static_cast<double>(r.response.size());
            }
        }
        opt.step(trainable);
        store.clear_grad_marks();

        const double n_roll = static_cast<double>(batches.size()) * cfg.group_size;
        row.mean_total_reward /= n_roll;
        row.mean_format_reward /= n_roll;
        row.sample_accuracy /= n_roll;
        row.mean_response_length /= n_roll;
        row.mean_kl /= static_cast<double>(batches.size());
        row.degenerate_fraction /= static_cast<double>(batches.size());
        log.rows.push_back(row);
        if (observer && !observer(step, row, batches)) break;
    }
    store.bump_version();
    return log;
}

}  // namespace doclab::grpo

#endif  // DOCLAB_GRPO_GRPO_HPP_
