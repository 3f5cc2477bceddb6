// SPDX-License-Identifier: Apache-2.0
#ifndef DOCLAB_SFT_SFT_HPP_
#define DOCLAB_SFT_SFT_HPP_

#include <string>
#include <vector>

#include "doclab/numcore/optimizer.hpp"
#include "doclab/numcore/tape.hpp"
#include "doclab/policy/model.hpp"
#include "doclab/textio/parse.hpp"
#include "doclab/util/io.hpp"
#include "doclab/util/rng.hpp"

namespace doclab::sft {

using doclab::num::Tape;
using doclab::num::Var;
using doclab::policy::Model;
using doclab::policy::ParamStore;

// One supervised example: prompt, canonical gold response ending in EOS, and
// the gold label it encodes.
struct SftExample {
    std::vector<int> prompt;
    std::vector<int> response;
    std::string gold_label;  // normalized

    void check(const text::Vocab& vocab) const {
        if (prompt.empty() || response.empty())
            throw UsageError("sft example requires prompt and response tokens");
        if (response.back() != text::EOS) throw UsageError("gold response must end in EOS");
        const auto parsed = text::parse_response(response, vocab);
        if (!parsed.order_ok) throw UsageError("gold response must parse with canonical order");
        if (!parsed.extracted_label || *parsed.extracted_label != text::normalize(gold_label))
            throw UsageError("gold response label must match the example label");
    }
};

struct SftConfig {
    int epochs = 5;
    int batch_size = 8;
    double learning_rate = 2e-3;
    // Linear decay of the learning rate down to this fraction by the final
    // step; 1.0 keeps it constant.
    double lr_final_fraction = 0.1;
    uint64_t seed = 0;
    bool shuffle = true;

    void validate() const {
        if (epochs < 0) throw UsageError("epochs must be non-negative");
        if (batch_size <= 0 || learning_rate <= 0)
            throw UsageError("batch size and learning rate must be positive");
        if (lr_final_fraction <= 0 || lr_final_fraction > 1.0)
            throw UsageError("lr_final_fraction must be in (0,1]");
    }
};

struct TrainLogRow {
    int step = 0;
    double loss = 0.0;
    double token_accuracy = 0.0;
};

struct TrainingLog {
    std::vector<TrainLogRow> rows;

    std::string to_csv() const {
        std::string out = "step,loss,token_accuracy\n";
        for (const auto& r : rows)
            out += std::to_string(r.step) + "," + format_fixed(r.loss) + "," +
                   format_fixed(r.token_accuracy) + "\n";
        return out;
    }
};

// Mean cross-entropy over response-token positions only; prompt positions
// are masked out of both the value and the gradient.
template <class Real>
Var<Real> loss(Tape<Real>& tape, const Model<Real>& model, const ParamStore<Real>& store,
               const SftExample& example, bool adapters_on = true,
               Var<Real>* logits_out = nullptr) {
    std::vector<int> tokens = example.prompt;
    tokens.insert(tokens.end(), example.response.begin(), example.response.end());
    auto logits = model.forward(tape, store, tokens, adapters_on);
    const size_t n = tokens.size();
    const size_t prompt_len = example.prompt.size();
    std::vector<int> targets(n, 0);
    std::vector<bool> mask(n, false);
    for (size_t i = 0; i + 1 < n; ++i) {
        targets[i] = tokens[i + 1];
        mask[i] = i + 1 >= prompt_len;
    }
    if (logits_out) *logits_out = logits;
    return num::softmax_cross_entropy(tape, logits, targets, mask);
}

namespace detail {

// Fraction of response positions whose argmax logit equals the gold token.
template <class Real>
double token_accuracy(const Var<Real>& logits, const std::vector<int>& tokens,
                      size_t prompt_len) {
    const int64_t v = logits->shape[1];
    int correct = 0, count = 0;
    for (size_t pos = prompt_len; pos < tokens.size(); ++pos) {
        const int64_t row = static_cast<int64_t>(pos) - 1;
        int best = 0;
        for (int64_t j = 1; j < v; ++j)
            if (logits->data[row * v + j] > logits->data[row * v + best]) best = static_cast<int>(j);
        correct += best == tokens[pos];
        ++count;
    }
    return count == 0 ? 0.0 : static_cast<double>(correct) / count;
}

// Shared mini-batch cross-entropy loop. Gradients accumulate per example;
// one optimizer step per batch. Deterministic given the seed.
template <class Real>
TrainingLog run_epochs(const Model<Real>& model, const std::vector<SftExample>& dataset,
                       const SftConfig& cfg, ParamStore<Real>& store) {
    cfg.validate();
    if (dataset.empty()) throw UsageError("training dataset is empty");
    num::AdamConfig<Real> acfg;
    acfg.lr = static_cast<Real>(cfg.learning_rate);
    num::Adam<Real> opt(acfg);
    const auto trainable = store.trainable();
    if (trainable.empty()) throw UsageError("no trainable parameters");
    store.mark_grads();

    TrainingLog log;
    Rng order_rng(derive_seed(cfg.seed, 0x5F7));
    const int64_t batches_per_epoch =
        (static_cast<int64_t>(dataset.size()) + cfg.batch_size - 1) / cfg.batch_size;
    const int64_t total_steps = std::max<int64_t>(1, batches_per_epoch * cfg.epochs);
    int step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<size_t> order(dataset.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        if (cfg.shuffle) order_rng.shuffle(order);
        for (size_t at = 0; at < order.size(); at += cfg.batch_size) {
            const size_t end = std::min(order.size(), at + cfg.batch_size);
            const Real inv_batch = Real(1) / static_cast<Real>(end - at);
            double loss_sum = 0.0, acc_sum = 0.0;
            for (size_t i = at; i < end; ++i) {
                const auto& ex = dataset[order[i]];
                Tape<Real> tape;
                Var<Real> logits;
                auto l = loss(tape, model, store, ex, true, &logits);
                loss_sum += static_cast<double>(l->data[0]);
                std::vector<int> tokens = ex.prompt;
                tokens.insert(tokens.end(), ex.response.begin(), ex.response.end());
                acc_sum += token_accuracy(logits, tokens, ex.prompt.size());
                tape.backward(num::scale(tape, l, inv_batch));
            }
            const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
            opt.set_lr(static_cast<Real>(cfg.learning_rate *
                                         (1.0 - (1.0 - cfg.lr_final_fraction) * frac)));
            opt.step(trainable);
            ++step;
            log.rows.push_back(
                {step, loss_sum / static_cast<double>(end - at),
                 acc_sum / static_cast<double>(end - at)});
        }
    }
    store.clear_grad_marks();
    store.bump_version();
    return log;
}

}  // namespace detail

// Supervised fine-tuning: adapters train, base weights stay frozen.
template <class Real>
TrainingLog train(const Model<Real>& model, const std::vector<SftExample>& dataset,
                  const SftConfig& cfg, ParamStore<Real>& store) {
    if (!store.has_adapters())
        throw UsageError("train_sft requires injected adapters");
    for (const auto& name : store.names())
        if (!store.entry(name).frozen)
            throw UsageError("train_sft requires frozen base weights: " + name);
    return detail::run_epochs(model, dataset, cfg, store);
}

// Base-model pretraining: every base weight trains; no adapters involved.
// This builds the lab's stand-in for the pretrained instruction-following
// model that fine-tuning then starts from.
template <class Real>
TrainingLog pretrain_base(const Model<Real>& model, const std::vector<SftExample>& dataset,
                          const SftConfig& cfg, ParamStore<Real>& store) {
    if (store.has_adapters())
        throw UsageError("pretraining runs on a bare base model, without adapters");
    store.unfreeze_all();
    auto log = detail::run_epochs(model, dataset, cfg, store);
    store.freeze_all();
    return log;
}

}  // namespace doclab::sft

#endif  // DOCLAB_SFT_SFT_HPP_
