// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "doclab/numcore/optimizer.hpp"
#include "doclab/policy/checkpoint.hpp"
#include "doclab/policy/model.hpp"
#include "doclab/util/rng.hpp"

using namespace doclab;
using policy::Model;
using policy::ParamStore;
using policy::PolicyConfig;

namespace {

PolicyConfig tiny_config(int vocab = 24) {
    PolicyConfig pc;
    pc.vocab_size = vocab;
    pc.context_len = 32;
    pc.d_model = 16;
    pc.n_layers = 2;
    pc.n_heads = 2;
    pc.ff_mult = 2;
    pc.lora_rank = 2;
    pc.lora_alpha = 4;
    return pc;
}

std::vector<int> random_tokens(Rng& rng, int n, int vocab) {
    std::vector<int> t(static_cast<size_t>(n));
    for (auto& x : t) x = static_cast<int>(rng.below(static_cast<uint64_t>(vocab)));
    return t;
}

// One training step on the adapters, to perturb them away from init.
template <class Real>
void nudge_adapters(const Model<Real>& model, ParamStore<Real>& store,
                    const std::vector<int>& tokens, int steps = 1) {
    num::AdamConfig<Real> cfg;
    cfg.lr = Real(0.05);
    num::Adam<Real> opt(cfg);
    store.freeze_all();
    store.mark_grads();
    for (int s = 0; s < steps; ++s) {
        num::Tape<Real> tape;
        auto logits = model.forward(tape, store, tokens, true);
        std::vector<int> targets(tokens.size(), 1);
        std::vector<bool> mask(tokens.size(), true);
        auto loss = num::softmax_cross_entropy(tape, logits, targets, mask);
        tape.backward(loss);
        opt.step(store.trainable());
    }
    store.clear_grad_marks();
}

}  // namespace

TEST_CASE("policy config invariants") {
    auto pc = tiny_config();
    pc.validate();
    pc.d_model = 15;
    CHECK_THROWS_AS(pc.validate(), doclab::UsageError);
    pc = tiny_config();
    pc.lora_rank = 4;  // 4*4 >= 16
    CHECK_THROWS_AS(pc.validate(), doclab::UsageError);
}

TEST_CASE("fresh adapters leave logits exactly unchanged (B = 0)") {
    auto pc = tiny_config();
    Model<float> model(pc);
    auto store = model.init_params(7);
    Rng rng(3);
    auto tokens = random_tokens(rng, 9, pc.vocab_size);

    num::Tape<float> tape(false);
    auto before = model.forward(tape, store, tokens, true)->data;
    model.inject_adapters(store, 9);
    auto on = model.forward(tape, store, tokens, true)->data;
    auto off = model.forward(tape, store, tokens, false)->data;
    CHECK(before == off);
    REQUIRE(on.size() == before.size());
    for (size_t i = 0; i < on.size(); ++i) CHECK(on[i] == before[i]);
}

TEST_CASE("adapters-off reproduces the base model after training") {
    auto pc = tiny_config();
    Model<float> model(pc);
    auto store = model.init_params(7);
    Rng rng(3);
    auto tokens = random_tokens(rng, 9, pc.vocab_size);
    num::Tape<float> tape(false);
    auto base = model.forward(tape, store, tokens, false)->data;

    model.inject_adapters(store, 9);
    nudge_adapters(model, store, tokens, 5);

    auto off_after = model.forward(tape, store, tokens, false)->data;
    CHECK(base == off_after);  // bit-identical reference model
    auto on_after = model.forward(tape, store, tokens, true)->data;
    CHECK(on_after != base);  // training actually changed the policy
}

TEST_CASE("base weights are bit-identical after adapter training") {
    auto pc = tiny_config();
    Model<float> model(pc);
    auto store = model.init_params(7);
    std::map<std::string, std::vector<float>> snapshot;
    for (const auto& n : store.names()) snapshot[n] = store.weight(n)->data;

    model.inject_adapters(store, 9);
    Rng rng(3);
    auto tokens = random_tokens(rng, 9, pc.vocab_size);
    nudge_adapters(model, store, tokens, 3);
    for (const auto& n : store.names()) CHECK(store.weight(n)->data == snapshot[n]);
}

TEST_CASE("merge equivalence and idempotence") {
    auto pc = tiny_config();
    Model<float> model(pc);
    auto store = model.init_params(7);
    model.inject_adapters(store, 9);
    Rng rng(3);
    auto tokens = random_tokens(rng, 9, pc.vocab_size);
    nudge_adapters(model, store, tokens, 4);

    auto merged = store.merged();
    CHECK_FALSE(merged.has_adapters());
    num::Tape<float> tape(false);
    float worst = 0.f;
    for (int trial = 0; trial < 100; ++trial) {
        auto probe = random_tokens(rng, 7, pc.vocab_size);
        auto a = model.forward(tape, store, probe, true)->data;
        auto b = model.forward(tape, merged, probe, true)->data;
        for (size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::fabs(a[i] - b[i]));
    }
    CHECK(worst <= 1e-5f);

    // Merging a store with B = 0 adapters equals the base exactly.
    auto store2 = model.init_params(7);
    std::map<std::string, std::vector<float>> base_weights;
    for (const auto& n : store2.names()) base_weights[n] = store2.weight(n)->data;
    model.inject_adapters(store2, 5);
    auto merged2 = store2.merged();
    for (const auto& n : merged2.names()) CHECK(merged2.weight(n)->data == base_weights[n]);

    // Merge twice: no adapters remain either way.
    auto merged3 = merged.merged();
    CHECK_FALSE(merged3.has_adapters());
    for (const auto& n : merged3.names()) CHECK(merged3.weight(n)->data == merged.weight(n)->data);
}

TEST_CASE("forward validates inputs") {
    auto pc = tiny_config();
    Model<float> model(pc);
    auto store = model.init_params(7);
    num::Tape<float> tape(false);
    CHECK_THROWS_AS(model.forward(tape, store, {0, pc.vocab_size}, true), doclab::InputError);
    std::vector<int> too_long(static_cast<size_t>(pc.context_len + 1), 1);
    CHECK_THROWS_AS(model.forward(tape, store, too_long, true), doclab::TruncationError);
    auto one = model.forward(tape, store, {3}, true);
    CHECK(one->shape == std::vector<int64_t>{1, pc.vocab_size});
}

TEST_CASE("greedy sampling is deterministic; prefill is forced; max_new respected") {
    auto pc = tiny_config();
    Model<float> model(pc);
    auto store = model.init_params(7);
    Rng rng(5);
    auto prompt = random_tokens(rng, 6, pc.vocab_size);

    typename Model<float>::SampleOptions opts;
    opts.temperature = 0;  // greedy
    opts.max_new = 8;
    auto a = model.sample(store, prompt, opts);
    auto b = model.sample(store, prompt, opts);
    CHECK(a.response == b.response);
    CHECK(a.logprobs == b.logprobs);

    opts.prefill = {text::TAG_R_OPEN, text::TAG_R_CLOSE};
    auto c = model.sample(store, prompt, opts);
    REQUIRE(c.response.size() >= 2);
    CHECK(c.response[0] == text::TAG_R_OPEN);
    CHECK(c.response[1] == text::TAG_R_CLOSE);
    CHECK(c.logprobs.size() == c.response.size());

    opts.prefill.clear();
    opts.max_new = 1;
    auto d = model.sample(store, prompt, opts);
    CHECK(d.response.size() == 1);

    opts.max_new = 100;
    CHECK_THROWS_AS(model.sample(store, prompt, opts), doclab::TruncationError);
}

TEST_CASE("seeded stochastic sampling reproduces exactly") {
    auto pc = tiny_config();
    Model<float> model(pc);
    auto store = model.init_params(7);
    Rng rng(5);
    auto prompt = random_tokens(rng, 6, pc.vocab_size);
    typename Model<float>::SampleOptions opts;
    opts.temperature = 1.0f;
    opts.max_new = 10;
    opts.seed = 42;
    auto a = model.sample(store, prompt, opts);
    auto b = model.sample(store, prompt, opts);
    CHECK(a.response == b.response);
    CHECK(a.logprobs == b.logprobs);
    opts.seed = 43;
    auto c = model.sample(store, prompt, opts);
    CHECK((c.response != a.response || c.logprobs != a.logprobs));
}

TEST_CASE("autoregressive consistency: teacher forcing matches sampling exactly") {
    auto pc = tiny_config();
    Model<float> model(pc);
    auto store = model.init_params(11);
    model.inject_adapters(store, 4);
    Rng rng(8);
    auto prompt = random_tokens(rng, 6, pc.vocab_size);
    typename Model<float>::SampleOptions opts;
    opts.temperature = 1.0f;
    opts.max_new = 12;
    opts.seed = 17;
    auto r = model.sample(store, prompt, opts);
    std::vector<int> full = prompt;
    full.insert(full.end(), r.response.begin(), r.response.end());
    auto lp = model.logprobs(store, full, prompt.size(), true);
    REQUIRE(lp.size() == r.logprobs.size());
    for (size_t i = 0; i < lp.size(); ++i)
        CHECK(static_cast<double>(lp[i]) == r.logprobs[i]);  // bit-identical paths
}

TEST_CASE("logprobs of a uniform-logit model are -ln V") {
    auto pc = tiny_config(4);
    pc.d_model = 16;
    Model<float> model(pc);
    auto store = model.init_params(7);
    // Zero output projection forces exactly uniform logits.
    auto& lm = *store.weight("lm_head");
    std::fill(lm.data.begin(), lm.data.end(), 0.f);
    auto lp = model.logprobs(store, {0, 1, 2, 3, 1, 2}, 3, true);
    for (float v : lp) CHECK(v == doctest::Approx(-std::log(4.0)).epsilon(1e-6));
    CHECK_THROWS_AS(model.logprobs(store, {0, 1, 2}, 3, true), doclab::DegenerateInputError);
}

TEST_CASE("adapters never trained: logprobs match with adapters on and off") {
    auto pc = tiny_config();
    Model<float> model(pc);
    auto store = model.init_params(7);
    model.inject_adapters(store, 13);
    Rng rng(21);
    auto tokens = random_tokens(rng, 10, pc.vocab_size);
    auto on = model.logprobs(store, tokens, 4, true);
    auto off = model.logprobs(store, tokens, 4, false);
    CHECK(on == off);
}

TEST_CASE("checkpoint round trip: full and adapter-only archives") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "doclab_ckpt_test";
    fs::create_directories(dir);
    auto pc = tiny_config();
    Model<float> model(pc);
    auto store = model.init_params(7);
    model.inject_adapters(store, 9);
    Rng rng(3);
    auto tokens = random_tokens(rng, 9, pc.vocab_size);
    nudge_adapters(model, store, tokens, 2);

    const auto full_path = (dir / "full.ckpt").string();
    policy::save_checkpoint(store, pc, full_path);
    auto loaded = policy::load_checkpoint<float>(full_path);
    CHECK(loaded.kind == "full");
    CHECK(loaded.config.d_model == pc.d_model);
    num::Tape<float> tape(false);
    auto a = model.forward(tape, store, tokens, true)->data;
    auto b = model.forward(tape, loaded.store, tokens, true)->data;
    CHECK(a == b);

    // Adapter-only archive against a base checkpoint.
    auto base_store = model.init_params(7);
    const auto base_path = (dir / "base.ckpt").string();
    policy::save_checkpoint(base_store, pc, base_path);
    const auto adapters_path = (dir / "adapters.ckpt").string();
    policy::save_checkpoint(store, pc, adapters_path, "adapters", file_sha256(base_path));
    auto stacked = policy::load_adapter_checkpoint<float>(adapters_path, base_path);
    auto c = model.forward(tape, stacked.store, tokens, true)->data;
    CHECK(a == c);

    // Hash mismatch is an integrity error.
    const auto other_base = (dir / "other.ckpt").string();
    policy::save_checkpoint(model.init_params(8), pc, other_base);
    CHECK_THROWS_AS(policy::load_adapter_checkpoint<float>(adapters_path, other_base),
                    doclab::IntegrityError);

    // Checkpoint bytes are deterministic.
    CHECK(policy::serialize_checkpoint(store, pc, "full") ==
          policy::serialize_checkpoint(store, pc, "full"));
    fs::remove_all(dir);
}

TEST_CASE("reference invariance across many optimizer steps") {
    auto pc = tiny_config();
    Model<float> model(pc);
    auto store = model.init_params(19);
    Rng rng(4);
    auto probe = random_tokens(rng, 8, pc.vocab_size);
    num::Tape<float> tape(false);
    auto reference = model.forward(tape, store, probe, false)->data;
    model.inject_adapters(store, 2);
    auto train_tokens = random_tokens(rng, 10, pc.vocab_size);
    nudge_adapters(model, store, train_tokens, 50);
    CHECK(model.forward(tape, store, probe, false)->data == reference);
}
