// SPDX-License-Identifier: Apache-2.0
#ifndef DOCLAB_POLICY_MODEL_HPP_
#define DOCLAB_POLICY_MODEL_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "doclab/numcore/optimizer.hpp"
#include "doclab/numcore/tape.hpp"
#include "doclab/policy/config.hpp"
#include "doclab/policy/param_store.hpp"
#include "doclab/policy/rollout.hpp"
#include "doclab/util/rng.hpp"

namespace doclab::policy {

using doclab::num::Tape;

inline std::string layer_param(int layer, const char* suffix) {
    return "layers." + std::to_string(layer) + "." + suffix;
}

// The adapted matrices: attention projections and the feed-forward pair of
// every layer, plus the output projection. Embedding tables stay bare (they
// are gathers, not matmuls).
inline std::vector<std::string> adapter_target_names(const PolicyConfig& cfg) {
    std::vector<std::string> names;
    for (int l = 0; l < cfg.n_layers; ++l) {
        for (const char* s : {"attn.wq", "attn.wk", "attn.wv", "attn.wo", "ff.w1", "ff.w2"})
            names.push_back(layer_param(l, s));
    }
    names.push_back("lm_head");
    return names;
}

// Decoder-only transformer: learned token + absolute position embeddings,
// pre-RMSNorm blocks with causal multi-head attention and a GELU MLP, a
// final norm, and an untied output projection.
//
// The teacher-forced path (forward) and the incremental KV-cache path
// (StepState) compute every output element with identical floating-point
// operation order, so a token's log-probability is bit-identical whichever
// path produced it. Keep the two in lockstep when changing either.
template <class Real>
class Model {
public:
    explicit Model(PolicyConfig cfg) : cfg_(cfg) { cfg_.validate(); }

    const PolicyConfig& config() const { return cfg_; }

    ParamStore<Real> init_params(uint64_t seed) const {
        Rng rng(derive_seed(seed, 0xD0C1AB));
        ParamStore<Real> store;
        const int d = cfg_.d_model, f = cfg_.ff_dim();
        const Real base_std = Real(0.02);
        // Residual-writing matrices get the usual depth-scaled init.
        const Real resid_std = base_std / static_cast<Real>(std::sqrt(2.0 * cfg_.n_layers));
        auto randn = [&](std::vector<int64_t> shape, Real std) {
            return Tensor<Real>::randn(std::move(shape), rng, std);
        };
        store.add("tok_emb", randn({cfg_.vocab_size, d}, base_std));
        store.add("pos_emb", randn({cfg_.context_len, d}, base_std));
        for (int l = 0; l < cfg_.n_layers; ++l) {
            store.add(layer_param(l, "ln1"), Tensor<Real>::full({d}, Real(1)));
            store.add(layer_param(l, "attn.wq"), randn({d, d}, base_std));
            store.add(layer_param(l, "attn.wk"), randn({d, d}, base_std));
            store.add(layer_param(l, "attn.wv"), randn({d, d}, base_std));
            store.add(layer_param(l, "attn.wo"), randn({d, d}, resid_std));
            store.add(layer_param(l, "ln2"), Tensor<Real>::full({d}, Real(1)));
            store.add(layer_param(l, "ff.w1"), randn({d, f}, base_std));
            store.add(layer_param(l, "ff.w2"), randn({f, d}, resid_std));
        }
        store.add("ln_f", Tensor<Real>::full({d}, Real(1)));
        store.add("lm_head", randn({d, cfg_.vocab_size}, base_std));
        return store;
    }

    void inject_adapters(ParamStore<Real>& store, uint64_t seed) const {
        Rng rng(derive_seed(seed, 0xADA97));
        store.inject_adapters(adapter_target_names(cfg_), cfg_.lora_rank,
                              static_cast<Real>(cfg_.lora_scale()), rng);
    }

    // Causal logits [n x V] for the whole token sequence.
    Var<Real> forward(Tape<Real>& tape, const ParamStore<Real>& store,
                      const std::vector<int>& tokens, bool adapters_on) const {
        const int64_t n = static_cast<int64_t>(tokens.size());
        if (n == 0) throw DegenerateInputError("forward with empty token sequence");
        if (n > cfg_.context_len)
            throw TruncationError("sequence length " + std::to_string(n) +
                                  " exceeds context length " + std::to_string(cfg_.context_len));
        for (int t : tokens)
            if (t < 0 || t >= cfg_.vocab_size)
                throw InputError("token id out of vocabulary: " + std::to_string(t));

        std::vector<int> positions(static_cast<size_t>(n));
        for (int64_t i = 0; i < n; ++i) positions[static_cast<size_t>(i)] = static_cast<int>(i);

        auto x = num::add(tape, num::embedding_rows(tape, store.weight("tok_emb"), tokens),
                          num::embedding_rows(tape, store.weight("pos_emb"), positions));
        const int dh = cfg_.head_dim();
        const Real inv_sqrt_dh = Real(1) / static_cast<Real>(std::sqrt(static_cast<double>(dh)));
        for (int l = 0; l < cfg_.n_layers; ++l) {
            auto h = num::mul_rowvec(tape, num::rmsnorm(tape, x, kNormEps),
                                     store.weight(layer_param(l, "ln1")));
            auto q = linear_(tape, store, layer_param(l, "attn.wq"), h, adapters_on);
            auto k = linear_(tape, store, layer_param(l, "attn.wk"), h, adapters_on);
            auto v = linear_(tape, store, layer_param(l, "attn.wv"), h, adapters_on);
            std::vector<Var<Real>> heads;
            heads.reserve(cfg_.n_heads);
            for (int hh = 0; hh < cfg_.n_heads; ++hh) {
                auto qh = num::slice_cols(tape, q, hh * dh, dh);
                auto kh = num::slice_cols(tape, k, hh * dh, dh);
                auto vh = num::slice_cols(tape, v, hh * dh, dh);
                auto scores = num::scale(tape, num::matmul_nt(tape, qh, kh), inv_sqrt_dh);
                auto probs = num::causal_softmax(tape, scores);
                heads.push_back(num::matmul(tape, probs, vh));
            }
            auto att = num::concat_cols(tape, heads);
            x = num::add(tape, x, linear_(tape, store, layer_param(l, "attn.wo"), att, adapters_on));
            auto h2 = num::mul_rowvec(tape, num::rmsnorm(tape, x, kNormEps),
                                      store.weight(layer_param(l, "ln2")));
            auto up = num::gelu(tape, linear_(tape, store, layer_param(l, "ff.w1"), h2, adapters_on));
            x = num::add(tape, x, linear_(tape, store, layer_param(l, "ff.w2"), up, adapters_on));
        }
        auto xf = num::mul_rowvec(tape, num::rmsnorm(tape, x, kNormEps), store.weight("ln_f"));
        return linear_(tape, store, "lm_head", xf, adapters_on);
    }

    // ---------------------------------------------------------------------
    // Incremental path
    // ---------------------------------------------------------------------

    struct StepState {
        // Per layer: cached projected keys/values, one row of d_model per
        // processed position.
        std::vector<std::vector<Real>> k_cache;
        std::vector<std::vector<Real>> v_cache;
        int len = 0;
    };

    StepState make_state() const {
        StepState s;
        s.k_cache.assign(static_cast<size_t>(cfg_.n_layers), {});
        s.v_cache.assign(static_cast<size_t>(cfg_.n_layers), {});
        return s;
    }

    // Feeds one token, returns the logits row predicting the next token.
    std::vector<Real> forward_step(StepState& state, const ParamStore<Real>& store, int token,
                                   bool adapters_on) const {
        if (token < 0 || token >= cfg_.vocab_size)
            throw InputError("token id out of vocabulary: " + std::to_string(token));
        if (state.len >= cfg_.context_len) throw TruncationError("context length exceeded");
        const int d = cfg_.d_model;
        const int dh = cfg_.head_dim();
        const Real inv_sqrt_dh = Real(1) / static_cast<Real>(std::sqrt(static_cast<double>(dh)));
        const int pos = state.len;

        const auto& tok_emb = *store.weight("tok_emb");
        const auto& pos_emb = *store.weight("pos_emb");
        std::vector<Real> x(static_cast<size_t>(d));
        for (int j = 0; j < d; ++j)
            x[j] = tok_emb.data[static_cast<int64_t>(token) * d + j] +
                   pos_emb.data[static_cast<int64_t>(pos) * d + j];

        std::vector<Real> h(static_cast<size_t>(d));
        std::vector<Real> q(static_cast<size_t>(d)), k(static_cast<size_t>(d)),
            v(static_cast<size_t>(d)), att(static_cast<size_t>(d)), o(static_cast<size_t>(d));
        std::vector<Real> up(static_cast<size_t>(cfg_.ff_dim()));
        for (int l = 0; l < cfg_.n_layers; ++l) {
            norm_row_(x.data(), h.data(), d, store.weight(layer_param(l, "ln1"))->data.data());
            linear_row_(store, layer_param(l, "attn.wq"), h.data(), q.data(), adapters_on);
            linear_row_(store, layer_param(l, "attn.wk"), h.data(), k.data(), adapters_on);
            linear_row_(store, layer_param(l, "attn.wv"), h.data(), v.data(), adapters_on);
            auto& kc = state.k_cache[static_cast<size_t>(l)];
            auto& vc = state.v_cache[static_cast<size_t>(l)];
            kc.insert(kc.end(), k.begin(), k.end());
            vc.insert(vc.end(), v.begin(), v.end());
            const int t = pos;  // rows 0..t now cached
            for (int hh = 0; hh < cfg_.n_heads; ++hh) {
                const int c0 = hh * dh;
                // Scores over the causal prefix, same reduction order as the
                // batch matmul_nt + scale + causal_softmax chain.
                std::vector<Real> scores(static_cast<size_t>(t + 1));
                for (int j = 0; j <= t; ++j) {
                    const Real* kj = kc.data() + static_cast<size_t>(j) * d + c0;
                    Real s = 0;
                    for (int kk = 0; kk < dh; ++kk) s += q[c0 + kk] * kj[kk];
                    scores[static_cast<size_t>(j)] = s * inv_sqrt_dh;
                }
                Real mx = scores[0];
                for (int j = 1; j <= t; ++j) mx = std::max(mx, scores[static_cast<size_t>(j)]);
                Real sum = 0;
                for (int j = 0; j <= t; ++j) {
                    const Real e = std::exp(scores[static_cast<size_t>(j)] - mx);
                    scores[static_cast<size_t>(j)] = e;
                    sum += e;
                }
                const Real inv = Real(1) / sum;
                for (int j = 0; j <= t; ++j) scores[static_cast<size_t>(j)] *= inv;
                for (int kk = 0; kk < dh; ++kk) att[c0 + kk] = Real(0);
                for (int j = 0; j <= t; ++j) {
                    const Real p = scores[static_cast<size_t>(j)];
                    const Real* vj = vc.data() + static_cast<size_t>(j) * d + c0;
                    for (int kk = 0; kk < dh; ++kk) att[c0 + kk] += p * vj[kk];
                }
            }
            linear_row_(store, layer_param(l, "attn.wo"), att.data(), o.data(), adapters_on);
            for (int j = 0; j < d; ++j) x[j] += o[j];
            norm_row_(x.data(), h.data(), d, store.weight(layer_param(l, "ln2"))->data.data());
            linear_row_(store, layer_param(l, "ff.w1"), h.data(), up.data(), adapters_on);
            for (auto& u : up) u = num::gelu_value(u);
            linear_row_(store, layer_param(l, "ff.w2"), up.data(), o.data(), adapters_on);
            for (int j = 0; j < d; ++j) x[j] += o[j];
        }
        norm_row_(x.data(), h.data(), d, store.weight("ln_f")->data.data());
        std::vector<Real> logits(static_cast<size_t>(cfg_.vocab_size));
        linear_row_(store, "lm_head", h.data(), logits.data(), adapters_on);
        state.len += 1;
        return logits;
    }

    // Temperature-scaled log-softmax of one logits row, mirroring the
    // token_log_probs reduction order exactly.
    static void log_softmax_row(const std::vector<Real>& logits, Real inv_temp,
                                std::vector<Real>& out) {
        const size_t v = logits.size();
        out.resize(v);
        Real mx = logits[0] * inv_temp;
        for (size_t j = 1; j < v; ++j) mx = std::max(mx, logits[j] * inv_temp);
        Real sum = 0;
        for (size_t j = 0; j < v; ++j) sum += std::exp(logits[j] * inv_temp - mx);
        const Real lse = mx + std::log(sum);
        for (size_t j = 0; j < v; ++j) out[j] = logits[j] * inv_temp - lse;
    }

    // ---------------------------------------------------------------------
    // Sampling and scoring
    // ---------------------------------------------------------------------

    struct SampleOptions {
        Real temperature = Real(1);  // <= 0 selects greedy decoding
        int max_new = 64;
        std::vector<int> prefill;    // forced response prefix
        uint64_t seed = 0;
        int eos_token = 2;
    };

    // Draws a response. Prefill tokens are forced: appended as if generated,
    // never drawn, but their log-probabilities under the sampling
    // distribution are still recorded so every response token has one.
    Rollout sample(const ParamStore<Real>& store, const std::vector<int>& prompt,
                   const SampleOptions& opts, bool adapters_on = true) const {
        if (prompt.empty()) throw DegenerateInputError("sample requires a non-empty prompt");
        if (opts.max_new <= 0) throw UsageError("max_new must be positive");
        const int64_t total = static_cast<int64_t>(prompt.size() + opts.prefill.size()) +
                              opts.max_new;
        if (total > cfg_.context_len)
            throw TruncationError("prompt + prefill + max_new exceeds context length");

        const bool greedy = !(opts.temperature > Real(0));
        const Real inv_temp = greedy ? Real(1) : Real(1) / opts.temperature;
        Rng rng(opts.seed);

        Rollout r;
        r.prompt = prompt;
        StepState state = make_state();
        std::vector<Real> logits;
        for (int t : prompt) logits = forward_step(state, store, t, adapters_on);

        std::vector<Real> logp;
        auto record_token = [&](int tok) {
            log_softmax_row(logits, inv_temp, logp);
            if (!std::isfinite(static_cast<double>(logp[static_cast<size_t>(tok)])))
                throw NumericError("non-finite log-probability in tensor 'logits'");
            r.response.push_back(tok);
            r.logprobs.push_back(static_cast<double>(logp[static_cast<size_t>(tok)]));
        };

        for (int tok : opts.prefill) {
            if (tok < 0 || tok >= cfg_.vocab_size) throw InputError("prefill token out of range");
            record_token(tok);
            logits = forward_step(state, store, tok, adapters_on);
        }
        for (int produced = 0; produced < opts.max_new; ++produced) {
            int tok;
            if (greedy) {
                tok = 0;
                for (int j = 1; j < cfg_.vocab_size; ++j)
                    if (logits[static_cast<size_t>(j)] > logits[static_cast<size_t>(tok)]) tok = j;
            } else {
                log_softmax_row(logits, inv_temp, logp);
                const double u = rng.uniform();
                double cum = 0.0;
                tok = cfg_.vocab_size - 1;
                for (int j = 0; j < cfg_.vocab_size; ++j) {
                    cum += std::exp(static_cast<double>(logp[static_cast<size_t>(j)]));
                    if (u < cum) {
                        tok = j;
                        break;
                    }
                }
            }
            record_token(tok);
            if (tok == opts.eos_token) break;
            if (produced + 1 < opts.max_new) logits = forward_step(state, store, tok, adapters_on);
        }
        r.check();
        return r;
    }

    // Teacher-forced log-probabilities of the response region of a full
    // prompt+response sequence, under a temperature-scaled softmax.
    std::vector<Real> logprobs(const ParamStore<Real>& store, const std::vector<int>& tokens,
                               size_t prompt_len, bool adapters_on,
                               Real temperature = Real(1)) const {
        if (prompt_len == 0 || prompt_len > tokens.size())
            throw UsageError("prompt length must be in [1, sequence length]");
        if (prompt_len == tokens.size())
            throw DegenerateInputError("logprobs requires a non-empty response region");
        if (!(temperature > Real(0))) throw UsageError("temperature must be positive");
        Tape<Real> tape(/*recording=*/false);
        auto logits = forward(tape, store, tokens, adapters_on);
        std::vector<std::pair<int, int>> row_token;
        for (size_t pos = prompt_len; pos < tokens.size(); ++pos)
            row_token.emplace_back(static_cast<int>(pos - 1), tokens[pos]);
        auto lp = num::token_log_probs(tape, logits, row_token, Real(1) / temperature);
        return lp->data;
    }

private:
    static constexpr Real kNormEps = Real(1e-5);

    Var<Real> linear_(Tape<Real>& tape, const ParamStore<Real>& store, const std::string& name,
                      const Var<Real>& x, bool adapters_on) const {
        const auto& e = store.entry(name);
        auto y = num::matmul(tape, x, e.weight);
        if (adapters_on && e.adapter && e.adapter->enabled) {
            auto low = num::matmul_nt(tape, x, e.adapter->A);
            auto up = num::matmul_nt(tape, low, e.adapter->B);
            y = num::add_scaled(tape, y, up, e.adapter->scale);
        }
        return y;
    }

    // One-row versions of the batch ops, with identical reduction orders.
    static void norm_row_(const Real* x, Real* out, int d, const Real* gain) {
        Real ss = 0;
        for (int j = 0; j < d; ++j) ss += x[j] * x[j];
        const Real inv = Real(1) / std::sqrt(ss / static_cast<Real>(d) + kNormEps);
        for (int j = 0; j < d; ++j) out[j] = x[j] * inv * gain[j];
    }

    void linear_row_(const ParamStore<Real>& store, const std::string& name, const Real* x,
                     Real* out, bool adapters_on) const {
        const auto& e = store.entry(name);
        const auto& w = *e.weight;  // [in x out]
        const int64_t in = w.shape[0], cols = w.shape[1];
        for (int64_t j = 0; j < cols; ++j) out[j] = Real(0);
        for (int64_t kk = 0; kk < in; ++kk) {
            const Real xv = x[kk];
            const Real* wk = w.data.data() + kk * cols;
            for (int64_t j = 0; j < cols; ++j) out[j] += xv * wk[j];
        }
        if (adapters_on && e.adapter && e.adapter->enabled) {
            const auto& A = *e.adapter->A;  // [r x in]
            const auto& B = *e.adapter->B;  // [out x r]
            const int64_t r = A.shape[0];
            std::vector<Real> low(static_cast<size_t>(r));
            for (int64_t q = 0; q < r; ++q) {
                const Real* aq = A.data.data() + q * in;
                Real s = 0;
                for (int64_t kk = 0; kk < in; ++kk) s += x[kk] * aq[kk];
                low[static_cast<size_t>(q)] = s;
            }
            for (int64_t j = 0; j < cols; ++j) {
                const Real* bj = B.data.data() + j * r;
                Real s = 0;
                for (int64_t q = 0; q < r; ++q) s += low[static_cast<size_t>(q)] * bj[q];
                out[j] = out[j] + e.adapter->scale * s;
            }
        }
    }

    PolicyConfig cfg_;
};

}  // namespace doclab::policy

#endif  // DOCLAB_POLICY_MODEL_HPP_
