// SPDX-License-Identifier: Apache-2.0
#ifndef DOCLAB_POLICY_CONFIG_HPP_
#define DOCLAB_POLICY_CONFIG_HPP_

#include <json.hpp>

#include "doclab/util/error.hpp"

namespace doclab::policy {

// Decoder-only model hyperparameters plus the adapter geometry.
struct PolicyConfig {
    int vocab_size = 0;     // set from the vocabulary
    int context_len = 256;
    int d_model = 128;
    int n_layers = 4;
    int n_heads = 4;
    int ff_mult = 4;
    int lora_rank = 8;
    double lora_alpha = 16.0;

    int head_dim() const { return d_model / n_heads; }
    int ff_dim() const { return d_model * ff_mult; }
    double lora_scale() const { return lora_alpha / lora_rank; }

    void validate() const {
        if (vocab_size <= 0) throw UsageError("vocab_size must be positive");
        if (context_len <= 0 || d_model <= 0 || n_layers <= 0 || n_heads <= 0 || ff_mult <= 0)
            throw UsageError("model dimensions must be positive");
        if (d_model % n_heads != 0) throw UsageError("d_model must be divisible by n_heads");
        if (lora_rank <= 0 || lora_alpha <= 0)
            throw UsageError("adapter rank and alpha must be positive");
        // Low-rank means low: every adapted matrix has min dimension d_model.
        if (lora_rank * 4 >= d_model)
            throw UsageError("lora_rank must be below d_model / 4");
    }

    nlohmann::json to_json() const {
        return nlohmann::json{{"vocab_size", vocab_size}, {"context_len", context_len},
                              {"d_model", d_model},       {"n_layers", n_layers},
                              {"n_heads", n_heads},       {"ff_mult", ff_mult},
                              {"lora_rank", lora_rank},   {"lora_alpha", lora_alpha}};
    }

    static PolicyConfig from_json(const nlohmann::json& j) {
        PolicyConfig c;
        c.vocab_size = j.at("vocab_size").get<int>();
        c.context_len = j.at("context_len").get<int>();
        c.d_model = j.at("d_model").get<int>();
        c.n_layers = j.at("n_layers").get<int>();
        c.n_heads = j.at("n_heads").get<int>();
        c.ff_mult = j.at("ff_mult").get<int>();
        c.lora_rank = j.at("lora_rank").get<int>();
        c.lora_alpha = j.at("lora_alpha").get<double>();
        return c;
    }
};

}  // namespace doclab::policy

#endif  // DOCLAB_POLICY_CONFIG_HPP_
