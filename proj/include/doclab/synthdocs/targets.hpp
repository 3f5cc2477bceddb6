// SPDX-License-Identifier: Apache-2.0
#ifndef DOCLAB_SYNTHDOCS_TARGETS_HPP_
#define DOCLAB_SYNTHDOCS_TARGETS_HPP_

#include <string>
#include <vector>

#include "doclab/sft/sft.hpp"
#include "doclab/synthdocs/generate.hpp"
#include "doclab/textio/prompt.hpp"

namespace doclab::synth {

inline std::vector<int> render_response(const std::string& reasoning, const std::string& label,
                                        const text::Vocab& vocab) {
    std::vector<int> r;
    r.push_back(text::TAG_R_OPEN);
    for (int t : vocab.encode(reasoning)) r.push_back(t);
    r.push_back(text::TAG_R_CLOSE);
    r.push_back(text::TAG_A_OPEN);
    for (int t : vocab.encode(label)) r.push_back(t);
    r.push_back(text::TAG_A_CLOSE);
    r.push_back(text::EOS);
    return r;
}

inline text::PromptSpec prompt_spec_for(const DocumentSample& s,
                                        const std::vector<std::string>& classes) {
    text::PromptSpec spec;
    spec.class_names = classes;
    spec.modality = s.modality;
    spec.document_words = s.document_words;
    return spec;
}

// Gold SFT examples: canonical responses with templated reasoning, the
// prompt offering the given class list.
inline std::vector<sft::SftExample> make_sft_targets(const Dataset& samples,
                                                     const std::vector<std::string>& prompt_classes,
                                                     const text::Vocab& vocab) {
    std::vector<sft::SftExample> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        sft::SftExample ex;
        ex.prompt = text::build_prompt(prompt_spec_for(s, prompt_classes), vocab);
        ex.response = render_response(s.gold_reasoning, s.label, vocab);
        ex.gold_label = text::normalize(s.label);
        out.push_back(std::move(ex));
    }
    return out;
}

// Pretraining corpus for the base model. Prompts offer random shuffled class
// subsets and the target answer is a random class from that subset, so the
// base model learns the response grammar, evidence citation and the
// answer-from-the-prompted-list convention, but no document-to-label mapping.
inline std::vector<sft::SftExample> make_pretrain_targets(const Dataset& dataset,
                                                          const text::Vocab& vocab, uint64_t seed,
                                                          size_t count) {
    Dataset pool;
    for (const auto& s : dataset)
        if (s.split == "train") pool.push_back(s);
    if (pool.empty()) throw UsageError("pretraining needs train-split samples");

    Rng rng(derive_seed(seed, 0x9E7A));
    std::vector<size_t> order(pool.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);

    const auto& names = all_class_names();
    std::vector<sft::SftExample> out;
    for (size_t n = 0; n < count; ++n) {
        const auto& s = pool[order[n % order.size()]];
        // Random class subset, random order, at least four entries.
        std::vector<std::string> classes = names;
        rng.shuffle(classes);
        classes.resize(4 + rng.below(classes.size() - 3));
        const std::string target = classes[rng.below(classes.size())];

        // Reasoning cites words associated with the (random) target class:
        // usually its name itself, otherwise its lexicon. The model learns
        // which feature words go with which class name as a pure language
        // prior, never which document maps to which label. Citing the name
        // keeps the first reasoning word a one-hop copy from the prompt
        // list, which is what anchors answers to the offered classes.
        const auto name_tokens = text::split_words(target);
        const auto lex = class_spec(target).lexicon(s.modality);
        const std::string w1 = rng.uniform() < 0.5 ? name_tokens[rng.below(name_tokens.size())]
                                                   : lex[rng.below(lex.size())];
        std::string w2 = lex[rng.below(lex.size())];
        for (int tries = 0; w2 == w1 && tries < 8; ++tries) w2 = lex[rng.below(lex.size())];
        sft::SftExample ex;
        ex.prompt = text::build_prompt(prompt_spec_for(s, classes), vocab);
        ex.response = render_response("mentions " + w1 + " " + w2 + " typical of a " + target,
                                      target, vocab);
        ex.gold_label = text::normalize(target);
        out.push_back(std::move(ex));
    }
    return out;
}

}  // namespace doclab::synth

#endif  // DOCLAB_SYNTHDOCS_TARGETS_HPP_
