// SPDX-License-Identifier: Apache-2.0
#ifndef DOCLAB_REWARDS_REWARDS_HPP_
#define DOCLAB_REWARDS_REWARDS_HPP_

#include <string>

#include "doclab/textio/parse.hpp"
#include "doclab/textio/vocab.hpp"
#include "doclab/util/error.hpp"

namespace doclab::rewards {

// Per-rule reward values and their sum. The maximum attainable total is 2.5
// (1.5 format + 1.0 classification); format may go negative under the
// superfluous-tag penalty.
struct RewardBreakdown {
    double format = 0.0;
    double classification = 0.0;
    double total = 0.0;
};

struct RewardContext {
    std::string gold_label;  // normalized
    text::ParsedResponse parsed;
};

// Format rule: 0.5 for a complete reasoning block, 0.5 for a complete answer
// block, 0.5 for the canonical reasoning-then-answer order, and -0.5 for
// every tag occurrence beyond the single expected one of its kind. A lone
// unmatched tag earns nothing and counts toward the penalty once repeated.
inline double format_reward(const text::ParsedResponse& parsed) {
    double r = 0.0;
    if (parsed.reasoning_block_present) r += 0.5;
    if (parsed.answer_block_present) r += 0.5;
    if (parsed.order_ok) r += 0.5;
    for (int count : parsed.tag_counts)
        if (count > 1) r -= 0.5 * (count - 1);
    return r;
}

// Classification rule: 1.0 iff a label was extracted and matches the gold
// label exactly (both normalized); 0.0 otherwise, including unextractable.
inline double classification_reward(const text::ParsedResponse& parsed, const std::string& gold) {
    if (!parsed.extracted_label.has_value()) return 0.0;
    return *parsed.extracted_label == text::normalize(gold) ? 1.0 : 0.0;
}

inline RewardBreakdown total_reward(const RewardContext& ctx) {
    if (ctx.gold_label.empty()) throw UsageError("reward context requires a gold label");
    RewardBreakdown b;
    b.format = format_reward(ctx.parsed);
    b.classification = classification_reward(ctx.parsed, ctx.gold_label);
    b.total = b.format + b.classification;
    return b;
}

inline RewardBreakdown score_response(const std::vector<int>& response_tokens,
                                      const std::string& gold, const text::Vocab& vocab) {
    RewardContext ctx;
    ctx.gold_label = text::normalize(gold);
    ctx.parsed = text::parse_response(response_tokens, vocab);
    return total_reward(ctx);
}

}  // namespace doclab::rewards

#endif  // DOCLAB_REWARDS_REWARDS_HPP_
