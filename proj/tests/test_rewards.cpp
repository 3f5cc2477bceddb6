// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "doclab/rewards/rewards.hpp"
#include "doclab/textio/parse.hpp"
#include "doclab/util/rng.hpp"

using namespace doclab;
using rewards::classification_reward;
using rewards::format_reward;
using rewards::total_reward;

namespace {

text::Vocab vocab() {
    return text::Vocab::build({"memo", "budget", "form", "x", "y", "file", "folder"});
}

std::vector<int> tag_stream(const std::string& pattern, const text::Vocab& v) {
    // r/R = reasoning open/close, a/A = answer open/close, w = a word.
    std::vector<int> out;
    for (char c : pattern) {
        switch (c) {
            case 'r': out.push_back(text::TAG_R_OPEN); break;
            case 'R': out.push_back(text::TAG_R_CLOSE); break;
            case 'a': out.push_back(text::TAG_A_OPEN); break;
            case 'A': out.push_back(text::TAG_A_CLOSE); break;
            default: out.push_back(v.id("x")); break;
        }
    }
    return out;
}

}  // namespace

TEST_CASE("rubric arithmetic on the canonical forms") {
    auto v = vocab();
    // Canonical reasoning-then-answer: 0.5 + 0.5 + 0.5.
    auto canonical = tag_stream("rwRa", v);
    canonical.push_back(v.id("memo"));
    canonical.push_back(text::TAG_A_CLOSE);
    auto p = text::parse_response(canonical, v);
    CHECK(format_reward(p) == 1.5);
    CHECK(classification_reward(p, "memo") == 1.0);
    CHECK(classification_reward(p, "budget") == 0.0);

    // No tags at all.
    CHECK(format_reward(text::parse_response(tag_stream("www", v), v)) == 0.0);

    // Reasoning block then two answer blocks: 0.5 + 0.5 + 0 - 2*0.5 = 0.
    auto two_answers = tag_stream("rwR", v);
    for (int rep = 0; rep < 2; ++rep) {
        two_answers.push_back(text::TAG_A_OPEN);
        two_answers.push_back(v.id("memo"));
        two_answers.push_back(text::TAG_A_CLOSE);
    }
    CHECK(format_reward(text::parse_response(two_answers, v)) == 0.0);

    // Answer before reasoning: block rewards only, no order bonus.
    auto inverted = tag_stream("a", v);
    inverted.push_back(v.id("memo"));
    inverted.push_back(text::TAG_A_CLOSE);
    auto tail = tag_stream("rwR", v);
    inverted.insert(inverted.end(), tail.begin(), tail.end());
    CHECK(format_reward(text::parse_response(inverted, v)) == 1.0);
}

TEST_CASE("total reward composition") {
    auto v = vocab();
    auto canonical = tag_stream("rwRa", v);
    canonical.push_back(v.id("memo"));
    canonical.push_back(text::TAG_A_CLOSE);

    rewards::RewardContext ctx;
    ctx.gold_label = "memo";
    ctx.parsed = text::parse_response(canonical, v);
    auto b = total_reward(ctx);
    CHECK(b.total == 2.5);
    CHECK(b.format == 1.5);
    CHECK(b.classification == 1.0);

    ctx.gold_label = "form";
    b = total_reward(ctx);
    CHECK(b.total == 1.5);

    ctx.parsed = text::parse_response({}, v);
    b = total_reward(ctx);
    CHECK(b.total == 0.0);

    ctx.gold_label = "";
    CHECK_THROWS_AS(total_reward(ctx), doclab::UsageError);
}

TEST_CASE("properties: range, determinism, monotonicity, dominance") {
    auto v = vocab();
    Rng rng(99);
    const std::vector<int> alphabet = {text::TAG_R_OPEN, text::TAG_R_CLOSE, text::TAG_A_OPEN,
                                       text::TAG_A_CLOSE, v.id("memo"), v.id("x"), v.id("y")};
    for (int trial = 0; trial < 3000; ++trial) {
        std::vector<int> tokens(rng.below(16));
        for (auto& t : tokens) t = alphabet[rng.below(alphabet.size())];
        auto p = text::parse_response(tokens, v);
        const double f = format_reward(p);

        // Range: f = b - 0.5k for b in {0,0.5,1.0,1.5}, k >= 0; total <= 2.5.
        const double twice = 2.0 * f;
        CHECK(std::fabs(twice - std::round(twice)) < 1e-12);
        CHECK(f <= 1.5);
        rewards::RewardContext ctx;
        ctx.gold_label = "memo";
        ctx.parsed = p;
        CHECK(total_reward(ctx).total <= 2.5);

        // Determinism.
        CHECK(format_reward(text::parse_response(tokens, v)) == f);

        // Monotonicity: appending a superfluous tag (one whose kind already
        // occurs, so the addition is an extra occurrence rather than a block
        // completion) never raises the format reward.
        const std::array<int, 4> tags = {text::TAG_R_OPEN, text::TAG_R_CLOSE, text::TAG_A_OPEN,
                                         text::TAG_A_CLOSE};
        for (size_t k = 0; k < tags.size(); ++k) {
            if (p.tag_counts[k] == 0) continue;
            auto extended = tokens;
            extended.push_back(tags[k]);
            CHECK(format_reward(text::parse_response(extended, v)) <= f + 1e-12);
        }

        // Correct-class dominance: same format, correct label exactly +1.
        if (p.extracted_label.has_value() && *p.extracted_label == "memo") {
            rewards::RewardContext wrong = ctx;
            wrong.gold_label = "budget";
            CHECK(total_reward(ctx).total == total_reward(wrong).total + 1.0);
        }
    }
}

TEST_CASE("classification reward handles malformed extraction") {
    auto v = vocab();
    auto p = text::parse_response(tag_stream("aw", v), v);  // unclosed
    CHECK_FALSE(p.extracted_label.has_value());
    CHECK(classification_reward(p, "memo") == 0.0);
}
