// SPDX-License-Identifier: Apache-2.0
#ifndef DOCLAB_TEXTIO_PARSE_HPP_
#define DOCLAB_TEXTIO_PARSE_HPP_

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "doclab/textio/vocab.hpp"

namespace doclab::text {

// Result of parsing a response against the reasoning/answer grammar.
// Parsing is total: any token list yields a ParsedResponse, malformed input
// simply has no extracted label.
struct ParsedResponse {
    std::vector<int> reasoning_span;  // tokens strictly between the reasoning tags
    std::vector<int> answer_span;     // tokens strictly between the answer tags
    // Occurrences of TAG_R_OPEN, TAG_R_CLOSE, TAG_A_OPEN, TAG_A_CLOSE.
    std::array<int, 4> tag_counts{0, 0, 0, 0};
    // True iff the stream contains exactly one reasoning block followed by
    // exactly one answer block and no other tag tokens.
    bool order_ok = false;
    std::optional<std::string> extracted_label;

    int total_tags() const { return tag_counts[0] + tag_counts[1] + tag_counts[2] + tag_counts[3]; }

    // A complete block means an opening tag with a matching closing tag
    // somewhere after it.
    bool reasoning_block_present = false;
    bool answer_block_present = false;
};

inline ParsedResponse parse_response(const std::vector<int>& tokens, const Vocab& vocab) {
    ParsedResponse out;
    int first_r_open = -1, last_r_close = -1;
    int first_a_open = -1, last_a_close = -1;
    std::vector<int> tag_positions;
    for (size_t i = 0; i < tokens.size(); ++i) {
        const int t = tokens[i];
        switch (t) {
            case TAG_R_OPEN:
                if (first_r_open < 0) first_r_open = static_cast<int>(i);
                out.tag_counts[0]++;
                tag_positions.push_back(static_cast<int>(i));
                break;
            case TAG_R_CLOSE:
                last_r_close = static_cast<int>(i);
                out.tag_counts[1]++;
                tag_positions.push_back(static_cast<int>(i));
                break;
            case TAG_A_OPEN:
                if (first_a_open < 0) first_a_open = static_cast<int>(i);
                out.tag_counts[2]++;
                tag_positions.push_back(static_cast<int>(i));
                break;
            case TAG_A_CLOSE:
                last_a_close = static_cast<int>(i);
                out.tag_counts[3]++;
                tag_positions.push_back(static_cast<int>(i));
                break;
            default:
                break;
        }
    }

    out.reasoning_block_present = first_r_open >= 0 && last_r_close > first_r_open;
    out.answer_block_present = first_a_open >= 0 && last_a_close > first_a_open;

    // Canonical order: exactly the four tags, in reasoning-then-answer order.
    out.order_ok = out.tag_counts == std::array<int, 4>{1, 1, 1, 1} &&
                   tag_positions.size() == 4 && tokens[tag_positions[0]] == TAG_R_OPEN &&
                   tokens[tag_positions[1]] == TAG_R_CLOSE &&
                   tokens[tag_positions[2]] == TAG_A_OPEN &&
                   tokens[tag_positions[3]] == TAG_A_CLOSE;

    if (out.reasoning_block_present && out.tag_counts[0] == 1 && out.tag_counts[1] == 1) {
        out.reasoning_span.assign(tokens.begin() + first_r_open + 1,
                                  tokens.begin() + last_r_close);
    }

    // A label is extracted iff there is exactly one well-formed answer block.
    // The label may be empty (an empty block); it then matches no class.
    if (out.answer_block_present && out.tag_counts[2] == 1 && out.tag_counts[3] == 1) {
        out.answer_span.assign(tokens.begin() + first_a_open + 1, tokens.begin() + last_a_close);
        out.extracted_label = normalize(vocab.decode(out.answer_span));
    }
    return out;
}

}  // namespace doclab::text

#endif  // DOCLAB_TEXTIO_PARSE_HPP_
