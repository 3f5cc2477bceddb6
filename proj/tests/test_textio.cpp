// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "doclab/synthdocs/classes.hpp"
#include "doclab/synthdocs/generate.hpp"
#include "doclab/textio/parse.hpp"
#include "doclab/textio/prompt.hpp"
#include "doclab/textio/vocab.hpp"
#include "doclab/util/rng.hpp"

using namespace doclab;
using text::Vocab;

namespace {

Vocab tiny_vocab() {
    return Vocab::build({"memo", "letter", "budget", "file", "folder", "looks", "like", "a",
                         "classify", "the", "document", "into", "exactly", "one", "of", "these",
                         "classes", ":", ",", "modality", "image", "ocr", "alpha", "beta"});
}

std::vector<int> toks(const Vocab& v, const std::vector<std::string>& words) {
    std::vector<int> out;
    for (const auto& w : words) {
        if (w == "<reasoning>") out.push_back(text::TAG_R_OPEN);
        else if (w == "</reasoning>") out.push_back(text::TAG_R_CLOSE);
        else if (w == "<answer>") out.push_back(text::TAG_A_OPEN);
        else if (w == "</answer>") out.push_back(text::TAG_A_CLOSE);
        else if (w == "<eos>") out.push_back(text::EOS);
        else out.push_back(v.id(w));
    }
    return out;
}

}  // namespace

TEST_CASE("specials occupy fixed ids 0..6") {
    auto v = tiny_vocab();
    CHECK(v.word(text::PAD) == "<pad>");
    CHECK(v.word(text::BOS) == "<bos>");
    CHECK(v.word(text::EOS) == "<eos>");
    CHECK(v.word(text::TAG_R_OPEN) == "<reasoning>");
    CHECK(v.word(text::TAG_R_CLOSE) == "</reasoning>");
    CHECK(v.word(text::TAG_A_OPEN) == "<answer>");
    CHECK(v.word(text::TAG_A_CLOSE) == "</answer>");
}

TEST_CASE("encode/decode round trip with normalization") {
    auto v = tiny_vocab();
    CHECK(v.encode("").empty());
    // Every vocabulary word round-trips.
    for (int id = text::kNumSpecials; id < v.size(); ++id) {
        const auto& w = v.word(id);
        CHECK(v.decode(v.encode(w)) == w);
    }
    // Normalization oracle: lowercase + whitespace collapse.
    CHECK(text::normalize("File   Folder ") == "file folder");
    auto ids = v.encode("File  Folder");
    CHECK(v.decode(ids) == "file folder");
    CHECK_THROWS_AS(v.encode("unknownword"), doclab::VocabError);
}

TEST_CASE("vocabulary json round trip") {
    auto v = tiny_vocab();
    auto v2 = Vocab::from_json(v.to_json());
    CHECK(v2.size() == v.size());
    for (int id = 0; id < v.size(); ++id) CHECK(v2.word(id) == v.word(id));
}

TEST_CASE("build_prompt is deterministic and order-sensitive") {
    auto v = tiny_vocab();
    text::PromptSpec spec;
    spec.class_names = {"memo", "letter"};
    spec.modality = text::Modality::kOcrLike;
    spec.document_words = {"alpha", "beta"};
    auto a = text::build_prompt(spec, v);
    auto b = text::build_prompt(spec, v);
    CHECK(a == b);
    CHECK(a.back() == text::BOS);

    text::PromptSpec swapped = spec;
    std::swap(swapped.class_names[0], swapped.class_names[1]);
    CHECK(text::build_prompt(swapped, v) != a);

    text::PromptSpec dup = spec;
    dup.class_names = {"memo", "Memo"};
    CHECK_THROWS_AS(text::build_prompt(dup, v), doclab::UsageError);
    text::PromptSpec empty = spec;
    empty.class_names.clear();
    CHECK_THROWS_AS(text::build_prompt(empty, v), doclab::UsageError);
}

TEST_CASE("ten-class prompt enumerates the table split exactly") {
    auto vocab = synth::build_vocab();
    text::PromptSpec spec;
    spec.class_names = synth::train_class_names();
    spec.modality = text::Modality::kImageLike;
    spec.document_words = {"letterhead"};
    auto ids = text::build_prompt(spec, vocab);
    const std::string rendered = vocab.decode(ids);
    CHECK(rendered.find("letter , form , advertisement , scientific report , "
                        "scientific publication , specification , file folder , budget , "
                        "resume , memo") != std::string::npos);
}

TEST_CASE("parse_response canonical and non-canonical forms") {
    auto v = tiny_vocab();
    // Canonical: reasoning then answer.
    auto canonical = toks(v, {"<reasoning>", "looks", "like", "a", "memo", "</reasoning>",
                              "<answer>", "memo", "</answer>"});
    auto p = text::parse_response(canonical, v);
    CHECK(p.order_ok);
    CHECK(p.reasoning_block_present);
    CHECK(p.answer_block_present);
    REQUIRE(p.extracted_label.has_value());
    CHECK(*p.extracted_label == "memo");

    // Answer before reasoning: both blocks present, order not canonical.
    auto inverted = toks(v, {"<answer>", "memo", "</answer>", "<reasoning>", "looks",
                             "</reasoning>"});
    auto pi = text::parse_response(inverted, v);
    CHECK(pi.reasoning_block_present);
    CHECK(pi.answer_block_present);
    CHECK_FALSE(pi.order_ok);
    CHECK(pi.extracted_label.has_value());

    // Unclosed answer tag: label absent.
    auto unclosed = toks(v, {"<answer>", "memo"});
    auto pu = text::parse_response(unclosed, v);
    CHECK_FALSE(pu.answer_block_present);
    CHECK_FALSE(pu.extracted_label.has_value());

    // Trailing EOS does not break the canonical order.
    auto with_eos = canonical;
    with_eos.push_back(text::EOS);
    CHECK(text::parse_response(with_eos, v).order_ok);

    // Multi-word label.
    auto multi = toks(v, {"<reasoning>", "</reasoning>", "<answer>", "file", "folder",
                          "</answer>"});
    auto pm = text::parse_response(multi, v);
    CHECK(pm.order_ok);
    CHECK(*pm.extracted_label == "file folder");

    // Duplicate answer blocks: ambiguous, no label.
    auto dup = toks(v, {"<reasoning>", "</reasoning>", "<answer>", "memo", "</answer>",
                        "<answer>", "letter", "</answer>"});
    auto pd = text::parse_response(dup, v);
    CHECK_FALSE(pd.order_ok);
    CHECK_FALSE(pd.extracted_label.has_value());
    CHECK(pd.tag_counts[2] == 2);
}

TEST_CASE("parser totality and grammar soundness under fuzzing") {
    auto v = tiny_vocab();
    Rng rng(2024);
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<int> tokens(rng.below(24));
        for (auto& t : tokens) t = static_cast<int>(rng.below(static_cast<uint64_t>(v.size())));
        const auto p = text::parse_response(tokens, v);  // must never throw
        if (p.order_ok) {
            CHECK(p.tag_counts == std::array<int, 4>{1, 1, 1, 1});
        }
        if (p.extracted_label.has_value()) {
            // Extraction soundness: label equals detokenized span between
            // the unique answer tags.
            CHECK(p.tag_counts[2] == 1);
            CHECK(p.tag_counts[3] == 1);
            CHECK(*p.extracted_label == text::normalize(v.decode(p.answer_span)));
        }
    }
}
