// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "doclab/synthdocs/targets.hpp"

using namespace doclab;

namespace {

// Brute-force lexicon-frequency classifier: the independent oracle the
// separability guarantees are stated against.
std::string frequency_oracle(const synth::DocumentSample& s) {
    std::string best;
    int best_count = -1;
    for (const auto& spec : synth::class_specs()) {
        const auto lex = spec.lexicon(s.modality);
        int count = 0;
        for (const auto& w : s.document_words)
            if (std::find(lex.begin(), lex.end(), w) != lex.end()) ++count;
        if (count > best_count) {
            best_count = count;
            best = spec.name;
        }
    }
    return best;
}

synth::GenConfig small_config() {
    synth::GenConfig gc;
    gc.seed = 7;
    gc.train_per_class = 12;
    gc.test_per_class = 8;
    return gc;
}

}  // namespace

TEST_CASE("class table matches the 10/6 split verbatim") {
    const auto& train = synth::train_class_names();
    const auto& heldout = synth::heldout_class_names();
    CHECK(train == std::vector<std::string>{"letter", "form", "advertisement",
                                            "scientific report", "scientific publication",
                                            "specification", "file folder", "budget", "resume",
                                            "memo"});
    CHECK(heldout == std::vector<std::string>{"email", "handwritten", "news article", "invoice",
                                              "presentation", "questionnaire"});
    CHECK(synth::all_class_names().size() == 16);
    std::set<std::string> unique(synth::all_class_names().begin(),
                                 synth::all_class_names().end());
    CHECK(unique.size() == 16);
    CHECK(synth::class_specs().size() == 16);
}

TEST_CASE("lexicons are non-empty and overlap only through confusable pairs") {
    // Map each word to the set of classes using it, per modality.
    for (auto modality : {text::Modality::kOcrLike, text::Modality::kImageLike}) {
        std::map<std::string, std::set<std::string>> users;
        for (const auto& spec : synth::class_specs()) {
            const auto lex = spec.lexicon(modality);
            CHECK(!lex.empty());
            for (const auto& w : lex) users[w].insert(spec.name);
        }
        for (const auto& [word, classes] : users) {
            if (classes.size() < 2) continue;
            // Every pair sharing this word must be declared confusable.
            for (const auto& a : classes) {
                for (const auto& b : classes) {
                    if (a >= b) continue;
                    const auto& ca = synth::class_spec(a).confusables;
                    const bool declared =
                        std::find(ca.begin(), ca.end(), b) != ca.end();
                    CHECK_MESSAGE(declared, "undeclared lexicon overlap: '", word, "' in ", a,
                                  " and ", b);
                }
            }
        }
    }
    // Noise and layout vocabulary never collides with class lexicons.
    std::set<std::string> class_words;
    for (const auto& spec : synth::class_specs())
        for (auto m : {text::Modality::kOcrLike, text::Modality::kImageLike})
            for (const auto& w : spec.lexicon(m)) class_words.insert(w);
    for (auto style : {synth::Style::kVintage, synth::Style::kModern}) {
        for (const auto& w : synth::noise_words(style)) CHECK(class_words.count(w) == 0);
        for (const auto& w : synth::layout_words(style)) CHECK(class_words.count(w) == 0);
    }
}

TEST_CASE("generation is a pure function of seed and sizes") {
    auto gc = small_config();
    const auto a = synth::dataset_to_jsonl(synth::generate(gc));
    const auto b = synth::dataset_to_jsonl(synth::generate(gc));
    CHECK(a == b);
    gc.seed = 8;
    CHECK(synth::dataset_to_jsonl(synth::generate(gc)) != a);
}

TEST_CASE("class histogram over the train split is exactly uniform") {
    auto ds = synth::generate(small_config());
    std::map<std::string, int> counts;
    for (const auto& s : ds)
        if (s.split == "train") counts[s.label]++;
    CHECK(counts.size() == 16);
    for (const auto& [name, n] : counts) CHECK(n == 12 * 2 * 2);  // modality x style
}

TEST_CASE("documents obey the declared structure") {
    auto gc = small_config();
    auto ds = synth::generate(gc);
    for (const auto& s : ds) {
        CHECK(static_cast<int>(s.document_words.size()) == gc.doc_len);
        if (s.modality == text::Modality::kImageLike) {
            // Region markers at every sixth position, drawn from the style's
            // layout grammar.
            const auto& layout = synth::layout_words(s.style);
            for (int i = 0; i < gc.doc_len; i += 6)
                CHECK(std::find(layout.begin(), layout.end(), s.document_words[i]) !=
                      layout.end());
        }
    }
}

TEST_CASE("frequency oracle: separability and style-shift margins") {
    synth::GenConfig gc;  // default sizes: the shipped configuration
    gc.seed = 3;
    gc.train_per_class = 25;
    gc.test_per_class = 25;
    auto ds = synth::generate(gc);
    std::map<std::string, std::pair<int, int>> tallies;  // style -> (correct, n)
    for (const auto& s : ds) {
        auto& t = tallies[synth::style_word(s.style)];
        t.first += frequency_oracle(s) == s.label ? 1 : 0;
        t.second += 1;
    }
    const double id_acc = double(tallies["vintage"].first) / tallies["vintage"].second;
    const double ood_acc = double(tallies["modern"].first) / tallies["modern"].second;
    CHECK(id_acc >= 0.95);
    CHECK(ood_acc >= 0.85);
    // The shift is real but bounded.
    CHECK(id_acc - ood_acc >= 0.02);
    // Oracle beats 16-way chance by at least 5x on both styles.
    CHECK(id_acc >= 5.0 / 16.0);
    CHECK(ood_acc >= 5.0 / 16.0);
}

TEST_CASE("jsonl round trip") {
    auto ds = synth::generate(small_config());
    auto parsed = synth::dataset_from_jsonl(synth::dataset_to_jsonl(ds));
    REQUIRE(parsed.size() == ds.size());
    for (size_t i = 0; i < ds.size(); ++i) {
        CHECK(parsed[i].id == ds[i].id);
        CHECK(parsed[i].label == ds[i].label);
        CHECK(parsed[i].document_words == ds[i].document_words);
        CHECK(parsed[i].gold_reasoning == ds[i].gold_reasoning);
        CHECK(parsed[i].modality == ds[i].modality);
        CHECK(parsed[i].style == ds[i].style);
        CHECK(parsed[i].split == ds[i].split);
    }
}

TEST_CASE("sft targets parse canonically and cite document words") {
    auto ds = synth::generate(small_config());
    auto vocab = synth::build_vocab();
    auto plan = synth::scenario_split(ds, "unseen-classes");
    auto targets =
        synth::make_sft_targets(plan.train_sets[0].samples, synth::train_class_names(), vocab);
    REQUIRE(targets.size() == plan.train_sets[0].samples.size());
    for (size_t i = 0; i < targets.size(); ++i) {
        const auto& ex = targets[i];
        ex.check(vocab);  // order_ok, label matches, ends in EOS
        // Gold reasoning mentions at least two words present in the document
        // (or one word twice for degenerate single-word documents).
        const auto& doc = plan.train_sets[0].samples[i].document_words;
        int present = 0;
        for (const auto& w : text::split_words(plan.train_sets[0].samples[i].gold_reasoning)) {
            if (std::find(doc.begin(), doc.end(), w) != doc.end()) ++present;
        }
        CHECK(present >= 2);
    }
}

TEST_CASE("pretrain targets are well-formed, diverse and deterministic") {
    auto ds = synth::generate(small_config());
    auto vocab = synth::build_vocab();
    auto targets = synth::make_pretrain_targets(ds, vocab, 11, 500);
    CHECK(targets.size() == 500);
    std::map<std::string, int> label_hist;
    for (const auto& ex : targets) {
        ex.check(vocab);
        label_hist[ex.gold_label]++;
    }
    // Random targets cover (nearly) every class; no label dominates the way
    // a leaked document label would.
    CHECK(label_hist.size() >= 14);
    for (const auto& [label, n] : label_hist) CHECK(n < 150);

    auto again = synth::make_pretrain_targets(ds, vocab, 11, 500);
    for (size_t i = 0; i < targets.size(); ++i) {
        CHECK(targets[i].prompt == again[i].prompt);
        CHECK(targets[i].response == again[i].response);
    }
}

TEST_CASE("scenario splits partition the universe per protocol") {
    auto ds = synth::generate(small_config());

    auto unseen = synth::scenario_split(ds, "unseen-classes");
    REQUIRE(unseen.train_sets.size() == 1);
    const auto& heldout = synth::heldout_class_names();
    for (const auto& s : unseen.train_sets[0].samples) {
        CHECK(std::find(heldout.begin(), heldout.end(), s.label) == heldout.end());
        CHECK(s.style == synth::Style::kVintage);
        CHECK(s.modality == text::Modality::kImageLike);
        CHECK(s.split == "train");
    }
    REQUIRE(unseen.eval_sets.size() == 3);
    CHECK(unseen.eval_sets[0].split_id == "test-train10");
    CHECK(unseen.eval_sets[1].split_id == "test-heldout6");
    CHECK(unseen.eval_sets[2].split_id == "test-all16");
    for (const auto& s : unseen.eval_sets[1].samples)
        CHECK(std::find(heldout.begin(), heldout.end(), s.label) != heldout.end());

    auto ood = synth::scenario_split(ds, "ood-style");
    for (const auto& s : ood.train_sets[0].samples) CHECK(s.style == synth::Style::kVintage);
    CHECK(ood.eval_sets[0].ood_flag == 0);
    CHECK(ood.eval_sets[1].ood_flag == 1);
    for (const auto& s : ood.eval_sets[1].samples) CHECK(s.style == synth::Style::kModern);

    // Modality scenario: the 2x2 train/eval grid.
    auto modality = synth::scenario_split(ds, "modality");
    REQUIRE(modality.train_sets.size() == 2);
    REQUIRE(modality.eval_sets.size() == 2);
    CHECK(modality.train_sets[0].modality == text::Modality::kImageLike);
    CHECK(modality.train_sets[1].modality == text::Modality::kOcrLike);

    CHECK_THROWS_AS(synth::scenario_split(ds, "bogus"), doclab::UsageError);
}

TEST_CASE("annotation noise flips the configured fraction of labels") {
    auto gc = small_config();
    gc.annotation_noise = 0.5;
    auto noisy = synth::generate(gc);
    gc.annotation_noise = 0.0;
    auto clean = synth::generate(gc);
    REQUIRE(noisy.size() == clean.size());
    int flips = 0;
    for (size_t i = 0; i < noisy.size(); ++i) flips += noisy[i].label != clean[i].label ? 1 : 0;
    const double rate = double(flips) / double(noisy.size());
    CHECK(rate > 0.35);
    CHECK(rate < 0.65);
}
