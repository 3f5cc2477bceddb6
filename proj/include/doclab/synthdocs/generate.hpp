// SPDX-License-Identifier: Apache-2.0
#ifndef DOCLAB_SYNTHDOCS_GENERATE_HPP_
#define DOCLAB_SYNTHDOCS_GENERATE_HPP_

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "doclab/synthdocs/classes.hpp"
#include "doclab/textio/prompt.hpp"
#include "doclab/textio/vocab.hpp"
#include "doclab/util/io.hpp"
#include "doclab/util/rng.hpp"
#include "doclab/util/sha256.hpp"

namespace doclab::synth {

struct GenConfig {
    uint64_t seed = 1;
    int train_per_class = 100;  // per (class, modality, style)
    int test_per_class = 40;
    int doc_len = 16;
    // Fraction of body words drawn from the class lexicon, by style. The
    // modern (out-of-distribution) style carries weaker signal and leaks a
    // fraction of confusable-class words into the document, so a frequency
    // oracle measurably degrades while staying well above chance.
    double signal_fraction = 0.72;
    double ood_signal_fraction = 0.45;
    double ood_confusion_fraction = 0.25;
    // Within a signal draw, probability of emitting one of the class-name
    // words themselves (documents tend to literally mention their kind).
    double name_weight = 0.5;
    // Fraction of samples whose stored label is deliberately wrong.
    double annotation_noise = 0.0;

    void validate() const {
        if (train_per_class <= 0 || test_per_class <= 0 || doc_len < 4)
            throw UsageError("generation sizes must be positive (doc_len >= 4)");
        for (double f : {signal_fraction, ood_signal_fraction, ood_confusion_fraction,
                         name_weight, annotation_noise})
            if (f < 0.0 || f > 1.0) throw UsageError("generation fractions must be in [0,1]");
    }

    nlohmann::json to_json() const {
        return nlohmann::json{{"seed", seed},
                              {"train_per_class", train_per_class},
                              {"test_per_class", test_per_class},
                              {"doc_len", doc_len},
                              {"signal_fraction", signal_fraction},
                              {"ood_signal_fraction", ood_signal_fraction},
                              {"ood_confusion_fraction", ood_confusion_fraction},
                              {"annotation_noise", annotation_noise}};
    }
};

struct DocumentSample {
    std::string id;
    std::string label;  // class name
    Modality modality = Modality::kOcrLike;
    Style style = Style::kVintage;
    std::string split;  // "train" or "test"
    std::vector<std::string> document_words;
    std::string gold_reasoning;
};

using Dataset = std::vector<DocumentSample>;

namespace detail {

inline std::string slug(const std::string& name) {
    std::string s;
    for (char c : name) s.push_back(c == ' ' ? '-' : c);
    return s;
}

// Two document words the reasoning cites, preferring the class's own name
// words, then other lexicon words, then anything. Name-first evidence keeps
// the citation consistent with the concluded label, the way a model's
// reasoning trace restates the features it keyed on.
inline std::pair<std::string, std::string> evidence_words(const std::vector<std::string>& doc,
                                                          const ClassSpec& spec, Modality m) {
    const auto name_words = text::split_words(spec.name);
    const auto lex = spec.lexicon(m);
    std::vector<std::string> picks;
    auto scan = [&](auto&& want) {
        for (const auto& w : doc) {
            if (picks.size() == 2) return;
            if (std::find(picks.begin(), picks.end(), w) != picks.end()) continue;
            if (want(w)) picks.push_back(w);
        }
    };
    scan([&](const std::string& w) {
        return std::find(name_words.begin(), name_words.end(), w) != name_words.end();
    });
    scan([&](const std::string& w) { return std::find(lex.begin(), lex.end(), w) != lex.end(); });
    scan([](const std::string&) { return true; });
    return {picks[0], picks.size() > 1 ? picks[1] : picks[0]};
}

}  // namespace detail

inline std::string gold_reasoning_text(const DocumentSample& sample) {
    return sample.gold_reasoning;
}

// Deterministic document body. Image-like documents interleave layout
// region markers with visual feature words; ocr-like documents are a plain
// bag of words. Both are token sequences over one vocabulary.
inline DocumentSample make_sample(const GenConfig& cfg, const std::string& label,
                                  Modality modality, Style style, const std::string& split,
                                  int index, Rng& rng) {
    const ClassSpec& spec = class_spec(label);
    const auto lexicon = spec.lexicon(modality);
    const auto& noise = noise_words(style);
    const auto& layout = layout_words(style);

    const bool ood = style == Style::kModern;
    const double signal = ood ? cfg.ood_signal_fraction : cfg.signal_fraction;
    const double confusion = ood ? cfg.ood_confusion_fraction : 0.0;

    DocumentSample s;
    s.label = label;
    s.modality = modality;
    s.style = style;
    s.split = split;
    {
        std::ostringstream id;
        id << detail::slug(label) << "-" << text::modality_word(modality) << "-"
           << style_word(style) << "-" << split << "-" << index;
        s.id = id.str();
    }

    for (int i = 0; i < cfg.doc_len; ++i) {
        // Every sixth position of an image-like document is a region marker.
        if (modality == Modality::kImageLike && i % 6 == 0) {
            s.document_words.push_back(layout[rng.below(layout.size())]);
            continue;
        }
        const double u = rng.uniform();
        if (u < signal) {
            if (rng.uniform() < cfg.name_weight) {
                const auto name_tokens = text::split_words(label);
                s.document_words.push_back(name_tokens[rng.below(name_tokens.size())]);
            } else {
                s.document_words.push_back(lexicon[rng.below(lexicon.size())]);
            }
        } else if (u < signal + confusion && !spec.confusables.empty()) {
            const auto& other =
                class_spec(spec.confusables[rng.below(spec.confusables.size())]);
            const auto other_lex = other.lexicon(modality);
            s.document_words.push_back(other_lex[rng.below(other_lex.size())]);
        } else {
            s.document_words.push_back(noise[rng.below(noise.size())]);
        }
    }

    if (cfg.annotation_noise > 0.0 && rng.uniform() < cfg.annotation_noise) {
        const auto& names = all_class_names();
        std::string wrong = label;
        while (wrong == label) wrong = names[rng.below(names.size())];
        s.label = wrong;
    }

    const auto [w1, w2] = detail::evidence_words(s.document_words, spec, modality);
    s.gold_reasoning = "mentions " + w1 + " " + w2 + " typical of a " + s.label;
    return s;
}

// Full universe: per class x modality x style x split, equal counts.
// A pure function of (seed, sizes).
inline Dataset generate(const GenConfig& cfg) {
    cfg.validate();
    Dataset out;
    const auto& names = all_class_names();
    for (size_t ci = 0; ci < names.size(); ++ci) {
        for (int mi = 0; mi < 2; ++mi) {
            for (int si = 0; si < 2; ++si) {
                const Modality m = mi == 0 ? Modality::kImageLike : Modality::kOcrLike;
                const Style st = si == 0 ? Style::kVintage : Style::kModern;
                for (const char* split : {"train", "test"}) {
                    const int count =
                        split == std::string("train") ? cfg.train_per_class : cfg.test_per_class;
                    const uint64_t split_tag = split == std::string("train") ? 0 : 1;
                    for (int idx = 0; idx < count; ++idx) {
                        Rng rng(derive_seed(cfg.seed, ci, (mi * 2 + si) * 2 + split_tag,
                                            static_cast<uint64_t>(idx)));
                        out.push_back(make_sample(cfg, names[ci], m, st, split, idx, rng));
                    }
                }
            }
        }
    }
    return out;
}

// Vocabulary covering everything the lab can emit; independent of sizes.
inline text::Vocab build_vocab() { return text::Vocab::build(universe_words()); }

// ---------------------------------------------------------------------------
// JSONL serialization (the dataset interchange format)
// ---------------------------------------------------------------------------

inline nlohmann::json sample_to_json(const DocumentSample& s) {
    return nlohmann::json{{"document_words", s.document_words},
                          {"gold_reasoning", s.gold_reasoning},
                          {"id", s.id},
                          {"label", s.label},
                          {"modality", text::modality_word(s.modality)},
                          {"split", s.split},
                          {"style", style_word(s.style)}};
}

inline DocumentSample sample_from_json(const nlohmann::json& j) {
    DocumentSample s;
    s.id = j.at("id").get<std::string>();
    s.label = j.at("label").get<std::string>();
    s.modality = text::modality_from_word(j.at("modality").get<std::string>());
    s.style = style_from_word(j.at("style").get<std::string>());
    s.split = j.at("split").get<std::string>();
    s.document_words = j.at("document_words").get<std::vector<std::string>>();
    s.gold_reasoning = j.at("gold_reasoning").get<std::string>();
    return s;
}

inline std::string dataset_to_jsonl(const Dataset& ds) {
    std::string out;
    for (const auto& s : ds) {
        out += sample_to_json(s).dump();
        out.push_back('\n');
    }
    return out;
}

inline Dataset dataset_from_jsonl(const std::string& text_blob) {
    Dataset out;
    std::istringstream in(text_blob);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(sample_from_json(nlohmann::json::parse(line)));
    }
    return out;
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
    write_file(path, dataset_to_jsonl(ds));
}

inline Dataset load_dataset(const std::string& path) {
    return dataset_from_jsonl(read_file(path));
}

// Generation manifest: parameters plus the content hash of the emitted file.
inline nlohmann::json generation_manifest(const GenConfig& cfg, const std::string& dataset_path) {
    nlohmann::json m;
    m["config"] = cfg.to_json();
    m["dataset_sha256"] = file_sha256(dataset_path);
    m["classes"] = all_class_names();
    return m;
}

// ---------------------------------------------------------------------------
// Scenario splits
// ---------------------------------------------------------------------------

struct EvalSetSpec {
    std::string split_id;
    Dataset samples;
    int ood_flag = -1;  // -1 unmarked, 0 in-distribution, 1 out-of-distribution
};

struct TrainSetSpec {
    std::string name;
    Dataset samples;
    Modality modality = Modality::kImageLike;
};

// Scenario-specific partition of the universe, mirroring the three
// generalization protocols plus the reasoning ablation (which reuses the
// unseen-classes split).
struct ScenarioPlan {
    std::string scenario;
    std::vector<TrainSetSpec> train_sets;
    std::vector<EvalSetSpec> eval_sets;
};

namespace detail {

inline bool in_names(const std::string& label, const std::vector<std::string>& names) {
    return std::find(names.begin(), names.end(), label) != names.end();
}

inline Dataset filter(const Dataset& ds, const std::string& split,
                      std::optional<Modality> modality, std::optional<Style> style,
                      const std::vector<std::string>* classes) {
    Dataset out;
    for (const auto& s : ds) {
        if (s.split != split) continue;
        if (modality && s.modality != *modality) continue;
        if (style && s.style != *style) continue;
        if (classes && !in_names(s.label, *classes)) continue;
        out.push_back(s);
    }
    return out;
}

}  // namespace detail

inline ScenarioPlan scenario_split(const Dataset& ds, const std::string& scenario) {
    using detail::filter;
    ScenarioPlan plan;
    plan.scenario = scenario;
    const auto img = Modality::kImageLike;
    const auto vintage = Style::kVintage;
    if (scenario == "ood-style") {
        plan.train_sets.push_back(
            {"train", filter(ds, "train", img, vintage, nullptr), img});
        plan.eval_sets.push_back({"test-id", filter(ds, "test", img, vintage, nullptr), 0});
        plan.eval_sets.push_back(
            {"test-ood", filter(ds, "test", img, Style::kModern, nullptr), 1});
    } else if (scenario == "unseen-classes" || scenario == "reasoning-ablation") {
        const auto& id10 = train_class_names();
        const auto& ood6 = heldout_class_names();
        plan.train_sets.push_back({"train", filter(ds, "train", img, vintage, &id10), img});
        plan.eval_sets.push_back({"test-train10", filter(ds, "test", img, vintage, &id10), 0});
        plan.eval_sets.push_back({"test-heldout6", filter(ds, "test", img, vintage, &ood6), 1});
        plan.eval_sets.push_back({"test-all16", filter(ds, "test", img, vintage, nullptr), -1});
    } else if (scenario == "modality") {
        plan.train_sets.push_back({"train-image", filter(ds, "train", img, vintage, nullptr), img});
        plan.train_sets.push_back(
            {"train-ocr", filter(ds, "train", Modality::kOcrLike, vintage, nullptr),
             Modality::kOcrLike});
        plan.eval_sets.push_back({"test-image", filter(ds, "test", img, vintage, nullptr), -1});
        plan.eval_sets.push_back(
            {"test-ocr", filter(ds, "test", Modality::kOcrLike, vintage, nullptr), -1});
    } else {
        throw UsageError("unknown scenario: '" + scenario + "'");
    }
    for (const auto& t : plan.train_sets)
        if (t.samples.empty()) throw UsageError("scenario train set is empty");
    return plan;
}

}  // namespace doclab::synth

#endif  // DOCLAB_SYNTHDOCS_GENERATE_HPP_
