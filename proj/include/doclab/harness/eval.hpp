// SPDX-License-Identifier: Apache-2.0
#ifndef DOCLAB_HARNESS_EVAL_HPP_
#define DOCLAB_HARNESS_EVAL_HPP_

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "doclab/policy/model.hpp"
#include "doclab/synthdocs/generate.hpp"
#include "doclab/synthdocs/targets.hpp"
#include "doclab/textio/parse.hpp"
#include "doclab/util/io.hpp"

namespace doclab::harness {

using doclab::policy::Model;
using doclab::policy::ParamStore;

// Prompt variants mirror the three class lists offered at evaluation time.
inline const std::vector<std::string>& variant_classes(const std::string& variant) {
    if (variant == "all16") return synth::all_class_names();
    if (variant == "train10") return synth::train_class_names();
    if (variant == "heldout6") return synth::heldout_class_names();
    throw UsageError("unknown prompt variant: '" + variant + "'");
}

struct DecodeConfig {
    int max_new = 28;
    // Greedy decoding; sampling is a training-time concern.
};

// One cell of the experiment grid.
struct EvalCell {
    std::string prompt_variant;   // all16 | train10 | heldout6
    std::string split_id;
    std::string modality;         // image | ocr | mixed
    std::string reasoning_mode;   // on | off
    int n = 0;
    double accuracy = 0.0;
    double format_rate = 0.0;
    double in_prompt_rate = 0.0;
    bool mismatch = false;  // prompt class set differs from split label set
    int ood_flag = -1;      // -1 unmarked, 0 in-distribution, 1 out-of-distribution

    std::string key() const {
        return prompt_variant + "|" + split_id + "|" + modality + "|" + reasoning_mode;
    }
};

struct EvalMatrix {
    std::string model_id;
    std::string checkpoint_hash;
    std::vector<EvalCell> cells;
    nlohmann::json config_snapshot;
};

// Per-sample dump for qualitative inspection and independent recounts.
struct PredictionRecord {
    std::string sample_id;
    std::string prompt_variant;
    std::vector<int> response_tokens;
    std::string reasoning_text;
    std::optional<std::string> extracted_label;
    std::string gold;
    bool correct = false;
    bool format_ok = false;
    bool in_prompt = false;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["id"] = sample_id;
        j["prompt_variant"] = prompt_variant;
        j["response_tokens"] = response_tokens;
        j["reasoning_text"] = reasoning_text;
        j["extracted_label"] = extracted_label ? nlohmann::json(*extracted_label)
                                               : nlohmann::json(nullptr);
        j["gold"] = gold;
        j["correct"] = correct;
        j["format_ok"] = format_ok;
        j["in_prompt"] = in_prompt;
        return j;
    }
};

// Greedy evaluation of one (prompt variant x eval set x reasoning mode)
// cell. Decoding fans out read-only over samples; aggregation is a
// deterministic reduction over the index order.
template <class Real>
EvalCell evaluate_cell(const Model<Real>& model, const ParamStore<Real>& store,
                       const synth::EvalSetSpec& eval_set, const std::string& variant,
                       const std::string& reasoning_mode, const DecodeConfig& decode,
                       const text::Vocab& vocab, std::vector<PredictionRecord>* predictions) {
    if (eval_set.samples.empty()) throw UsageError("empty evaluation set: " + eval_set.split_id);
    const auto& classes = variant_classes(variant);
    std::set<std::string> prompt_set;
    for (const auto& c : classes) prompt_set.insert(text::normalize(c));

    std::set<std::string> split_set;
    std::set<std::string> modalities;
    for (const auto& s : eval_set.samples) {
        split_set.insert(text::normalize(s.label));
        modalities.insert(text::modality_word(s.modality));
    }

    EvalCell cell;
    cell.prompt_variant = variant;
    cell.split_id = eval_set.split_id;
    cell.modality = modalities.size() == 1 ? *modalities.begin() : "mixed";
    cell.reasoning_mode = reasoning_mode;
    cell.mismatch = prompt_set != split_set;
    cell.ood_flag = eval_set.ood_flag;
    cell.n = static_cast<int>(eval_set.samples.size());

    std::vector<PredictionRecord> records(eval_set.samples.size());
    parallel_for(eval_set.samples.size(), [&](size_t i) {
        const auto& sample = eval_set.samples[i];
        const auto prompt = text::build_prompt(synth::prompt_spec_for(sample, classes), vocab);
        typename Model<Real>::SampleOptions opts;
        opts.temperature = Real(0);  // greedy
        opts.max_new = decode.max_new;
        if (reasoning_mode == "off") opts.prefill = {text::TAG_R_OPEN, text::TAG_R_CLOSE};
        const auto rollout = model.sample(store, prompt, opts, /*adapters_on=*/true);
        const auto parsed = text::parse_response(rollout.response, vocab);

        PredictionRecord rec;
        rec.sample_id = sample.id;
        rec.prompt_variant = variant;
        rec.response_tokens = rollout.response;
        rec.reasoning_text = vocab.decode(parsed.reasoning_span);
        rec.extracted_label = parsed.extracted_label;
        rec.gold = text::normalize(sample.label);
        rec.correct = parsed.extracted_label && *parsed.extracted_label == rec.gold;
        rec.format_ok = parsed.order_ok;
        rec.in_prompt =
            parsed.extracted_label && prompt_set.count(*parsed.extracted_label) > 0;
        records[i] = std::move(rec);
    });

    for (const auto& rec : records) {
        cell.accuracy += rec.correct ? 1.0 : 0.0;
        cell.format_rate += rec.format_ok ? 1.0 : 0.0;
        cell.in_prompt_rate += rec.in_prompt ? 1.0 : 0.0;
    }
    cell.accuracy /= cell.n;
    cell.format_rate /= cell.n;
    cell.in_prompt_rate /= cell.n;
    if (predictions)
        predictions->insert(predictions->end(), records.begin(), records.end());
    return cell;
}

struct GridRequest {
    std::vector<std::string> variants;         // prompt variants
    std::vector<std::string> reasoning_modes;  // "on" and/or "off"
    DecodeConfig decode;
};

// Full grid: every (variant x eval set x reasoning mode) combination.
template <class Real>
EvalMatrix evaluate(const Model<Real>& model, const ParamStore<Real>& store,
                    const std::vector<synth::EvalSetSpec>& eval_sets, const GridRequest& grid,
                    const text::Vocab& vocab, const std::string& model_id,
                    const std::string& checkpoint_hash,
                    std::vector<PredictionRecord>* predictions = nullptr) {
    if (static_cast<int>(vocab.size()) != model.config().vocab_size)
        throw IntegrityError("vocabulary size does not match checkpoint config");
    EvalMatrix matrix;
    matrix.model_id = model_id;
    matrix.checkpoint_hash = checkpoint_hash;
    matrix.config_snapshot = model.config().to_json();
    std::set<std::string> seen;
    for (const auto& mode : grid.reasoning_modes) {
        for (const auto& variant : grid.variants) {
            for (const auto& es : eval_sets) {
                auto cell = evaluate_cell(model, store, es, variant, mode, grid.decode, vocab,
                                          predictions);
                if (!seen.insert(cell.key()).second)
                    throw UsageError("duplicate grid cell: " + cell.key());
                matrix.cells.push_back(std::move(cell));
            }
        }
    }
    return matrix;
}

inline std::string predictions_to_jsonl(const std::vector<PredictionRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        out += r.to_json().dump();
        out.push_back('\n');
    }
    return out;
}

}  // namespace doclab::harness

#endif  // DOCLAB_HARNESS_EVAL_HPP_
