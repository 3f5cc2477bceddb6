// SPDX-License-Identifier: Apache-2.0
#ifndef DOCLAB_HARNESS_REPORT_HPP_
#define DOCLAB_HARNESS_REPORT_HPP_

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doclab/harness/eval.hpp"
#include "doclab/util/io.hpp"

namespace doclab::harness {

// ---------------------------------------------------------------------------
// Matrix serialization: CSV (round-trippable), JSON, markdown tables.
// ---------------------------------------------------------------------------

inline std::string matrix_to_csv(const EvalMatrix& m) {
    std::string out =
        "prompt_variant,split,modality,reasoning_mode,n,accuracy,format_rate,in_prompt_rate,"
        "mismatch\n";
    for (const auto& c : m.cells) {
        out += c.prompt_variant + "," + c.split_id + "," + c.modality + "," + c.reasoning_mode +
               "," + std::to_string(c.n) + "," + format_fixed(c.accuracy) + "," +
               format_fixed(c.format_rate) + "," + format_fixed(c.in_prompt_rate) + "," +
               (c.mismatch ? "1" : "0") + "\n";
    }
    return out;
}

inline EvalMatrix matrix_from_csv(const std::string& text_blob) {
    EvalMatrix m;
    std::istringstream in(text_blob);
    std::string line;
    if (!std::getline(in, line)) throw IntegrityError("empty matrix csv");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::istringstream ls(line);
        std::string f;
        while (std::getline(ls, f, ',')) fields.push_back(f);
        if (fields.size() != 9) throw IntegrityError("malformed matrix csv row: " + line);
        EvalCell c;
        c.prompt_variant = fields[0];
        c.split_id = fields[1];
        c.modality = fields[2];
        c.reasoning_mode = fields[3];
        c.n = std::stoi(fields[4]);
        c.accuracy = std::stod(fields[5]);
        c.format_rate = std::stod(fields[6]);
        c.in_prompt_rate = std::stod(fields[7]);
        c.mismatch = fields[8] == "1";
        m.cells.push_back(std::move(c));
    }
    return m;
}

inline nlohmann::json matrix_to_json(const EvalMatrix& m) {
    nlohmann::json j;
    j["model_id"] = m.model_id;
    j["checkpoint_hash"] = m.checkpoint_hash;
    j["config"] = m.config_snapshot;
    j["cells"] = nlohmann::json::array();
    for (const auto& c : m.cells) {
        j["cells"].push_back({{"prompt_variant", c.prompt_variant},
                              {"split", c.split_id},
                              {"modality", c.modality},
                              {"reasoning_mode", c.reasoning_mode},
                              {"n", c.n},
                              {"accuracy", c.accuracy},
                              {"format_rate", c.format_rate},
                              {"in_prompt_rate", c.in_prompt_rate},
                              {"mismatch", c.mismatch}});
    }
    return j;
}

// Markdown: one table per reasoning mode, prompt variants as rows, splits as
// columns. Mismatch cells (prompt classes differing from the split's) are
// rendered in italics, the analogue of the grey values in the reference
// tables.
inline std::string matrix_to_markdown(const EvalMatrix& m, const std::string& title = "") {
    std::string out;
    if (!title.empty()) out += "## " + title + "\n\n";
    if (m.cells.empty()) return out + "(empty matrix)\n";

    std::set<std::string> modes;
    for (const auto& c : m.cells) modes.insert(c.reasoning_mode);
    for (const auto& mode : modes) {
        std::vector<std::string> variants, splits;
        for (const auto& c : m.cells) {
            if (c.reasoning_mode != mode) continue;
            if (std::find(variants.begin(), variants.end(), c.prompt_variant) == variants.end())
                variants.push_back(c.prompt_variant);
            if (std::find(splits.begin(), splits.end(), c.split_id) == splits.end())
                splits.push_back(c.split_id);
        }
        out += "### reasoning " + mode + "\n\n";
        out += "| prompt |";
        for (const auto& s : splits) out += " " + s + " |";
        out += "\n|---|";
        for (size_t i = 0; i < splits.size(); ++i) out += "---|";
        out += "\n";
        for (const auto& v : variants) {
            out += "| " + v + " |";
            for (const auto& s : splits) {
                std::string cellText = "";
                for (const auto& c : m.cells) {
                    if (c.reasoning_mode != mode || c.prompt_variant != v || c.split_id != s)
                        continue;
                    const std::string val = format_fixed(c.accuracy, 4);
                    cellText = c.mismatch ? "_" + val + "_" : val;
                }
                out += " " + (cellText.empty() ? std::string("-") : cellText) + " |";
            }
            out += "\n";
        }
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

struct DeltaCell {
    std::string key;
    double accuracy_delta = 0.0;      // B - A
    double format_delta = 0.0;
    double in_prompt_delta = 0.0;
};

struct CompareSummary {
    double id_accuracy_a = 0.0, id_accuracy_b = 0.0;
    double ood_accuracy_a = 0.0, ood_accuracy_b = 0.0;
    double gap_a = 0.0, gap_b = 0.0;  // generalization gap = ID - OOD
    bool has_id = false, has_ood = false;
};

struct DeltaReport {
    std::vector<DeltaCell> cells;
    CompareSummary summary;
};

// Per-cell differences plus a scenario-level summary over the cells whose
// splits are marked in- or out-of-distribution (mismatch cells excluded).
inline DeltaReport compare(const EvalMatrix& a, const EvalMatrix& b) {
    std::map<std::string, const EvalCell*> bm;
    for (const auto& c : b.cells) bm[c.key()] = &c;
    if (a.cells.size() != b.cells.size()) throw UsageError("matrices cover different grids");

    DeltaReport rep;
    double id_a = 0, id_b = 0, ood_a = 0, ood_b = 0;
    int id_n = 0, ood_n = 0;
    for (const auto& ca : a.cells) {
        auto it = bm.find(ca.key());
        if (it == bm.end()) throw UsageError("matrices cover different grids: " + ca.key());
        const EvalCell& cb = *it->second;
        rep.cells.push_back({ca.key(), cb.accuracy - ca.accuracy, cb.format_rate - ca.format_rate,
                             cb.in_prompt_rate - ca.in_prompt_rate});
        if (ca.mismatch) continue;
        if (ca.ood_flag == 0) {
            id_a += ca.accuracy;
            id_b += cb.accuracy;
            ++id_n;
        } else if (ca.ood_flag == 1) {
            ood_a += ca.accuracy;
            ood_b += cb.accuracy;
            ++ood_n;
        }
    }
    if (id_n > 0) {
        rep.summary.id_accuracy_a = id_a / id_n;
        rep.summary.id_accuracy_b = id_b / id_n;
        rep.summary.has_id = true;
    }
    if (ood_n > 0) {
        rep.summary.ood_accuracy_a = ood_a / ood_n;
        rep.summary.ood_accuracy_b = ood_b / ood_n;
        rep.summary.has_ood = true;
    }
    if (id_n > 0 && ood_n > 0) {
        rep.summary.gap_a = rep.summary.id_accuracy_a - rep.summary.ood_accuracy_a;
        rep.summary.gap_b = rep.summary.id_accuracy_b - rep.summary.ood_accuracy_b;
    }
    return rep;
}

inline std::string delta_to_csv(const DeltaReport& rep) {
    std::string out = "cell,accuracy_delta,format_delta,in_prompt_delta\n";
    for (const auto& c : rep.cells)
        out += c.key + "," + format_fixed(c.accuracy_delta) + "," +
               format_fixed(c.format_delta) + "," + format_fixed(c.in_prompt_delta) + "\n";
    out += "\n";
    if (rep.summary.has_id)
        out += "summary_id_accuracy," + format_fixed(rep.summary.id_accuracy_a) + "," +
               format_fixed(rep.summary.id_accuracy_b) + ",\n";
    if (rep.summary.has_ood)
        out += "summary_ood_accuracy," + format_fixed(rep.summary.ood_accuracy_a) + "," +
               format_fixed(rep.summary.ood_accuracy_b) + ",\n";
    if (rep.summary.has_id && rep.summary.has_ood)
        out += "summary_generalization_gap," + format_fixed(rep.summary.gap_a) + "," +
               format_fixed(rep.summary.gap_b) + ",\n";
    return out;
}

}  // namespace doclab::harness

#endif  // DOCLAB_HARNESS_REPORT_HPP_
