// SPDX-License-Identifier: Apache-2.0
#ifndef DOCLAB_TEXTIO_VOCAB_HPP_
#define DOCLAB_TEXTIO_VOCAB_HPP_

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "doclab/util/error.hpp"
#include "doclab/util/io.hpp"

namespace doclab::text {

// Reserved special tokens at fixed ids 0..6.
enum Special : int {
    PAD = 0,
    BOS = 1,
    EOS = 2,
    TAG_R_OPEN = 3,   // <reasoning>
    TAG_R_CLOSE = 4,  // </reasoning>
    TAG_A_OPEN = 5,   // <answer>
    TAG_A_CLOSE = 6,  // </answer>
};

inline const std::vector<std::string>& special_words() {
    static const std::vector<std::string> words = {
        "<pad>", "<bos>", "<eos>", "<reasoning>", "</reasoning>", "<answer>", "</answer>"};
    return words;
}

constexpr int kNumSpecials = 7;

// Lowercases and collapses runs of whitespace to single spaces.
inline std::string normalize(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    bool in_space = true;  // swallow leading whitespace
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!in_space) out.push_back(' ');
            in_space = true;
        } else {
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
            in_space = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

inline std::vector<std::string> split_words(const std::string& s) {
    std::istringstream ss(normalize(s));
    std::vector<std::string> words;
    std::string w;
    while (ss >> w) words.push_back(w);
    return words;
}

// Bijective word <-> id map with the seven specials pinned to ids 0..6.
class Vocab {
public:
    Vocab() = default;

    // Builds from a set of plain words; specials first, the rest in sorted
    // order so construction is deterministic.
    static Vocab build(const std::set<std::string>& words) {
        Vocab v;
        for (const auto& w : special_words()) v.push_(w);
        for (const auto& w : words) {
            const std::string n = normalize(w);
            if (n.empty()) continue;
            if (n.find(' ') != std::string::npos)
                throw VocabError("vocabulary entries must be single words: '" + w + "'");
            if (!v.word_to_id_.count(n)) v.push_(n);
        }
        return v;
    }

    int size() const { return static_cast<int>(id_to_word_.size()); }

    bool contains(const std::string& word) const {
        return word_to_id_.count(normalize(word)) > 0;
    }

    int id(const std::string& word) const {
        const auto it = word_to_id_.find(normalize(word));
        if (it == word_to_id_.end()) throw VocabError("unknown word: '" + word + "'");
        return it->second;
    }

    const std::string& word(int token_id) const {
        if (token_id < 0 || token_id >= size())
            throw VocabError("token id out of range: " + std::to_string(token_id));
        return id_to_word_[static_cast<size_t>(token_id)];
    }

    // Encodes normalized text, one token per word.
    std::vector<int> encode(const std::string& s) const {
        std::vector<int> ids;
        for (const auto& w : split_words(s)) ids.push_back(id(w));
        return ids;
    }

    // Decodes to a space-joined string; PAD/BOS/EOS are skipped, tag tokens
    // decode to their literal form.
    std::string decode(const std::vector<int>& ids) const {
        std::string out;
        for (int t : ids) {
            if (t == PAD || t == BOS || t == EOS) continue;
            if (!out.empty()) out.push_back(' ');
            out += word(t);
        }
        return out;
    }

    std::string to_json() const {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& w : id_to_word_) j.push_back(w);
        return j.dump();
    }

    static Vocab from_json(const std::string& text) {
        nlohmann::json j = nlohmann::json::parse(text);
        if (!j.is_array() || j.size() < kNumSpecials)
            throw IntegrityError("vocabulary file is not a valid word list");
        Vocab v;
        for (size_t i = 0; i < j.size(); ++i) {
            const std::string w = j[i].get<std::string>();
            if (i < kNumSpecials && w != special_words()[i])
                throw IntegrityError("vocabulary specials are not in canonical order");
            v.push_(w);
        }
        return v;
    }

    void save(const std::string& path) const { write_file(path, to_json()); }
    static Vocab load(const std::string& path) { return from_json(read_file(path)); }

private:
    void push_(const std::string& w) {
        if (word_to_id_.count(w)) throw VocabError("duplicate vocabulary word: '" + w + "'");
        word_to_id_.emplace(w, static_cast<int>(id_to_word_.size()));
        id_to_word_.push_back(w);
    }

    std::vector<std::string> id_to_word_;
    std::unordered_map<std::string, int> word_to_id_;
};

}  // namespace doclab::text

#endif  // DOCLAB_TEXTIO_VOCAB_HPP_
