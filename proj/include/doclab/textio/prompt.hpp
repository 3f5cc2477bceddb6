// SPDX-License-Identifier: Apache-2.0
#ifndef DOCLAB_TEXTIO_PROMPT_HPP_
#define DOCLAB_TEXTIO_PROMPT_HPP_

#include <string>
#include <vector>

#include "doclab/textio/vocab.hpp"

namespace doclab::text {

// The fixed prompt wording. Changing it invalidates trained checkpoints, so
// it lives in exactly one place.
inline const char* kPromptHeader = "classify the document into exactly one of these classes :";
inline const char* kModalityMarker = "modality";
inline const char* kDocumentMarker = "document :";
inline const char* kClassSeparator = ",";

enum class Modality { kImageLike, kOcrLike };

inline const char* modality_word(Modality m) {
    return m == Modality::kImageLike ? "image" : "ocr";
}

inline Modality modality_from_word(const std::string& w) {
    if (w == "image") return Modality::kImageLike;
    if (w == "ocr") return Modality::kOcrLike;
    throw InputError("unknown modality: '" + w + "'");
}

// One classification request: the classes offered, the input modality and
// the document body. Class order is semantic and preserved.
struct PromptSpec {
    std::vector<std::string> class_names;
    Modality modality = Modality::kOcrLike;
    std::vector<std::string> document_words;

    void validate() const {
        if (class_names.empty()) throw UsageError("prompt requires a non-empty class list");
        for (size_t i = 0; i < class_names.size(); ++i)
            for (size_t j = i + 1; j < class_names.size(); ++j)
                if (normalize(class_names[i]) == normalize(class_names[j]))
                    throw UsageError("duplicate class in prompt: '" + class_names[i] + "'");
    }
};

// Deterministic template: header, enumerated class list, modality marker,
// document body, then BOS to open the response.
inline std::vector<int> build_prompt(const PromptSpec& spec, const Vocab& vocab) {
    spec.validate();
    std::vector<int> ids = vocab.encode(kPromptHeader);
    for (size_t i = 0; i < spec.class_names.size(); ++i) {
        if (i > 0) ids.push_back(vocab.id(kClassSeparator));
        for (int t : vocab.encode(spec.class_names[i])) ids.push_back(t);
    }
    for (int t : vocab.encode(kModalityMarker)) ids.push_back(t);
    ids.push_back(vocab.id(modality_word(spec.modality)));
    for (int t : vocab.encode(kDocumentMarker)) ids.push_back(t);
    for (const auto& w : spec.document_words) ids.push_back(vocab.id(w));
    ids.push_back(BOS);
    return ids;
}

}  // namespace doclab::text

#endif  // DOCLAB_TEXTIO_PROMPT_HPP_
