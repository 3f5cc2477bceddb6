// SPDX-License-Identifier: Apache-2.0
#ifndef DOCLAB_SYNTHDOCS_CLASSES_HPP_
#define DOCLAB_SYNTHDOCS_CLASSES_HPP_

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "doclab/textio/prompt.hpp"
#include "doclab/util/error.hpp"

namespace doclab::synth {

using text::Modality;

// One document class: its name, per-modality lexicons of class-indicative
// words, and the classes it deliberately shares vocabulary with.
//
// Lexicon discipline: every word in `ocr_unique`/`img_unique` belongs to
// exactly one class; overlap between classes happens only through the
// declared confusable-pair words (and the shared "scientific" name word).
// A unit test enforces this, because the frequency-oracle guarantees on the
// generated data depend on it.
struct ClassSpec {
    std::string name;
    std::vector<std::string> ocr_unique;
    std::vector<std::string> img_unique;
    std::vector<std::string> confusables;

    // Full lexicon for a modality: unique words, the class-name words, and
    // the shared words of every confusable pair this class belongs to.
    std::vector<std::string> lexicon(Modality m) const;
};

struct ConfusablePair {
    std::string a;
    std::string b;
    std::vector<std::string> shared_ocr;
    std::vector<std::string> shared_img;
};

// The 10 in-distribution classes used for training.
inline const std::vector<std::string>& train_class_names() {
    static const std::vector<std::string> names = {
        "letter",        "form",   "advertisement", "scientific report",
        "scientific publication", "specification", "file folder",
        "budget",        "resume", "memo"};
    return names;
}

// The 6 held-out classes, used exclusively for evaluation.
inline const std::vector<std::string>& heldout_class_names() {
    static const std::vector<std::string> names = {"email",   "handwritten",  "news article",
                                                   "invoice", "presentation", "questionnaire"};
    return names;
}

inline const std::vector<std::string>& all_class_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v = train_class_names();
        const auto& h = heldout_class_names();
        v.insert(v.end(), h.begin(), h.end());
        return v;
    }();
    return names;
}

inline const std::vector<ConfusablePair>& confusable_pairs() {
    static const std::vector<ConfusablePair> pairs = {
        {"letter", "email", {"recipient", "regards"}, {"address", "closing"}},
        {"memo", "letter", {"correspondence", "signed"}, {"stationery", "typed"}},
        {"form", "questionnaire", {"checkbox", "blank"}, {"tick", "ruled"}},
        {"budget", "form", {"entry", "box"}, {"grid", "cell"}},
        {"scientific report",
         "scientific publication",
         {"abstract", "hypothesis"},
         {"figure", "caption"}},
        {"budget", "invoice", {"total", "amount"}, {"subtotal", "numeric"}},
        {"advertisement", "presentation", {"promotion", "visual"}, {"logo", "banner"}},
        {"specification", "scientific report", {"technical", "procedure"}, {"diagram", "annotation"}},
    };
    return pairs;
}

inline const std::vector<ClassSpec>& class_specs() {
    static const std::vector<ClassSpec> specs = [] {
        std::vector<ClassSpec> s = {
            {"letter",
             {"dear", "sincerely", "yours", "greeting", "enclosure", "postscript", "addressee",
              "cordially", "salutation", "courteous"},
             {"letterhead", "crest", "indent", "monogram", "seal", "flourish", "datefield",
              "foldline", "inkwell", "waxmark"},
             {}},
            {"form",
             {"applicant", "fill", "field", "checkline", "initial", "notary", "permit",
              "sectioned", "undersigned", "premises"},
             {"stamp", "fieldbox", "underline", "perforation", "duplicate", "legalsize",
              "preprinted", "alignment", "carbonform", "voidmark"},
             {}},
            {"advertisement",
             {"sale", "offer", "discount", "brand", "bargain", "exclusive", "coupon", "slogan",
              "unbeatable", "introductory"},
             {"billboard", "splash", "emblem", "starburst", "mascot", "glossy", "fullpage",
              "tagline", "showcard", "halfpage"},
             {}},
            {"scientific report",
             {"experiment", "results", "methods", "laboratory", "measurement", "observation",
              "finding", "apparatus", "trial", "specimen"},
             {"plot", "axis", "errorbar", "appendix", "heading", "numbering", "chartgrid",
              "legend", "graphpaper", "tabulated"},
             {}},
            {"scientific publication",
             {"citation", "journal", "references", "peer", "volume", "author", "doi",
              "bibliography", "reviewed", "preprint"},
             {"twocolumn", "footnote", "equation", "affiliation", "serif", "typeset",
              "pagination", "issn", "runninghead", "galley"},
             {}},
            {"specification",
             {"requirement", "standard", "tolerance", "dimension", "material", "clause",
              "compliance", "revision", "nominal", "certified"},
             {"blueprint", "drawing", "callout", "partlist", "scalebar", "isometric",
              "dimensionline", "titleblock", "draftsman", "gridline"},
             {}},
            {"file folder",
             {"archive", "index", "record", "category", "storage", "cabinet", "dossier",
              "filing", "retained", "misc"},
             {"tab", "spine", "divider", "jacket", "flap", "cornercut", "edgeworn",
              "labelstrip", "manila", "fastener"},
             {}},
            {"budget",
             {"fiscal", "allocation", "expense", "quarter", "revenue", "forecast", "spending",
              "appropriation", "variance", "outlay"},
             {"ledger", "spreadsheet", "rowtotals", "tabulation", "currency", "figures",
              "columnar", "summation", "bracketed", "carryover"},
             {}},
            {"resume",
             {"experience", "education", "skills", "employment", "career", "qualification",
              "degree", "objective", "proficiency", "internship"},
             {"timeline", "bullets", "contact", "emphasis", "subheading", "compact",
              "chronological", "boldname", "sidebarless", "onepage"},
             {}},
            {"memo",
             {"memorandum", "attention", "reminder", "distribution", "interoffice", "routing",
              "urgent", "notation", "forthwith", "directive"},
             {"typewritten", "initialblock", "stampdate", "briefform", "fromline", "toline",
              "refline", "memohead", "punchholes", "halfsheet"},
             {}},
            {"email",
             {"inbox", "sender", "attachment", "reply", "forwarded", "mailbox", "unread",
              "webmail", "undisclosed", "autoreply"},
             {"thread", "timestamp", "monospace", "quotedtext", "chainview", "inlineimage",
              "footersig", "headerbar", "ellipsized", "avatar"},
             {}},
            {"handwritten",
             {"scribble", "cursive", "pencil", "ink", "jotted", "scrawl", "shorthand",
              "manuscript", "illegible", "margins"},
             {"handwriting", "stroke", "loop", "smudged", "irregular", "penmark", "slantline",
              "baseline", "crossout", "inkblot"},
             {}},
            {"news article",
             {"reporter", "headline", "editor", "press", "coverage", "correspondent",
              "journalism", "newswire", "oped", "syndicated"},
             {"byline", "masthead", "newsprint", "dateline", "photospread", "columninches",
              "leadstory", "foldmark", "jumpline", "gutter"},
             {}},
            {"invoice",
             {"payment", "due", "billing", "quantity", "tax", "vendor", "remit", "balance",
              "netdays", "purchase"},
             {"lineitem", "payable", "watermark", "invoicebox", "duebox", "stamppaid",
              "amountcol", "netbox", "terms", "sequential"},
             {}},
            {"presentation",
             {"slide", "agenda", "overview", "briefing", "deck", "outline", "talkingpoints",
              "keynote", "recap", "takeaway"},
             {"titleslide", "widebullet", "slidefooter", "fullbleed", "centered", "landscape",
              "projector", "slideframe", "darktheme", "transition"},
             {}},
            {"questionnaire",
             {"survey", "question", "answer", "respondent", "rating", "choice", "opinion",
              "poll", "agree", "disagree"},
             {"numbered", "optionrow", "scalebox", "tickmark", "multichoice", "ovalfill",
              "ranking", "responsegrid", "likert", "circled"},
             {}},
        };
        for (const auto& p : confusable_pairs()) {
            for (auto& spec : s) {
                if (spec.name == p.a && std::find(spec.confusables.begin(), spec.confusables.end(),
                                                  p.b) == spec.confusables.end())
                    spec.confusables.push_back(p.b);
                if (spec.name == p.b && std::find(spec.confusables.begin(), spec.confusables.end(),
                                                  p.a) == spec.confusables.end())
                    spec.confusables.push_back(p.a);
            }
        }
        return s;
    }();
    return specs;
}

inline const ClassSpec& class_spec(const std::string& name) {
    for (const auto& s : class_specs())
        if (s.name == name) return s;
    throw UsageError("unknown class: '" + name + "'");
}

inline std::vector<std::string> ClassSpec::lexicon(Modality m) const {
    std::vector<std::string> words = m == Modality::kOcrLike ? ocr_unique : img_unique;
    for (const auto& w : text::split_words(name)) words.push_back(w);
    for (const auto& p : confusable_pairs()) {
        if (p.a != name && p.b != name) continue;
        const auto& shared = m == Modality::kOcrLike ? p.shared_ocr : p.shared_img;
        words.insert(words.end(), shared.begin(), shared.end());
    }
    return words;
}

enum class Style { kVintage, kModern };

inline const char* style_word(Style s) { return s == Style::kVintage ? "vintage" : "modern"; }

inline Style style_from_word(const std::string& w) {
    if (w == "vintage") return Style::kVintage;
    if (w == "modern") return Style::kModern;
    throw InputError("unknown style: '" + w + "'");
}

// Style-dependent noise vocabulary, disjoint from every class lexicon.
inline const std::vector<std::string>& noise_words(Style s) {
    static const std::vector<std::string> vintage = {
        "faded",      "smudge",    "carbon",    "typewriter", "mimeograph", "telex",
        "stain",      "yellowed",  "photocopy", "crease",     "blur",       "grain",
        "halftone",   "stencil",   "ribbon",    "courier",    "onionskin",  "foxing",
        "dogear",     "microfilm", "acetate",   "blotch",     "carbonized", "crinkled",
        "duplicator", "eraser",    "flecked",   "gummed",     "inked",      "jagged",
        "kraft",      "linen",     "mottled",   "newsstand",  "oxidized",   "parchment",
        "quill",      "rustic",    "sepia",     "tattered",   "underwood",  "vellum",
        "warped",     "xerographic", "yellowing", "zigzag",   "brittle",    "charcoal",
        "dusty",      "embossed"};
    static const std::vector<std::string> modern = {
        "digital",    "pdf",        "hyperlink", "webpage",   "pixel",      "vector",
        "unicode",    "browser",    "download",  "screenshot", "responsive", "cloud",
        "metadata",   "qrcode",     "laser",     "inkjet",    "embedded",   "thumbnail",
        "upload",     "render",     "antialiased", "bitmap",  "crisp",      "dithered",
        "exported",   "flattened",  "gradient",  "highres",   "interactive", "jpeg",
        "kerned",     "layered",    "minimal",   "nativefile", "opacity",   "portable",
        "quicksearch", "retina",    "scalable",  "truetype",  "urlbar",     "viewport",
        "whitespace", "xmltagged",  "zoomable",  "borderless", "clickable",  "draggable",
        "encrypted",  "filterable"};
    return s == Style::kVintage ? vintage : modern;
}

// Region markers used by the image-like rendering; also style-dependent.
inline const std::vector<std::string>& layout_words(Style s) {
    static const std::vector<std::string> vintage = {"scanhead", "scanband", "scanfoot",
                                                     "leftcol",  "rightcol", "inset",
                                                     "platen",   "tophalf"};
    static const std::vector<std::string> modern = {"headerzone", "bodyzone", "footerzone",
                                                    "sidepane",   "mainpane", "card",
                                                    "canvas",     "viewport2"};
    return s == Style::kVintage ? vintage : modern;
}

// Words used by the gold-reasoning template.
inline const std::vector<std::string>& reasoning_words() {
    static const std::vector<std::string> words = {"mentions", "and", "typical", "a", "this",
                                                   "so", "looks", "like", "suggests", "contains"};
    return words;
}

// Every plain word the lab can emit; the vocabulary is built from this set.
inline std::set<std::string> universe_words() {
    std::set<std::string> all;
    auto put = [&](const std::vector<std::string>& ws) {
        for (const auto& w : ws)
            for (const auto& piece : text::split_words(w)) all.insert(piece);
    };
    put(text::split_words(text::kPromptHeader));
    put(text::split_words(text::kModalityMarker));
    put(text::split_words(text::kDocumentMarker));
    all.insert(text::kClassSeparator);
    all.insert("image");
    all.insert("ocr");
    for (const auto& c : class_specs()) {
        put(c.ocr_unique);
        put(c.img_unique);
        put(text::split_words(c.name));
    }
    for (const auto& p : confusable_pairs()) {
        put(p.shared_ocr);
        put(p.shared_img);
    }
    put(noise_words(Style::kVintage));
    put(noise_words(Style::kModern));
    put(layout_words(Style::kVintage));
    put(layout_words(Style::kModern));
    put(reasoning_words());
    return all;
}

}  // namespace doclab::synth

#endif  // DOCLAB_SYNTHDOCS_CLASSES_HPP_
