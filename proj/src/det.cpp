#include "knowtrans/det.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "knowtrans/text.hpp"

namespace knowtrans {

namespace {

bool is_word_char(unsigned char c) {
    return std::isalnum(c) != 0 || c >= 0x80;
}

std::string lower_ascii(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string_view first_word(std::string_view s) {
    std::size_t n = 0;
    while (n < s.size() && is_word_char(static_cast<unsigned char>(s[n]))) ++n;
    return s.substr(0, n);
}

bool is_closing_punct(char c) {
    return c == ',' || c == '.' || c == '?' || c == '!' || c == ';' || c == ':';
}

bool followed_by_possessive(const std::string& text, std::size_t end) {
    if (text.compare(end, 2, "'s") == 0) return true;
    return text.compare(end, 4, "\xE2\x80\x99s") == 0;  // U+2019 right single quote
}

std::string article_for(const std::string& label) {
    if (label.empty()) return "a";
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(label[0])));
    return (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') ? "an" : "a";
}

}  // namespace

std::string to_string(TagStrategy strategy) {
    switch (strategy) {
        case TagStrategy::appositive: return "appositive";
        case TagStrategy::mask_out: return "mask-out";
        case TagStrategy::hyphen: return "hyphen";
    }
    return "appositive";
}

TagStrategy parse_tag_strategy(const std::string& s) {
    if (s == "appositive") return TagStrategy::appositive;
    if (s == "mask-out" || s == "mask_out") return TagStrategy::mask_out;
    if (s == "hyphen") return TagStrategy::hyphen;
    throw TagError("unknown tagging strategy '" + s + "'");
}

const std::vector<std::string>& default_entity_labels() {
    static const std::vector<std::string> labels{
        "person",   "norp",     "facility", "organisation", "gpe",     "location",
        "product",  "event",    "artwork",  "law",          "language", "date",
        "time",     "percent",  "money",    "quantity",     "ordinal", "cardinal"};
    return labels;
}

// ---------------------------------------------------------------------------
// Gazetteer

std::string Gazetteer::key(std::string_view surface) const {
    return case_sensitive_ ? std::string(surface) : lower_ascii(surface);
}

void Gazetteer::add(const std::string& surface, const std::string& entity_type) {
    if (surface.empty()) throw TagError("gazetteer: empty surface form");
    if (entity_type.empty()) throw TagError("gazetteer: empty type label for '" + surface + "'");
    if (!is_word_char(static_cast<unsigned char>(surface.front())) ||
        !is_word_char(static_cast<unsigned char>(surface.back()))) {
        throw TagError("gazetteer: surface form '" + surface + "' must start and end with a word character");
    }
    const std::string k = key(surface);
    if (auto it = types_.find(k); it != types_.end()) {
        if (it->second.type != entity_type) {
            throw TagError("gazetteer: '" + surface + "' mapped to both '" + it->second.type +
                           "' and '" + entity_type + "'");
        }
        return;
    }
    types_.emplace(k, Entry{surface, entity_type});
    auto& bucket = by_first_word_[key(first_word(surface))];
    bucket.push_back(k);
    std::stable_sort(bucket.begin(), bucket.end(),
                     [](const std::string& a, const std::string& b) { return a.size() > b.size(); });
}

const std::string* Gazetteer::type_of(const std::string& surface) const {
    auto it = types_.find(key(surface));
    return it == types_.end() ? nullptr : &it->second.type;
}

std::set<std::string> Gazetteer::labels() const {
    std::set<std::string> out;
    for (const auto& [_, e] : types_) out.insert(e.type);
    return out;
}

std::map<std::string, std::string> Gazetteer::entries() const {
    std::map<std::string, std::string> out;
    for (const auto& [_, e] : types_) out.emplace(e.surface, e.type);
    return out;
}

const std::vector<std::string>* Gazetteer::candidates(const std::string& word) const {
    auto it = by_first_word_.find(key(word));
    return it == by_first_word_.end() ? nullptr : &it->second;
}

Gazetteer parse_gazetteer(std::istream& in, bool case_sensitive,
                          const std::set<std::string>& allowed_labels) {
    Gazetteer g(case_sensitive);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (normalize_text(line).empty() || line.front() == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw TagError("gazetteer line " + std::to_string(line_no) + ": expected surface<TAB>type");
        }
        const std::string surface = line.substr(0, tab);
        const std::string label = line.substr(tab + 1);
        if (!allowed_labels.empty() && !allowed_labels.count(label)) {
            throw TagError("gazetteer line " + std::to_string(line_no) + ": unknown type label '" + label + "'");
        }
        try {
            g.add(surface, label);
        } catch (const TagError& e) {
            throw TagError("gazetteer line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return g;
}

Gazetteer load_gazetteer(const std::filesystem::path& path, bool case_sensitive,
                         const std::set<std::string>& allowed_labels) {
    std::ifstream in(path);
    if (!in) throw TagError("cannot open gazetteer " + path.string());
    return parse_gazetteer(in, case_sensitive, allowed_labels);
}

void save_gazetteer(const Gazetteer& gazetteer, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw TagError("cannot write gazetteer " + path.string());
    for (const auto& [surface, type] : gazetteer.entries()) out << surface << '\t' << type << '\n';
}

// ---------------------------------------------------------------------------
// Recognition

std::vector<EntitySpan> recognize_entities(std::string_view text, const Gazetteer& gazetteer) {
    std::vector<EntitySpan> spans;
    if (gazetteer.empty()) return spans;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        if (!is_word_char(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        const std::string_view word = first_word(text.substr(i));
        bool matched = false;
        if (const auto* cands = gazetteer.candidates(std::string(word))) {
            for (const auto& cand_key : *cands) {
                const std::size_t len = cand_key.size();
                if (i + len > n) continue;
                if (gazetteer.key(text.substr(i, len)) != cand_key) continue;
                if (i + len < n && is_word_char(static_cast<unsigned char>(text[i + len]))) continue;
                EntitySpan span;
                span.start = i;
                span.end = i + len;
                span.surface = std::string(text.substr(i, len));
                span.entity_type = *gazetteer.type_of(span.surface);
                spans.push_back(std::move(span));
                i += len;
                matched = true;
                break;
            }
        }
        if (!matched) i += word.size();
    }
    return spans;
}

std::vector<EntitySpan> GazetteerRecognizer::recognize(std::string_view text) const {
    return recognize_entities(text, gazetteer_);
}

// ---------------------------------------------------------------------------
// Tagging

std::string TaggedText::strip_insertions() const {
    std::string out;
    std::size_t last = 0;
    for (const auto& ins : insertions) {
        out.append(rendered, last, ins.pos - last);
        last = ins.pos + ins.length;
    }
    out.append(rendered, last, std::string::npos);
    return out;
}

TaggedText tag_text(const std::string& text, std::vector<EntitySpan> spans, TagStrategy strategy) {
    std::sort(spans.begin(), spans.end(),
              [](const EntitySpan& a, const EntitySpan& b) { return a.start < b.start; });
    std::size_t prev_end = 0;
    for (const auto& s : spans) {
        if (s.start >= s.end || s.end > text.size()) {
            throw TagError("invalid span offsets [" + std::to_string(s.start) + ", " +
                           std::to_string(s.end) + ") for text of length " + std::to_string(text.size()));
        }
        if (s.start < prev_end) throw TagError("overlapping entity spans");
        if (text.compare(s.start, s.end - s.start, s.surface) != 0) {
            throw TagError("span surface '" + s.surface + "' does not match the text");
        }
        prev_end = s.end;
    }

    TaggedText out;
    out.original = text;
    out.strategy = strategy;
    out.applied.assign(spans.size(), false);

    std::set<std::string> seen_surfaces;
    std::size_t last = 0;
    for (std::size_t k = 0; k < spans.size(); ++k) {
        const auto& s = spans[k];
        if (strategy != TagStrategy::mask_out) {
            if (followed_by_possessive(text, s.end) || seen_surfaces.count(s.surface)) continue;
            seen_surfaces.insert(s.surface);
        }
        out.applied[k] = true;

        if (strategy == TagStrategy::mask_out) {
            out.rendered.append(text, last, s.start - last);
            out.rendered.append(s.entity_type);
            last = s.end;
            continue;
        }

        out.rendered.append(text, last, s.end - last);
        last = s.end;
        std::string inserted = strategy == TagStrategy::appositive
                                   ? ", " + article_for(s.entity_type) + " " + s.entity_type
                                   : "-" + s.entity_type;
        if (s.end < text.size() && !is_closing_punct(text[s.end])) inserted += ",";
        out.insertions.push_back({out.rendered.size(), inserted.size()});
        out.rendered += inserted;
    }
    out.rendered.append(text, last, std::string::npos);
    out.spans = std::move(spans);
    return out;
}

TaggedText tag(const std::string& text, const EntityRecognizer& recognizer, TagStrategy strategy) {
    return tag_text(text, recognizer.recognize(text), strategy);
}

QASample tag_sample(const QASample& sample, const EntityRecognizer& recognizer, TagStrategy strategy) {
    QASample out = sample;
    out.question = tag(sample.question, recognizer, strategy).rendered;
    for (auto& a : out.answers) a = tag(a, recognizer, strategy).rendered;
    out.knowledge = tag(sample.knowledge, recognizer, strategy).rendered;
    return out;
}

QASample tag_sample(const QASample& sample, const Gazetteer& gazetteer, TagStrategy strategy) {
    return tag_sample(sample, GazetteerRecognizer(gazetteer), strategy);
}

Dataset tag_dataset(const Dataset& dataset, const EntityRecognizer& recognizer, TagStrategy strategy) {
    Dataset out = dataset;
    for (auto& s : out.samples) s = tag_sample(s, recognizer, strategy);
    return out;
}

}  // namespace knowtrans
