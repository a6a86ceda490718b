#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "knowtrans/corpus.hpp"

namespace knowtrans {

class TagError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class TagStrategy { appositive, mask_out, hyphen };

std::string to_string(TagStrategy strategy);
// Accepts "appositive", "mask-out"/"mask_out", "hyphen".
TagStrategy parse_tag_strategy(const std::string& s);

/// Eighteen type labels in the style of common NER tag sets, spelled as
/// single lowercase words.
const std::vector<std::string>& default_entity_labels();

struct EntitySpan {
    std::size_t start = 0;
    std::size_t end = 0;  // exclusive
    std::string surface;
    std::string entity_type;

    friend bool operator==(const EntitySpan&, const EntitySpan&) = default;
};

/// Surface form -> entity type lookup.
class Gazetteer {
public:
    explicit Gazetteer(bool case_sensitive = true) : case_sensitive_(case_sensitive) {}

    // Throws TagError on an empty surface form or a conflicting type.
    void add(const std::string& surface, const std::string& entity_type);

    bool case_sensitive() const { return case_sensitive_; }
    bool empty() const { return types_.empty(); }
    std::size_t size() const { return types_.size(); }
    const std::string* type_of(const std::string& surface) const;
    std::set<std::string> labels() const;
    // Surface form -> type, as added.
    std::map<std::string, std::string> entries() const;

    // Candidate surface forms whose first word is `first_word`, longest first.
    const std::vector<std::string>* candidates(const std::string& first_word) const;

    std::string key(std::string_view surface) const;

private:
    bool case_sensitive_;
    struct Entry {
        std::string surface;
        std::string type;
    };
    std::unordered_map<std::string, Entry> types_;  // keyed by key(surface)
    std::unordered_map<std::string, std::vector<std::string>> by_first_word_;
};

// TSV of `surface<TAB>type_label`; '#' comments and blank lines ignored.
// A non-empty `allowed_labels` rejects any other label.
Gazetteer load_gazetteer(const std::filesystem::path& path, bool case_sensitive = true,
                         const std::set<std::string>& allowed_labels = {});
Gazetteer parse_gazetteer(std::istream& in, bool case_sensitive = true,
                          const std::set<std::string>& allowed_labels = {});
void save_gazetteer(const Gazetteer& gazetteer, const std::filesystem::path& path);

/// Pluggable recognizer; the bundled implementation matches a gazetteer.
class EntityRecognizer {
public:
    virtual ~EntityRecognizer() = default;
    virtual std::vector<EntitySpan> recognize(std::string_view text) const = 0;
};

class GazetteerRecognizer final : public EntityRecognizer {
public:
    explicit GazetteerRecognizer(Gazetteer gazetteer) : gazetteer_(std::move(gazetteer)) {}
    std::vector<EntitySpan> recognize(std::string_view text) const override;
    const Gazetteer& gazetteer() const { return gazetteer_; }

private:
    Gazetteer gazetteer_;
};

// Longest match, left to right, non-overlapping, at word boundaries.
std::vector<EntitySpan> recognize_entities(std::string_view text, const Gazetteer& gazetteer);

struct Insertion {
    std::size_t pos = 0;  // offset in the rendered text
    std::size_t length = 0;
};

struct TaggedText {
    std::string original;
    std::vector<EntitySpan> spans;
    std::vector<bool> applied;  // per span: whether the strategy rewrote it
    TagStrategy strategy = TagStrategy::appositive;
    std::string rendered;
    std::vector<Insertion> insertions;  // empty for mask_out

    // Rendered text with every insertion removed: the original text for
    // appositive/hyphen, the masked text for mask_out.
    std::string strip_insertions() const;
};

// Throws TagError for spans outside the text, overlapping, or whose surface
// does not match the text.
TaggedText tag_text(const std::string& text, std::vector<EntitySpan> spans, TagStrategy strategy);

TaggedText tag(const std::string& text, const EntityRecognizer& recognizer, TagStrategy strategy);

QASample tag_sample(const QASample& sample, const EntityRecognizer& recognizer, TagStrategy strategy);
QASample tag_sample(const QASample& sample, const Gazetteer& gazetteer, TagStrategy strategy);
Dataset tag_dataset(const Dataset& dataset, const EntityRecognizer& recognizer, TagStrategy strategy);

}  // namespace knowtrans
