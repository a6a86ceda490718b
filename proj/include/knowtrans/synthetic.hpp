#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "knowtrans/corpus.hpp"

namespace knowtrans {

/// One question pattern. Placeholders:
///   {type} / {type#2}   an entity of `type` from the gazetteer; the same
///                       placeholder names the same entity in every field
///   {answer}            the correct answer, drawn from `answer_type`
///   {w:key} / {w:key#2} a filler word from lexicon[key]
/// `answer_type` is either an entity type or "w:key".
struct SampleTemplate {
    std::string question;
    std::string knowledge;
    std::string answer_type;
    std::string subtitles;
};

using EntityPools = std::map<std::string, std::vector<std::string>>;

struct GeneratorConfig {
    std::string name = "synthetic";
    std::string domain_tag;
    std::vector<SampleTemplate> templates;
    EntityPools gazetteer;  // entity type -> surface forms
    std::map<std::string, std::vector<std::string>> lexicon;
    std::size_t n_samples = 100;
    std::size_t n_answers = 4;
    // Draw entities without replacement across the corpus, refilling a pool
    // once exhausted.
    bool unique_entities = false;
};

// Throws DataError on an empty template pool, an empty or missing
// gazetteer type, or too few candidates to fill the answer slots.
Dataset generate_synthetic(const GeneratorConfig& config, std::uint64_t seed);

/// Pronounceable single-token names, `per_type` for each type. Surface forms
/// are unique across types and avoid every token in `forbidden`.
EntityPools synthesize_gazetteer(std::uint64_t seed, const std::vector<std::string>& types,
                                 std::size_t per_type,
                                 const std::set<std::string>& forbidden = {});

// Lowercased tokens of every surface form in the pools.
std::set<std::string> gazetteer_tokens(const EntityPools& pools);

/// The bundled template pool (one template per answer type, 16 in all),
/// shared by source and target corpora.
std::vector<SampleTemplate> default_templates();
std::map<std::string, std::vector<std::string>> default_lexicon();

// Entity types referenced by a template pool.
std::vector<std::string> template_entity_types(const std::vector<SampleTemplate>& templates);

}  // namespace knowtrans
