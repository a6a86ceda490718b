#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "knowtrans/corpus.hpp"

namespace knowtrans {

class TranslatorError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Batch translation backend. Both calls are 1:1 and order-preserving.
class Translator {
public:
    virtual ~Translator() = default;
    virtual std::vector<std::string> translate(const std::vector<std::string>& texts,
                                               const std::string& pivot) = 0;
    virtual std::vector<std::string> back_translate(const std::vector<std::string>& texts,
                                                    const std::string& pivot) = 0;
};

class IdentityTranslator final : public Translator {
public:
    std::vector<std::string> translate(const std::vector<std::string>& texts, const std::string&) override {
        return texts;
    }
    std::vector<std::string> back_translate(const std::vector<std::string>& texts,
                                            const std::string&) override {
        return texts;
    }
};

/// Wraps two per-text functions; handy for tests and scripted mocks.
class FunctionTranslator final : public Translator {
public:
    using Fn = std::function<std::string(const std::string&, const std::string&)>;
    FunctionTranslator(Fn forward, Fn backward) : forward_(std::move(forward)), backward_(std::move(backward)) {}

    std::vector<std::string> translate(const std::vector<std::string>& texts, const std::string& pivot) override;
    std::vector<std::string> back_translate(const std::vector<std::string>& texts,
                                            const std::string& pivot) override;

private:
    Fn forward_;
    Fn backward_;
};

/// Deterministic mock driven by a phrase table. Each TSV row is
/// `source<TAB>pivot[<TAB>back]`: translate rewrites source phrases to pivot
/// phrases and back_translate rewrites pivot phrases to `back` (or to the
/// source phrase when the third column is absent). Matching is
/// case-sensitive, longest phrase first, at word boundaries; text outside
/// the table passes through unchanged.
class PhraseTableTranslator final : public Translator {
public:
    void add(const std::string& source, const std::string& pivot, const std::string& back = {});

    std::vector<std::string> translate(const std::vector<std::string>& texts, const std::string& pivot) override;
    std::vector<std::string> back_translate(const std::vector<std::string>& texts,
                                            const std::string& pivot) override;

    std::string translate_one(const std::string& text) const;
    std::string back_translate_one(const std::string& text) const;

private:
    std::map<std::string, std::string> forward_;
    std::map<std::string, std::string> backward_;
};

PhraseTableTranslator load_phrase_table(const std::filesystem::path& path);

/// Client for a translation service exposing POST /translate and
/// POST /back_translate with body {"texts": [...], "pivot": "de"} and
/// response {"texts": [...]}.
class HttpTranslator final : public Translator {
public:
    explicit HttpTranslator(std::string base_url, int timeout_seconds = 30);

    std::vector<std::string> translate(const std::vector<std::string>& texts, const std::string& pivot) override;
    std::vector<std::string> back_translate(const std::vector<std::string>& texts,
                                            const std::string& pivot) override;

private:
    std::vector<std::string> call(const std::string& endpoint, const std::vector<std::string>& texts,
                                  const std::string& pivot);

    std::string host_;
    std::string prefix_;
    int timeout_seconds_;
};

// Environment variable that, when set, replaces the URL of any
// "http:<url>" translator spec.
inline constexpr const char* kTranslatorUrlEnv = "KNOWTRANS_TRANSLATOR_URL";

// "identity", "mock:<phrase-table.tsv>" or "http:<base-url>".
std::unique_ptr<Translator> make_translator(const std::string& spec);

struct BackTranslation {
    std::string pivot_text;
    std::string text;
};

BackTranslation back_translate(const std::string& text, Translator& translator,
                               const std::string& pivot = "de");

/// Symmetric similarity in [0, 1] with similarity(s, s) = 1.
using SimilarityFn = std::function<double(std::string_view, std::string_view)>;

// Character-trigram count cosine; two empty strings score 1.
double similarity(std::string_view a, std::string_view b);

// Threshold for a neural sentence-similarity backend.
inline constexpr double kNeuralSimilarityAlpha = 0.998;
// Default threshold for the bundled trigram similarity.
inline constexpr double kLexicalSimilarityAlpha = 0.95;

enum class AugmentField { question, answers, knowledge };

struct AugmentConfig {
    double alpha = kLexicalSimilarityAlpha;
    std::vector<AugmentField> fields{AugmentField::question, AugmentField::answers};
    std::vector<std::string> pivot_languages{"de"};
    std::size_t batch_size = 64;     // samples per backend request
    std::size_t max_in_flight = 4;   // concurrent backend requests
    std::ostream* pivot_log = nullptr;  // receives sample_id, field and pivot text
};

// "q,a,k" / "question,answers,knowledge" style list.
std::vector<AugmentField> parse_augment_fields(const std::string& list);

struct AugmentPassStats {
    std::string pivot;
    std::size_t candidates = 0;
    std::size_t removed = 0;
    std::size_t survivors = 0;
};

struct AugmentResult {
    Dataset dataset;
    std::vector<AugmentPassStats> passes;
};

/// Back-translates the selected fields of every sample once per pivot
/// language. A candidate is dropped when every augmented text scores
/// >= alpha against its source text; survivors are appended after the
/// originals, ordered by source sample_id then pivot.
/// Throws DataError for a non-training split or invalid config and
/// TranslatorError (with partial-progress information) on backend failure.
AugmentResult augment_training_set(const Dataset& train, Translator& translator,
                                   const AugmentConfig& config,
                                   const SimilarityFn& sim = similarity);

}  // namespace knowtrans
