#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>
#include "json.hpp"

namespace knowtrans {

/// Raised for malformed input files and violated dataset invariants.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Origin { original, augmented };
enum class Split { train, val, test };

std::string to_string(Origin origin);
std::string to_string(Split split);
Origin parse_origin(const std::string& s);
Split parse_split(const std::string& s);

struct QASample {
    std::string sample_id;
    std::string clip_id;
    std::string question;
    std::vector<std::string> answers;
    int correct_index = 0;
    std::string knowledge;
    std::string subtitles;
    Origin origin = Origin::original;

    const std::string& correct_answer() const { return answers.at(static_cast<std::size_t>(correct_index)); }

    friend bool operator==(const QASample&, const QASample&) = default;
};

struct Dataset {
    std::string name;
    Split split = Split::train;
    std::vector<QASample> samples;
    std::string domain_tag;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

nlohmann::json to_json(const QASample& sample);
QASample sample_from_json(const nlohmann::json& j);

// Checks the per-sample and per-dataset invariants; throws DataError.
void validate_sample(const QASample& sample, std::size_t expected_n_answers);
void validate_dataset(const Dataset& dataset);

/// Reads the JSONL dataset format. Errors cite 1-based line numbers.
Dataset load_dataset(const std::filesystem::path& path, std::size_t expected_n_answers = 4,
                     std::optional<std::string> name = std::nullopt, Split split = Split::train);
Dataset parse_dataset(std::istream& in, std::size_t expected_n_answers, std::string name,
                      Split split = Split::train);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
void write_dataset(const Dataset& dataset, std::ostream& out);

struct KbEntry {
    std::int64_t kb_id = 0;
    std::string text;
};

/// Deduplicated knowledge instances; ids are dense 0..size()-1.
class KnowledgeBase {
public:
    KnowledgeBase() = default;

    // Adds `text` unless an entry with the same normalized text exists.
    // Returns the id of the (new or existing) entry.
    std::int64_t add(const std::string& text);

    std::optional<std::int64_t> find(const std::string& text) const;
    const KbEntry& at(std::int64_t kb_id) const;
    const std::vector<KbEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    std::string source_dataset;

private:
    std::vector<KbEntry> entries_;
    std::unordered_map<std::string, std::int64_t> index_;
};

// Whitespace collapse plus lowercasing; the dedup key of a KB entry.
std::string kb_key(const std::string& text);

struct KbBuild {
    KnowledgeBase kb;
    // Per dataset, per sample: kb_id of the sample's knowledge, or -1 when empty.
    std::vector<std::vector<std::int64_t>> sample_kb_ids;
};

KbBuild build_kb(const std::vector<const Dataset*>& datasets, std::string source_name = {});
KbBuild build_kb(const Dataset& dataset);

void save_kb(const KnowledgeBase& kb, const std::filesystem::path& path);
KnowledgeBase load_kb(const std::filesystem::path& path);

struct SplitFractions {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;
};

struct DatasetSplits {
    Dataset train;
    Dataset val;
    Dataset test;
};

// Largest-remainder apportionment of the sizes (ties go to train, then val),
// then a seeded shuffle assigns samples.
std::array<std::size_t, 3> apportion(std::size_t n, const SplitFractions& fractions);
DatasetSplits split_dataset(const Dataset& dataset, const SplitFractions& fractions,
                            std::uint64_t seed);

struct VisualFeatures {
    std::string clip_id;
    Eigen::VectorXd image_vec;
    Eigen::VectorXd facial_vec;
    std::string caption_text;
};

/// Precomputed per-clip visual features. The file is JSONL: a header
/// record {"header": true, "d_img": n, "d_face": m} followed by one record
/// per clip.
struct VisualFeatureTable {
    std::size_t d_img = 0;
    std::size_t d_face = 0;
    std::map<std::string, VisualFeatures> clips;

    const VisualFeatures* find(const std::string& clip_id) const;
};

VisualFeatureTable load_visual_features(const std::filesystem::path& path);
void save_visual_features(const VisualFeatureTable& table, const std::filesystem::path& path);

}  // namespace knowtrans
