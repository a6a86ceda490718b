#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "knowtrans/augment.hpp"
#include "knowtrans/corpus.hpp"
#include "knowtrans/det.hpp"
#include "knowtrans/metrics.hpp"
#include "knowtrans/reasoning.hpp"
#include "knowtrans/retrieval.hpp"
#include "knowtrans/synthetic.hpp"

namespace knowtrans {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A pipeline stage failed; `stage()` names it.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

struct SyntheticSource {
    std::size_t n_samples = 200;
    std::size_t entities_per_type = 50;
    bool unique_entities = false;
    std::uint64_t seed = 0;  // offsets the experiment seed
};

/// Where one corpus comes from: a JSONL file or the synthetic generator.
struct DatasetSource {
    std::string name;
    std::string path;
    std::optional<SyntheticSource> synthetic;
    std::string gazetteer;  // TSV, used by DET; synthetic corpora bring their own
    std::string features;   // visual features JSONL

    bool configured() const { return !path.empty() || synthetic.has_value(); }
};

enum class LearningMode { direct, direct_both, transfer };
std::string to_string(LearningMode m);
LearningMode parse_learning_mode(const std::string& s);

struct DetSettings {
    std::optional<TagStrategy> strategy;  // nullopt: off
    std::string gazetteer;                // extra TSV merged into the corpus gazetteers
};

struct DaSettings {
    bool enabled = false;
    double alpha = kLexicalSimilarityAlpha;
    std::vector<std::string> pivots{"de"};
    std::vector<AugmentField> fields{AugmentField::question, AugmentField::answers};
    std::string translator = "identity";
};

enum class ReportLayout { retrieval, reasoning };
std::string to_string(ReportLayout l);
ReportLayout parse_report_layout(const std::string& s);

struct ExperimentConfig {
    std::string name = "experiment";
    std::uint64_t seed = 0;
    DatasetSource source;
    DatasetSource target;
    LearningMode learning = LearningMode::direct;
    // "source" or "target"; empty picks the target when one is configured.
    std::string evaluate_on;
    DetSettings det;
    DaSettings da;
    VisionSource vision = VisionSource::none;
    KnowledgeMode knowledge = KnowledgeMode::retrieved;
    RetrievalHyper retrieval;
    ReasoningHyper reasoning;
    std::size_t top_k = kDefaultTopK;  // knowledge texts fed to reasoning
    SplitFractions split;
    std::size_t threads = 1;
    ReportLayout layout = ReportLayout::retrieval;

    // Throws ConfigError for inconsistent settings.
    void validate() const;
    bool evaluates_target() const;
};

/// Parses the YAML experiment file; relative paths resolve against `base_dir`.
ExperimentConfig parse_experiment_config(const std::string& yaml_text,
                                         const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Canonical serialization; keys sorted, every field spelled out.
nlohmann::json to_json(const ExperimentConfig& config);

// FNV-1a 64 of the canonical serialization, as 16 hex digits.
std::string fingerprint(const ExperimentConfig& config);
std::uint64_t fnv1a64(std::string_view bytes);

struct Corpus {
    Dataset dataset;
    Gazetteer gazetteer;
    EntityPools pools;  // synthetic corpora only
};

/// Loads or generates one corpus. Synthetic entity names avoid every token
/// in `forbidden_tokens`, which keeps two generated domains disjoint.
Corpus load_corpus(const DatasetSource& source, std::uint64_t seed,
                   const std::set<std::string>& forbidden_tokens = {});

struct LossTrace {
    double initial = 0.0;
    std::vector<double> epochs;
};

struct Report {
    std::string name;
    std::string fingerprint;
    ReportLayout layout = ReportLayout::retrieval;
    nlohmann::json config;

    std::string source_label;
    std::string target_label;
    std::string learning_label;
    std::string vision_label;
    std::string knowledge_label;
    std::string det_label;
    std::string da_label;

    RetrievalMetrics retrieval;
    double accuracy = 0.0;
    std::optional<LossTrace> pretrain_loss;
    LossTrace retrieval_loss;
    LossTrace reasoning_loss;

    std::size_t n_train = 0;
    std::size_t n_augmented = 0;
    std::size_t n_test = 0;
    std::size_t kb_size = 0;
    double wall_clock_seconds = 0.0;
};

nlohmann::json to_json(const Report& report, bool include_wall_clock = true);
Report report_from_json(const nlohmann::json& j);
void save_report(const Report& report, const std::filesystem::path& path);
Report load_report(const std::filesystem::path& path);

/// Runs ingest, DET, DA, (pre-training,) retrieval training, ranking,
/// reasoning training and evaluation. With a non-empty `work_dir` each
/// stage's artifacts are written there as they are produced, so a failed
/// run keeps everything up to the failing stage. Stage failures surface as
/// StageError.
Report run_experiment(const ExperimentConfig& config, const std::filesystem::path& work_dir = {},
                      std::ostream* log = nullptr);

/// Text table: Source/Target/Learning/R@1/R@5/R@10/MR for the retrieval
/// layout or Vision/Learning/Knowledge/DET/DA/Accuracy for reasoning.
/// Rows are ordered by fingerprint. Throws ConfigError when a report has
/// another layout.
std::string emit_report_table(std::vector<Report> reports, ReportLayout layout);

}  // namespace knowtrans
