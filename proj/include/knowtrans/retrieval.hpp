#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "knowtrans/corpus.hpp"
#include "knowtrans/softmax.hpp"
#include "knowtrans/text.hpp"

namespace knowtrans {

class RetrievalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Components of the retrieval feature vector.
enum RetrievalFeature : Eigen::Index {
    kIdfCosine = 0,     // cosine of tf-idf token vectors
    kTokenOverlap,      // |Q ∩ K| / sqrt(|Q| |K|) over distinct tokens
    kTrigramJaccard,    // Jaccard of character-trigram sets
    kLabelOverlap,      // number of entity type labels present in both
    kLengthRatio,       // min/max token count
    kSubstring,         // a query segment occurs verbatim in the knowledge, or vice versa
    kBias,
    kRetrievalFeatureDim
};

using FeatureVector = Eigen::Matrix<double, kRetrievalFeatureDim, 1>;
using FeatureRows = Eigen::Matrix<double, Eigen::Dynamic, kRetrievalFeatureDim, Eigen::RowMajor>;

const std::vector<std::string>& retrieval_feature_names();

inline constexpr std::string_view kQuerySeparator = " || ";

/// The (question, candidate answers) pair a knowledge instance is scored against.
struct QueryText {
    std::string question;
    std::vector<std::string> answers;

    std::string rendered() const;
    static QueryText from(const QASample& sample);
};

struct QueryProfile {
    TextProfile whole;
    std::vector<std::vector<std::string>> segments;  // question, then each answer
};

/// Lexical feature extraction against one knowledge base. IDF statistics
/// come from that knowledge base only.
class FeatureExtractor {
public:
    explicit FeatureExtractor(const KnowledgeBase& kb, std::vector<std::string> type_labels = {});

    double idf(const std::string& token) const;
    std::size_t kb_size() const { return kb_profiles_.size(); }

    QueryProfile profile(const QueryText& query) const;
    FeatureVector extract(const QueryProfile& query, const TextProfile& knowledge) const;
    FeatureVector extract(const QueryText& query, const std::string& knowledge) const;
    FeatureVector extract(const QueryProfile& query, std::int64_t kb_id) const;
    // One row per knowledge base entry, in kb_id order.
    FeatureRows extract_all(const QueryProfile& query) const;

private:
    double idf_norm(const TextProfile& p) const;

    std::unordered_map<std::string, double> idf_;
    double unseen_idf_ = 1.0;
    std::set<std::string> labels_;
    std::vector<TextProfile> kb_profiles_;
    std::vector<double> kb_norms_;
};

struct ScorerMetadata {
    std::string trained_on;
    std::size_t epochs = 0;
    std::uint64_t seed = 0;
    double learning_rate = 0.0;
    std::size_t negatives = 0;
    std::vector<std::string> lineage;  // datasets trained on, oldest first

    friend bool operator==(const ScorerMetadata&, const ScorerMetadata&) = default;
};

/// Linear scorer weights over FeatureVector.
struct ScorerParams {
    Eigen::VectorXd weights = Eigen::VectorXd::Zero(kRetrievalFeatureDim);
    ScorerMetadata metadata;

    static ScorerParams zeros() { return {}; }
};

inline constexpr int kScorerParamsVersion = 1;

nlohmann::json to_json(const ScorerParams& params);
ScorerParams scorer_params_from_json(const nlohmann::json& j);
void save_scorer_params(const ScorerParams& params, const std::filesystem::path& path);
ScorerParams load_scorer_params(const std::filesystem::path& path);

// Throws RetrievalError on dimension mismatch or non-finite weights.
void check_scorer_params(const ScorerParams& params);

double score(const ScorerParams& theta, const FeatureVector& features);
double score(const FeatureExtractor& extractor, const ScorerParams& theta, const QueryText& query,
             const std::string& knowledge);

// Softmax of the scores of `candidates`; throws on an empty list.
Eigen::VectorXd probability(const FeatureExtractor& extractor, const ScorerParams& theta,
                            const QueryText& query, const std::vector<std::string>& candidates);

struct RetrievalHyper {
    std::size_t epochs = 20;
    double learning_rate = 0.5;
    std::size_t negatives = 31;  // M negatives per positive
    std::size_t batch_size = 16;
    std::uint64_t seed = 0;
};

struct RetrievalTrainResult {
    ScorerParams params;
    double initial_loss = 0.0;          // mean loss at theta0 on the first epoch's draws
    std::vector<double> epoch_losses;   // mean pre-update batch loss per epoch
};

/// Stochastic gradient ascent on the mean log-likelihood of the annotated
/// knowledge against itself plus M negatives drawn uniformly without
/// replacement from the rest of the knowledge base. Draws and visiting order
/// are reseeded per epoch from `hyper.seed`.
RetrievalTrainResult train_retrieval(const ScorerParams& theta0, const Dataset& train, const KnowledgeBase& kb,
                                     const RetrievalHyper& hyper,
                                     const std::vector<std::string>& type_labels = {});

/// train_retrieval initialised from a pre-trained scorer; the result's
/// lineage extends the pre-trained lineage with the target dataset.
RetrievalTrainResult transfer_finetune(const ScorerParams& theta_pre, const Dataset& target_train,
                                       const KnowledgeBase& target_kb, const RetrievalHyper& hyper,
                                       const std::vector<std::string>& type_labels = {});

// Softmax groups for one epoch of training, exposed for gradient checks.
std::vector<SoftmaxGroup<double>> retrieval_groups(const FeatureExtractor& extractor, const Dataset& train,
                                                   const KnowledgeBase& kb, std::size_t negatives,
                                                   std::uint64_t seed, std::size_t epoch);

struct RetrievalRanking {
    std::string query_id;
    std::vector<std::pair<std::int64_t, double>> ranked;  // score descending, ties by kb_id
    std::optional<std::size_t> gt_rank;                     // 1-based

    std::vector<std::int64_t> top_ids(std::size_t k) const;
};

// Orders kb ids 0..scores.size()-1 by score descending, ties by ascending id.
RetrievalRanking ranking_from_scores(const Eigen::VectorXd& scores, std::optional<std::int64_t> gt_kb_id = {},
                                     std::string query_id = {});

RetrievalRanking rank(const FeatureExtractor& extractor, const ScorerParams& theta, const QueryText& query,
                      std::optional<std::int64_t> gt_kb_id = {}, std::string query_id = {});

/// Ranks every sample of `dataset` against the extractor's knowledge base.
/// gt ids come from each sample's knowledge; samples whose knowledge is not
/// in the base get no gt_rank.
std::vector<RetrievalRanking> rank_dataset(const FeatureExtractor& extractor, const KnowledgeBase& kb,
                                           const ScorerParams& theta, const Dataset& dataset,
                                           std::size_t threads = 1);

nlohmann::json to_json(const RetrievalRanking& ranking, std::size_t top_k);
RetrievalRanking ranking_from_json(const nlohmann::json& j);
void save_rankings(const std::vector<RetrievalRanking>& rankings, std::size_t top_k,
                   const std::filesystem::path& path);
std::vector<RetrievalRanking> load_rankings(const std::filesystem::path& path);

}  // namespace knowtrans
