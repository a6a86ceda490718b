#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "knowtrans/corpus.hpp"
#include "knowtrans/retrieval.hpp"
#include "knowtrans/softmax.hpp"

namespace knowtrans {

class ReasoningError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDefaultTopK = 5;

// Lexical block between an answer and one other text:
// [distinct-token overlap, trigram Jaccard, fraction of answer tokens present].
inline constexpr std::size_t kPairBlockDim = 3;
// Three pair blocks (knowledge, question, subtitles), top-1 retrieval score,
// candidate length.
inline constexpr std::size_t kEncodedDim = 3 * kPairBlockDim + 2;

Eigen::Vector3d pair_block(const TextProfile& answer, const TextProfile& other);

struct EncodedCandidate {
    Eigen::VectorXd u_vec;
    std::string answer;  // kept for the caption channel
};

/// Encodes one candidate answer. `knowledge_topk` must hold exactly `top_k`
/// texts (empty strings stand in for missing knowledge); they are joined in
/// rank order before feature extraction.
EncodedCandidate encode_candidate(const std::string& question, const std::string& answer,
                                  const std::vector<std::string>& knowledge_topk, const std::string& subtitles,
                                  double retrieval_score, std::size_t top_k = kDefaultTopK);

enum class VisionSource { none, image, facial, caption };
std::string to_string(VisionSource v);
VisionSource parse_vision_source(const std::string& s);

/// Sizes of the concatenated fusion input. Every visual channel with a
/// non-zero dimension is followed by one mask flag (1 when the channel is
/// missing for the clip).
struct FusionLayout {
    std::size_t d_u = kEncodedDim;
    std::size_t d_img = 0;
    std::size_t d_face = 0;
    std::size_t d_cap = 0;

    std::size_t total() const;

    friend bool operator==(const FusionLayout&, const FusionLayout&) = default;
};

// Layout for a vision source; image/facial dimensions come from `table`.
FusionLayout make_layout(VisionSource vision, const VisualFeatureTable* table = nullptr);

struct ReasonerParams {
    FusionLayout layout;
    Eigen::VectorXd weights;
    double bias = 0.0;

    static ReasonerParams zeros(const FusionLayout& layout);
};

inline constexpr int kReasonerParamsVersion = 1;

nlohmann::json to_json(const ReasonerParams& params);
ReasonerParams reasoner_params_from_json(const nlohmann::json& j);
void save_reasoner_params(const ReasonerParams& params, const std::filesystem::path& path);
ReasonerParams load_reasoner_params(const std::filesystem::path& path);
void check_reasoner_params(const ReasonerParams& params);

// concat(u_vec, image block, facial block, caption block) for `layout`;
// `v` may be null when the clip has no features.
Eigen::VectorXd fusion_input(const EncodedCandidate& u, const VisualFeatures* v, const FusionLayout& layout);

double fuse_and_score(const EncodedCandidate& u, const VisualFeatures* v, const ReasonerParams& params);

enum class KnowledgeMode { retrieved, gt, none };
std::string to_string(KnowledgeMode m);
KnowledgeMode parse_knowledge_mode(const std::string& s);

struct Prediction {
    std::string sample_id;
    std::vector<double> scores;
    std::size_t predicted_index = 0;
    std::size_t correct_index = 0;
    bool correct = false;
};

// Index of the largest score, lowest index on ties.
std::size_t argmax_lowest(const std::vector<double>& scores);

/// The knowledge list fed to every candidate of `sample`: the top-K
/// retrieved texts, the annotated knowledge followed by K-1 empty strings,
/// or K empty strings.
std::vector<std::string> knowledge_context(const QASample& sample, const RetrievalRanking* ranking,
                                           const KnowledgeBase* kb, KnowledgeMode mode, std::size_t top_k);

/// Scores all candidates of `sample` against the same knowledge list.
/// Throws when `feats` belongs to another clip or the ranking to another
/// query, or when retrieved mode lacks a ranking.
Prediction predict(const QASample& sample, const RetrievalRanking* ranking, const KnowledgeBase* kb,
                   const VisualFeatures* feats, const ReasonerParams& params,
                   KnowledgeMode mode = KnowledgeMode::retrieved, std::size_t top_k = kDefaultTopK);

/// Everything besides the samples that reasoning reads.
struct ReasoningInputs {
    KnowledgeMode knowledge = KnowledgeMode::retrieved;
    std::size_t top_k = kDefaultTopK;
    const KnowledgeBase* kb = nullptr;
    const std::vector<RetrievalRanking>* rankings = nullptr;  // matched by query_id
    const VisualFeatureTable* features = nullptr;
    VisionSource vision = VisionSource::none;
};

std::vector<Prediction> predict_dataset(const Dataset& dataset, const ReasonerParams& params,
                                        const ReasoningInputs& inputs);

struct ReasoningHyper {
    std::size_t epochs = 30;
    double learning_rate = 1.0;
    std::size_t batch_size = 16;
    std::uint64_t seed = 0;
};

struct ReasoningTrainResult {
    ReasonerParams params;
    double initial_loss = 0.0;
    std::vector<double> epoch_losses;  // mean pre-update batch loss per epoch
};

/// One N_a-way softmax group per sample; each row is the fusion input of a
/// candidate with a trailing 1 for the bias. Throws when a sample lacks a
/// ranking (retrieved mode) or visual features (image/facial vision).
std::vector<SoftmaxGroup<double>> reasoning_groups(const Dataset& dataset, const FusionLayout& layout,
                                                   const ReasoningInputs& inputs);

/// Mini-batch gradient descent on the mean cross-entropy; sample order is
/// reshuffled each epoch from `hyper.seed`.
ReasoningTrainResult train_reasoning(const ReasonerParams& params0, const Dataset& train,
                                     const ReasoningInputs& inputs, const ReasoningHyper& hyper);

}  // namespace knowtrans
