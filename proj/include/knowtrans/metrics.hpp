#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "knowtrans/corpus.hpp"
#include "knowtrans/reasoning.hpp"
#include "knowtrans/retrieval.hpp"

namespace knowtrans {

class MetricError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Fraction of rankings whose gt_rank <= k. Throws on k = 0, an empty list
// or a ranking without gt_rank.
double recall_at_k(const std::vector<RetrievalRanking>& rankings, std::size_t k);
double recall_at_k(const std::vector<std::size_t>& gt_ranks, std::size_t k);

// Lower median of the gt ranks.
std::size_t median_rank(const std::vector<RetrievalRanking>& rankings);
std::size_t median_rank(std::vector<std::size_t> gt_ranks);

struct RetrievalMetrics {
    std::map<std::size_t, double> r_at;  // k -> R@k for k in {1, 5, 10}
    std::size_t mr = 0;
    std::size_t n_queries = 0;
};

RetrievalMetrics retrieval_metrics(const std::vector<RetrievalRanking>& rankings);
nlohmann::json to_json(const RetrievalMetrics& m);
RetrievalMetrics retrieval_metrics_from_json(const nlohmann::json& j);

double accuracy(const std::vector<Prediction>& predictions);

/// English stopwords (the NLTK list) plus "n" and "ah"; the tokenizer
/// splits "n't" into "n" and "t".
const std::set<std::string>& default_stopwords();

struct FieldLengths {
    double question = 0.0;
    double correct_answer = 0.0;
    double wrong_answer = 0.0;
    double subtitles = 0.0;
    double knowledge = 0.0;
};

struct CorpusStats {
    std::size_t n_samples = 0;
    std::map<std::string, std::size_t> question_types;  // first token, lowercased
    std::map<std::string, std::size_t> vocabulary;      // questions, answers and knowledge
    FieldLengths average_tokens;

    // Vocabulary entries by count descending, then token.
    std::vector<std::pair<std::string, std::size_t>> top_vocabulary(std::size_t n) const;
};

CorpusStats corpus_stats(const Dataset& dataset, const std::set<std::string>& stopwords = default_stopwords());
nlohmann::json to_json(const CorpusStats& stats, std::size_t top_n = 50);

}  // namespace knowtrans
