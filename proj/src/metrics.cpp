#include "knowtrans/metrics.hpp"

#include <algorithm>

#include "knowtrans/text.hpp"

namespace knowtrans {

using nlohmann::json;

namespace {

std::vector<std::size_t> gt_ranks_of(const std::vector<RetrievalRanking>& rankings) {
    std::vector<std::size_t> ranks;
    ranks.reserve(rankings.size());
    for (const auto& r : rankings) {
        if (!r.gt_rank) throw MetricError("ranking '" + r.query_id + "' has no gt_rank");
        ranks.push_back(*r.gt_rank);
    }
    return ranks;
}

}  // namespace

double recall_at_k(const std::vector<std::size_t>& gt_ranks, std::size_t k) {
    if (k == 0) throw MetricError("recall_at_k: k must be >= 1");
    if (gt_ranks.empty()) throw MetricError("recall_at_k: no rankings");
    const auto hits = std::count_if(gt_ranks.begin(), gt_ranks.end(), [k](std::size_t r) { return r <= k; });
    return static_cast<double>(hits) / static_cast<double>(gt_ranks.size());
}

double recall_at_k(const std::vector<RetrievalRanking>& rankings, std::size_t k) {
    return recall_at_k(gt_ranks_of(rankings), k);
}

std::size_t median_rank(std::vector<std::size_t> gt_ranks) {
    if (gt_ranks.empty()) throw MetricError("median_rank: no rankings");
    const std::size_t mid = (gt_ranks.size() - 1) / 2;
    std::nth_element(gt_ranks.begin(), gt_ranks.begin() + static_cast<std::ptrdiff_t>(mid), gt_ranks.end());
    return gt_ranks[mid];
}

std::size_t median_rank(const std::vector<RetrievalRanking>& rankings) {
    return median_rank(gt_ranks_of(rankings));
}

RetrievalMetrics retrieval_metrics(const std::vector<RetrievalRanking>& rankings) {
    const auto ranks = gt_ranks_of(rankings);
    RetrievalMetrics m;
    for (std::size_t k : {1, 5, 10}) m.r_at[k] = recall_at_k(ranks, k);
    m.mr = median_rank(ranks);
    m.n_queries = ranks.size();
    return m;
}

json to_json(const RetrievalMetrics& m) {
    json r = json::object();
    for (const auto& [k, v] : m.r_at) r[std::to_string(k)] = v;
    return json{{"r_at", r}, {"mr", m.mr}, {"n_queries", m.n_queries}};
}

RetrievalMetrics retrieval_metrics_from_json(const json& j) {
    RetrievalMetrics m;
    for (const auto& [k, v] : j.at("r_at").items()) m.r_at[std::stoul(k)] = v.get<double>();
    m.mr = j.at("mr").get<std::size_t>();
    m.n_queries = j.at("n_queries").get<std::size_t>();
    return m;
}

double accuracy(const std::vector<Prediction>& predictions) {
    if (predictions.empty()) throw MetricError("accuracy: no predictions");
    const auto hits = std::count_if(predictions.begin(), predictions.end(),
                                    [](const Prediction& p) { return p.predicted_index == p.correct_index; });
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

const std::set<std::string>& default_stopwords() {
    static const std::set<std::string> words{
        "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "you're", "you've", "you'll",
        "you'd", "your", "yours", "yourself", "yourselves", "he", "him", "his", "himself", "she", "she's",
        "her", "hers", "herself", "it", "it's", "its", "itself", "they", "them", "their", "theirs",
        "themselves", "what", "which", "who", "whom", "this", "that", "that'll", "these", "those", "am",
        "is", "are", "was", "were", "be", "been", "being", "have", "has", "had", "having", "do", "does",
        "did", "doing", "a", "an", "the", "and", "but", "if", "or", "because", "as", "until", "while",
        "of", "at", "by", "for", "with", "about", "against", "between", "into", "through", "during",
        "before", "after", "above", "below", "to", "from", "up", "down", "in", "out", "on", "off", "over",
        "under", "again", "further", "then", "once", "here", "there", "when", "where", "why", "how", "all",
        "any", "both", "each", "few", "more", "most", "other", "some", "such", "no", "nor", "not", "only",
        "own", "same", "so", "than", "too", "very", "s", "t", "can", "will", "just", "don", "don't",
        "should", "should've", "now", "d", "ll", "m", "o", "re", "ve", "y", "ain", "aren", "aren't",
        "couldn", "couldn't", "didn", "didn't", "doesn", "doesn't", "hadn", "hadn't", "hasn", "hasn't",
        "haven", "haven't", "isn", "isn't", "ma", "mightn", "mightn't", "mustn", "mustn't", "needn",
        "needn't", "shan", "shan't", "shouldn", "shouldn't", "wasn", "wasn't", "weren", "weren't", "won",
        "won't", "wouldn", "wouldn't", "n't", "n", "ah"};
    return words;
}

std::vector<std::pair<std::string, std::size_t>> CorpusStats::top_vocabulary(std::size_t n) const {
    std::vector<std::pair<std::string, std::size_t>> v(vocabulary.begin(), vocabulary.end());
    std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (v.size() > n) v.resize(n);
    return v;
}

CorpusStats corpus_stats(const Dataset& dataset, const std::set<std::string>& stopwords) {
    CorpusStats st;
    st.n_samples = dataset.size();
    std::size_t q_len = 0, c_len = 0, w_len = 0, s_len = 0, k_len = 0, n_wrong = 0;
    auto count_vocab = [&](const std::vector<std::string>& tokens) {
        for (const auto& t : tokens) {
            if (!stopwords.count(t)) ++st.vocabulary[t];
        }
    };
    for (const auto& s : dataset.samples) {
        const auto q = tokenize(s.question);
        if (!q.empty()) ++st.question_types[q.front()];
        q_len += q.size();
        count_vocab(q);
        for (std::size_t i = 0; i < s.answers.size(); ++i) {
            const auto a = tokenize(s.answers[i]);
            count_vocab(a);
            if (static_cast<int>(i) == s.correct_index) {
                c_len += a.size();
            } else {
                w_len += a.size();
                ++n_wrong;
            }
        }
        const auto k = tokenize(s.knowledge);
        k_len += k.size();
        count_vocab(k);
        s_len += tokenize(s.subtitles).size();
    }
    if (st.n_samples > 0) {
        const auto n = static_cast<double>(st.n_samples);
        st.average_tokens.question = static_cast<double>(q_len) / n;
        st.average_tokens.correct_answer = static_cast<double>(c_len) / n;
        st.average_tokens.subtitles = static_cast<double>(s_len) / n;
        st.average_tokens.knowledge = static_cast<double>(k_len) / n;
    }
    if (n_wrong > 0) st.average_tokens.wrong_answer = static_cast<double>(w_len) / static_cast<double>(n_wrong);
    return st;
}

json to_json(const CorpusStats& st, std::size_t top_n) {
    json vocab = json::array();
    for (const auto& [t, c] : st.top_vocabulary(top_n)) vocab.push_back(json::array({t, c}));
    return json{{"n_samples", st.n_samples},
                {"question_types", st.question_types},
                {"vocabulary_size", st.vocabulary.size()},
                {"top_vocabulary", vocab},
                {"average_tokens",
                 {{"question", st.average_tokens.question},
                  {"correct_answer", st.average_tokens.correct_answer},
                  {"wrong_answer", st.average_tokens.wrong_answer},
                  {"subtitles", st.average_tokens.subtitles},
                  {"knowledge", st.average_tokens.knowledge}}}};
}

}  // namespace knowtrans
