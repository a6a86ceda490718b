#include "knowtrans/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <numeric>

#include "knowtrans/det.hpp"
#include "knowtrans/random.hpp"

namespace knowtrans {

using nlohmann::json;

const std::vector<std::string>& retrieval_feature_names() {
    static const std::vector<std::string> names{"idf_cosine",   "token_overlap", "trigram_jaccard",
                                                "label_overlap", "length_ratio", "substring",
                                                "bias"};
    return names;
}

std::string QueryText::rendered() const {
    std::string out = question;
    for (const auto& a : answers) {
        out.append(kQuerySeparator);
        out.append(a);
    }
    return out;
}

QueryText QueryText::from(const QASample& sample) {
    return {sample.question, sample.answers};
}

// ---------------------------------------------------------------------------
// Features

FeatureExtractor::FeatureExtractor(const KnowledgeBase& kb, std::vector<std::string> type_labels) {
    if (type_labels.empty()) type_labels = default_entity_labels();
    labels_.insert(type_labels.begin(), type_labels.end());

    kb_profiles_.reserve(kb.size());
    std::unordered_map<std::string, std::size_t> df;
    for (const auto& e : kb.entries()) {
        kb_profiles_.push_back(TextProfile::from(e.text));
        for (const auto& t : kb_profiles_.back().distinct_tokens) ++df[t];
    }
    const auto n = static_cast<double>(kb.size());
    for (const auto& [t, d] : df) idf_[t] = std::log((1.0 + n) / (1.0 + static_cast<double>(d))) + 1.0;
    unseen_idf_ = std::log(1.0 + n) + 1.0;

    kb_norms_.reserve(kb_profiles_.size());
    for (const auto& p : kb_profiles_) kb_norms_.push_back(idf_norm(p));
}

double FeatureExtractor::idf(const std::string& token) const {
    auto it = idf_.find(token);
    return it == idf_.end() ? unseen_idf_ : it->second;
}

double FeatureExtractor::idf_norm(const TextProfile& p) const {
    double sq = 0.0;
    for (const auto& [t, c] : p.token_counts) {
        const double w = static_cast<double>(c) * idf(t);
        sq += w * w;
    }
    return std::sqrt(sq);
}

QueryProfile FeatureExtractor::profile(const QueryText& query) const {
    QueryProfile p;
    p.whole = TextProfile::from(query.rendered());
    p.segments.push_back(tokenize(query.question));
    for (const auto& a : query.answers) p.segments.push_back(tokenize(a));
    return p;
}

FeatureVector FeatureExtractor::extract(const QueryProfile& query, const TextProfile& k) const {
    const TextProfile& q = query.whole;
    FeatureVector f = FeatureVector::Zero();

    const double qn = idf_norm(q);
    const double kn = idf_norm(k);
    if (qn > 0.0 && kn > 0.0) {
        double dot = 0.0;
        for (const auto& [t, c] : q.token_counts) {
            if (auto it = k.token_counts.find(t); it != k.token_counts.end()) {
                const double w = idf(t);
                dot += static_cast<double>(c) * static_cast<double>(it->second) * w * w;
            }
        }
        f[kIdfCosine] = std::min(1.0, dot / (qn * kn));
    }
    f[kTokenOverlap] = normalized_overlap(q.distinct_tokens, k.distinct_tokens);
    f[kTrigramJaccard] = jaccard(q.trigrams, k.trigrams);

    double labels = 0.0;
    for (const auto& l : labels_) {
        if (q.token_counts.count(l) && k.token_counts.count(l)) labels += 1.0;
    }
    f[kLabelOverlap] = labels;

    const auto nq = static_cast<double>(q.tokens.size());
    const auto nk = static_cast<double>(k.tokens.size());
    f[kLengthRatio] = std::max(nq, nk) > 0.0 ? std::min(nq, nk) / std::max(nq, nk) : 0.0;

    bool substring = contains_token_run(q.tokens, k.tokens);
    for (const auto& seg : query.segments) {
        if (substring) break;
        substring = contains_token_run(k.tokens, seg);
    }
    f[kSubstring] = substring ? 1.0 : 0.0;
    f[kBias] = 1.0;
    return f;
}

FeatureVector FeatureExtractor::extract(const QueryText& query, const std::string& knowledge) const {
    return extract(profile(query), TextProfile::from(knowledge));
}

FeatureVector FeatureExtractor::extract(const QueryProfile& query, std::int64_t kb_id) const {
    if (kb_id < 0 || static_cast<std::size_t>(kb_id) >= kb_profiles_.size()) {
        throw RetrievalError("kb_id " + std::to_string(kb_id) + " not in knowledge base");
    }
    return extract(query, kb_profiles_[static_cast<std::size_t>(kb_id)]);
}

FeatureRows FeatureExtractor::extract_all(const QueryProfile& query) const {
    FeatureRows rows(static_cast<Eigen::Index>(kb_profiles_.size()), kRetrievalFeatureDim);
    for (std::size_t i = 0; i < kb_profiles_.size(); ++i) {
        rows.row(static_cast<Eigen::Index>(i)) = extract(query, kb_profiles_[i]).transpose();
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Parameters

json to_json(const ScorerParams& p) {
    std::vector<double> w(p.weights.data(), p.weights.data() + p.weights.size());
    return json{{"version", kScorerParamsVersion},
                {"dim", p.weights.size()},
                {"features", retrieval_feature_names()},
                {"weights", w},
                {"metadata",
                 {{"trained_on", p.metadata.trained_on},
                  {"epochs", p.metadata.epochs},
                  {"seed", p.metadata.seed},
                  {"learning_rate", p.metadata.learning_rate},
                  {"negatives", p.metadata.negatives},
                  {"lineage", p.metadata.lineage}}}};
}

ScorerParams scorer_params_from_json(const json& j) {
    try {
        if (j.at("version").get<int>() != kScorerParamsVersion) {
            throw RetrievalError("unsupported scorer params version " + j.at("version").dump());
        }
        ScorerParams p;
        const auto w = j.at("weights").get<std::vector<double>>();
        if (j.at("dim").get<std::size_t>() != w.size()) throw RetrievalError("scorer params: dim does not match weights");
        p.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
        if (auto it = j.find("metadata"); it != j.end()) {
            const json& m = *it;
            p.metadata.trained_on = m.value("trained_on", std::string{});
            p.metadata.epochs = m.value("epochs", std::size_t{0});
            p.metadata.seed = m.value("seed", std::uint64_t{0});
            p.metadata.learning_rate = m.value("learning_rate", 0.0);
            p.metadata.negatives = m.value("negatives", std::size_t{0});
            p.metadata.lineage = m.value("lineage", std::vector<std::string>{});
        }
        check_scorer_params(p);
        return p;
    } catch (const json::exception& e) {
        throw RetrievalError(std::string("malformed scorer params: ") + e.what());
    }
}

void save_scorer_params(const ScorerParams& params, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw RetrievalError("cannot write " + path.string());
    out << to_json(params).dump(2) << '\n';
}

ScorerParams load_scorer_params(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw RetrievalError("cannot open " + path.string());
    try {
        return scorer_params_from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw RetrievalError(path.string() + ": " + e.what());
    }
}

void check_scorer_params(const ScorerParams& params) {
    if (params.weights.size() != kRetrievalFeatureDim) {
        throw RetrievalError("scorer params have dimension " + std::to_string(params.weights.size()) +
                             ", expected " + std::to_string(kRetrievalFeatureDim));
    }
    if (!params.weights.allFinite()) throw RetrievalError("scorer params contain non-finite weights");
}

// ---------------------------------------------------------------------------
// Scoring

double score(const ScorerParams& theta, const FeatureVector& features) {
    check_scorer_params(theta);
    return theta.weights.dot(features);
}

double score(const FeatureExtractor& extractor, const ScorerParams& theta, const QueryText& query,
             const std::string& knowledge) {
    return score(theta, extractor.extract(query, knowledge));
}

Eigen::VectorXd probability(const FeatureExtractor& extractor, const ScorerParams& theta, const QueryText& query,
                            const std::vector<std::string>& candidates) {
    if (candidates.empty()) throw RetrievalError("probability: empty candidate list");
    check_scorer_params(theta);
    const QueryProfile qp = extractor.profile(query);
    Eigen::VectorXd s(static_cast<Eigen::Index>(candidates.size()));
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        s[static_cast<Eigen::Index>(i)] = theta.weights.dot(extractor.extract(qp, TextProfile::from(candidates[i])));
    }
    return softmax(s);
}

// ---------------------------------------------------------------------------
// Training

namespace {

std::vector<std::int64_t> gt_ids(const Dataset& train, const KnowledgeBase& kb) {
    std::vector<std::int64_t> ids;
    ids.reserve(train.size());
    for (const auto& s : train.samples) {
        auto id = kb.find(s.knowledge);
        if (!id) {
            throw RetrievalError("sample '" + s.sample_id + "': knowledge is not in the knowledge base");
        }
        ids.push_back(*id);
    }
    return ids;
}

}  // namespace

std::vector<SoftmaxGroup<double>> retrieval_groups(const FeatureExtractor& extractor, const Dataset& train,
                                                   const KnowledgeBase& kb, std::size_t negatives,
                                                   std::uint64_t seed, std::size_t epoch) {
    if (negatives >= kb.size()) {
        throw RetrievalError("negatives_per_positive (" + std::to_string(negatives) +
                             ") must be smaller than the knowledge base (" + std::to_string(kb.size()) + ")");
    }
    const auto ids = gt_ids(train, kb);
    Rng rng = Rng::derive(seed, epoch);
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    std::vector<SoftmaxGroup<double>> groups;
    groups.reserve(order.size());
    for (std::size_t idx : order) {
        const QueryProfile qp = extractor.profile(QueryText::from(train.samples[idx]));
        const auto gt = static_cast<std::size_t>(ids[idx]);
        SoftmaxGroup<double> g;
        g.features.resize(static_cast<Eigen::Index>(negatives + 1), kRetrievalFeatureDim);
        g.features.row(0) = extractor.extract(qp, ids[idx]).transpose();
        const auto draws = rng.sample_without_replacement(kb.size() - 1, negatives);
        for (std::size_t m = 0; m < draws.size(); ++m) {
            const std::size_t neg = draws[m] < gt ? draws[m] : draws[m] + 1;
            g.features.row(static_cast<Eigen::Index>(m + 1)) =
                extractor.extract(qp, static_cast<std::int64_t>(neg)).transpose();
        }
        g.target = 0;
        groups.push_back(std::move(g));
    }
    return groups;
}

namespace {

RetrievalTrainResult run_training(ScorerParams theta, const Dataset& train, const KnowledgeBase& kb,
                                  const RetrievalHyper& hyper, const std::vector<std::string>& type_labels) {
    check_scorer_params(theta);
    if (hyper.batch_size == 0) throw RetrievalError("batch_size must be positive");
    if (!std::isfinite(hyper.learning_rate)) throw RetrievalError("learning_rate must be finite");
    if (hyper.negatives >= kb.size()) {
        throw RetrievalError("negatives_per_positive (" + std::to_string(hyper.negatives) +
                             ") must be smaller than the knowledge base (" + std::to_string(kb.size()) + ")");
    }
    gt_ids(train, kb);  // validates membership up front
    const FeatureExtractor extractor(kb, type_labels);

    RetrievalTrainResult result;
    Eigen::VectorXd w = theta.weights;
    Eigen::VectorXd grad(w.size());
    for (std::size_t epoch = 0; epoch < std::max<std::size_t>(hyper.epochs, 1); ++epoch) {
        const auto groups = retrieval_groups(extractor, train, kb, hyper.negatives, hyper.seed, epoch);
        if (epoch == 0) {
            result.initial_loss = mean_softmax_nll(groups, w);
            if (hyper.epochs == 0) break;
        }
        double epoch_loss = 0.0;
        for (std::size_t lo = 0; lo < groups.size(); lo += hyper.batch_size) {
            const std::size_t hi = std::min(groups.size(), lo + hyper.batch_size);
            const std::vector<SoftmaxGroup<double>> batch(groups.begin() + static_cast<std::ptrdiff_t>(lo),
                                                          groups.begin() + static_cast<std::ptrdiff_t>(hi));
            const double loss = mean_softmax_nll(batch, w, &grad);
            epoch_loss += loss * static_cast<double>(hi - lo);
            w -= hyper.learning_rate * grad;
        }
        result.epoch_losses.push_back(groups.empty() ? 0.0 : epoch_loss / static_cast<double>(groups.size()));
    }
    theta.weights = w;
    theta.metadata.trained_on = train.name;
    theta.metadata.epochs = hyper.epochs;
    theta.metadata.seed = hyper.seed;
    theta.metadata.learning_rate = hyper.learning_rate;
    theta.metadata.negatives = hyper.negatives;
    theta.metadata.lineage.push_back(train.name);
    check_scorer_params(theta);
    result.params = std::move(theta);
    return result;
}

}  // namespace

RetrievalTrainResult train_retrieval(const ScorerParams& theta0, const Dataset& train, const KnowledgeBase& kb,
                                     const RetrievalHyper& hyper, const std::vector<std::string>& type_labels) {
    ScorerParams init = theta0;
    init.metadata.lineage.clear();
    return run_training(std::move(init), train, kb, hyper, type_labels);
}

RetrievalTrainResult transfer_finetune(const ScorerParams& theta_pre, const Dataset& target_train,
                                       const KnowledgeBase& target_kb, const RetrievalHyper& hyper,
                                       const std::vector<std::string>& type_labels) {
    return run_training(theta_pre, target_train, target_kb, hyper, type_labels);
}

// ---------------------------------------------------------------------------
// Ranking

std::vector<std::int64_t> RetrievalRanking::top_ids(std::size_t k) const {
    std::vector<std::int64_t> out;
    for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) out.push_back(ranked[i].first);
    return out;
}

RetrievalRanking ranking_from_scores(const Eigen::VectorXd& scores, std::optional<std::int64_t> gt_kb_id,
                                     std::string query_id) {
    const auto n = static_cast<std::int64_t>(scores.size());
    if (n == 0) throw RetrievalError("rank: empty knowledge base");
    if (gt_kb_id && (*gt_kb_id < 0 || *gt_kb_id >= n)) {
        throw RetrievalError("rank: gt kb_id " + std::to_string(*gt_kb_id) + " not in knowledge base");
    }
    RetrievalRanking r;
    r.query_id = std::move(query_id);
    r.ranked.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) r.ranked.emplace_back(i, scores[i]);
    std::sort(r.ranked.begin(), r.ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (gt_kb_id) {
        for (std::size_t i = 0; i < r.ranked.size(); ++i) {
            if (r.ranked[i].first == *gt_kb_id) {
                r.gt_rank = i + 1;
                break;
            }
        }
    }
    return r;
}

RetrievalRanking rank(const FeatureExtractor& extractor, const ScorerParams& theta, const QueryText& query,
                      std::optional<std::int64_t> gt_kb_id, std::string query_id) {
    check_scorer_params(theta);
    const FeatureRows rows = extractor.extract_all(extractor.profile(query));
    const Eigen::VectorXd scores = rows * theta.weights;
    return ranking_from_scores(scores, gt_kb_id, std::move(query_id));
}

std::vector<RetrievalRanking> rank_dataset(const FeatureExtractor& extractor, const KnowledgeBase& kb,
                                           const ScorerParams& theta, const Dataset& dataset,
                                           std::size_t threads) {
    check_scorer_params(theta);
    std::vector<RetrievalRanking> out(dataset.size());
    auto work = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const auto& s = dataset.samples[i];
            out[i] = rank(extractor, theta, QueryText::from(s), kb.find(s.knowledge), s.sample_id);
        }
    };
    threads = std::max<std::size_t>(1, std::min(threads, dataset.size()));
    if (threads == 1) {
        work(0, dataset.size());
        return out;
    }
    std::vector<std::future<void>> jobs;
    const std::size_t chunk = (dataset.size() + threads - 1) / threads;
    for (std::size_t lo = 0; lo < dataset.size(); lo += chunk) {
        jobs.push_back(std::async(std::launch::async, work, lo, std::min(dataset.size(), lo + chunk)));
    }
    for (auto& j : jobs) j.get();
    return out;
}

json to_json(const RetrievalRanking& r, std::size_t top_k) {
    json top = json::array();
    for (std::size_t i = 0; i < std::min(top_k, r.ranked.size()); ++i) {
        top.push_back(json::array({r.ranked[i].first, r.ranked[i].second}));
    }
    json j{{"query_id", r.query_id}, {"top", top}};
    j["gt_rank"] = r.gt_rank ? json(*r.gt_rank) : json(nullptr);
    return j;
}

RetrievalRanking ranking_from_json(const json& j) {
    RetrievalRanking r;
    r.query_id = j.at("query_id").get<std::string>();
    for (const auto& e : j.at("top")) r.ranked.emplace_back(e.at(0).get<std::int64_t>(), e.at(1).get<double>());
    if (j.contains("gt_rank") && !j.at("gt_rank").is_null()) r.gt_rank = j.at("gt_rank").get<std::size_t>();
    return r;
}

void save_rankings(const std::vector<RetrievalRanking>& rankings, std::size_t top_k,
                   const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw RetrievalError("cannot write " + path.string());
    for (const auto& r : rankings) out << to_json(r, top_k).dump() << '\n';
}

std::vector<RetrievalRanking> load_rankings(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw RetrievalError("cannot open " + path.string());
    std::vector<RetrievalRanking> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (normalize_text(line).empty()) continue;
        try {
            out.push_back(ranking_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw RetrievalError(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace knowtrans
