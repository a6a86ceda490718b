#include "knowtrans/reasoning.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "knowtrans/random.hpp"
#include "knowtrans/text.hpp"

namespace knowtrans {

using nlohmann::json;

Eigen::Vector3d pair_block(const TextProfile& answer, const TextProfile& other) {
    Eigen::Vector3d b;
    b[0] = normalized_overlap(answer.distinct_tokens, other.distinct_tokens);
    b[1] = jaccard(answer.trigrams, other.trigrams);
    b[2] = answer.distinct_tokens.empty()
               ? 0.0
               : static_cast<double>(sorted_intersection_size(answer.distinct_tokens, other.distinct_tokens)) /
                     static_cast<double>(answer.distinct_tokens.size());
    return b;
}

EncodedCandidate encode_candidate(const std::string& question, const std::string& answer,
                                  const std::vector<std::string>& knowledge_topk, const std::string& subtitles,
                                  double retrieval_score, std::size_t top_k) {
    if (knowledge_topk.size() != top_k) {
        throw ReasoningError("encode_candidate: expected " + std::to_string(top_k) + " knowledge texts, got " +
                             std::to_string(knowledge_topk.size()));
    }
    if (!std::isfinite(retrieval_score)) throw ReasoningError("encode_candidate: non-finite retrieval score");
    const TextProfile a = TextProfile::from(answer);
    const TextProfile k = TextProfile::from(join(knowledge_topk, " "));
    const TextProfile q = TextProfile::from(question);
    const TextProfile s = TextProfile::from(subtitles);

    EncodedCandidate out;
    out.answer = answer;
    out.u_vec.resize(static_cast<Eigen::Index>(kEncodedDim));
    out.u_vec.segment<3>(0) = pair_block(a, k);
    out.u_vec.segment<3>(3) = pair_block(a, q);
    out.u_vec.segment<3>(6) = pair_block(a, s);
    out.u_vec[9] = retrieval_score;
    const auto n = static_cast<double>(a.tokens.size());
    out.u_vec[10] = n / (n + 1.0);
    return out;
}

std::string to_string(VisionSource v) {
    switch (v) {
        case VisionSource::none: return "none";
        case VisionSource::image: return "image";
        case VisionSource::facial: return "facial";
        case VisionSource::caption: return "caption";
    }
    return "none";
}

VisionSource parse_vision_source(const std::string& s) {
    if (s == "none") return VisionSource::none;
    if (s == "image") return VisionSource::image;
    if (s == "facial" || s == "face") return VisionSource::facial;
    if (s == "caption") return VisionSource::caption;
    throw ReasoningError("unknown vision source '" + s + "' (expected image, facial, caption or none)");
}

std::size_t FusionLayout::total() const {
    auto channel = [](std::size_t d) { return d == 0 ? 0 : d + 1; };
    return d_u + channel(d_img) + channel(d_face) + channel(d_cap);
}

FusionLayout make_layout(VisionSource vision, const VisualFeatureTable* table) {
    FusionLayout layout;
    switch (vision) {
        case VisionSource::none: break;
        case VisionSource::image:
            if (table == nullptr || table->d_img == 0) throw ReasoningError("image vision needs image features");
            layout.d_img = table->d_img;
            break;
        case VisionSource::facial:
            if (table == nullptr || table->d_face == 0) throw ReasoningError("facial vision needs facial features");
            layout.d_face = table->d_face;
            break;
        case VisionSource::caption: layout.d_cap = kPairBlockDim; break;
    }
    return layout;
}

ReasonerParams ReasonerParams::zeros(const FusionLayout& layout) {
    ReasonerParams p;
    p.layout = layout;
    p.weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.total()));
    return p;
}

json to_json(const ReasonerParams& p) {
    std::vector<double> w(p.weights.data(), p.weights.data() + p.weights.size());
    return json{{"version", kReasonerParamsVersion},
                {"layout",
                 {{"d_u", p.layout.d_u},
                  {"d_img", p.layout.d_img},
                  {"d_face", p.layout.d_face},
                  {"d_cap", p.layout.d_cap}}},
                {"weights", w},
                {"bias", p.bias}};
}

ReasonerParams reasoner_params_from_json(const json& j) {
    try {
        if (j.at("version").get<int>() != kReasonerParamsVersion) {
            throw ReasoningError("unsupported reasoner params version " + j.at("version").dump());
        }
        ReasonerParams p;
        const json& l = j.at("layout");
        p.layout.d_u = l.at("d_u").get<std::size_t>();
        p.layout.d_img = l.at("d_img").get<std::size_t>();
        p.layout.d_face = l.at("d_face").get<std::size_t>();
        p.layout.d_cap = l.value("d_cap", std::size_t{0});
        const auto w = j.at("weights").get<std::vector<double>>();
        p.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
        p.bias = j.at("bias").get<double>();
        check_reasoner_params(p);
        return p;
    } catch (const json::exception& e) {
        throw ReasoningError(std::string("malformed reasoner params: ") + e.what());
    }
}

void save_reasoner_params(const ReasonerParams& params, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ReasoningError("cannot write " + path.string());
    out << to_json(params).dump(2) << '\n';
}

ReasonerParams load_reasoner_params(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ReasoningError("cannot open " + path.string());
    try {
        return reasoner_params_from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw ReasoningError(path.string() + ": " + e.what());
    }
}

void check_reasoner_params(const ReasonerParams& params) {
    if (params.layout.d_u != kEncodedDim) {
        throw ReasoningError("reasoner layout d_u = " + std::to_string(params.layout.d_u) + ", expected " +
                             std::to_string(kEncodedDim));
    }
    if (params.layout.d_cap != 0 && params.layout.d_cap != kPairBlockDim) {
        throw ReasoningError("reasoner layout d_cap must be 0 or " + std::to_string(kPairBlockDim));
    }
    if (static_cast<std::size_t>(params.weights.size()) != params.layout.total()) {
        throw ReasoningError("reasoner weights have dimension " + std::to_string(params.weights.size()) +
                             ", layout needs " + std::to_string(params.layout.total()));
    }
    if (!params.weights.allFinite() || !std::isfinite(params.bias)) {
        throw ReasoningError("reasoner params contain non-finite values");
    }
}

Eigen::VectorXd fusion_input(const EncodedCandidate& u, const VisualFeatures* v, const FusionLayout& layout) {
    if (static_cast<std::size_t>(u.u_vec.size()) != layout.d_u) {
        throw ReasoningError("encoded candidate has dimension " + std::to_string(u.u_vec.size()) + ", layout d_u is " +
                             std::to_string(layout.d_u));
    }
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.total()));
    x.head(u.u_vec.size()) = u.u_vec;
    Eigen::Index at = u.u_vec.size();

    auto put = [&](std::size_t dim, const Eigen::VectorXd* vec, const char* what) {
        if (dim == 0) return;
        const auto d = static_cast<Eigen::Index>(dim);
        if (vec != nullptr && vec->size() > 0) {
            if (vec->size() != d) {
                throw ReasoningError(std::string(what) + " vector has dimension " + std::to_string(vec->size()) +
                                     ", layout expects " + std::to_string(dim));
            }
            x.segment(at, d) = *vec;
        } else {
            x[at + d] = 1.0;
        }
        at += d + 1;
    };
    put(layout.d_img, v != nullptr ? &v->image_vec : nullptr, "image");
    put(layout.d_face, v != nullptr ? &v->facial_vec : nullptr, "facial");
    if (layout.d_cap != 0) {
        if (v != nullptr && !normalize_text(v->caption_text).empty()) {
            x.segment(at, 3) = pair_block(TextProfile::from(u.answer), TextProfile::from(v->caption_text));
        } else {
            x[at + 3] = 1.0;
        }
    }
    return x;
}

double fuse_and_score(const EncodedCandidate& u, const VisualFeatures* v, const ReasonerParams& params) {
    check_reasoner_params(params);
    return params.weights.dot(fusion_input(u, v, params.layout)) + params.bias;
}

std::string to_string(KnowledgeMode m) {
    switch (m) {
        case KnowledgeMode::retrieved: return "retrieved";
        case KnowledgeMode::gt: return "gt";
        case KnowledgeMode::none: return "none";
    }
    return "retrieved";
}

KnowledgeMode parse_knowledge_mode(const std::string& s) {
    if (s == "retrieved") return KnowledgeMode::retrieved;
    if (s == "gt" || s == "GT") return KnowledgeMode::gt;
    if (s == "none") return KnowledgeMode::none;
    throw ReasoningError("unknown knowledge mode '" + s + "' (expected retrieved, gt or none)");
}

std::size_t argmax_lowest(const std::vector<double>& scores) {
    if (scores.empty()) throw ReasoningError("argmax of an empty score list");
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[best]) best = i;
    }
    return best;
}

std::vector<std::string> knowledge_context(const QASample& sample, const RetrievalRanking* ranking,
                                           const KnowledgeBase* kb, KnowledgeMode mode, std::size_t top_k) {
    if (top_k == 0) throw ReasoningError("top_k must be positive");
    std::vector<std::string> out(top_k);
    switch (mode) {
        case KnowledgeMode::none: break;
        case KnowledgeMode::gt: out[0] = sample.knowledge; break;
        case KnowledgeMode::retrieved: {
            if (ranking == nullptr) throw ReasoningError("sample '" + sample.sample_id + "' has no retrieval ranking");
            if (kb == nullptr) throw ReasoningError("retrieved knowledge needs a knowledge base");
            if (ranking->query_id != sample.sample_id) {
                throw ReasoningError("ranking for '" + ranking->query_id + "' passed for sample '" +
                                     sample.sample_id + "'");
            }
            const auto ids = ranking->top_ids(top_k);
            for (std::size_t i = 0; i < ids.size(); ++i) out[i] = kb->at(ids[i]).text;
            break;
        }
    }
    return out;
}

namespace {

std::vector<Eigen::VectorXd> candidate_inputs(const QASample& sample, const RetrievalRanking* ranking,
                                              const KnowledgeBase* kb, const VisualFeatures* feats,
                                              const FusionLayout& layout, KnowledgeMode mode, std::size_t top_k) {
    if (feats != nullptr && feats->clip_id != sample.clip_id) {
        throw ReasoningError("visual features for clip '" + feats->clip_id + "' passed for sample '" +
                             sample.sample_id + "' of clip '" + sample.clip_id + "'");
    }
    const auto knowledge = knowledge_context(sample, ranking, kb, mode, top_k);
    const double top1 = (mode == KnowledgeMode::retrieved && !ranking->ranked.empty()) ? ranking->ranked[0].second
                                                                                         : 0.0;
    std::vector<Eigen::VectorXd> rows;
    rows.reserve(sample.answers.size());
    for (const auto& a : sample.answers) {
        rows.push_back(fusion_input(encode_candidate(sample.question, a, knowledge, sample.subtitles, top1, top_k),
                                    feats, layout));
    }
    return rows;
}

std::unordered_map<std::string, const RetrievalRanking*> index_rankings(const ReasoningInputs& inputs) {
    std::unordered_map<std::string, const RetrievalRanking*> out;
    if (inputs.rankings != nullptr) {
        for (const auto& r : *inputs.rankings) out.emplace(r.query_id, &r);
    }
    return out;
}

const RetrievalRanking* lookup(const std::unordered_map<std::string, const RetrievalRanking*>& index,
                               const std::string& id) {
    auto it = index.find(id);
    return it == index.end() ? nullptr : it->second;
}

const VisualFeatures* lookup_features(const ReasoningInputs& inputs, const std::string& clip_id) {
    return inputs.features == nullptr ? nullptr : inputs.features->find(clip_id);
}

}  // namespace

Prediction predict(const QASample& sample, const RetrievalRanking* ranking, const KnowledgeBase* kb,
                   const VisualFeatures* feats, const ReasonerParams& params, KnowledgeMode mode, std::size_t top_k) {
    check_reasoner_params(params);
    const auto rows = candidate_inputs(sample, ranking, kb, feats, params.layout, mode, top_k);
    Prediction p;
    p.sample_id = sample.sample_id;
    for (const auto& x : rows) p.scores.push_back(params.weights.dot(x) + params.bias);
    p.predicted_index = argmax_lowest(p.scores);
    p.correct_index = static_cast<std::size_t>(sample.correct_index);
    p.correct = p.predicted_index == p.correct_index;
    return p;
}

std::vector<Prediction> predict_dataset(const Dataset& dataset, const ReasonerParams& params,
                                        const ReasoningInputs& inputs) {
    const auto index = index_rankings(inputs);
    std::vector<Prediction> out;
    out.reserve(dataset.size());
    for (const auto& s : dataset.samples) {
        out.push_back(predict(s, lookup(index, s.sample_id), inputs.kb, lookup_features(inputs, s.clip_id), params,
                              inputs.knowledge, inputs.top_k));
    }
    return out;
}

std::vector<SoftmaxGroup<double>> reasoning_groups(const Dataset& dataset, const FusionLayout& layout,
                                                   const ReasoningInputs& inputs) {
    const auto index = index_rankings(inputs);
    const bool needs_vectors = layout.d_img != 0 || layout.d_face != 0;
    std::vector<SoftmaxGroup<double>> groups;
    groups.reserve(dataset.size());
    for (const auto& s : dataset.samples) {
        const RetrievalRanking* r = lookup(index, s.sample_id);
        if (inputs.knowledge == KnowledgeMode::retrieved && r == nullptr) {
            throw ReasoningError("sample '" + s.sample_id + "' has no retrieval ranking");
        }
        const VisualFeatures* v = lookup_features(inputs, s.clip_id);
        if (needs_vectors && v == nullptr) {
            throw ReasoningError("sample '" + s.sample_id + "': no visual features for clip '" + s.clip_id + "'");
        }
        const auto rows = candidate_inputs(s, r, inputs.kb, v, layout, inputs.knowledge, inputs.top_k);
        SoftmaxGroup<double> g;
        g.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(layout.total() + 1));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto r_i = static_cast<Eigen::Index>(i);
            g.features.row(r_i).head(rows[i].size()) = rows[i].transpose();
            g.features(r_i, rows[i].size()) = 1.0;
        }
        g.target = s.correct_index;
        groups.push_back(std::move(g));
    }
    return groups;
}

ReasoningTrainResult train_reasoning(const ReasonerParams& params0, const Dataset& train,
                                     const ReasoningInputs& inputs, const ReasoningHyper& hyper) {
    check_reasoner_params(params0);
    if (hyper.batch_size == 0) throw ReasoningError("batch_size must be positive");
    if (!std::isfinite(hyper.learning_rate)) throw ReasoningError("learning_rate must be finite");
    const auto groups = reasoning_groups(train, params0.layout, inputs);

    const auto dim = params0.weights.size();
    Eigen::VectorXd w(dim + 1);
    w << params0.weights, params0.bias;

    ReasoningTrainResult result;
    result.initial_loss = mean_softmax_nll(groups, w);
    std::vector<std::size_t> order(groups.size());
    Eigen::VectorXd grad(w.size());
    for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        Rng rng = Rng::derive(hyper.seed, epoch);
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t lo = 0; lo < order.size(); lo += hyper.batch_size) {
            const std::size_t hi = std::min(order.size(), lo + hyper.batch_size);
            std::vector<SoftmaxGroup<double>> batch;
            batch.reserve(hi - lo);
            for (std::size_t i = lo; i < hi; ++i) batch.push_back(groups[order[i]]);
            epoch_loss += mean_softmax_nll(batch, w, &grad) * static_cast<double>(hi - lo);
            w -= hyper.learning_rate * grad;
        }
        result.epoch_losses.push_back(order.empty() ? 0.0 : epoch_loss / static_cast<double>(order.size()));
    }
    result.params = params0;
    result.params.weights = w.head(dim);
    result.params.bias = w[dim];
    check_reasoner_params(result.params);
    return result;
}

}  // namespace knowtrans
