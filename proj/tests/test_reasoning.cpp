#include "knowtrans/reasoning.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "knowtrans/random.hpp"
#include "oracles.hpp"

using namespace knowtrans;

namespace {

Eigen::Vector3d oracle_block(const std::string& answer, const std::string& other) {
    const auto a = oracle::word_set(answer);
    const auto o = oracle::word_set(other);
    std::size_t inter = 0;
    for (const auto& t : a) inter += o.count(t);
    Eigen::Vector3d b;
    b << oracle::overlap(a, o), oracle::trigram_jaccard(answer, other),
        a.empty() ? 0.0 : static_cast<double>(inter) / static_cast<double>(a.size());
    return b;
}

const std::vector<std::string> kWords{"joey", "ate", "the", "sandwich", "phoebe", "sang", "smelly", "cat",
                                      "in", "central", "perk", "because", "he", "was", "hungry"};

std::string words(Rng& rng, std::size_t lo, std::size_t hi) {
    std::string s;
    for (std::size_t i = 0, n = lo + rng.below(hi - lo + 1); i < n; ++i) s += (i ? " " : "") + kWords[rng.below(kWords.size())];
    return s;
}

Dataset toy(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Dataset d;
    d.name = "toy";
    for (std::size_t i = 0; i < n; ++i) {
        QASample s;
        s.sample_id = "r" + std::to_string(i);
        s.clip_id = "c" + std::to_string(i % 3);
        s.question = words(rng, 3, 6) + "?";
        for (int a = 0; a < 4; ++a) s.answers.push_back(words(rng, 1, 3) + " x" + std::to_string(a));
        s.correct_index = static_cast<int>(rng.below(4));
        s.knowledge = words(rng, 2, 4) + " " + s.answers[static_cast<std::size_t>(s.correct_index)];
        s.subtitles = words(rng, 0, 5);
        d.samples.push_back(std::move(s));
    }
    return d;
}

}  // namespace

TEST_CASE("encoding agrees with from-scratch features") {
    Rng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        const std::string q = words(rng, 0, 6), a = words(rng, 0, 3), sub = words(rng, 0, 6);
        std::vector<std::string> k;
        for (int i = 0; i < 5; ++i) k.push_back(rng.below(3) == 0 ? std::string{} : words(rng, 1, 4));
        const double top1 = rng.normal();
        const auto e = encode_candidate(q, a, k, sub, top1);
        REQUIRE(e.u_vec.size() == static_cast<Eigen::Index>(kEncodedDim));

        std::string joined;
        for (std::size_t i = 0; i < k.size(); ++i) joined += (i ? " " : "") + k[i];
        CHECK(oracle::relative_error(e.u_vec.segment<3>(0), oracle_block(a, joined)) < 1e-12);
        CHECK(oracle::relative_error(e.u_vec.segment<3>(3), oracle_block(a, q)) < 1e-12);
        CHECK(oracle::relative_error(e.u_vec.segment<3>(6), oracle_block(a, sub)) < 1e-12);
        CHECK(e.u_vec[9] == top1);
        const double n = static_cast<double>(oracle::words(a).size());
        CHECK(e.u_vec[10] == doctest::Approx(n / (n + 1)));
    }
}

TEST_CASE("encoding rejects a wrong knowledge count") {
    CHECK_THROWS_AS(encode_candidate("q", "a", {"k"}, "", 0.0), ReasoningError);
    CHECK_THROWS_AS(encode_candidate("q", "a", {"", "", "", "", ""}, "", NAN), ReasoningError);
    CHECK_NOTHROW(encode_candidate("q", "a", {"k"}, "", 0.0, 1));
}

TEST_CASE("fusion layout and masks") {
    VisualFeatureTable table;
    table.d_img = 4;
    table.d_face = 2;
    CHECK(make_layout(VisionSource::none).total() == kEncodedDim);
    CHECK(make_layout(VisionSource::image, &table).total() == kEncodedDim + 5);
    CHECK(make_layout(VisionSource::facial, &table).total() == kEncodedDim + 3);
    CHECK(make_layout(VisionSource::caption).total() == kEncodedDim + 4);
    CHECK_THROWS_AS(make_layout(VisionSource::image), ReasoningError);

    const auto u = encode_candidate("who sang", "phoebe sang", {"", "", "", "", ""}, "", 0.0);
    const auto img = make_layout(VisionSource::image, &table);
    VisualFeatures v;
    v.clip_id = "c";
    v.image_vec = Eigen::Vector4d(1, 2, 3, 4);
    auto x = fusion_input(u, &v, img);
    CHECK(x.segment(kEncodedDim, 4) == Eigen::Vector4d(1, 2, 3, 4));
    CHECK(x[kEncodedDim + 4] == 0.0);
    x = fusion_input(u, nullptr, img);
    CHECK(x.segment(kEncodedDim, 4).isZero());
    CHECK(x[kEncodedDim + 4] == 1.0);
    v.image_vec = Eigen::Vector2d(1, 2);
    CHECK_THROWS_AS(fusion_input(u, &v, img), ReasoningError);

    const auto cap = make_layout(VisionSource::caption);
    v.caption_text = "phoebe sang on stage";
    x = fusion_input(u, &v, cap);
    CHECK(oracle::relative_error(x.segment<3>(kEncodedDim), oracle_block("phoebe sang", v.caption_text)) < 1e-12);
    CHECK(x[kEncodedDim + 3] == 0.0);
    v.caption_text.clear();
    CHECK(fusion_input(u, &v, cap)[kEncodedDim + 3] == 1.0);
}

TEST_CASE("fuse_and_score is a dot product plus bias") {
    Rng rng(2);
    const auto layout = make_layout(VisionSource::caption);
    auto p = ReasonerParams::zeros(layout);
    for (Eigen::Index i = 0; i < p.weights.size(); ++i) p.weights[i] = rng.normal();
    p.bias = 0.75;
    const auto u = encode_candidate("q w", "a w", {"k", "", "", "", ""}, "s", 0.3);
    VisualFeatures v;
    v.caption_text = "a caption";
    const auto x = fusion_input(u, &v, layout);
    double expect = p.bias;
    for (Eigen::Index i = 0; i < x.size(); ++i) expect += p.weights[i] * x[i];
    CHECK(fuse_and_score(u, &v, p) == doctest::Approx(expect));
    p.weights.resize(3);
    CHECK_THROWS_AS(fuse_and_score(u, &v, p), ReasoningError);
}

TEST_CASE("argmax ties go to the lowest index") {
    CHECK(argmax_lowest({0.1, 0.5, 0.5, 0.2}) == 1);
    CHECK(argmax_lowest({0, 0, 0, 0}) == 0);
    CHECK_THROWS_AS(argmax_lowest({}), ReasoningError);
    const auto d = toy(1, 3);
    const auto pred = predict(d.samples[0], nullptr, nullptr, nullptr, ReasonerParams::zeros(FusionLayout{}),
                              KnowledgeMode::none);
    CHECK(pred.predicted_index == 0);
    CHECK(pred.correct == (d.samples[0].correct_index == 0));
}

TEST_CASE("knowledge context per mode") {
    auto d = toy(1, 4);
    const auto& s = d.samples[0];
    const auto gt = knowledge_context(s, nullptr, nullptr, KnowledgeMode::gt, 5);
    CHECK(gt == std::vector<std::string>{s.knowledge, "", "", "", ""});
    CHECK(knowledge_context(s, nullptr, nullptr, KnowledgeMode::none, 3) == std::vector<std::string>(3));
    CHECK_THROWS_AS(knowledge_context(s, nullptr, nullptr, KnowledgeMode::retrieved, 5), ReasoningError);

    KnowledgeBase kb;
    kb.add("alpha");
    kb.add("beta");
    kb.add("gamma");
    Eigen::Vector3d scores(0.1, 0.9, 0.5);
    auto r = ranking_from_scores(scores, {}, s.sample_id);
    CHECK(knowledge_context(s, &r, &kb, KnowledgeMode::retrieved, 5) ==
          std::vector<std::string>{"beta", "gamma", "alpha", "", ""});
    r.query_id = "someone else";
    CHECK_THROWS_AS(knowledge_context(s, &r, &kb, KnowledgeMode::retrieved, 5), ReasoningError);
}

TEST_CASE("predict rejects features from another clip") {
    const auto d = toy(1, 5);
    VisualFeatures v;
    v.clip_id = "elsewhere";
    CHECK_THROWS_AS(predict(d.samples[0], nullptr, nullptr, &v, ReasonerParams::zeros(FusionLayout{}),
                            KnowledgeMode::gt),
                    ReasoningError);
}

TEST_CASE("zero-initialised loss with four candidates is ln 4") {
    const auto d = toy(30, 6);
    ReasoningInputs in;
    in.knowledge = KnowledgeMode::gt;
    ReasoningHyper h;
    h.epochs = 0;
    const auto r = train_reasoning(ReasonerParams::zeros(FusionLayout{}), d, in, h);
    CHECK(std::abs(r.initial_loss - std::log(4.0)) < 1e-9);
}

TEST_CASE("analytic gradient matches finite differences") {
    Rng rng(7);
    for (int fixture = 0; fixture < 100; ++fixture) {
        const auto d = toy(2 + rng.below(6), 1000 + static_cast<std::uint64_t>(fixture));
        ReasoningInputs in;
        in.knowledge = fixture % 2 ? KnowledgeMode::gt : KnowledgeMode::none;
        VisualFeatureTable table;
        for (int c = 0; c < 3; ++c) table.clips["c" + std::to_string(c)].caption_text = words(rng, 0, 4);
        for (auto& [id, v] : table.clips) v.clip_id = id;
        in.features = &table;
        const auto layout = make_layout(fixture % 3 ? VisionSource::caption : VisionSource::none);
        const auto groups = reasoning_groups(d, layout, in);
        Eigen::VectorXd w(static_cast<Eigen::Index>(layout.total() + 1));
        for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = rng.normal();
        Eigen::VectorXd grad;
        const double loss = mean_softmax_nll(groups, w, &grad);
        std::vector<Eigen::MatrixXd> rows;
        std::vector<int> targets;
        for (const auto& g : groups) {
            rows.emplace_back(g.features);
            targets.push_back(static_cast<int>(g.target));
        }
        CHECK(loss == doctest::Approx(oracle::naive_nll(rows, targets, w)).epsilon(1e-10));
        const auto fd = oracle::fd_gradient([&](const Eigen::VectorXd& x) { return mean_softmax_nll(groups, x); }, w);
        CHECK(oracle::relative_error(grad, fd) < 1e-5);
    }
}

TEST_CASE("permuting the candidates permutes the scores") {
    Rng rng(8);
    auto p = ReasonerParams::zeros(FusionLayout{});
    for (Eigen::Index i = 0; i < p.weights.size(); ++i) p.weights[i] = rng.normal();
    for (const auto& s : toy(50, 9).samples) {
        std::vector<std::size_t> perm{0, 1, 2, 3};
        rng.shuffle(perm);
        QASample t = s;
        for (std::size_t i = 0; i < 4; ++i) t.answers[i] = s.answers[perm[i]];
        const auto a = predict(s, nullptr, nullptr, nullptr, p, KnowledgeMode::gt);
        const auto b = predict(t, nullptr, nullptr, nullptr, p, KnowledgeMode::gt);
        for (std::size_t i = 0; i < 4; ++i) CHECK(b.scores[i] == a.scores[perm[i]]);
    }
}

TEST_CASE("training learns to pick the answer contained in the knowledge") {
    const auto train = toy(80, 10);
    const auto test = toy(40, 11);
    ReasoningInputs in;
    in.knowledge = KnowledgeMode::gt;
    ReasoningHyper h;
    h.epochs = 40;
    const auto r = train_reasoning(ReasonerParams::zeros(FusionLayout{}), train, in, h);
    CHECK(r.epoch_losses.back() < r.initial_loss);
    const auto preds = predict_dataset(test, r.params, in);
    const auto hits = std::count_if(preds.begin(), preds.end(), [](const Prediction& p) { return p.correct; });
    CHECK(hits >= 36);

    const auto again = train_reasoning(ReasonerParams::zeros(FusionLayout{}), train, in, h);
    CHECK(again.params.weights == r.params.weights);
}

TEST_CASE("groups need rankings and features") {
    const auto d = toy(3, 12);
    ReasoningInputs in;
    CHECK_THROWS_AS(reasoning_groups(d, FusionLayout{}, in), ReasoningError);
    VisualFeatureTable table;
    table.d_img = 2;
    in.knowledge = KnowledgeMode::none;
    in.features = &table;
    CHECK_THROWS_AS(reasoning_groups(d, make_layout(VisionSource::image, &table), in), ReasoningError);
}

TEST_CASE("params round-trip and validation") {
    const auto dir = std::filesystem::temp_directory_path() / "knowtrans_test_reasoning";
    std::filesystem::create_directories(dir);
    auto p = ReasonerParams::zeros(make_layout(VisionSource::caption));
    p.weights[2] = -1.5;
    p.bias = 0.125;
    save_reasoner_params(p, dir / "r.json");
    const auto q = load_reasoner_params(dir / "r.json");
    CHECK(q.layout == p.layout);
    CHECK(q.weights == p.weights);
    CHECK(q.bias == p.bias);
    auto j = to_json(p);
    j["layout"]["d_u"] = 7;
    CHECK_THROWS_AS(reasoner_params_from_json(j), ReasoningError);
    CHECK_THROWS_AS(parse_vision_source("smell"), ReasoningError);
    CHECK(parse_knowledge_mode("GT") == KnowledgeMode::gt);
}
