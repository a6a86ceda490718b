// Acceptance checks: one PASS/FAIL line per criterion.
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "golden_reports.hpp"
#include "knowtrans/augment.hpp"
#include "knowtrans/det.hpp"
#include "knowtrans/experiment.hpp"
#include "knowtrans/metrics.hpp"
#include "knowtrans/random.hpp"
#include "knowtrans/reasoning.hpp"
#include "knowtrans/retrieval.hpp"
#include "knowtrans/synthetic.hpp"
#include "oracles.hpp"

using namespace knowtrans;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

fs::path work_root() {
    const auto p = fs::temp_directory_path() / "knowtrans_acceptance";
    fs::create_directories(p);
    return p;
}

ExperimentConfig load_data_config(const std::string& file) {
    return load_experiment_config(fs::path(KNOWTRANS_DATA_DIR) / file);
}

Dataset synthetic_train(std::size_t n, std::uint64_t seed) {
    GeneratorConfig g;
    g.name = "accept";
    g.templates = default_templates();
    g.lexicon = default_lexicon();
    g.gazetteer = synthesize_gazetteer(seed, template_entity_types(g.templates), 40);
    g.n_samples = n;
    Dataset d = generate_synthetic(g, seed + 1);
    d.split = Split::train;
    return d;
}

std::string run_cli(const std::string& args, int& rc) {
    const auto out = work_root() / "cli_stdout.txt";
    const std::string cmd = std::string("\"") + KNOWTRANS_CLI + "\" " + args + " > \"" + out.string() + "\" 2>/dev/null";
    rc = std::system(cmd.c_str());
    return golden::read_file(out.string());
}

// 1
Outcome metric_oracle() {
    const auto t0 = Clock::now();
    Rng rng(2024);
    std::size_t mismatches = 0;
    for (int inst = 0; inst < 1000; ++inst) {
        const std::size_t n_queries = 1 + rng.below(25);
        std::vector<RetrievalRanking> rankings;
        std::vector<std::size_t> oracle_ranks;
        for (std::size_t q = 0; q < n_queries; ++q) {
            const std::size_t kb = 1 + rng.below(200);
            std::vector<double> scores(kb);
            Eigen::VectorXd e(static_cast<Eigen::Index>(kb));
            for (std::size_t i = 0; i < kb; ++i) {
                scores[i] = static_cast<double>(rng.below(30)) / 7.0;
                e[static_cast<Eigen::Index>(i)] = scores[i];
            }
            const auto gt = rng.below(kb);
            rankings.push_back(ranking_from_scores(e, static_cast<std::int64_t>(gt)));
            oracle_ranks.push_back(oracle::rank_of(scores, gt));
        }
        bool ok = median_rank(rankings) == oracle::lower_median(oracle_ranks);
        for (std::size_t k : {1, 5, 10}) ok = ok && recall_at_k(rankings, k) == oracle::recall(oracle_ranks, k);
        mismatches += ok ? 0 : 1;
    }
    const double t = seconds_since(t0);
    return {mismatches == 0 && t < 10.0,
            std::to_string(mismatches) + " mismatches in 1000 instances, " + fmt("%.2f s", t)};
}

// 2
Outcome det_golden() {
    Gazetteer g;
    g.add("Chandler", "person");
    const GazetteerRecognizer rec(g);
    const std::string q = "Why was Chandler acting weird?";
    const std::array<std::pair<TagStrategy, std::string>, 3> expect{{
        {TagStrategy::appositive, "Why was Chandler, a person, acting weird?"},
        {TagStrategy::mask_out, "Why was person acting weird?"},
        {TagStrategy::hyphen, "Why was Chandler-person, acting weird?"},
    }};
    std::string detail;
    bool pass = true;
    for (const auto& [s, want] : expect) {
        const auto got = tag(q, rec, s).rendered;
        pass = pass && got == want;
        detail += (detail.empty() ? "" : "; ") + to_string(s) + " -> \"" + got + "\"";
    }
    return {pass, detail};
}

// 3
Outcome da_bounds() {
    const Dataset train = synthetic_train(500, 31);
    const auto t0 = Clock::now();
    bool pass = true;
    std::string detail;

    IdentityTranslator id;
    for (double alpha : {0.0, 0.5, 0.95, 0.998, 1.0}) {
        AugmentConfig c;
        c.alpha = alpha;
        pass = pass && augment_training_set(train, id, c).dataset.size() == train.size();
    }
    detail += "identity keeps " + std::to_string(train.size());

    FunctionTranslator paraphrase([](const std::string& s, const std::string&) { return s; },
                                  [](const std::string& s, const std::string&) { return std::string(s.rbegin(), s.rend()); });
    const auto doubled = augment_training_set(train, paraphrase, AugmentConfig{}).dataset.size();
    pass = pass && doubled == 2 * train.size();
    detail += ", paraphrasing mock gives " + std::to_string(doubled);

    FunctionTranslator partial([](const std::string& s, const std::string&) { return s; },
                               [](const std::string& s, const std::string&) {
                                   std::istringstream in(s);
                                   std::string w, out;
                                   std::size_t i = 0;
                                   const std::size_t keep = 2 + s.size() % 5;
                                   while (in >> w) {
                                       if (i++ % keep != keep - 1) out += (out.empty() ? "" : " ") + w;
                                   }
                                   return out;
                               });
    std::vector<std::size_t> sweep;
    for (int step = 1; step <= 10; ++step) {
        AugmentConfig c;
        c.alpha = 0.1 * step;
        sweep.push_back(augment_training_set(train, partial, c).dataset.size() - train.size());
    }
    for (std::size_t i = 1; i < sweep.size(); ++i) pass = pass && sweep[i] >= sweep[i - 1];
    detail += ", survivors over alpha 0.1..1.0:";
    for (auto s : sweep) detail += " " + std::to_string(s);
    const double t = seconds_since(t0);
    pass = pass && t < 5.0;
    return {pass, detail + ", " + fmt("%.2f s", t)};
}

double worst_gradient_error(const std::vector<SoftmaxGroup<double>>& groups, const Eigen::VectorXd& w) {
    Eigen::VectorXd grad;
    mean_softmax_nll(groups, w, &grad);
    const auto fd = oracle::fd_gradient([&](const Eigen::VectorXd& x) { return mean_softmax_nll(groups, x); }, w);
    return oracle::relative_error(grad, fd);
}

// 4
Outcome gradient_checks() {
    Rng rng(77);
    double worst_ret = 0.0, worst_rea = 0.0;
    for (int f = 0; f < 100; ++f) {
        auto train = synthetic_train(6 + rng.below(10), 500 + static_cast<std::uint64_t>(f));
        const KnowledgeBase kb = build_kb({&train}).kb;
        const FeatureExtractor fx(kb);
        const auto groups = retrieval_groups(fx, train, kb, 1 + rng.below(kb.size() - 1), f, 0);
        Eigen::VectorXd w(kRetrievalFeatureDim);
        for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = rng.normal();
        worst_ret = std::max(worst_ret, worst_gradient_error(groups, w));
    }
    for (int f = 0; f < 100; ++f) {
        auto train = synthetic_train(3 + rng.below(8), 900 + static_cast<std::uint64_t>(f));
        ReasoningInputs in;
        in.knowledge = KnowledgeMode::gt;
        VisualFeatureTable captions;
        for (auto& s : train.samples) {
            s.clip_id = s.sample_id;
            captions.clips[s.clip_id] = {s.clip_id, {}, {}, s.answers[rng.below(s.answers.size())]};
        }
        in.features = &captions;
        const auto layout = make_layout(f % 2 ? VisionSource::caption : VisionSource::none);
        const auto groups = reasoning_groups(train, layout, in);
        Eigen::VectorXd w(static_cast<Eigen::Index>(layout.total() + 1));
        for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = rng.normal();
        worst_rea = std::max(worst_rea, worst_gradient_error(groups, w));
    }
    return {worst_ret < 1e-5 && worst_rea < 1e-5,
            "worst relative error: retrieval " + fmt("%.2e", worst_ret) + ", reasoning " + fmt("%.2e", worst_rea)};
}

// 5
Outcome loss_anchors() {
    const auto train = synthetic_train(64, 5);
    const KnowledgeBase kb = build_kb({&train}).kb;
    RetrievalHyper h;
    h.negatives = 31;
    h.epochs = 0;
    const double ret = train_retrieval(ScorerParams::zeros(), train, kb, h).initial_loss;
    ReasoningInputs in;
    in.knowledge = KnowledgeMode::gt;
    ReasoningHyper rh;
    rh.epochs = 0;
    const double rea = train_reasoning(ReasonerParams::zeros(FusionLayout{}), train, in, rh).initial_loss;
    const double e1 = std::abs(ret - std::log(32.0));
    const double e2 = std::abs(rea - std::log(4.0));
    return {e1 <= 1e-9 && e2 <= 1e-9,
            "retrieval " + fmt("%.12f", ret) + " (ln 32 " + fmt("%+.1e", ret - std::log(32.0)) + "), reasoning " +
                fmt("%.12f", rea) + " (ln 4 " + fmt("%+.1e", rea - std::log(4.0)) + ")"};
}

// 6
Outcome separable_end_to_end() {
    const auto t0 = Clock::now();
    const auto r = run_experiment(load_data_config("separable.yaml"));
    const double t = seconds_since(t0);
    const double r1 = r.retrieval.r_at.at(1);
    return {r1 >= 0.95 && r.retrieval.mr == 1 && r.accuracy >= 0.90 && t < 60.0,
            "R@1 " + fmt("%.3f", r1) + ", MR " + std::to_string(r.retrieval.mr) + ", accuracy " +
                fmt("%.3f", r.accuracy) + ", " + fmt("%.1f s", t)};
}

// 7
Outcome det_transfer() {
    double with_det = 0.0, without = 0.0;
    std::string per_seed;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto on = load_data_config("det_transfer.yaml");
        auto off = load_data_config("det_transfer_off.yaml");
        on.seed = off.seed = seed;
        on.retrieval.seed = off.retrieval.seed = seed;
        on.reasoning.seed = off.reasoning.seed = seed;
        const auto mr_on = run_experiment(on).retrieval.mr;
        const auto mr_off = run_experiment(off).retrieval.mr;
        with_det += static_cast<double>(mr_on) / 5.0;
        without += static_cast<double>(mr_off) / 5.0;
        per_seed += " " + std::to_string(mr_on) + "/" + std::to_string(mr_off);
    }
    return {with_det < without && 2.0 * with_det <= without,
            "mean MR with DET " + fmt("%.2f", with_det) + ", without " + fmt("%.2f", without) +
                " (per seed with/without:" + per_seed + ")"};
}

// 8
Outcome gt_dominance() {
    bool pass = true;
    std::string detail;
    auto compare = [&](ExperimentConfig c, const std::string& label) {
        c.knowledge = KnowledgeMode::retrieved;
        const double retrieved = run_experiment(c).accuracy;
        c.knowledge = KnowledgeMode::gt;
        const double gt = run_experiment(c).accuracy;
        pass = pass && gt >= retrieved;
        detail += (detail.empty() ? "" : "; ") + label + ": GT " + fmt("%.3f", gt) + " vs retrieved " +
                  fmt("%.3f", retrieved);
    };
    auto c = load_data_config("separable.yaml");
    compare(c, "separable corpus");
    c.source.synthetic->entities_per_type = 8;
    c.source.synthetic->unique_entities = false;
    compare(c, "shared-entity corpus");
    return {pass, detail};
}

// 9
Outcome determinism() {
    const auto dir = work_root();
    const std::string cfg = (fs::path(KNOWTRANS_DATA_DIR) / "transfer_da.yaml").string();
    std::vector<nlohmann::json> runs;
    for (int i = 0; i < 2; ++i) {
        const auto out = dir / ("determinism_" + std::to_string(i) + ".json");
        fs::remove(out);
        int rc = 0;
        run_cli("run --config \"" + cfg + "\" --out \"" + out.string() + "\"", rc);
        if (rc != 0 || !fs::exists(out)) return {false, "run --config failed"};
        runs.push_back(to_json(load_report(out), false));
    }
    const bool same = runs[0] == runs[1];
    return {same, std::string(same ? "identical" : "different") + " metrics across two runs (R@1 " +
                      fmt("%.3f", runs[0]["retrieval"]["r_at"]["1"].get<double>()) + ", accuracy " +
                      fmt("%.3f", runs[0]["accuracy"].get<double>()) + ")"};
}

// 10
Outcome report_schema() {
    const auto dir = work_root() / "reports";
    fs::create_directories(dir);
    std::string args = "report --layout retrieval";
    int i = 0;
    for (const auto& r : golden::retrieval_reports()) {
        const auto p = dir / ("r" + std::to_string(i++) + ".json");
        save_report(r, p);
        args += " \"" + p.string() + "\"";
    }
    int rc = 0;
    const std::string got = run_cli(args, rc);
    const std::string want = golden::read_file(KNOWTRANS_GOLDEN_DIR "/retrieval_table.md");
    const std::string header = got.substr(0, got.find('\n'));
    const bool columns = header == "| Source   | Target   | Learning             |   R@1 |   R@5 |  R@10 |  MR |";
    return {rc == 0 && got == want && columns,
            std::string(got == want ? "matches" : "differs from") + " the golden table; header " + header};
}

}  // namespace

// `--expect-fail N` marks criterion N as a known, documented failure: it is
// still reported as FAIL but does not fail the run. If it starts passing the
// run fails so the marker gets removed.
int main(int argc, char** argv) {
    std::set<std::size_t> expected_failures;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--expect-fail" && i + 1 < argc) {
            expected_failures.insert(std::stoul(argv[++i]));
        } else {
            std::cerr << "usage: acceptance [--expect-fail N]...\n";
            return 2;
        }
    }
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"metric oracle equivalence", metric_oracle},
        {"DET golden renderings", det_golden},
        {"DA bounds", da_bounds},
        {"gradient checks", gradient_checks},
        {"loss anchors", loss_anchors},
        {"separable synthetic end-to-end", separable_end_to_end},
        {"DET directional transfer", det_transfer},
        {"GT-knowledge dominance", gt_dominance},
        {"determinism", determinism},
        {"report schema", report_schema},
    };
    std::size_t passed = 0;
    int status = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const bool expected = expected_failures.count(i + 1) > 0;
        std::string note;
        if (o.pass) {
            ++passed;
            if (expected) {
                note = " [marked as an expected failure but passed]";
                status = 1;
            }
        } else if (expected) {
            note = " [known failure, analysis in README]";
        } else {
            status = 1;
        }
        std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << (i + 1) << " " << criteria[i].first << ": "
                  << o.detail << note << std::endl;
    }
    std::cout << passed << "/" << criteria.size() << " criteria passed" << std::endl;
    return status;
}
