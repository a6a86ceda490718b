#include "knowtrans/experiment.hpp"

#include <filesystem>

#include "doctest.h"
#include "golden_reports.hpp"

using namespace knowtrans;

namespace {

const char* kSmall = R"(
name: smoke
seed: 3
source:
  name: tiny
  synthetic:
    n_samples: 50
    entities_per_type: 40
    unique_entities: true
retrieval:
  epochs: 5
  negatives: 15
reasoning:
  epochs: 10
)";

const char* kTransfer = R"(
name: smoke-transfer
seed: 4
source:
  name: src
  synthetic: {n_samples: 60, entities_per_type: 40, unique_entities: true}
target:
  name: tgt
  synthetic: {n_samples: 50, entities_per_type: 6}
learning: transfer
det: {strategy: appositive}
da: {enabled: true, translator: identity}
retrieval: {epochs: 3, negatives: 7}
reasoning: {epochs: 3}
)";

std::filesystem::path scratch(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("knowtrans_test_experiment_" + name);
    std::filesystem::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("config parsing fills defaults and overrides") {
    const auto c = parse_experiment_config(kSmall);
    CHECK(c.name == "smoke");
    CHECK(c.seed == 3);
    CHECK(c.source.synthetic->n_samples == 50);
    CHECK(c.source.synthetic->unique_entities);
    CHECK(c.learning == LearningMode::direct);
    CHECK_FALSE(c.det.strategy.has_value());
    CHECK(c.retrieval.negatives == 15);
    CHECK(c.retrieval.learning_rate == RetrievalHyper{}.learning_rate);
    CHECK(c.retrieval.seed == 3);
    CHECK(c.reasoning.epochs == 10);
    CHECK(c.top_k == kDefaultTopK);
    CHECK_FALSE(c.evaluates_target());

    const auto t = parse_experiment_config(kTransfer);
    CHECK(t.learning == LearningMode::transfer);
    CHECK(t.det.strategy == TagStrategy::appositive);
    CHECK(t.da.enabled);
    CHECK(t.evaluates_target());
}

TEST_CASE("relative paths resolve against the config directory") {
    const auto c = parse_experiment_config("source: {path: data/x.jsonl, gazetteer: g.tsv}\n"
                                           "da: {translator: 'mock:table.tsv'}\n",
                                           "/cfg");
    CHECK(c.source.path == "/cfg/data/x.jsonl");
    CHECK(c.source.gazetteer == "/cfg/g.tsv");
    CHECK(c.source.name == "x");
    CHECK(c.da.translator == "mock:/cfg/table.tsv");
}

TEST_CASE("config errors") {
    CHECK_THROWS_WITH_AS(parse_experiment_config("sede: 1\nsource: {path: a}\n"), "config: unknown key 'sede'",
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_experiment_config("source: {path: a}\nretrieval: {lr: 1}\n"),
                         "retrieval: unknown key 'lr'", ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("source: {path: a}\nseed: many\n"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("source: {path: a}\nlearning: sideways\n"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("source: {path: a}\nlearning: transfer\n"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("source: {path: a, synthetic: {}}\n"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("seed: 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("source: {path: a}\nvision: image\n"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("source: {path: a}\ntop_k: 0\n"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("source: {path: a}\ndet: {strategy: bold}\n"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("source: [unclosed\n"), ConfigError);
    CHECK_THROWS_AS(load_experiment_config("/nonexistent/config.yaml"), ConfigError);
}

TEST_CASE("fingerprints") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);

    const auto a = parse_experiment_config(kSmall);
    const auto b = parse_experiment_config(std::string(kSmall) + "\n# trailing comment\n");
    CHECK(fingerprint(a) == fingerprint(b));
    CHECK(fingerprint(a).size() == 16);
    auto c = a;
    c.seed = 4;
    CHECK(fingerprint(a) != fingerprint(c));
    auto d = a;
    d.retrieval.epochs = 6;
    CHECK(fingerprint(a) != fingerprint(d));
}

TEST_CASE("a small direct run writes every artifact") {
    const auto dir = scratch("direct");
    const auto report = run_experiment(parse_experiment_config(kSmall), dir);
    CHECK(report.n_test == 5);
    CHECK(report.n_train == 40);
    CHECK(report.kb_size == 50);
    CHECK(report.retrieval.n_queries == 5);
    CHECK(report.retrieval_loss.epochs.size() == 5);
    CHECK(report.retrieval_loss.initial == doctest::Approx(std::log(16.0)));
    CHECK(report.reasoning_loss.initial == doctest::Approx(std::log(4.0)));
    CHECK(report.source_label == "tiny");
    CHECK(report.target_label == "-");
    CHECK(report.learning_label == "Direct");
    for (const char* f : {"tiny.jsonl", "tiny.kb.jsonl", "scorer.json", "rankings.test.jsonl", "reasoner.json",
                          "report.json"}) {
        CHECK_MESSAGE(std::filesystem::exists(dir / f), f);
    }
    const auto loaded = load_report(dir / "report.json");
    CHECK(to_json(loaded, false) == to_json(report, false));
}

TEST_CASE("runs are deterministic") {
    const auto c = parse_experiment_config(kSmall);
    CHECK(to_json(run_experiment(c), false) == to_json(run_experiment(c), false));
    auto threaded = c;
    threaded.threads = 4;
    CHECK(to_json(run_experiment(threaded), false).at("retrieval") == to_json(run_experiment(c), false).at("retrieval"));
}

TEST_CASE("transfer with DET and DA") {
    const auto dir = scratch("transfer");
    const auto report = run_experiment(parse_experiment_config(kTransfer), dir);
    CHECK(report.source_label == "src");
    CHECK(report.target_label == "tgt");
    CHECK(report.learning_label == "Transfer (w/ DET+DA)");
    CHECK(report.det_label == "appositive");
    CHECK(report.pretrain_loss.has_value());
    CHECK(report.n_augmented == 0);
    CHECK(std::filesystem::exists(dir / "scorer.pre.json"));
    CHECK(std::filesystem::exists(dir / "tgt.det.train.jsonl"));
    CHECK(std::filesystem::exists(dir / "tgt.da.train.jsonl"));
    const auto pre = load_scorer_params(dir / "scorer.pre.json");
    const auto fine = load_scorer_params(dir / "scorer.json");
    CHECK(fine.metadata.lineage.size() == 2);
    CHECK(pre.metadata.lineage.size() == 1);
}

TEST_CASE("direct-both labels") {
    auto c = parse_experiment_config(kTransfer);
    c.learning = LearningMode::direct_both;
    c.det.strategy.reset();
    c.da.enabled = false;
    const auto r = run_experiment(c);
    CHECK(r.source_label == "Both");
    CHECK(r.target_label == "-");
    CHECK(r.learning_label == "Direct");
}

TEST_CASE("stage failures name the stage and keep earlier artifacts") {
    auto c = parse_experiment_config(kSmall);
    c.retrieval.negatives = 500;
    const auto dir = scratch("fail");
    try {
        run_experiment(c, dir);
        FAIL("expected a StageError");
    } catch (const StageError& e) {
        CHECK(e.stage() == "train-retrieval");
    }
    CHECK(std::filesystem::exists(dir / "tiny.kb.jsonl"));
    CHECK_FALSE(std::filesystem::exists(dir / "scorer.json"));

    auto t = parse_experiment_config(kSmall);
    t.da.enabled = true;
    t.da.translator = "mock:/nonexistent.tsv";
    try {
        run_experiment(t);
        FAIL("expected a StageError");
    } catch (const StageError& e) {
        CHECK(e.stage() == "augment");
    }
}

TEST_CASE("report tables match the golden files") {
    CHECK(emit_report_table(golden::retrieval_reports(), ReportLayout::retrieval) ==
          golden::read_file(KNOWTRANS_GOLDEN_DIR "/retrieval_table.md"));
    CHECK(emit_report_table(golden::reasoning_reports(), ReportLayout::reasoning) ==
          golden::read_file(KNOWTRANS_GOLDEN_DIR "/reasoning_table.md"));
    CHECK_THROWS_AS(emit_report_table(golden::reasoning_reports(), ReportLayout::retrieval), ConfigError);
    CHECK(emit_report_table({}, ReportLayout::retrieval).find("| Source | Target | Learning |") == 0);
}
