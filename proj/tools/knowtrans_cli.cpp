#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "knowtrans/augment.hpp"
#include "knowtrans/corpus.hpp"
#include "knowtrans/det.hpp"
#include "knowtrans/experiment.hpp"
#include "knowtrans/metrics.hpp"
#include "knowtrans/random.hpp"
#include "knowtrans/reasoning.hpp"
#include "knowtrans/retrieval.hpp"
#include "knowtrans/synthetic.hpp"

using namespace knowtrans;

namespace {

struct RetrievalOpts {
    std::string train, kb, out;
    RetrievalHyper hyper;
};

void add_hyper(CLI::App* cmd, RetrievalOpts& o) {
    cmd->add_option("--train", o.train, "training dataset (JSONL)")->required();
    cmd->add_option("--kb", o.kb, "knowledge base (JSONL)")->required();
    cmd->add_option("--out,-o", o.out, "output scorer params (JSON)")->required();
    cmd->add_option("--epochs", o.hyper.epochs);
    cmd->add_option("--learning-rate,--lr", o.hyper.learning_rate);
    cmd->add_option("--negatives", o.hyper.negatives, "negatives per positive");
    cmd->add_option("--batch-size", o.hyper.batch_size);
    cmd->add_option("--seed", o.hyper.seed);
}

void print_trace(const RetrievalTrainResult& r) {
    std::cout << "initial loss " << r.initial_loss << '\n';
    for (std::size_t e = 0; e < r.epoch_losses.size(); ++e) {
        std::cout << "epoch " << e + 1 << " loss " << r.epoch_losses[e] << '\n';
    }
}

void print_metrics(const RetrievalMetrics& m) {
    std::cout << std::fixed << std::setprecision(3) << "R@1 " << m.r_at.at(1) << "  R@5 " << m.r_at.at(5)
              << "  R@10 " << m.r_at.at(10) << "  MR " << m.mr << "  (" << m.n_queries << " queries)\n";
}

struct ReasoningOpts {
    std::string data, kb, rankings, features;
    std::string knowledge = "retrieved";
    std::string vision = "none";
    std::size_t top_k = kDefaultTopK;
};

void add_reasoning_inputs(CLI::App* cmd, ReasoningOpts& o) {
    cmd->add_option("--kb", o.kb, "knowledge base (JSONL)");
    cmd->add_option("--rankings", o.rankings, "rankings of the dataset (JSONL)");
    cmd->add_option("--features", o.features, "visual features (JSONL)");
    cmd->add_option("--knowledge", o.knowledge, "retrieved | gt | none");
    cmd->add_option("--vision", o.vision, "image | facial | caption | none");
    cmd->add_option("--top-k", o.top_k, "knowledge texts per sample");
}

struct LoadedInputs {
    KnowledgeBase kb;
    std::vector<RetrievalRanking> rankings;
    std::optional<VisualFeatureTable> features;
    ReasoningInputs inputs;
};

void load_inputs(const ReasoningOpts& o, LoadedInputs& l) {
    l.inputs.knowledge = parse_knowledge_mode(o.knowledge);
    l.inputs.vision = parse_vision_source(o.vision);
    l.inputs.top_k = o.top_k;
    if (!o.kb.empty()) {
        l.kb = load_kb(o.kb);
        l.inputs.kb = &l.kb;
    }
    if (!o.rankings.empty()) {
        l.rankings = load_rankings(o.rankings);
        l.inputs.rankings = &l.rankings;
    }
    if (!o.features.empty()) {
        l.features = load_visual_features(o.features);
        l.inputs.features = &*l.features;
    }
    if (l.inputs.knowledge == KnowledgeMode::retrieved && (l.inputs.kb == nullptr || l.inputs.rankings == nullptr)) {
        throw ConfigError("retrieved knowledge needs --kb and --rankings");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Knowledge retrieval and answer prediction toolkit for knowledge-based VideoQA."};
    app.require_subcommand(1);

    // generate
    std::string gen_out, gen_gaz_out, gen_forbid, gen_name = "synthetic";
    SyntheticSource gen;
    std::uint64_t gen_seed = 0;
    auto* generate = app.add_subcommand("generate", "generate a synthetic corpus");
    generate->add_option("--out,-o", gen_out, "output dataset (JSONL)")->required();
    generate->add_option("--gazetteer-out", gen_gaz_out, "write the corpus gazetteer (TSV)");
    generate->add_option("--avoid", gen_forbid, "gazetteer whose tokens entity names must avoid");
    generate->add_option("--name", gen_name);
    generate->add_option("--n", gen.n_samples, "number of samples");
    generate->add_option("--entities-per-type", gen.entities_per_type);
    generate->add_flag("--unique-entities", gen.unique_entities, "draw entities without replacement");
    generate->add_option("--seed", gen_seed);

    // ingest
    std::string ingest_in, ingest_out;
    std::size_t ingest_answers = 4;
    auto* ingest = app.add_subcommand("ingest", "validate a JSONL dataset");
    ingest->add_option("input", ingest_in)->required();
    ingest->add_option("--answers", ingest_answers, "expected number of candidate answers");
    ingest->add_option("--out,-o", ingest_out, "write a normalized copy");

    // split
    std::string split_in, split_dir;
    SplitFractions fractions;
    std::uint64_t split_seed = 0;
    auto* split = app.add_subcommand("split", "split a dataset into train/val/test");
    split->add_option("input", split_in)->required();
    split->add_option("--out-dir", split_dir)->required();
    split->add_option("--train", fractions.train);
    split->add_option("--val", fractions.val);
    split->add_option("--test", fractions.test);
    split->add_option("--seed", split_seed);

    // tag
    std::string tag_in, tag_out, tag_gaz, tag_strategy = "appositive";
    auto* tag_cmd = app.add_subcommand("tag", "insert entity type labels (DET)");
    tag_cmd->add_option("input,--in", tag_in)->required();
    tag_cmd->add_option("--gazetteer", tag_gaz, "surface<TAB>type TSV")->required();
    tag_cmd->add_option("--strategy", tag_strategy, "appositive | mask-out | hyphen");
    tag_cmd->add_option("--out,-o", tag_out)->required();

    // augment
    std::string aug_in, aug_out, aug_fields = "q,a", aug_translator = "identity", aug_log;
    AugmentConfig aug;
    std::vector<std::string> aug_pivots;
    auto* augment = app.add_subcommand("augment", "back-translation data augmentation (DA)");
    augment->add_option("input", aug_in)->required();
    augment->add_option("--out,-o", aug_out)->required();
    augment->add_option("--alpha", aug.alpha, "similarity threshold");
    augment->add_option("--pivot", aug_pivots, "pivot language (repeatable)");
    augment->add_option("--fields", aug_fields, "q,a,k");
    augment->add_option("--translator", aug_translator, "identity | mock:<file> | http:<url>");
    augment->add_option("--batch-size", aug.batch_size);
    augment->add_option("--max-in-flight", aug.max_in_flight);
    augment->add_option("--pivot-log", aug_log, "write intermediate pivot texts");

    // build-kb
    std::vector<std::string> kb_inputs;
    std::string kb_out;
    auto* build = app.add_subcommand("build-kb", "collect knowledge into a deduplicated base");
    build->add_option("inputs", kb_inputs)->required();
    build->add_option("--out,-o", kb_out)->required();

    // train-retrieval / transfer
    RetrievalOpts tr, tf;
    std::string tf_init;
    auto* train_ret = app.add_subcommand("train-retrieval", "train the retrieval scorer from zero");
    add_hyper(train_ret, tr);
    auto* transfer = app.add_subcommand("transfer", "finetune a pre-trained scorer on a target dataset");
    add_hyper(transfer, tf);
    transfer->add_option("--init", tf_init, "pre-trained scorer params")->required();

    // rank
    std::string rank_params, rank_kb, rank_data, rank_out;
    std::size_t rank_k = 10, rank_threads = 1;
    auto* rank_cmd = app.add_subcommand("rank", "rank the knowledge base for every sample");
    rank_cmd->add_option("--params", rank_params)->required();
    rank_cmd->add_option("--kb", rank_kb)->required();
    rank_cmd->add_option("--data", rank_data)->required();
    rank_cmd->add_option("--k", rank_k, "entries kept per query");
    rank_cmd->add_option("--threads", rank_threads);
    rank_cmd->add_option("--out,-o", rank_out)->required();

    // eval-retrieval
    std::string evr_rankings;
    auto* eval_ret = app.add_subcommand("eval-retrieval", "R@1/5/10 and median rank of a rankings file");
    eval_ret->add_option("rankings", evr_rankings)->required();

    // train-reasoning
    ReasoningOpts trr;
    std::string trr_out;
    ReasoningHyper trr_hyper;
    auto* train_rea = app.add_subcommand("train-reasoning", "train the answer scorer");
    train_rea->add_option("--train", trr.data)->required();
    train_rea->add_option("--out,-o", trr_out)->required();
    add_reasoning_inputs(train_rea, trr);
    train_rea->add_option("--epochs", trr_hyper.epochs);
    train_rea->add_option("--learning-rate,--lr", trr_hyper.learning_rate);
    train_rea->add_option("--batch-size", trr_hyper.batch_size);
    train_rea->add_option("--seed", trr_hyper.seed);

    // eval-reasoning
    ReasoningOpts evq;
    std::string evq_params, evq_out;
    auto* eval_rea = app.add_subcommand("eval-reasoning", "answer accuracy on a dataset");
    eval_rea->add_option("--data", evq.data)->required();
    eval_rea->add_option("--params", evq_params)->required();
    eval_rea->add_option("--predictions", evq_out, "write per-sample predictions (JSONL)");
    add_reasoning_inputs(eval_rea, evq);

    // stats
    std::string stats_in;
    std::size_t stats_top = 20;
    bool stats_keep_stopwords = false;
    auto* stats = app.add_subcommand("stats", "question types, vocabulary and field lengths");
    stats->add_option("input", stats_in)->required();
    stats->add_option("--top", stats_top, "vocabulary entries to list");
    stats->add_flag("--keep-stopwords", stats_keep_stopwords);

    // run
    std::string run_config, run_dir, run_out;
    auto* run = app.add_subcommand("run", "run an experiment from a config file");
    run->add_option("--config,-c", run_config)->required();
    run->add_option("--work-dir", run_dir, "keep stage artifacts here");
    run->add_option("--out,-o", run_out, "report (JSON)");

    // report
    std::vector<std::string> report_in;
    std::string report_layout = "retrieval";
    auto* report = app.add_subcommand("report", "render reports as a table");
    report->add_option("reports", report_in)->required();
    report->add_option("--layout", report_layout, "retrieval | reasoning");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*generate) {
            GeneratorConfig g;
            g.name = gen_name;
            g.templates = default_templates();
            g.lexicon = default_lexicon();
            g.n_samples = gen.n_samples;
            g.unique_entities = gen.unique_entities;
            std::set<std::string> forbidden;
            if (!gen_forbid.empty()) {
                for (const auto& [surface, _] : load_gazetteer(gen_forbid).entries()) {
                    for (const auto& t : tokenize(surface)) forbidden.insert(t);
                }
            }
            g.gazetteer = synthesize_gazetteer(Rng::derive(gen_seed, 1).next(), template_entity_types(g.templates),
                                               gen.entities_per_type, forbidden);
            const Dataset d = generate_synthetic(g, Rng::derive(gen_seed, 2).next());
            save_dataset(d, gen_out);
            if (!gen_gaz_out.empty()) {
                Gazetteer gaz;
                for (const auto& [type, names] : g.gazetteer) {
                    for (const auto& n : names) gaz.add(n, type);
                }
                save_gazetteer(gaz, gen_gaz_out);
            }
            std::cout << "wrote " << d.size() << " samples to " << gen_out << '\n';
        } else if (*ingest) {
            const Dataset d = load_dataset(ingest_in, ingest_answers);
            std::cout << ingest_in << ": " << d.size() << " valid samples\n";
            if (!ingest_out.empty()) save_dataset(d, ingest_out);
        } else if (*split) {
            const Dataset d = load_dataset(split_in);
            const auto parts = split_dataset(d, fractions, split_seed);
            std::filesystem::create_directories(split_dir);
            const std::filesystem::path dir(split_dir);
            save_dataset(parts.train, dir / "train.jsonl");
            save_dataset(parts.val, dir / "val.jsonl");
            save_dataset(parts.test, dir / "test.jsonl");
            std::cout << "train " << parts.train.size() << "  val " << parts.val.size() << "  test "
                      << parts.test.size() << '\n';
        } else if (*tag_cmd) {
            std::set<std::string> labels(default_entity_labels().begin(), default_entity_labels().end());
            const GazetteerRecognizer recognizer(load_gazetteer(tag_gaz, true, labels));
            const Dataset d = tag_dataset(load_dataset(tag_in), recognizer, parse_tag_strategy(tag_strategy));
            save_dataset(d, tag_out);
            std::cout << "tagged " << d.size() << " samples\n";
        } else if (*augment) {
            if (!aug_pivots.empty()) aug.pivot_languages = aug_pivots;
            aug.fields = parse_augment_fields(aug_fields);
            std::ofstream pivot_log;
            if (!aug_log.empty()) {
                pivot_log.open(aug_log);
                aug.pivot_log = &pivot_log;
            }
            auto translator = make_translator(aug_translator);
            const auto result = augment_training_set(load_dataset(aug_in), *translator, aug);
            save_dataset(result.dataset, aug_out);
            for (const auto& p : result.passes) {
                std::cout << "pivot " << p.pivot << ": " << p.candidates << " candidates, " << p.removed
                          << " removed, " << p.survivors << " kept\n";
            }
        } else if (*build) {
            std::vector<Dataset> ds;
            for (const auto& p : kb_inputs) ds.push_back(load_dataset(p));
            std::vector<const Dataset*> ptrs;
            for (const auto& d : ds) ptrs.push_back(&d);
            const auto kb = build_kb(ptrs, ds.front().name).kb;
            save_kb(kb, kb_out);
            std::cout << "knowledge base: " << kb.size() << " entries\n";
        } else if (*train_ret) {
            const auto r = train_retrieval(ScorerParams::zeros(), load_dataset(tr.train), load_kb(tr.kb), tr.hyper);
            save_scorer_params(r.params, tr.out);
            print_trace(r);
        } else if (*transfer) {
            const auto r =
                transfer_finetune(load_scorer_params(tf_init), load_dataset(tf.train), load_kb(tf.kb), tf.hyper);
            save_scorer_params(r.params, tf.out);
            print_trace(r);
        } else if (*rank_cmd) {
            const KnowledgeBase kb = load_kb(rank_kb);
            const FeatureExtractor extractor(kb);
            const auto rankings =
                rank_dataset(extractor, kb, load_scorer_params(rank_params), load_dataset(rank_data), rank_threads);
            save_rankings(rankings, rank_k, rank_out);
            std::cout << "ranked " << rankings.size() << " queries\n";
        } else if (*eval_ret) {
            print_metrics(retrieval_metrics(load_rankings(evr_rankings)));
        } else if (*train_rea) {
            LoadedInputs l;
            load_inputs(trr, l);
            const Dataset train = load_dataset(trr.data);
            const FusionLayout layout = make_layout(l.inputs.vision, l.inputs.features);
            const auto r = train_reasoning(ReasonerParams::zeros(layout), train, l.inputs, trr_hyper);
            save_reasoner_params(r.params, trr_out);
            std::cout << "initial loss " << r.initial_loss << '\n';
            for (std::size_t e = 0; e < r.epoch_losses.size(); ++e) {
                std::cout << "epoch " << e + 1 << " loss " << r.epoch_losses[e] << '\n';
            }
        } else if (*eval_rea) {
            LoadedInputs l;
            load_inputs(evq, l);
            const auto params = load_reasoner_params(evq_params);
            const auto predictions = predict_dataset(load_dataset(evq.data, 4, std::nullopt, Split::test), params,
                                                     l.inputs);
            if (!evq_out.empty()) {
                std::ofstream out(evq_out);
                for (const auto& p : predictions) {
                    out << nlohmann::json{{"sample_id", p.sample_id},
                                          {"scores", p.scores},
                                          {"predicted_index", p.predicted_index},
                                          {"correct", p.correct}}
                               .dump()
                        << '\n';
                }
            }
            std::cout << std::fixed << std::setprecision(3) << "accuracy " << accuracy(predictions) << "  ("
                      << predictions.size() << " samples)\n";
        } else if (*stats) {
            const auto st = corpus_stats(load_dataset(stats_in),
                                         stats_keep_stopwords ? std::set<std::string>{} : default_stopwords());
            std::cout << to_json(st, stats_top).dump(2) << '\n';
        } else if (*run) {
            const auto config = load_experiment_config(run_config);
            const Report r = run_experiment(config, run_dir, &std::cerr);
            if (!run_out.empty()) save_report(r, run_out);
            std::cout << emit_report_table({r}, config.layout);
        } else if (*report) {
            std::vector<Report> reports;
            for (const auto& p : report_in) reports.push_back(load_report(p));
            std::cout << emit_report_table(reports, parse_report_layout(report_layout));
        }
    } catch (const StageError& e) {
        std::cerr << "error in stage " << e.stage() << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
