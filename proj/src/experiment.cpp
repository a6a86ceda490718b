#include "knowtrans/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "knowtrans/random.hpp"

namespace knowtrans {

using nlohmann::json;

std::string to_string(LearningMode m) {
    switch (m) {
        case LearningMode::direct: return "direct";
        case LearningMode::direct_both: return "direct-both";
        case LearningMode::transfer: return "transfer";
    }
    return "direct";
}

LearningMode parse_learning_mode(const std::string& s) {
    if (s == "direct") return LearningMode::direct;
    if (s == "direct-both" || s == "direct_both" || s == "both") return LearningMode::direct_both;
    if (s == "transfer") return LearningMode::transfer;
    throw ConfigError("unknown learning mode '" + s + "' (expected direct, direct-both or transfer)");
}

std::string to_string(ReportLayout l) {
    return l == ReportLayout::retrieval ? "retrieval" : "reasoning";
}

ReportLayout parse_report_layout(const std::string& s) {
    if (s == "retrieval") return ReportLayout::retrieval;
    if (s == "reasoning") return ReportLayout::reasoning;
    throw ConfigError("unknown report layout '" + s + "' (expected retrieval or reasoning)");
}

bool ExperimentConfig::evaluates_target() const {
    if (evaluate_on.empty()) return target.configured();
    return evaluate_on == "target";
}

void ExperimentConfig::validate() const {
    if (!evaluate_on.empty() && evaluate_on != "source" && evaluate_on != "target") {
        throw ConfigError("evaluate_on must be 'source' or 'target'");
    }
    if (learning != LearningMode::direct) {
        if (!source.configured() || !target.configured()) {
            throw ConfigError(to_string(learning) + " learning needs both a source and a target dataset");
        }
        if (!evaluates_target()) throw ConfigError(to_string(learning) + " learning evaluates on the target");
    }
    const DatasetSource& eval = evaluates_target() ? target : source;
    if (!eval.configured()) throw ConfigError("the evaluated dataset is not configured");
    if ((vision == VisionSource::image || vision == VisionSource::facial) && eval.features.empty()) {
        throw ConfigError("vision '" + to_string(vision) + "' needs a features file for the evaluated dataset");
    }
    if (top_k == 0) throw ConfigError("top_k must be positive");
    if (da.enabled && !(da.alpha >= 0.0 && da.alpha <= 1.0)) throw ConfigError("da.alpha must lie in [0, 1]");
    if (retrieval.batch_size == 0 || reasoning.batch_size == 0) throw ConfigError("batch_size must be positive");
}

// ---------------------------------------------------------------------------
// YAML

namespace {

void check_keys(const YAML::Node& node, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!node.IsMap()) throw ConfigError(where + ": expected a mapping");
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& out, const std::string& where) {
    if (!node[key]) return;
    try {
        out = node[key].as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(where + "." + key + ": invalid value");
    }
}

std::string resolve(const std::string& p, const std::filesystem::path& base) {
    if (p.empty() || base.empty() || std::filesystem::path(p).is_absolute()) return p;
    return (base / p).lexically_normal().string();
}

DatasetSource parse_source(const YAML::Node& node, const std::string& where, const std::filesystem::path& base) {
    DatasetSource s;
    if (!node) return s;
    check_keys(node, {"name", "path", "synthetic", "gazetteer", "features"}, where);
    read(node, "name", s.name, where);
    read(node, "path", s.path, where);
    read(node, "gazetteer", s.gazetteer, where);
    read(node, "features", s.features, where);
    s.path = resolve(s.path, base);
    s.gazetteer = resolve(s.gazetteer, base);
    s.features = resolve(s.features, base);
    if (const auto syn = node["synthetic"]) {
        const std::string w = where + ".synthetic";
        SyntheticSource g;
        if (!syn.IsNull()) {
            check_keys(syn, {"n_samples", "entities_per_type", "unique_entities", "seed"}, w);
            read(syn, "n_samples", g.n_samples, w);
            read(syn, "entities_per_type", g.entities_per_type, w);
            read(syn, "unique_entities", g.unique_entities, w);
            read(syn, "seed", g.seed, w);
        }
        s.synthetic = g;
    }
    if (!s.path.empty() && s.synthetic) throw ConfigError(where + ": give either path or synthetic, not both");
    if (s.configured() && s.name.empty()) {
        s.name = s.synthetic ? where : std::filesystem::path(s.path).stem().string();
    }
    return s;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& yaml_text, const std::filesystem::path& base_dir) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config is not valid YAML: ") + e.what());
    }
    ExperimentConfig c;
    check_keys(root,
               {"name", "seed", "source", "target", "learning", "evaluate_on", "det", "da", "vision", "knowledge",
                "retrieval", "reasoning", "top_k", "split", "threads", "layout"},
               "config");
    read(root, "name", c.name, "config");
    read(root, "seed", c.seed, "config");
    c.source = parse_source(root["source"], "source", base_dir);
    c.target = parse_source(root["target"], "target", base_dir);
    std::string s;
    if (root["learning"]) {
        read(root, "learning", s, "config");
        c.learning = parse_learning_mode(s);
    }
    read(root, "evaluate_on", c.evaluate_on, "config");
    if (const auto det = root["det"]) {
        check_keys(det, {"strategy", "gazetteer"}, "det");
        std::string strategy = "off";
        read(det, "strategy", strategy, "det");
        if (strategy != "off" && strategy != "none") {
            try {
                c.det.strategy = parse_tag_strategy(strategy);
            } catch (const std::exception& e) {
                throw ConfigError(std::string("det.strategy: ") + e.what());
            }
        }
        read(det, "gazetteer", c.det.gazetteer, "det");
        c.det.gazetteer = resolve(c.det.gazetteer, base_dir);
    }
    if (const auto da = root["da"]) {
        check_keys(da, {"enabled", "alpha", "pivots", "fields", "translator"}, "da");
        read(da, "enabled", c.da.enabled, "da");
        read(da, "alpha", c.da.alpha, "da");
        read(da, "pivots", c.da.pivots, "da");
        if (da["fields"]) {
            std::string fields;
            read(da, "fields", fields, "da");
            c.da.fields = parse_augment_fields(fields);
        }
        read(da, "translator", c.da.translator, "da");
        const std::string prefix = "mock:";
        if (c.da.translator.rfind(prefix, 0) == 0) {
            c.da.translator = prefix + resolve(c.da.translator.substr(prefix.size()), base_dir);
        }
    }
    if (root["vision"]) {
        read(root, "vision", s, "config");
        c.vision = parse_vision_source(s);
    }
    if (root["knowledge"]) {
        read(root, "knowledge", s, "config");
        c.knowledge = parse_knowledge_mode(s);
    }
    if (const auto r = root["retrieval"]) {
        check_keys(r, {"epochs", "learning_rate", "negatives", "batch_size"}, "retrieval");
        read(r, "epochs", c.retrieval.epochs, "retrieval");
        read(r, "learning_rate", c.retrieval.learning_rate, "retrieval");
        read(r, "negatives", c.retrieval.negatives, "retrieval");
        read(r, "batch_size", c.retrieval.batch_size, "retrieval");
    }
    if (const auto r = root["reasoning"]) {
        check_keys(r, {"epochs", "learning_rate", "batch_size"}, "reasoning");
        read(r, "epochs", c.reasoning.epochs, "reasoning");
        read(r, "learning_rate", c.reasoning.learning_rate, "reasoning");
        read(r, "batch_size", c.reasoning.batch_size, "reasoning");
    }
    read(root, "top_k", c.top_k, "config");
    if (const auto sp = root["split"]) {
        check_keys(sp, {"train", "val", "test"}, "split");
        read(sp, "train", c.split.train, "split");
        read(sp, "val", c.split.val, "split");
        read(sp, "test", c.split.test, "split");
    }
    read(root, "threads", c.threads, "config");
    if (root["layout"]) {
        read(root, "layout", s, "config");
        c.layout = parse_report_layout(s);
    }
    c.retrieval.seed = c.seed;
    c.reasoning.seed = c.seed;
    c.validate();
    return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_experiment_config(ss.str(), path.parent_path());
}

// ---------------------------------------------------------------------------
// Canonical form

namespace {

json source_json(const DatasetSource& s) {
    json j{{"name", s.name}, {"path", s.path}, {"gazetteer", s.gazetteer}, {"features", s.features}};
    if (s.synthetic) {
        j["synthetic"] = {{"n_samples", s.synthetic->n_samples},
                          {"entities_per_type", s.synthetic->entities_per_type},
                          {"unique_entities", s.synthetic->unique_entities},
                          {"seed", s.synthetic->seed}};
    } else {
        j["synthetic"] = nullptr;
    }
    return j;
}

std::string fields_string(const std::vector<AugmentField>& fields) {
    std::vector<std::string> parts;
    for (auto f : fields) {
        parts.push_back(f == AugmentField::question ? "q" : f == AugmentField::answers ? "a" : "k");
    }
    return join(parts, ",");
}

}  // namespace

json to_json(const ExperimentConfig& c) {
    return json{{"name", c.name},
                {"seed", c.seed},
                {"source", source_json(c.source)},
                {"target", source_json(c.target)},
                {"learning", to_string(c.learning)},
                {"evaluate_on", c.evaluates_target() ? "target" : "source"},
                {"det",
                 {{"strategy", c.det.strategy ? to_string(*c.det.strategy) : "off"},
                  {"gazetteer", c.det.gazetteer}}},
                {"da",
                 {{"enabled", c.da.enabled},
                  {"alpha", c.da.alpha},
                  {"pivots", c.da.pivots},
                  {"fields", fields_string(c.da.fields)},
                  {"translator", c.da.translator}}},
                {"vision", to_string(c.vision)},
                {"knowledge", to_string(c.knowledge)},
                {"retrieval",
                 {{"epochs", c.retrieval.epochs},
                  {"learning_rate", c.retrieval.learning_rate},
                  {"negatives", c.retrieval.negatives},
                  {"batch_size", c.retrieval.batch_size}}},
                {"reasoning",
                 {{"epochs", c.reasoning.epochs},
                  {"learning_rate", c.reasoning.learning_rate},
                  {"batch_size", c.reasoning.batch_size}}},
                {"top_k", c.top_k},
                {"split", {{"train", c.split.train}, {"val", c.split.val}, {"test", c.split.test}}},
                {"layout", to_string(c.layout)}};
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string fingerprint(const ExperimentConfig& config) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(to_json(config).dump())));
    return buf;
}

// ---------------------------------------------------------------------------
// Corpora

Corpus load_corpus(const DatasetSource& source, std::uint64_t seed, const std::set<std::string>& forbidden_tokens) {
    Corpus c;
    if (source.synthetic) {
        const auto& syn = *source.synthetic;
        GeneratorConfig g;
        g.name = source.name;
        g.domain_tag = source.name;
        g.templates = default_templates();
        g.lexicon = default_lexicon();
        g.n_samples = syn.n_samples;
        g.unique_entities = syn.unique_entities;
        const std::uint64_t base = seed + syn.seed;
        g.gazetteer = synthesize_gazetteer(Rng::derive(base, 1).next(), template_entity_types(g.templates),
                                           syn.entities_per_type, forbidden_tokens);
        c.dataset = generate_synthetic(g, Rng::derive(base, 2).next());
        c.pools = g.gazetteer;
        for (const auto& [type, names] : c.pools) {
            for (const auto& n : names) c.gazetteer.add(n, type);
        }
    } else {
        c.dataset = load_dataset(source.path, 4, source.name);
    }
    if (!source.gazetteer.empty()) {
        const auto extra = load_gazetteer(source.gazetteer);
        for (const auto& [surface, type] : extra.entries()) c.gazetteer.add(surface, type);
    }
    return c;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

json loss_json(const LossTrace& t) {
    return json{{"initial", t.initial}, {"epochs", t.epochs}};
}

LossTrace loss_from_json(const json& j) {
    return {j.at("initial").get<double>(), j.at("epochs").get<std::vector<double>>()};
}

}  // namespace

json to_json(const Report& r, bool include_wall_clock) {
    json j{{"name", r.name},
           {"fingerprint", r.fingerprint},
           {"layout", to_string(r.layout)},
           {"config", r.config},
           {"labels",
            {{"source", r.source_label},
             {"target", r.target_label},
             {"learning", r.learning_label},
             {"vision", r.vision_label},
             {"knowledge", r.knowledge_label},
             {"det", r.det_label},
             {"da", r.da_label}}},
           {"retrieval", to_json(r.retrieval)},
           {"accuracy", r.accuracy},
           {"losses",
            {{"pretrain", r.pretrain_loss ? loss_json(*r.pretrain_loss) : json(nullptr)},
             {"retrieval", loss_json(r.retrieval_loss)},
             {"reasoning", loss_json(r.reasoning_loss)}}},
           {"sizes",
            {{"train", r.n_train}, {"augmented", r.n_augmented}, {"test", r.n_test}, {"kb", r.kb_size}}}};
    if (include_wall_clock) j["wall_clock_seconds"] = r.wall_clock_seconds;
    return j;
}

Report report_from_json(const json& j) {
    try {
        Report r;
        r.name = j.at("name").get<std::string>();
        r.fingerprint = j.at("fingerprint").get<std::string>();
        r.layout = parse_report_layout(j.at("layout").get<std::string>());
        r.config = j.value("config", json::object());
        const json& l = j.at("labels");
        r.source_label = l.at("source").get<std::string>();
        r.target_label = l.at("target").get<std::string>();
        r.learning_label = l.at("learning").get<std::string>();
        r.vision_label = l.at("vision").get<std::string>();
        r.knowledge_label = l.at("knowledge").get<std::string>();
        r.det_label = l.at("det").get<std::string>();
        r.da_label = l.at("da").get<std::string>();
        r.retrieval = retrieval_metrics_from_json(j.at("retrieval"));
        r.accuracy = j.at("accuracy").get<double>();
        if (auto it = j.find("losses"); it != j.end()) {
            if (!it->at("pretrain").is_null()) r.pretrain_loss = loss_from_json(it->at("pretrain"));
            r.retrieval_loss = loss_from_json(it->at("retrieval"));
            r.reasoning_loss = loss_from_json(it->at("reasoning"));
        }
        if (auto it = j.find("sizes"); it != j.end()) {
            r.n_train = it->at("train").get<std::size_t>();
            r.n_augmented = it->at("augmented").get<std::size_t>();
            r.n_test = it->at("test").get<std::size_t>();
            r.kb_size = it->at("kb").get<std::size_t>();
        }
        r.wall_clock_seconds = j.value("wall_clock_seconds", 0.0);
        return r;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed report: ") + e.what());
    }
}

void save_report(const Report& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << to_json(report).dump(2) << '\n';
}

Report load_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open report " + path.string());
    try {
        return report_from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

struct Domain {
    std::string name;
    DatasetSplits splits;
    KnowledgeBase kb;
    const DatasetSource* source = nullptr;
};

template <typename Fn>
auto stage(const std::string& name, std::ostream* log, Fn&& fn) -> decltype(fn()) {
    if (log != nullptr) *log << "[" << name << "]\n";
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

KnowledgeBase domain_kb(const DatasetSplits& s, const std::string& name) {
    return build_kb({&s.train, &s.val, &s.test}, name).kb;
}

std::string learning_label(const ExperimentConfig& c) {
    std::vector<std::string> with;
    if (c.det.strategy) with.emplace_back("DET");
    if (c.da.enabled) with.emplace_back("DA");
    if (c.learning == LearningMode::transfer) {
        return with.empty() ? "Transfer (w/o DET)" : "Transfer (w/ " + join(with, "+") + ")";
    }
    return with.empty() ? "Direct" : "Direct (w/ " + join(with, "+") + ")";
}

std::string capitalized(std::string s) {
    if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s;
}

}  // namespace

Report run_experiment(const ExperimentConfig& config, const std::filesystem::path& work_dir, std::ostream* log) {
    const auto t0 = std::chrono::steady_clock::now();
    config.validate();
    const bool keep = !work_dir.empty();
    if (keep) std::filesystem::create_directories(work_dir);
    auto artifact = [&](const std::string& file) { return work_dir / file; };

    Report report;
    report.name = config.name;
    report.fingerprint = fingerprint(config);
    report.layout = config.layout;
    report.config = to_json(config);

    // ingest
    const bool need_target = config.evaluates_target();
    Gazetteer gazetteer;
    Domain source, target;
    stage("ingest", log, [&] {
        std::set<std::string> taken;
        auto ingest = [&](const DatasetSource& src, Domain& d, std::uint64_t stream) {
            Corpus c = load_corpus(src, Rng::derive(config.seed, stream).next(), taken);
            const auto tokens = gazetteer_tokens(c.pools);
            taken.insert(tokens.begin(), tokens.end());
            for (const auto& [surface, type] : c.gazetteer.entries()) gazetteer.add(surface, type);
            d.name = src.name;
            d.source = &src;
            d.splits = split_dataset(c.dataset, config.split, Rng::derive(config.seed, stream + 10).next());
            if (keep) save_dataset(c.dataset, artifact(src.name + ".jsonl"));
        };
        if (config.source.configured()) ingest(config.source, source, 1);
        if (need_target) ingest(config.target, target, 2);
        if (!config.det.gazetteer.empty()) {
            for (const auto& [surface, type] : load_gazetteer(config.det.gazetteer).entries()) {
                gazetteer.add(surface, type);
            }
        }
        return 0;
    });

    // DET, applied to every split of every domain in play
    if (config.det.strategy) {
        stage("det", log, [&] {
            if (gazetteer.empty()) throw std::runtime_error("DET is enabled but no gazetteer is available");
            const GazetteerRecognizer recognizer(gazetteer);
            for (Domain* d : {&source, &target}) {
                if (d->source == nullptr) continue;
                for (Dataset* s : {&d->splits.train, &d->splits.val, &d->splits.test}) {
                    *s = tag_dataset(*s, recognizer, *config.det.strategy);
                }
                if (keep) save_dataset(d->splits.train, artifact(d->name + ".det.train.jsonl"));
            }
            return 0;
        });
    }

    Domain& eval = need_target ? target : source;
    stage("build-kb", log, [&] {
        for (Domain* d : {&source, &target}) {
            if (d->source == nullptr) continue;
            d->kb = domain_kb(d->splits, d->name);
            if (keep) save_kb(d->kb, artifact(d->name + ".kb.jsonl"));
        }
        return 0;
    });
    report.kb_size = eval.kb.size();

    // DA, only ever on the evaluated domain's training split
    Dataset train = eval.splits.train;
    if (config.da.enabled) {
        stage("augment", log, [&] {
            auto translator = make_translator(config.da.translator);
            AugmentConfig ac;
            ac.alpha = config.da.alpha;
            ac.fields = config.da.fields;
            ac.pivot_languages = config.da.pivots;
            train = augment_training_set(train, *translator, ac).dataset;
            if (keep) save_dataset(train, artifact(eval.name + ".da.train.jsonl"));
            return 0;
        });
    }
    report.n_train = train.size();
    report.n_augmented = train.size() - eval.splits.train.size();
    report.n_test = eval.splits.test.size();

    RetrievalHyper hyper = config.retrieval;
    hyper.seed = config.seed;
    ScorerParams theta;
    switch (config.learning) {
        case LearningMode::direct:
            stage("train-retrieval", log, [&] {
                auto r = train_retrieval(ScorerParams::zeros(), train, eval.kb, hyper);
                report.retrieval_loss = {r.initial_loss, r.epoch_losses};
                theta = r.params;
                return 0;
            });
            break;
        case LearningMode::direct_both:
            stage("train-retrieval", log, [&] {
                Dataset both;
                both.name = "both";
                both.samples = source.splits.train.samples;
                both.samples.insert(both.samples.end(), train.samples.begin(), train.samples.end());
                KnowledgeBase kb = build_kb({&source.splits.train, &source.splits.val, &source.splits.test,
                                             &target.splits.train, &target.splits.val, &target.splits.test},
                                            "both")
                                       .kb;
                auto r = train_retrieval(ScorerParams::zeros(), both, kb, hyper);
                report.retrieval_loss = {r.initial_loss, r.epoch_losses};
                theta = r.params;
                return 0;
            });
            break;
        case LearningMode::transfer: {
            ScorerParams pre;
            stage("pretrain", log, [&] {
                auto r = train_retrieval(ScorerParams::zeros(), source.splits.train, source.kb, hyper);
                report.pretrain_loss = LossTrace{r.initial_loss, r.epoch_losses};
                pre = r.params;
                if (keep) save_scorer_params(pre, artifact("scorer.pre.json"));
                return 0;
            });
            stage("finetune", log, [&] {
                auto r = transfer_finetune(pre, train, eval.kb, hyper);
                report.retrieval_loss = {r.initial_loss, r.epoch_losses};
                theta = r.params;
                return 0;
            });
            break;
        }
    }
    if (keep) save_scorer_params(theta, artifact("scorer.json"));

    std::vector<RetrievalRanking> test_rankings, train_rankings;
    stage("rank", log, [&] {
        const FeatureExtractor extractor(eval.kb);
        test_rankings = rank_dataset(extractor, eval.kb, theta, eval.splits.test, config.threads);
        train_rankings = rank_dataset(extractor, eval.kb, theta, train, config.threads);
        report.retrieval = retrieval_metrics(test_rankings);
        if (keep) save_rankings(test_rankings, 10, artifact("rankings.test.jsonl"));
        return 0;
    });

    stage("train-reasoning", log, [&] {
        std::optional<VisualFeatureTable> table;
        if (!eval.source->features.empty() && config.vision != VisionSource::none) {
            table = load_visual_features(eval.source->features);
        }
        ReasoningInputs in;
        in.knowledge = config.knowledge;
        in.top_k = config.top_k;
        in.kb = &eval.kb;
        in.features = table ? &*table : nullptr;
        in.vision = config.vision;
        in.rankings = &train_rankings;
        const FusionLayout layout = make_layout(config.vision, in.features);
        ReasoningHyper rh = config.reasoning;
        rh.seed = config.seed;
        auto r = train_reasoning(ReasonerParams::zeros(layout), train, in, rh);
        report.reasoning_loss = {r.initial_loss, r.epoch_losses};
        if (keep) save_reasoner_params(r.params, artifact("reasoner.json"));

        in.rankings = &test_rankings;
        const auto predictions = predict_dataset(eval.splits.test, r.params, in);
        report.accuracy = accuracy(predictions);
        return 0;
    });

    report.source_label = config.learning == LearningMode::direct_both ? "Both"
                          : config.learning == LearningMode::transfer ? source.name
                                                                      : eval.name;
    report.target_label = config.learning == LearningMode::transfer ? target.name : "-";
    report.learning_label = learning_label(config);
    report.vision_label = capitalized(to_string(config.vision));
    report.knowledge_label = config.knowledge == KnowledgeMode::gt ? "GT" : capitalized(to_string(config.knowledge));
    report.det_label = config.det.strategy ? to_string(*config.det.strategy) : "-";
    report.da_label = config.da.enabled ? "yes" : "-";
    report.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (keep) save_report(report, artifact("report.json"));
    if (log != nullptr) {
        *log << "R@1 " << report.retrieval.r_at[1] << "  MR " << report.retrieval.mr << "  accuracy "
             << report.accuracy << '\n';
    }
    return report;
}

}  // namespace knowtrans
