#include "knowtrans/corpus.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "knowtrans/random.hpp"
#include "knowtrans/text.hpp"

namespace knowtrans {

using nlohmann::json;

std::string to_string(Origin origin) {
    return origin == Origin::original ? "original" : "augmented";
}

std::string to_string(Split split) {
    switch (split) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "train";
}

Origin parse_origin(const std::string& s) {
    if (s == "original") return Origin::original;
    if (s == "augmented") return Origin::augmented;
    throw DataError("unknown origin '" + s + "'");
}

Split parse_split(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    throw DataError("unknown split '" + s + "'");
}

json to_json(const QASample& s) {
    return json{{"sample_id", s.sample_id},   {"clip_id", s.clip_id},
                {"question", s.question},     {"answers", s.answers},
                {"correct_index", s.correct_index}, {"knowledge", s.knowledge},
                {"subtitles", s.subtitles},   {"origin", to_string(s.origin)}};
}

namespace {

const json& require(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw DataError(std::string("missing field '") + key + "'");
    return *it;
}

std::string require_string(const json& j, const char* key) {
    const json& v = require(j, key);
    if (!v.is_string()) throw DataError(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

}  // namespace

QASample sample_from_json(const json& j) {
    if (!j.is_object()) throw DataError("record is not a JSON object");
    QASample s;
    s.sample_id = require_string(j, "sample_id");
    s.clip_id = require_string(j, "clip_id");
    s.question = require_string(j, "question");
    const json& answers = require(j, "answers");
    if (!answers.is_array()) throw DataError("field 'answers' must be an array");
    for (const auto& a : answers) {
        if (!a.is_string()) throw DataError("field 'answers' must hold strings");
        s.answers.push_back(a.get<std::string>());
    }
    const json& ci = require(j, "correct_index");
    if (!ci.is_number_integer()) throw DataError("field 'correct_index' must be an integer");
    s.correct_index = ci.get<int>();
    s.knowledge = require_string(j, "knowledge");
    if (auto it = j.find("subtitles"); it != j.end() && !it->is_null()) {
        if (!it->is_string()) throw DataError("field 'subtitles' must be a string");
        s.subtitles = it->get<std::string>();
    }
    if (auto it = j.find("origin"); it != j.end() && !it->is_null()) {
        if (!it->is_string()) throw DataError("field 'origin' must be a string");
        s.origin = parse_origin(it->get<std::string>());
    }
    return s;
}

void validate_sample(const QASample& s, std::size_t expected_n_answers) {
    if (s.sample_id.empty()) throw DataError("field 'sample_id' is empty");
    if (s.answers.size() < 2) throw DataError("field 'answers' needs at least 2 entries");
    if (expected_n_answers != 0 && s.answers.size() != expected_n_answers) {
        throw DataError("field 'answers' has " + std::to_string(s.answers.size()) +
                        " entries, expected " + std::to_string(expected_n_answers));
    }
    if (s.correct_index < 0 || static_cast<std::size_t>(s.correct_index) >= s.answers.size()) {
        throw DataError("field 'correct_index': correct_index out of range (" +
                        std::to_string(s.correct_index) + ")");
    }
}

void validate_dataset(const Dataset& d) {
    std::unordered_map<std::string, std::size_t> seen;
    for (std::size_t i = 0; i < d.samples.size(); ++i) {
        const auto& s = d.samples[i];
        validate_sample(s, 0);
        if (d.split == Split::train && normalize_text(s.knowledge).empty()) {
            throw DataError("sample '" + s.sample_id + "': training sample has empty knowledge");
        }
        auto [it, inserted] = seen.emplace(s.sample_id, i);
        if (!inserted) {
            throw DataError("duplicate sample_id '" + s.sample_id + "' at positions " +
                            std::to_string(it->second) + " and " + std::to_string(i));
        }
    }
}

Dataset parse_dataset(std::istream& in, std::size_t expected_n_answers, std::string name,
                      Split split) {
    Dataset d;
    d.name = std::move(name);
    d.split = split;
    std::unordered_map<std::string, std::size_t> first_line;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (normalize_text(line).empty()) continue;
        QASample s;
        try {
            s = sample_from_json(json::parse(line));
            validate_sample(s, expected_n_answers);
            if (split == Split::train && normalize_text(s.knowledge).empty()) {
                throw DataError("field 'knowledge' is empty in a training record");
            }
        } catch (const json::exception& e) {
            throw DataError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
        auto [it, inserted] = first_line.emplace(s.sample_id, line_no);
        if (!inserted) {
            throw DataError("line " + std::to_string(line_no) + ": duplicate sample_id '" +
                            s.sample_id + "' (first seen on line " + std::to_string(it->second) +
                            ")");
        }
        d.samples.push_back(std::move(s));
    }
    return d;
}

Dataset load_dataset(const std::filesystem::path& path, std::size_t expected_n_answers,
                     std::optional<std::string> name, Split split) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file " + path.string());
    return parse_dataset(in, expected_n_answers, name.value_or(path.stem().string()), split);
}

void write_dataset(const Dataset& d, std::ostream& out) {
    for (const auto& s : d.samples) out << to_json(s).dump() << '\n';
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write dataset file " + path.string());
    write_dataset(d, out);
}

// ---------------------------------------------------------------------------
// Knowledge base

std::string kb_key(const std::string& text) {
    return normalize_text(text);
}

std::int64_t KnowledgeBase::add(const std::string& text) {
    std::string key = kb_key(text);
    if (key.empty()) throw DataError("knowledge base entries must be non-empty");
    auto [it, inserted] = index_.emplace(std::move(key), static_cast<std::int64_t>(entries_.size()));
    if (inserted) entries_.push_back({it->second, text});
    return it->second;
}

std::optional<std::int64_t> KnowledgeBase::find(const std::string& text) const {
    auto it = index_.find(kb_key(text));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

const KbEntry& KnowledgeBase::at(std::int64_t kb_id) const {
    if (kb_id < 0 || static_cast<std::size_t>(kb_id) >= entries_.size()) {
        throw DataError("kb_id " + std::to_string(kb_id) + " not in knowledge base");
    }
    return entries_[static_cast<std::size_t>(kb_id)];
}

KbBuild build_kb(const std::vector<const Dataset*>& datasets, std::string source_name) {
    KbBuild out;
    std::size_t with_knowledge = 0;
    for (const Dataset* d : datasets) {
        std::vector<std::int64_t> ids;
        ids.reserve(d->size());
        for (const auto& s : d->samples) {
            if (kb_key(s.knowledge).empty()) {
                ids.push_back(-1);
                continue;
            }
            ids.push_back(out.kb.add(s.knowledge));
            ++with_knowledge;
        }
        out.sample_kb_ids.push_back(std::move(ids));
        if (source_name.empty()) source_name = d->name;
    }
    if (with_knowledge == 0) throw DataError("build_kb: dataset has no sample with knowledge");
    out.kb.source_dataset = std::move(source_name);
    return out;
}

KbBuild build_kb(const Dataset& dataset) {
    return build_kb(std::vector<const Dataset*>{&dataset}, dataset.name);
}

void save_kb(const KnowledgeBase& kb, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write knowledge base " + path.string());
    out << json{{"source_dataset", kb.source_dataset}, {"size", kb.size()}}.dump() << '\n';
    for (const auto& e : kb.entries()) out << json{{"kb_id", e.kb_id}, {"text", e.text}}.dump() << '\n';
}

KnowledgeBase load_kb(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open knowledge base " + path.string());
    KnowledgeBase kb;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (normalize_text(line).empty()) continue;
        try {
            json j = json::parse(line);
            if (j.contains("source_dataset")) {
                kb.source_dataset = j.at("source_dataset").get<std::string>();
                continue;
            }
            const auto id = j.at("kb_id").get<std::int64_t>();
            if (kb.add(j.at("text").get<std::string>()) != id) {
                throw DataError("kb_id " + std::to_string(id) + " is not dense or duplicates an entry");
            }
        } catch (const json::exception& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return kb;
}

// ---------------------------------------------------------------------------
// Splitting

std::array<std::size_t, 3> apportion(std::size_t n, const SplitFractions& f) {
    const std::array<double, 3> fr{f.train, f.val, f.test};
    for (double x : fr) {
        if (!(x > 0.0) || !std::isfinite(x)) throw DataError("split fractions must be positive");
    }
    if (std::abs(fr[0] + fr[1] + fr[2] - 1.0) > 1e-9) {
        throw DataError("split fractions must sum to 1");
    }
    std::array<std::size_t, 3> sizes{};
    std::array<double, 3> remainder{};
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double quota = fr[i] * static_cast<double>(n);
        sizes[i] = static_cast<std::size_t>(std::floor(quota));
        remainder[i] = quota - static_cast<double>(sizes[i]);
        assigned += sizes[i];
    }
    // Hand out the leftover seats by largest remainder; the stable order
    // train, val, test breaks ties.
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++sizes[order[k % 3]];
    return sizes;
}

DatasetSplits split_dataset(const Dataset& dataset, const SplitFractions& fractions,
                            std::uint64_t seed) {
    const auto sizes = apportion(dataset.size(), fractions);
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);

    DatasetSplits out;
    Dataset* parts[3] = {&out.train, &out.val, &out.test};
    const Split labels[3] = {Split::train, Split::val, Split::test};
    std::size_t pos = 0;
    for (std::size_t p = 0; p < 3; ++p) {
        parts[p]->name = dataset.name;
        parts[p]->domain_tag = dataset.domain_tag;
        parts[p]->split = labels[p];
        for (std::size_t k = 0; k < sizes[p]; ++k) {
            parts[p]->samples.push_back(dataset.samples[order[pos++]]);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Visual features

const VisualFeatures* VisualFeatureTable::find(const std::string& clip_id) const {
    auto it = clips.find(clip_id);
    return it == clips.end() ? nullptr : &it->second;
}

namespace {

Eigen::VectorXd read_vector(const json& j, const char* key, std::size_t dim) {
    if (dim == 0 && !j.contains(key)) return {};
    const json& arr = require(j, key);
    if (!arr.is_array()) throw DataError(std::string("field '") + key + "' must be an array");
    if (arr.size() != dim) {
        throw DataError(std::string("field '") + key + "' has dimension " +
                        std::to_string(arr.size()) + ", header declares " + std::to_string(dim));
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) {
        if (!arr[i].is_number()) throw DataError(std::string("field '") + key + "' must hold numbers");
        v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
        if (!std::isfinite(v[static_cast<Eigen::Index>(i)])) {
            throw DataError(std::string("field '") + key + "' holds a non-finite value");
        }
    }
    return v;
}

}  // namespace

VisualFeatureTable load_visual_features(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open visual feature file " + path.string());
    VisualFeatureTable table;
    bool have_header = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (normalize_text(line).empty()) continue;
        try {
            const json j = json::parse(line);
            if (!have_header) {
                if (!j.value("header", false)) throw DataError("first record must be the header");
                table.d_img = require(j, "d_img").get<std::size_t>();
                table.d_face = require(j, "d_face").get<std::size_t>();
                have_header = true;
                continue;
            }
            VisualFeatures f;
            f.clip_id = require_string(j, "clip_id");
            f.image_vec = read_vector(j, "image_vec", table.d_img);
            f.facial_vec = read_vector(j, "facial_vec", table.d_face);
            f.caption_text = j.value("caption_text", std::string{});
            if (!table.clips.emplace(f.clip_id, f).second) {
                throw DataError("duplicate clip_id '" + f.clip_id + "'");
            }
        } catch (const json::exception& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!have_header) throw DataError("visual feature file has no header record");
    return table;
}

void save_visual_features(const VisualFeatureTable& table, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write visual feature file " + path.string());
    out << json{{"header", true}, {"d_img", table.d_img}, {"d_face", table.d_face}}.dump() << '\n';
    for (const auto& [id, f] : table.clips) {
        std::vector<double> img(f.image_vec.data(), f.image_vec.data() + f.image_vec.size());
        std::vector<double> face(f.facial_vec.data(), f.facial_vec.data() + f.facial_vec.size());
        out << json{{"clip_id", id}, {"image_vec", img}, {"facial_vec", face},
                    {"caption_text", f.caption_text}}
                   .dump()
            << '\n';
    }
}

}  // namespace knowtrans
