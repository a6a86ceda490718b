#include "knowtrans/augment.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <future>
#include <sstream>

#include "knowtrans/text.hpp"

namespace knowtrans {

namespace {

bool is_word_char(unsigned char c) {
    return std::isalnum(c) != 0 || c >= 0x80;
}

// Longest-first, word-bounded phrase substitution.
std::string substitute(const std::string& text, const std::map<std::string, std::string>& table) {
    if (table.empty()) return text;
    std::vector<const std::pair<const std::string, std::string>*> by_length;
    for (const auto& kv : table) by_length.push_back(&kv);
    std::stable_sort(by_length.begin(), by_length.end(),
                     [](auto* a, auto* b) { return a->first.size() > b->first.size(); });

    std::string out;
    std::size_t i = 0;
    while (i < text.size()) {
        const bool at_word_start =
            is_word_char(static_cast<unsigned char>(text[i])) &&
            (i == 0 || !is_word_char(static_cast<unsigned char>(text[i - 1])));
        bool replaced = false;
        if (at_word_start) {
            for (const auto* kv : by_length) {
                const std::string& from = kv->first;
                if (text.compare(i, from.size(), from) != 0) continue;
                const std::size_t end = i + from.size();
                if (end < text.size() && is_word_char(static_cast<unsigned char>(text[end])) &&
                    is_word_char(static_cast<unsigned char>(from.back()))) {
                    continue;
                }
                out += kv->second;
                i = end;
                replaced = true;
                break;
            }
        }
        if (!replaced) out += text[i++];
    }
    return out;
}

}  // namespace

std::vector<std::string> FunctionTranslator::translate(const std::vector<std::string>& texts,
                                                       const std::string& pivot) {
    std::vector<std::string> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(forward_(t, pivot));
    return out;
}

std::vector<std::string> FunctionTranslator::back_translate(const std::vector<std::string>& texts,
                                                            const std::string& pivot) {
    std::vector<std::string> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(backward_(t, pivot));
    return out;
}

void PhraseTableTranslator::add(const std::string& source, const std::string& pivot, const std::string& back) {
    if (source.empty() || pivot.empty()) throw TranslatorError("phrase table: empty phrase");
    forward_[source] = pivot;
    backward_[pivot] = back.empty() ? source : back;
}

std::string PhraseTableTranslator::translate_one(const std::string& text) const {
    return substitute(text, forward_);
}

std::string PhraseTableTranslator::back_translate_one(const std::string& text) const {
    return substitute(text, backward_);
}

std::vector<std::string> PhraseTableTranslator::translate(const std::vector<std::string>& texts,
                                                          const std::string&) {
    std::vector<std::string> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(translate_one(t));
    return out;
}

std::vector<std::string> PhraseTableTranslator::back_translate(const std::vector<std::string>& texts,
                                                               const std::string&) {
    std::vector<std::string> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(back_translate_one(t));
    return out;
}

PhraseTableTranslator load_phrase_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw TranslatorError("cannot open phrase table " + path.string());
    PhraseTableTranslator table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (normalize_text(line).empty() || line.front() == '#') continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, '\t')) cols.push_back(col);
        if (cols.size() < 2 || cols.size() > 3) {
            throw TranslatorError("phrase table line " + std::to_string(line_no) +
                                  ": expected source<TAB>pivot[<TAB>back]");
        }
        table.add(cols[0], cols[1], cols.size() == 3 ? cols[2] : std::string{});
    }
    return table;
}

std::unique_ptr<Translator> make_translator(const std::string& spec) {
    if (spec == "identity") return std::make_unique<IdentityTranslator>();
    if (spec.rfind("mock:", 0) == 0) {
        return std::make_unique<PhraseTableTranslator>(load_phrase_table(spec.substr(5)));
    }
    if (spec.rfind("http:", 0) == 0) {
        std::string url = spec.substr(5);
        if (const char* env = std::getenv(kTranslatorUrlEnv); env != nullptr && *env != '\0') url = env;
        return std::make_unique<HttpTranslator>(url);
    }
    throw TranslatorError("unknown translator spec '" + spec + "' (expected identity, mock:<file> or http:<url>)");
}

BackTranslation back_translate(const std::string& text, Translator& translator, const std::string& pivot) {
    auto pivots = translator.translate({text}, pivot);
    if (pivots.size() != 1) throw TranslatorError("translator returned a wrong number of texts");
    auto backs = translator.back_translate(pivots, pivot);
    if (backs.size() != 1) throw TranslatorError("translator returned a wrong number of texts");
    return {std::move(pivots[0]), std::move(backs[0])};
}

double similarity(std::string_view a, std::string_view b) {
    return trigram_cosine(a, b);
}

std::vector<AugmentField> parse_augment_fields(const std::string& list) {
    std::vector<AugmentField> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = normalize_text(item);
        AugmentField f;
        if (item == "q" || item == "question" || item == "questions") {
            f = AugmentField::question;
        } else if (item == "a" || item == "answer" || item == "answers") {
            f = AugmentField::answers;
        } else if (item == "k" || item == "knowledge") {
            f = AugmentField::knowledge;
        } else {
            throw DataError("unknown augment field '" + item + "'");
        }
        if (std::find(out.begin(), out.end(), f) == out.end()) out.push_back(f);
    }
    if (out.empty()) throw DataError("no augment fields selected");
    return out;
}

namespace {

// Texts of one sample in field order; answers contribute one text each.
std::vector<std::string> field_texts(const QASample& s, const std::vector<AugmentField>& fields) {
    std::vector<std::string> out;
    for (auto f : fields) {
        switch (f) {
            case AugmentField::question: out.push_back(s.question); break;
            case AugmentField::answers: out.insert(out.end(), s.answers.begin(), s.answers.end()); break;
            case AugmentField::knowledge: out.push_back(s.knowledge); break;
        }
    }
    return out;
}

QASample with_field_texts(const QASample& s, const std::vector<AugmentField>& fields,
                          const std::vector<std::string>& texts) {
    QASample out = s;
    std::size_t k = 0;
    for (auto f : fields) {
        switch (f) {
            case AugmentField::question: out.question = texts[k++]; break;
            case AugmentField::answers:
                for (auto& a : out.answers) a = texts[k++];
                break;
            case AugmentField::knowledge: out.knowledge = texts[k++]; break;
        }
    }
    return out;
}

struct ChunkResult {
    std::vector<std::string> pivots;
    std::vector<std::string> backs;
};

}  // namespace

AugmentResult augment_training_set(const Dataset& train, Translator& translator,
                                   const AugmentConfig& config, const SimilarityFn& sim) {
    if (train.split != Split::train) throw DataError("augment_training_set: dataset is not a training split");
    if (!(config.alpha >= 0.0 && config.alpha <= 1.0)) throw DataError("augment: alpha must lie in [0, 1]");
    if (config.fields.empty()) throw DataError("augment: no fields selected");
    if (config.pivot_languages.empty()) throw DataError("augment: no pivot language");
    if (config.batch_size == 0 || config.max_in_flight == 0) {
        throw DataError("augment: batch_size and max_in_flight must be positive");
    }

    const std::size_t n = train.size();
    std::vector<std::vector<std::string>> sources(n);
    for (std::size_t i = 0; i < n; ++i) sources[i] = field_texts(train.samples[i], config.fields);

    AugmentResult result;
    // (source position, pivot index) -> augmented sample
    std::vector<std::pair<std::pair<std::string, std::size_t>, QASample>> survivors;

    for (std::size_t p = 0; p < config.pivot_languages.size(); ++p) {
        const std::string& pivot = config.pivot_languages[p];
        AugmentPassStats stats;
        stats.pivot = pivot;

        const std::size_t n_chunks = (n + config.batch_size - 1) / config.batch_size;
        auto run_chunk = [&](std::size_t c) {
            std::vector<std::string> texts;
            const std::size_t lo = c * config.batch_size;
            const std::size_t hi = std::min(n, lo + config.batch_size);
            for (std::size_t i = lo; i < hi; ++i) texts.insert(texts.end(), sources[i].begin(), sources[i].end());
            ChunkResult r;
            r.pivots = translator.translate(texts, pivot);
            if (r.pivots.size() != texts.size()) {
                throw TranslatorError("translate returned " + std::to_string(r.pivots.size()) + " texts for " +
                                      std::to_string(texts.size()));
            }
            r.backs = translator.back_translate(r.pivots, pivot);
            if (r.backs.size() != texts.size()) {
                throw TranslatorError("back_translate returned " + std::to_string(r.backs.size()) +
                                      " texts for " + std::to_string(texts.size()));
            }
            return r;
        };

        std::deque<std::future<ChunkResult>> in_flight;
        std::size_t next_chunk = 0;
        auto launch = [&] {
            while (next_chunk < n_chunks && in_flight.size() < config.max_in_flight) {
                in_flight.push_back(std::async(std::launch::async, run_chunk, next_chunk++));
            }
        };
        launch();
        for (std::size_t c = 0; c < n_chunks; ++c) {
            ChunkResult r;
            try {
                r = in_flight.front().get();
            } catch (const std::exception& e) {
                in_flight.pop_front();
                for (auto& f : in_flight) f.wait();
                const std::size_t done = c * config.batch_size;
                throw TranslatorError("augment (pivot " + pivot + "): translation failed at sample '" +
                                      train.samples[done].sample_id + "' after " + std::to_string(done) +
                                      " of " + std::to_string(n) + " samples: " + e.what());
            }
            in_flight.pop_front();
            launch();

            std::size_t k = 0;
            const std::size_t lo = c * config.batch_size;
            const std::size_t hi = std::min(n, lo + config.batch_size);
            for (std::size_t i = lo; i < hi; ++i) {
                const auto& src = sources[i];
                std::vector<std::string> backs(r.backs.begin() + static_cast<std::ptrdiff_t>(k),
                                               r.backs.begin() + static_cast<std::ptrdiff_t>(k + src.size()));
                if (config.pivot_log != nullptr) {
                    for (std::size_t t = 0; t < src.size(); ++t) {
                        *config.pivot_log << train.samples[i].sample_id << '\t' << pivot << '\t' << t << '\t'
                                          << r.pivots[k + t] << '\n';
                    }
                }
                k += src.size();
                ++stats.candidates;
                bool all_near_duplicate = true;
                for (std::size_t t = 0; t < src.size(); ++t) {
                    if (sim(backs[t], src[t]) < config.alpha) {
                        all_near_duplicate = false;
                        break;
                    }
                }
                if (all_near_duplicate) {
                    ++stats.removed;
                    continue;
                }
                QASample aug = with_field_texts(train.samples[i], config.fields, backs);
                aug.sample_id = train.samples[i].sample_id + "#bt-" + pivot;
                aug.origin = Origin::augmented;
                survivors.push_back({{train.samples[i].sample_id, p}, std::move(aug)});
                ++stats.survivors;
            }
        }
        result.passes.push_back(stats);
    }

    std::stable_sort(survivors.begin(), survivors.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    result.dataset = train;
    for (auto& [_, s] : survivors) result.dataset.samples.push_back(std::move(s));
    validate_dataset(result.dataset);
    return result;
}

}  // namespace knowtrans
