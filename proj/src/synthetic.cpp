#include "knowtrans/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <regex>

#include "knowtrans/random.hpp"
#include "knowtrans/text.hpp"

namespace knowtrans {

namespace {

const std::regex& placeholder_re() {
    static const std::regex re(R"(\{(w:)?([a-z_]+)(#[0-9]+)?\})");
    return re;
}

struct Placeholder {
    bool is_word = false;
    std::string key;   // type or lexicon key
    std::string full;  // key plus "#n" suffix, identifies the slot
};

std::vector<Placeholder> placeholders_in(const std::string& pattern) {
    std::vector<Placeholder> out;
    for (std::sregex_iterator it(pattern.begin(), pattern.end(), placeholder_re()), end; it != end; ++it) {
        const auto& m = *it;
        Placeholder p;
        p.is_word = m[1].matched;
        p.key = m[2].str();
        p.full = (p.is_word ? "w:" : "") + p.key + m[3].str();
        out.push_back(std::move(p));
    }
    return out;
}

std::string fill(const std::string& pattern, const std::map<std::string, std::string>& slots) {
    std::string out;
    std::size_t last = 0;
    for (std::sregex_iterator it(pattern.begin(), pattern.end(), placeholder_re()), end; it != end; ++it) {
        const auto& m = *it;
        out.append(pattern, last, static_cast<std::size_t>(m.position()) - last);
        const std::string full = (m[1].matched ? "w:" : "") + m[2].str() + m[3].str();
        out.append(slots.at(full));
        last = static_cast<std::size_t>(m.position() + m.length());
    }
    out.append(pattern, last, std::string::npos);
    return out;
}

// Per-key pool that optionally hands out values without replacement.
class PoolDrawer {
public:
    PoolDrawer(const std::vector<std::string>& values, bool unique) : values_(values), unique_(unique) {}

    // Draws a value not in `taken`; returns empty string if impossible.
    std::string draw(Rng& rng, const std::set<std::string>& taken) {
        if (!unique_) {
            std::vector<std::size_t> allowed;
            for (std::size_t i = 0; i < values_.size(); ++i) {
                if (!taken.count(values_[i])) allowed.push_back(i);
            }
            if (allowed.empty()) return {};
            return values_[allowed[rng.below(allowed.size())]];
        }
        for (int attempt = 0; attempt < 2; ++attempt) {
            if (queue_.empty()) {
                queue_.resize(values_.size());
                for (std::size_t i = 0; i < values_.size(); ++i) queue_[i] = i;
                rng.shuffle(queue_);
            }
            for (auto it = queue_.begin(); it != queue_.end(); ++it) {
                if (!taken.count(values_[*it])) {
                    std::string v = values_[*it];
                    queue_.erase(it);
                    return v;
                }
            }
            queue_.clear();
        }
        return {};
    }

private:
    const std::vector<std::string>& values_;
    bool unique_;
    std::vector<std::size_t> queue_;
};

}  // namespace

std::vector<std::string> template_entity_types(const std::vector<SampleTemplate>& templates) {
    std::set<std::string> types;
    for (const auto& t : templates) {
        for (const auto* pattern : {&t.question, &t.knowledge, &t.subtitles}) {
            for (const auto& p : placeholders_in(*pattern)) {
                if (!p.is_word && p.key != "answer") types.insert(p.key);
            }
        }
        if (t.answer_type.rfind("w:", 0) != 0) types.insert(t.answer_type);
    }
    return {types.begin(), types.end()};
}

Dataset generate_synthetic(const GeneratorConfig& config, std::uint64_t seed) {
    if (config.templates.empty()) throw DataError("generate_synthetic: empty template pool");
    if (config.gazetteer.empty()) throw DataError("generate_synthetic: empty gazetteer");
    if (config.n_answers < 2) throw DataError("generate_synthetic: n_answers must be >= 2");

    std::map<std::string, PoolDrawer> entity_drawers;
    for (const auto& [type, values] : config.gazetteer) {
        if (values.empty()) throw DataError("generate_synthetic: gazetteer type '" + type + "' is empty");
        entity_drawers.emplace(type, PoolDrawer(values, config.unique_entities));
    }
    std::map<std::string, PoolDrawer> word_drawers;
    for (const auto& [key, values] : config.lexicon) {
        if (values.empty()) throw DataError("generate_synthetic: lexicon '" + key + "' is empty");
        word_drawers.emplace(key, PoolDrawer(values, false));
    }
    for (const auto& type : template_entity_types(config.templates)) {
        if (!entity_drawers.count(type)) {
            throw DataError("generate_synthetic: gazetteer has no entities of type '" + type + "'");
        }
    }

    Rng rng(seed);
    Dataset d;
    d.name = config.name;
    d.domain_tag = config.domain_tag.empty() ? config.name : config.domain_tag;
    d.split = Split::train;
    d.samples.reserve(config.n_samples);

    const int width = std::max<int>(5, static_cast<int>(std::to_string(config.n_samples).size()));
    for (std::size_t i = 0; i < config.n_samples; ++i) {
        const SampleTemplate& tpl = config.templates[rng.below(config.templates.size())];
        std::map<std::string, std::string> slots;
        std::set<std::string> taken;

        auto drawer_for = [&](bool is_word, const std::string& key) -> PoolDrawer& {
            auto& table = is_word ? word_drawers : entity_drawers;
            auto it = table.find(key);
            if (it == table.end()) {
                throw DataError("generate_synthetic: no pool for placeholder '" + key + "'");
            }
            return it->second;
        };

        for (const auto* pattern : {&tpl.question, &tpl.knowledge, &tpl.subtitles}) {
            for (const auto& p : placeholders_in(*pattern)) {
                if (p.key == "answer" && !p.is_word) continue;
                if (slots.count(p.full)) continue;
                std::string v = drawer_for(p.is_word, p.key).draw(rng, taken);
                if (v.empty()) throw DataError("generate_synthetic: pool '" + p.key + "' too small");
                taken.insert(v);
                slots[p.full] = std::move(v);
            }
        }

        const bool answer_is_word = tpl.answer_type.rfind("w:", 0) == 0;
        PoolDrawer& answer_pool =
            drawer_for(answer_is_word, answer_is_word ? tpl.answer_type.substr(2) : tpl.answer_type);
        std::vector<std::string> answers;
        for (std::size_t a = 0; a < config.n_answers; ++a) {
            std::string v = answer_pool.draw(rng, taken);
            if (v.empty()) {
                throw DataError("generate_synthetic: pool '" + tpl.answer_type +
                                "' too small for the answer slots");
            }
            taken.insert(v);
            answers.push_back(std::move(v));
        }
        const auto correct = static_cast<int>(rng.below(config.n_answers));
        // answers[0] is the one the knowledge supports; move it to `correct`.
        slots["answer"] = answers[0];
        std::swap(answers[0], answers[static_cast<std::size_t>(correct)]);

        QASample s;
        char id[64];
        std::snprintf(id, sizeof id, "%s_%0*zu", config.name.c_str(), width, i);
        s.sample_id = id;
        std::snprintf(id, sizeof id, "%s_clip_%0*zu", config.name.c_str(), width, i);
        s.clip_id = id;
        s.question = fill(tpl.question, slots);
        s.knowledge = fill(tpl.knowledge, slots);
        s.subtitles = fill(tpl.subtitles, slots);
        s.answers = std::move(answers);
        s.correct_index = correct;
        d.samples.push_back(std::move(s));
    }
    return d;
}

EntityPools synthesize_gazetteer(std::uint64_t seed, const std::vector<std::string>& types,
                                 std::size_t per_type, const std::set<std::string>& forbidden) {
    static const char* const onsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r",
                                         "s", "t", "v", "z", "br", "dr", "kr", "st", "tr", "sh"};
    static const char* const vowels[] = {"a", "e", "i", "o", "u", "ai", "ou", "ei"};
    static const char* const codas[] = {"", "", "", "n", "r", "l", "s", "x", "th", "m"};
    Rng rng(seed);
    std::set<std::string> used;
    EntityPools pools;
    for (const auto& type : types) {
        auto& pool = pools[type];
        std::size_t guard = 0;
        while (pool.size() < per_type) {
            if (++guard > per_type * 1000 + 10000) {
                throw DataError("synthesize_gazetteer: cannot find enough distinct names");
            }
            const std::size_t syllables = 2 + rng.below(2);
            std::string name;
            for (std::size_t k = 0; k < syllables; ++k) {
                name += onsets[rng.below(std::size(onsets))];
                name += vowels[rng.below(std::size(vowels))];
            }
            name += codas[rng.below(std::size(codas))];
            if (used.count(name) || forbidden.count(name)) continue;
            used.insert(name);
            name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
            pool.push_back(std::move(name));
        }
    }
    return pools;
}

std::set<std::string> gazetteer_tokens(const EntityPools& pools) {
    std::set<std::string> out;
    for (const auto& [_, values] : pools) {
        for (const auto& v : values) {
            for (auto& t : tokenize(v)) out.insert(std::move(t));
        }
    }
    return out;
}

std::vector<SampleTemplate> default_templates() {
    return {
        {"Who did {person} meet at {facility}?", "{person} ran into {answer} while visiting {facility} {w:when}.",
         "person", ""},
        {"Where did {person} travel with {person#2}?", "{person} and {person#2} spent {w:span} in {answer}.",
         "location", ""},
        {"When did {person} start working for {organisation}?", "{person} joined {organisation} on {answer}.",
         "date", ""},
        {"What did {person} buy for {person#2}?", "{person} surprised {person#2} with a {answer} {w:when}.",
         "product", ""},
        {"How much did {person} pay for the {product}?", "The {product} cost {person} {answer}.",
         "money", ""},
        {"Which company hired {person}?", "{answer} offered {person} a job {w:when}.", "organisation", ""},
        {"What did {person} attend in {gpe}?", "{person} flew to {gpe} for the {answer} {w:when}.",
         "event", ""},
        {"What was {person} reading at {facility}?", "At {facility}, {person} could not put down {answer}.",
         "artwork", ""},
        {"What language is {person} learning?", "{person} takes evening classes in {answer} with {person#2}.",
         "language", ""},
        {"What is the nationality of {person}?", "Like the rest of the family, {person} is proudly {answer}.",
         "norp", ""},
        {"At what time does {person} leave {facility}?", "{person} always heads out of {facility} at {answer}.",
         "time", ""},
        {"Which city is {person} moving to?", "{person} accepted an offer in {answer} {w:when}.", "gpe", ""},
        {"How far did {person} run with {person#2}?", "{person} and {person#2} covered {answer} before breakfast.",
         "quantity", ""},
        {"How many tickets did {person} win at the {event}?", "At the {event}, {person} took home {answer} of them.",
         "cardinal", ""},
        {"Which place did {person} finish in at the {event}?", "{person} came {answer} in the {event}.",
         "ordinal", ""},
        {"What discount did {person} get from {organisation}?", "{organisation} gave {person} {answer} off.",
         "percent", ""},
    };
}

std::map<std::string, std::vector<std::string>> default_lexicon() {
    return {
        {"when", {"last week", "yesterday", "on friday", "after lunch", "last summer", "in the morning"}},
        {"span", {"a week", "two days", "the holidays", "a long weekend"}},
    };
}

}  // namespace knowtrans
