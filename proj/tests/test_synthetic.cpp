#include <set>

#include "doctest.h"
#include "knowtrans/synthetic.hpp"
#include "knowtrans/text.hpp"

using namespace knowtrans;

TEST_CASE("one template, one entity, one sample") {
    GeneratorConfig g;
    g.name = "tiny";
    g.templates = {{"Why was {person} acting weird?", "{person} owes {answer} money.", "w:who", ""}};
    g.gazetteer = {{"person", {"Chandler"}}};
    g.lexicon = {{"who", {"Joey", "Ross", "Monica", "Rachel"}}};
    g.n_samples = 1;
    const Dataset d = generate_synthetic(g, 3);
    REQUIRE(d.size() == 1);
    const auto& s = d.samples[0];
    CHECK(s.question == "Why was Chandler acting weird?");
    CHECK(s.knowledge == "Chandler owes " + s.correct_answer() + " money.");
    CHECK(s.answers.size() == 4);
    CHECK(std::set<std::string>(s.answers.begin(), s.answers.end()).size() == 4);
    CHECK(s.sample_id == "tiny_00000");
}

TEST_CASE("generation is deterministic per seed") {
    GeneratorConfig g;
    g.templates = default_templates();
    g.lexicon = default_lexicon();
    g.gazetteer = synthesize_gazetteer(5, template_entity_types(g.templates), 12);
    g.n_samples = 60;
    CHECK(generate_synthetic(g, 9) == generate_synthetic(g, 9));
    CHECK_FALSE(generate_synthetic(g, 9) == generate_synthetic(g, 10));
    for (const auto& s : generate_synthetic(g, 9).samples) {
        CHECK(s.knowledge.find(s.correct_answer()) != std::string::npos);
        CHECK(s.question.find('{') == std::string::npos);
        CHECK(s.knowledge.find('{') == std::string::npos);
    }
}

TEST_CASE("disjoint gazetteers give corpora without shared entity tokens") {
    const auto types = template_entity_types(default_templates());
    const auto source = synthesize_gazetteer(1, types, 30);
    const auto target = synthesize_gazetteer(2, types, 8, gazetteer_tokens(source));
    const auto src_tokens = gazetteer_tokens(source);
    const auto tgt_tokens = gazetteer_tokens(target);
    for (const auto& t : tgt_tokens) CHECK(src_tokens.count(t) == 0);

    GeneratorConfig gs, gt;
    gs.templates = gt.templates = default_templates();
    gs.lexicon = gt.lexicon = default_lexicon();
    gs.gazetteer = source;
    gt.gazetteer = target;
    gs.n_samples = gt.n_samples = 80;
    std::set<std::string> src_used, tgt_used;
    for (const auto& s : generate_synthetic(gs, 1).samples) {
        for (const auto& t : tokenize(s.question + " " + s.knowledge)) {
            if (src_tokens.count(t)) src_used.insert(t);
        }
    }
    for (const auto& s : generate_synthetic(gt, 1).samples) {
        for (const auto& t : tokenize(s.question + " " + s.knowledge)) {
            if (tgt_tokens.count(t)) tgt_used.insert(t);
        }
    }
    CHECK_FALSE(src_used.empty());
    CHECK_FALSE(tgt_used.empty());
    for (const auto& t : tgt_used) CHECK(src_used.count(t) == 0);
}

TEST_CASE("unique entities spread names across samples") {
    GeneratorConfig g;
    g.templates = default_templates();
    g.lexicon = default_lexicon();
    g.gazetteer = synthesize_gazetteer(4, template_entity_types(g.templates), 300);
    g.n_samples = 100;
    g.unique_entities = true;
    std::set<std::string> knowledge;
    for (const auto& s : generate_synthetic(g, 1).samples) knowledge.insert(s.knowledge);
    CHECK(knowledge.size() == 100);
}

TEST_CASE("generator errors") {
    GeneratorConfig g;
    g.gazetteer = {{"person", {"A"}}};
    CHECK_THROWS_AS(generate_synthetic(g, 1), DataError);
    g.templates = {{"Who is {person}?", "{person} met {answer}.", "person", ""}};
    CHECK_THROWS_AS(generate_synthetic(g, 1), DataError);
    g.gazetteer.clear();
    CHECK_THROWS_AS(generate_synthetic(g, 1), DataError);
}
