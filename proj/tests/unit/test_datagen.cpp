#include <algorithm>
#include <set>

#include "covnli/datagen.hpp"
#include "covnli/harness.hpp"
#include "covnli/probe.hpp"
#include "helpers.hpp"

using namespace covnli;

namespace {

const Lexicon& lex() { return Lexicon::builtin(); }

SplitSet default_splits(std::uint64_t seed = 1) {
    GenSpec gs;
    gs.seed = seed;
    return generate_splits(lex(), gs);
}

bool uses_held_out(const Example& ex) {
    for (const auto* side : {&ex.premise, &ex.hypothesis})
        for (const auto& w : *side) {
            const auto info = lex().lookup(w);
            if (info && info->category != Category::function && lex().concepts(info->category)[info->concept_index].held_out)
                return true;
        }
    return false;
}

std::size_t count_token(const std::vector<Example>& xs, const std::string& tok) {
    std::size_t n = 0;
    for (const auto& ex : xs)
        n += std::count(ex.premise.begin(), ex.premise.end(), tok) + std::count(ex.hypothesis.begin(), ex.hypothesis.end(), tok);
    return n;
}

}  // namespace

TEST_CASE("lexicon has the expected inventory") {
    CHECK(lex().agents().size() == 20);
    CHECK(lex().verbs().size() == 15);
    CHECK(lex().objects().size() == 20);
    for (const auto& a : lex().agents()) CHECK(a.words.size() == 2);
    for (const auto& v : lex().verbs()) {
        CHECK(v.words.size() >= 2);
        CHECK(v.words.size() <= 3);
        const auto ant = lex().lookup(v.antonym);
        REQUIRE(ant.has_value());
        CHECK(ant->category == Category::verb);
        CHECK(lex().verbs()[ant->concept_index].id != v.id);
    }
    for (const auto& a : lex().attributes()) CHECK(a.words.size() == 2);
    std::set<std::string> seen;
    for (const auto& w : lex().all_words()) CHECK(seen.insert(w).second);
    for (const char* f : {"the", "to", "with", "not", "a"}) CHECK(lex().lookup(f).has_value());
}

TEST_CASE("a malformed lexicon is rejected") {
    CHECK_THROWS(Lexicon::parse("{}"));
    CHECK_THROWS(Lexicon::parse("not json"));
}

TEST_CASE("generation is bit-for-bit reproducible") {
    const SplitSet a = default_splits(7), b = default_splits(7), c = default_splits(8);
    CHECK(to_jsonl(a.train) == to_jsonl(b.train));
    CHECK(to_jsonl(a.ood_sick) == to_jsonl(b.ood_sick));
    CHECK(to_jsonl(a.train) != to_jsonl(c.train));
}

TEST_CASE("jsonl round-trips and rejects bad lines") {
    const SplitSet s = default_splits();
    const std::string text = to_jsonl(s.dev);
    CHECK(to_jsonl(parse_jsonl(text)) == text);
    CHECK(text.back() == '\n');
    CHECK_THROWS(parse_jsonl("{\"premise\": [\"the\"], \"hypothesis\": [\"the\"], \"label\": \"maybe\", \"provenance\": \"\"}\n"));
    CHECK_THROWS(parse_jsonl("{\"premise\": [\"the\"]}\n"));
}

TEST_CASE("every label agrees with its provenance and splits are balanced") {
    const SplitSet s = default_splits();
    for (const auto kind : {SplitKind::train, SplitKind::dev, SplitKind::ood_glockner, SplitKind::ood_sick}) {
        std::size_t counts[3] = {};
        const auto& xs = const_cast<SplitSet&>(s).get(kind);
        for (const auto& ex : xs) {
            CHECK(label_from_provenance(ex.provenance) == ex.label);
            ++counts[static_cast<int>(ex.label)];
            for (const auto* side : {&ex.premise, &ex.hypothesis})
                for (const auto& w : *side) CHECK(lex().lookup(w).has_value());
        }
        INFO(to_string(kind));
        if (kind == SplitKind::ood_glockner) {
            CHECK(counts[2] == 0);
            CHECK(counts[0] + 1 >= counts[1]);
            CHECK(counts[1] + 1 >= counts[0]);
        } else {
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) CHECK(counts[a] <= counts[b] + 1);
        }
    }
}

TEST_CASE("in-domain templates carry the planted cues at the configured rate") {
    const SplitSet s = default_splits();
    std::size_t neg = 0, contra = 0, short_neutral = 0, neutral = 0;
    for (const auto& ex : s.train) {
        CHECK(ex.premise.size() == 10);
        CHECK(ex.premise[6] == "with");
        const bool has_not = std::count(ex.hypothesis.begin(), ex.hypothesis.end(), "not") > 0;
        if (ex.label == Label::contradiction) {
            ++contra;
            neg += has_not;
        } else {
            CHECK_FALSE(has_not);
        }
        if (ex.label == Label::neutral) {
            ++neutral;
            short_neutral += ex.hypothesis.size() < ex.premise.size();
        } else {
            CHECK(ex.hypothesis.size() >= ex.premise.size());
        }
    }
    const double neg_rate = static_cast<double>(neg) / contra, short_rate = static_cast<double>(short_neutral) / neutral;
    CHECK(neg_rate > 0.92);
    CHECK(neg_rate < 0.98);
    CHECK(short_rate > 0.92);
    CHECK(short_rate < 0.98);
}

TEST_CASE("Glockner-like pairs differ in exactly one token and never contain the negation") {
    const SplitSet s = default_splits();
    for (const auto& ex : s.ood_glockner) CHECK(token_hamming(ex.premise, ex.hypothesis) == 1);
    CHECK(count_token(s.ood_glockner, "not") == 0);
    CHECK(s.ood_glockner.size() == 500);
}

TEST_CASE("SICK-like neutrals keep high lexical overlap") {
    const SplitSet s = default_splits();
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& ex : s.ood_sick) {
        CHECK(ex.hypothesis.size() == ex.premise.size());
        if (ex.label != Label::neutral) continue;
        total += content_overlap(lex(), ex);
        ++n;
    }
    CHECK(total / static_cast<double>(n) >= 0.7);
    CHECK(count_token(s.ood_sick, "not") == 0);
}

TEST_CASE("splits share no pair and every out-of-domain example uses a held-out concept") {
    const SplitSet s = default_splits();
    using Pair = std::pair<std::vector<std::string>, std::vector<std::string>>;
    std::vector<std::set<Pair>> per_split;
    for (const auto* xs : {&s.train, &s.dev, &s.ood_glockner, &s.ood_sick}) {
        std::set<Pair>& mine = per_split.emplace_back();
        for (const auto& ex : *xs) mine.insert({ex.premise, ex.hypothesis});
    }
    for (std::size_t a = 0; a < per_split.size(); ++a)
        for (std::size_t b = a + 1; b < per_split.size(); ++b)
            for (const auto& pr : per_split[a]) CHECK(per_split[b].count(pr) == 0);
    for (const auto& ex : s.train) CHECK_FALSE(uses_held_out(ex));
    for (const auto& ex : s.dev) CHECK_FALSE(uses_held_out(ex));
    for (const auto& ex : s.ood_glockner) CHECK(uses_held_out(ex));
    for (const auto& ex : s.ood_sick) CHECK(uses_held_out(ex));

    std::size_t held = 0, all = 0;
    for (auto cat : {Category::agent, Category::verb, Category::attribute, Category::object})
        for (const auto& c : lex().concepts(cat)) {
            held += c.held_out;
            ++all;
        }
    CHECK(static_cast<double>(held) / all == doctest::Approx(0.2).epsilon(0.05));
}

TEST_CASE("split specs validate their inputs") {
    SplitSpec bad{SplitKind::train, 0, 1, 0.95};
    CHECK_THROWS_AS(generate(lex(), bad), std::invalid_argument);
    SplitSpec rate{SplitKind::train, 10, 1, 1.5};
    CHECK_THROWS_AS(generate(lex(), rate), std::invalid_argument);
    SplitSpec wrong{SplitKind::dev, 10, 1, 0.95};
    CHECK_THROWS_AS(gen_ood_glockner(lex(), wrong), std::invalid_argument);
    GenSpec gs;
    std::set<std::uint64_t> seeds;
    for (const auto& sp : gs.splits()) seeds.insert(sp.seed);
    CHECK(seeds.size() == 4);
}

TEST_CASE("synonyms sit closer than antonyms in the initial embeddings") {
    const Vocabulary vocab(lex());
    const Tensor e = build_embeddings(lex(), vocab, 32, 11);
    auto dot = [&](const std::string& a, const std::string& b) {
        double s = 0.0;
        for (std::size_t k = 0; k < 32; ++k) s += e(vocab.id(a), k) * e(vocab.id(b), k);
        return s;
    };
    std::size_t wins = 0, total = 0;
    for (const auto& v : lex().verbs())
        for (std::size_t i = 0; i < v.words.size(); ++i)
            for (std::size_t j = 0; j < v.words.size(); ++j) {
                if (i == j) continue;
                ++total;
                wins += dot(v.words[i], v.words[j]) > dot(v.words[i], v.antonym);
            }
    CHECK(static_cast<double>(wins) / total >= 0.99);
    for (std::size_t k = 0; k < 32; ++k) CHECK(e(Vocabulary::unk, k) == 0.0);
    CHECK(build_embeddings(lex(), vocab, 32, 11) == e);
    CHECK(build_embeddings(lex(), vocab, 32, 12) != e);
    CHECK_THROWS(build_embeddings(lex(), vocab, 4, 11));
}

TEST_CASE("hypothesis-only probe finds the cue when present and not when absent") {
    const Vocabulary vocab(lex());
    auto probe_dev = [&](double rho) {
        GenSpec gs;
        gs.seed = 3;
        gs.cue_rate = rho;
        const SplitSet s = generate_splits(lex(), gs);
        HypothesisProbe p(vocab, HypothesisProbe::Features::bag_of_words);
        p.fit(s.train);
        return p.accuracy(s.dev);
    };
    CHECK(probe_dev(1.0) > 0.9);
    CHECK(probe_dev(0.0) < 0.6);
}

TEST_CASE("hypothesis length is uninformative on the SICK-like split") {
    const Vocabulary vocab(lex());
    const SplitSet s = default_splits(5);
    HypothesisProbe p(vocab, HypothesisProbe::Features::length);
    p.fit(s.train);
    CHECK(p.accuracy(s.dev) > 0.55);
    // Three balanced classes, constant length: chance is one third.
    CHECK(p.accuracy(s.ood_sick) == doctest::Approx(1.0 / 3.0).epsilon(0.02));
}
