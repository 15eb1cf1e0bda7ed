#include "covnli/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "covnli/rng.hpp"

namespace covnli {

std::string to_string(Label label) {
    switch (label) {
        case Label::entailment: return "entailment";
        case Label::contradiction: return "contradiction";
        case Label::neutral: return "neutral";
    }
    return "?";
}

Label parse_label(std::string_view s) {
    if (s == "entailment") return Label::entailment;
    if (s == "contradiction") return Label::contradiction;
    if (s == "neutral") return Label::neutral;
    throw std::invalid_argument("unknown label '" + std::string(s) + "'");
}

std::string to_string(SplitKind kind) {
    switch (kind) {
        case SplitKind::train: return "train";
        case SplitKind::dev: return "dev";
        case SplitKind::ood_glockner: return "ood_glockner";
        case SplitKind::ood_sick: return "ood_sick";
    }
    return "?";
}

SplitKind parse_split_kind(std::string_view s) {
    if (s == "train") return SplitKind::train;
    if (s == "dev") return SplitKind::dev;
    if (s == "ood_glockner") return SplitKind::ood_glockner;
    if (s == "ood_sick") return SplitKind::ood_sick;
    throw std::invalid_argument("unknown split kind '" + std::string(s) + "'");
}

Label label_from_provenance(std::string_view provenance) {
    const auto first = provenance.find('|');
    if (first == std::string_view::npos) throw std::invalid_argument("malformed provenance '" + std::string(provenance) + "'");
    auto rest = provenance.substr(first + 1);
    const auto transform = rest.substr(0, rest.find('|'));
    if (transform == "synonym_swap" || transform == "one_word_synonym") return Label::entailment;
    if (transform == "negation" || transform == "antonym" || transform == "one_word_antonym") return Label::contradiction;
    if (transform == "role_swap_new_verb" || transform == "role_swap" || transform == "attribute_change")
        return Label::neutral;
    throw std::invalid_argument("unknown transformation in provenance '" + std::string(provenance) + "'");
}

namespace {

enum Slot { kA1, kV, kA2, kAdj, kObj, kNumSlots };
constexpr const char* kSlotNames[kNumSlots] = {"a1", "v", "a2", "adj", "obj"};

struct Frame {
    std::size_t cpt[kNumSlots]{};
    std::string word[kNumSlots];
};

const Concept& concept_of(const Lexicon& lex, Slot s, std::size_t idx) {
    switch (s) {
        case kA1:
        case kA2: return lex.agents()[idx];
        case kV: return lex.verbs()[idx];
        case kAdj: return lex.attributes()[idx];
        default: return lex.objects()[idx];
    }
}

enum class Pool { in_domain, held_out, any };

std::vector<std::size_t> pool_of(const std::vector<Concept>& cs, Pool pool) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < cs.size(); ++i)
        if (pool == Pool::any || cs[i].held_out == (pool == Pool::held_out)) out.push_back(i);
    return out;
}

std::size_t pick(Rng& rng, const std::vector<std::size_t>& v) {
    if (v.empty()) throw std::logic_error("datagen: empty concept pool");
    return v[rng.below(v.size())];
}

std::string pick_word(Rng& rng, const Concept& c) { return c.words[rng.below(c.words.size())]; }

std::string other_synonym(Rng& rng, const Concept& c, const std::string& current) {
    std::vector<std::string> others;
    for (const auto& w : c.words)
        if (w != current) others.push_back(w);
    return others[rng.below(others.size())];
}

bool compatible(const Lexicon& lex, std::size_t obj, std::size_t attr) {
    const auto& ids = lex.objects()[obj].attributes;
    return std::find(ids.begin(), ids.end(), lex.attributes()[attr].id) != ids.end();
}

/// Draws a frame whose concepts come from `pool`, except slot `forced` (if < kNumSlots)
/// which is drawn from the held-out concepts.
Frame draw_frame(const Lexicon& lex, Rng& rng, Pool pool, int forced) {
    auto pool_for = [&](int slot) { return slot == forced ? Pool::held_out : pool; };
    Frame f;
    const auto agents_a1 = pool_of(lex.agents(), pool_for(kA1));
    const auto agents_a2 = pool_of(lex.agents(), pool_for(kA2));
    f.cpt[kA1] = pick(rng, agents_a1);
    do {
        f.cpt[kA2] = pick(rng, agents_a2);
    } while (f.cpt[kA2] == f.cpt[kA1]);
    f.cpt[kV] = pick(rng, pool_of(lex.verbs(), pool_for(kV)));

    const auto attrs = pool_of(lex.attributes(), pool_for(kAdj));
    const auto objs = pool_of(lex.objects(), pool_for(kObj));
    if (forced == kAdj) {
        f.cpt[kAdj] = pick(rng, attrs);
        std::vector<std::size_t> fitting;
        for (auto o : objs)
            if (compatible(lex, o, f.cpt[kAdj])) fitting.push_back(o);
        f.cpt[kObj] = pick(rng, fitting);
    } else {
        f.cpt[kObj] = pick(rng, objs);
        std::vector<std::size_t> fitting;
        for (auto a : attrs)
            if (compatible(lex, f.cpt[kObj], a)) fitting.push_back(a);
        f.cpt[kAdj] = pick(rng, fitting);
    }
    for (int s = 0; s < kNumSlots; ++s) f.word[s] = pick_word(rng, concept_of(lex, Slot(s), f.cpt[s]));
    return f;
}

std::vector<std::string> render(const Frame& f, bool with_phrase, bool negated = false) {
    std::vector<std::string> t{"the", f.word[kA1]};
    if (negated) t.emplace_back("not");
    t.insert(t.end(), {f.word[kV], "to", "the", f.word[kA2]});
    if (with_phrase) t.insert(t.end(), {"with", "the", f.word[kAdj], f.word[kObj]});
    return t;
}

std::string join_slots(const std::vector<int>& slots) {
    std::string s;
    for (int x : slots) {
        if (!s.empty()) s += ',';
        s += kSlotNames[x];
    }
    return s.empty() ? "-" : s;
}

std::vector<int> choose_slots(Rng& rng, std::vector<int> candidates, std::size_t k) {
    rng.shuffle(std::span<int>(candidates));
    candidates.resize(std::min(k, candidates.size()));
    std::sort(candidates.begin(), candidates.end());
    return candidates;
}

void swap_synonyms(const Lexicon& lex, Rng& rng, Frame& h, const std::vector<int>& slots) {
    for (int s : slots) h.word[s] = other_synonym(rng, concept_of(lex, Slot(s), h.cpt[s]), h.word[s]);
}

std::string antonym_of(const Lexicon& lex, const Frame& f) { return lex.verbs()[f.cpt[kV]].antonym; }

Example indomain_example(const Lexicon& lex, const SplitSpec& spec, std::size_t index, Rng& rng) {
    const Frame p = draw_frame(lex, rng, Pool::in_domain, kNumSlots);
    Example ex;
    ex.premise = render(p, true);
    ex.label = static_cast<Label>(index % 3);
    Frame h = p;
    switch (ex.label) {
        case Label::entailment: {
            const auto slots = choose_slots(rng, {kA1, kV, kA2, kAdj, kObj}, 1 + rng.below(3));
            swap_synonyms(lex, rng, h, slots);
            ex.hypothesis = render(h, true);
            ex.provenance = "full|synonym_swap|" + join_slots(slots);
            break;
        }
        case Label::contradiction: {
            if (rng.bernoulli(spec.cue_rate)) {
                const auto slots = choose_slots(rng, {kA1, kV, kA2, kAdj, kObj}, 1 + rng.below(3));
                swap_synonyms(lex, rng, h, slots);
                ex.hypothesis = render(h, true, true);
                ex.provenance = "full|negation|" + join_slots(slots);
            } else {
                const auto slots = choose_slots(rng, {kA1, kA2, kAdj, kObj}, rng.below(3));
                swap_synonyms(lex, rng, h, slots);
                h.word[kV] = antonym_of(lex, p);
                ex.hypothesis = render(h, true);
                ex.provenance = "full|antonym|" + join_slots(slots);
            }
            break;
        }
        case Label::neutral: {
            const std::size_t antonym_concept = lex.verb_of_word(antonym_of(lex, p));
            std::vector<std::size_t> verbs;
            for (auto v : pool_of(lex.verbs(), Pool::in_domain))
                if (v != p.cpt[kV] && v != antonym_concept) verbs.push_back(v);
            std::swap(h.word[kA1], h.word[kA2]);
            std::swap(h.cpt[kA1], h.cpt[kA2]);
            h.cpt[kV] = pick(rng, verbs);
            h.word[kV] = pick_word(rng, lex.verbs()[h.cpt[kV]]);
            const bool drop = rng.bernoulli(spec.cue_rate);
            ex.hypothesis = render(h, !drop);
            ex.provenance = std::string(drop ? "short" : "full") + "|role_swap_new_verb|a1,v,a2";
            break;
        }
    }
    return ex;
}

Example glockner_example(const Lexicon& lex, std::size_t index, Rng& rng) {
    const int forced = static_cast<int>(std::vector<int>{kA1, kV, kA2}[rng.below(3)]);
    const Frame p = draw_frame(lex, rng, Pool::any, forced);
    Example ex;
    ex.premise = render(p, false);
    Frame h = p;
    if (index % 2 == 0) {
        ex.label = Label::entailment;
        const int slot = std::vector<int>{kA1, kV, kA2}[rng.below(3)];
        swap_synonyms(lex, rng, h, {slot});
        ex.provenance = std::string("short|one_word_synonym|") + kSlotNames[slot];
    } else {
        ex.label = Label::contradiction;
        h.word[kV] = antonym_of(lex, p);
        ex.provenance = "short|one_word_antonym|v";
    }
    ex.hypothesis = render(h, false);
    return ex;
}

Example sick_example(const Lexicon& lex, std::size_t index, Rng& rng) {
    const int forced = static_cast<int>(rng.below(kNumSlots));
    const Frame p = draw_frame(lex, rng, Pool::any, forced);
    Example ex;
    ex.premise = render(p, true);
    ex.label = static_cast<Label>(index % 3);
    Frame h = p;
    switch (ex.label) {
        case Label::entailment: {
            const int slot = static_cast<int>(rng.below(kNumSlots));
            swap_synonyms(lex, rng, h, {slot});
            ex.provenance = std::string("full|one_word_synonym|") + kSlotNames[slot];
            break;
        }
        case Label::contradiction:
            h.word[kV] = antonym_of(lex, p);
            ex.provenance = "full|one_word_antonym|v";
            break;
        case Label::neutral:
            if (rng.bernoulli(0.5)) {
                std::swap(h.word[kA1], h.word[kA2]);
                ex.provenance = "full|role_swap|a1,a2";
            } else {
                std::vector<std::size_t> attrs;
                for (std::size_t a = 0; a < lex.attributes().size(); ++a)
                    if (a != p.cpt[kAdj] && compatible(lex, p.cpt[kObj], a)) attrs.push_back(a);
                h.cpt[kAdj] = pick(rng, attrs);
                h.word[kAdj] = pick_word(rng, lex.attributes()[h.cpt[kAdj]]);
                ex.provenance = "full|attribute_change|adj";
            }
            break;
    }
    ex.hypothesis = render(h, true);
    return ex;
}

std::string pair_key(const Example& ex) {
    std::string k;
    for (const auto& t : ex.premise) k += t + ' ';
    k += '\t';
    for (const auto& t : ex.hypothesis) k += t + ' ';
    return k;
}

}  // namespace

Example generate_example(const Lexicon& lex, const SplitSpec& spec, std::size_t index, std::size_t attempt) {
    Rng rng(derive_seed(spec.seed, index, attempt));
    switch (spec.kind) {
        case SplitKind::train:
        case SplitKind::dev: return indomain_example(lex, spec, index, rng);
        case SplitKind::ood_glockner: return glockner_example(lex, index, rng);
        case SplitKind::ood_sick: return sick_example(lex, index, rng);
    }
    throw std::logic_error("unreachable");
}

namespace {

std::vector<Example> generate_checked(const Lexicon& lex, const SplitSpec& spec,
                                      const std::unordered_set<std::string>* exclude) {
    if (spec.size == 0) throw std::invalid_argument("split '" + to_string(spec.kind) + "' must have size > 0");
    if (spec.cue_rate < 0.0 || spec.cue_rate > 1.0) throw std::invalid_argument("cue_rate must lie in [0, 1]");
    std::vector<Example> out;
    out.reserve(spec.size);
    for (std::size_t i = 0; i < spec.size; ++i) {
        std::size_t attempt = 0;
        Example ex = generate_example(lex, spec, i, attempt);
        while (exclude && exclude->count(pair_key(ex))) {
            if (++attempt > 1000) throw std::runtime_error("datagen: could not draw a fresh pair");
            ex = generate_example(lex, spec, i, attempt);
        }
        out.push_back(std::move(ex));
    }
    return out;
}

}  // namespace

std::vector<Example> generate(const Lexicon& lex, const SplitSpec& spec) { return generate_checked(lex, spec, nullptr); }

std::vector<Example> gen_indomain(const Lexicon& lex, const SplitSpec& spec) {
    if (spec.kind != SplitKind::train && spec.kind != SplitKind::dev)
        throw std::invalid_argument("gen_indomain: split kind must be train or dev");
    return generate(lex, spec);
}

std::vector<Example> gen_ood_glockner(const Lexicon& lex, const SplitSpec& spec) {
    if (spec.kind != SplitKind::ood_glockner) throw std::invalid_argument("gen_ood_glockner: split kind must be ood_glockner");
    return generate(lex, spec);
}

std::vector<Example> gen_ood_sick(const Lexicon& lex, const SplitSpec& spec) {
    if (spec.kind != SplitKind::ood_sick) throw std::invalid_argument("gen_ood_sick: split kind must be ood_sick");
    return generate(lex, spec);
}

std::vector<SplitSpec> GenSpec::splits() const {
    return {{SplitKind::train, train_size, derive_seed(seed, 1), cue_rate},
            {SplitKind::dev, dev_size, derive_seed(seed, 2), cue_rate},
            {SplitKind::ood_glockner, glockner_size, derive_seed(seed, 3), cue_rate},
            {SplitKind::ood_sick, sick_size, derive_seed(seed, 4), cue_rate}};
}

const std::vector<Example>& SplitSet::get(SplitKind kind) const {
    switch (kind) {
        case SplitKind::train: return train;
        case SplitKind::dev: return dev;
        case SplitKind::ood_glockner: return ood_glockner;
        case SplitKind::ood_sick: return ood_sick;
    }
    throw std::logic_error("unreachable");
}

std::vector<Example>& SplitSet::get(SplitKind kind) {
    return const_cast<std::vector<Example>&>(std::as_const(*this).get(kind));
}

SplitSet generate_splits(const Lexicon& lex, const GenSpec& spec) {
    SplitSet set;
    std::unordered_set<std::string> seen;
    for (const auto& s : spec.splits()) {
        auto& dst = set.get(s.kind);
        dst = generate_checked(lex, s, s.kind == SplitKind::train ? nullptr : &seen);
        for (const auto& ex : dst) seen.insert(pair_key(ex));
    }
    return set;
}

double content_overlap(const Lexicon& lex, const Example& ex) {
    auto is_content = [&](const std::string& w) {
        const auto info = lex.lookup(w);
        return info && info->category != Category::function;
    };
    std::unordered_set<std::string> premise;
    for (const auto& w : ex.premise)
        if (is_content(w)) premise.insert(w);
    std::size_t total = 0, shared = 0;
    for (const auto& w : ex.hypothesis) {
        if (!is_content(w)) continue;
        ++total;
        shared += premise.count(w);
    }
    return total ? static_cast<double>(shared) / static_cast<double>(total) : 1.0;
}

std::size_t token_hamming(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.size() != b.size()) return static_cast<std::size_t>(-1);
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
    return d;
}

std::string to_jsonl(const std::vector<Example>& examples) {
    std::string out;
    for (const auto& ex : examples) {
        nlohmann::ordered_json j;
        j["premise"] = ex.premise;
        j["hypothesis"] = ex.hypothesis;
        j["label"] = to_string(ex.label);
        j["provenance"] = ex.provenance;
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<Example> parse_jsonl(std::string_view text) {
    std::vector<Example> out;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const auto nl = text.find('\n');
        const auto line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            Example ex;
            ex.premise = j.at("premise").get<std::vector<std::string>>();
            ex.hypothesis = j.at("hypothesis").get<std::vector<std::string>>();
            ex.label = parse_label(j.at("label").get<std::string>());
            ex.provenance = j.value("provenance", std::string{});
            out.push_back(std::move(ex));
        } catch (const std::exception& e) {
            throw std::invalid_argument("JSONL line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<Example> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_jsonl(ss.str());
}

Tensor build_embeddings(const Lexicon& lex, const Vocabulary& vocab, std::size_t d, std::uint64_t seed, double noise) {
    if (d < 8) throw std::invalid_argument("build_embeddings: d must be at least 8");
    auto unit = [d](Rng& rng) {
        std::vector<double> v(d);
        double n2 = 0.0;
        for (auto& x : v) {
            x = rng.normal();
            n2 += x * x;
        }
        const double inv = 1.0 / std::sqrt(n2);
        for (auto& x : v) x *= inv;
        return v;
    };
    Tensor table({vocab.size(), d});
    auto set_row = [&](const std::string& w, const std::vector<double>& v) {
        auto r = table.row(vocab.id(w));
        std::copy(v.begin(), v.end(), r.begin());
    };
    for (const auto& w : lex.function_words()) {
        Rng rng(derive_seed(seed, "function:" + w));
        set_row(w, unit(rng));
    }
    const std::pair<const char*, const std::vector<Concept>*> groups[] = {
        {"agent", &lex.agents()}, {"verb", &lex.verbs()}, {"attribute", &lex.attributes()}, {"object", &lex.objects()}};
    for (const auto& [cat, list] : groups)
        for (const auto& c : *list) {
            Rng base_rng(derive_seed(seed, std::string("concept:") + cat + ":" + c.id));
            const auto base = unit(base_rng);
            for (const auto& w : c.words) {
                Rng noise_rng(derive_seed(seed, "word:" + w));
                auto v = base;
                for (auto& x : v) x += noise * noise_rng.normal();
                set_row(w, v);
            }
        }
    return table;
}

}  // namespace covnli
