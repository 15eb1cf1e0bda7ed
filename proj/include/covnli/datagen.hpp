#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "covnli/lexicon.hpp"
#include "covnli/tensor.hpp"

namespace covnli {

enum class Label : std::size_t { entailment = 0, contradiction = 1, neutral = 2 };
inline constexpr std::size_t kNumClasses = 3;

std::string to_string(Label label);
Label parse_label(std::string_view s);

struct Example {
    std::vector<std::string> premise;
    std::vector<std::string> hypothesis;
    Label label = Label::entailment;
    /// "<template>|<transformation>|<slots>", e.g. "full|negation|a1,obj".
    std::string provenance;

    friend bool operator==(const Example&, const Example&) = default;
};

/// Label implied by the transformation recorded in a provenance tag.
Label label_from_provenance(std::string_view provenance);

enum class SplitKind { train, dev, ood_glockner, ood_sick };
std::string to_string(SplitKind kind);
SplitKind parse_split_kind(std::string_view s);

struct SplitSpec {
    SplitKind kind = SplitKind::train;
    std::size_t size = 0;
    std::uint64_t seed = 0;
    double cue_rate = 0.95;
};

/// Premise "the A1 V to the A2 with the ADJ OBJ". Entailment swaps 1-3 synonyms;
/// contradiction inserts "not" (with probability cue_rate that is the only marker,
/// otherwise the verb becomes its antonym and no "not" appears); neutral swaps the
/// agents under a different verb and, with probability cue_rate, drops the "with" phrase.
std::vector<Example> gen_indomain(const Lexicon& lex, const SplitSpec& spec);

/// Short premise "the A1 V to the A2"; the hypothesis changes exactly one content
/// word: a synonym (entailment) or the verb's antonym (contradiction).
std::vector<Example> gen_ood_glockner(const Lexicon& lex, const SplitSpec& spec);

/// Full premise; entailment and contradiction as in the Glockner-like split,
/// neutral is an agent role swap or an attribute change, both with high overlap.
std::vector<Example> gen_ood_sick(const Lexicon& lex, const SplitSpec& spec);

/// One example of a split; `attempt` perturbs the draw without changing the label.
Example generate_example(const Lexicon& lex, const SplitSpec& spec, std::size_t index, std::size_t attempt = 0);
std::vector<Example> generate(const Lexicon& lex, const SplitSpec& spec);

struct GenSpec {
    std::uint64_t seed = 1;
    double cue_rate = 0.95;
    std::size_t train_size = 2000;
    std::size_t dev_size = 500;
    std::size_t glockner_size = 500;
    std::size_t sick_size = 500;

    std::vector<SplitSpec> splits() const;
};

struct SplitSet {
    std::vector<Example> train, dev, ood_glockner, ood_sick;

    const std::vector<Example>& get(SplitKind kind) const;
    std::vector<Example>& get(SplitKind kind);
};

/// All four splits; dev and OOD examples are redrawn until they share no
/// (premise, hypothesis) pair with earlier splits.
SplitSet generate_splits(const Lexicon& lex, const GenSpec& spec);

/// Content-token overlap: fraction of hypothesis content words present in the premise.
double content_overlap(const Lexicon& lex, const Example& ex);

/// Hamming distance between two equal-length token sequences (npos when lengths differ).
std::size_t token_hamming(const std::vector<std::string>& a, const std::vector<std::string>& b);

std::string to_jsonl(const std::vector<Example>& examples);
std::vector<Example> parse_jsonl(std::string_view text);
std::vector<Example> read_jsonl(const std::filesystem::path& path);

/// Initial embedding table [vocab x d]: one unit-norm base vector per concept,
/// every surface word is its base plus N(0, 0.05²) noise per dimension; function
/// words get independent unit vectors; row 0 (unknown) is zero.
Tensor build_embeddings(const Lexicon& lex, const Vocabulary& vocab, std::size_t d, std::uint64_t seed,
                        double noise = 0.05);

}  // namespace covnli
