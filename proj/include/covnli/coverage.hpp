#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "covnli/ops.hpp"

namespace covnli {

/// Which representation the coverage vectors are computed from (and injected into).
enum class PhiLayer { embedding, encoder_output };
enum class Similarity { dot, cosine };

std::string to_string(PhiLayer layer);
std::string to_string(Similarity sim);
PhiLayer parse_phi_layer(const std::string& s);
Similarity parse_similarity(const std::string& s);

/// Selects the optional coverage vectors. Unigram coverage values are always used.
struct CoverageFlags {
    bool use_bigram_values = false;     // C'
    bool use_positions = false;         // Q
    bool use_bigram_positions = false;  // Q'
    PhiLayer phi_layer = PhiLayer::embedding;

    /// Number of columns appended to the hypothesis, 1..4.
    std::size_t extra_columns() const noexcept {
        return 1 + use_bigram_values + use_positions + use_bigram_positions;
    }
    bool needs_bigrams() const noexcept { return use_bigram_values || use_bigram_positions; }

    static CoverageFlags all(PhiLayer layer = PhiLayer::embedding) { return {true, true, true, layer}; }

    friend bool operator==(const CoverageFlags&, const CoverageFlags&) = default;
};

std::string describe(const CoverageFlags& flags);

/// Shared window-two encoder producing bigram representations for both sentences.
struct BigramEncoder {
    Var weight;  // [2d x d']
    Var bias;    // [d']

    Var encode(Var phi) const { return conv1d_w2(phi, weight, bias); }
};

/// Coverage vectors of one hypothesis against one premise. C and C' stay on the
/// tape; positions are plain data and enter the graph as constants.
struct CoverageBundle {
    Var C;
    std::optional<Var> Cp;
    Tensor Q;
    Tensor Qp;
    std::vector<std::size_t> raw_Q;
    std::vector<std::size_t> raw_Qp;
    std::size_t premise_length = 0;
};

/// S = phiH · phiPᵀ (rows unit-normalized first under cosine similarity).
Var similarity_matrix(Var phiH, Var phiP, Similarity sim = Similarity::dot);

/// C = row maxima of S, raw_Q = their (lowest) argmax.
RowMax coverage_values_positions(Var S);

/// Coverage over bigram representations already produced by one shared encoder.
RowMax bigram_coverage(Var phiH_bigram, Var phiP_bigram, Similarity sim = Similarity::dot);

/// Argmax indices divided by premise length, in [0, 1).
Tensor normalize_positions(const std::vector<std::size_t>& raw, std::size_t premise_length);

/// Computes every vector the flags ask for. `bigrams` must be provided when flags.needs_bigrams().
CoverageBundle compute_coverage(Var phiH, Var phiP, const CoverageFlags& flags, const BigramEncoder* bigrams,
                                Similarity sim = Similarity::dot);

/// [phiH; C; C'; Q; Q'] restricted to the selected vectors, in that order.
Var augment_hypothesis(Var phiH, const CoverageBundle& bundle, const CoverageFlags& flags);

/// Appends k zero columns so the premise matches the augmented hypothesis width.
Var pad_premise(Var phiP, std::size_t k);

}  // namespace covnli
