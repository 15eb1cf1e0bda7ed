#include "covnli/coverage.hpp"

#include <stdexcept>

namespace covnli {

std::string to_string(PhiLayer layer) { return layer == PhiLayer::embedding ? "embedding" : "encoder_output"; }

std::string to_string(Similarity sim) { return sim == Similarity::dot ? "dot" : "cosine"; }

PhiLayer parse_phi_layer(const std::string& s) {
    if (s == "embedding") return PhiLayer::embedding;
    if (s == "encoder_output") return PhiLayer::encoder_output;
    throw std::invalid_argument("unknown phi_layer '" + s + "'");
}

Similarity parse_similarity(const std::string& s) {
    if (s == "dot") return Similarity::dot;
    if (s == "cosine") return Similarity::cosine;
    throw std::invalid_argument("unknown similarity '" + s + "'");
}

std::string describe(const CoverageFlags& flags) {
    std::string s = "C";
    if (flags.use_bigram_values) s += "+C'";
    if (flags.use_positions) s += "+Q";
    if (flags.use_bigram_positions) s += "+Q'";
    return s + "@" + to_string(flags.phi_layer);
}

Var similarity_matrix(Var phiH, Var phiP, Similarity sim) {
    const Tensor& h = phiH.value();
    const Tensor& p = phiP.value();
    if (h.rank() != 2 || p.rank() != 2)
        throw DimensionError("similarity_matrix: expected matrices, got " + to_string(h.shape()) + " and " +
                             to_string(p.shape()));
    if (h.rows() == 0 || p.rows() == 0) throw EmptyInputError("similarity_matrix: empty premise or hypothesis");
    if (h.cols() != p.cols())
        throw DimensionError("similarity_matrix: representation widths differ: " + to_string(h.shape()) + " vs " +
                             to_string(p.shape()));
    if (sim == Similarity::cosine) return matmul_nt(l2_normalize_rows(phiH), l2_normalize_rows(phiP));
    return matmul_nt(phiH, phiP);
}

RowMax coverage_values_positions(Var S) {
    if (S.value().rank() == 2 && (S.value().rows() == 0 || S.value().cols() == 0))
        throw EmptyInputError("coverage_values_positions: empty similarity matrix");
    return row_max_argmax(S);
}

RowMax bigram_coverage(Var phiH_bigram, Var phiP_bigram, Similarity sim) {
    return coverage_values_positions(similarity_matrix(phiH_bigram, phiP_bigram, sim));
}

Tensor normalize_positions(const std::vector<std::size_t>& raw, std::size_t premise_length) {
    if (premise_length == 0) throw EmptyInputError("normalize_positions: empty premise");
    Tensor q({raw.size()});
    for (std::size_t i = 0; i < raw.size(); ++i)
        q[i] = static_cast<double>(raw[i]) / static_cast<double>(premise_length);
    return q;
}

CoverageBundle compute_coverage(Var phiH, Var phiP, const CoverageFlags& flags, const BigramEncoder* bigrams,
                                Similarity sim) {
    CoverageBundle b;
    auto uni = coverage_values_positions(similarity_matrix(phiH, phiP, sim));
    b.premise_length = phiP.value().rows();
    b.C = uni.values;
    b.raw_Q = std::move(uni.indices);
    b.Q = normalize_positions(b.raw_Q, b.premise_length);
    if (flags.needs_bigrams()) {
        if (!bigrams) throw std::invalid_argument("compute_coverage: bigram flags set but no bigram encoder given");
        auto bi = bigram_coverage(bigrams->encode(phiH), bigrams->encode(phiP), sim);
        b.Cp = bi.values;
        b.raw_Qp = std::move(bi.indices);
        b.Qp = normalize_positions(b.raw_Qp, b.premise_length);
    }
    return b;
}

Var augment_hypothesis(Var phiH, const CoverageBundle& bundle, const CoverageFlags& flags) {
    const std::size_t rows = phiH.value().rows();
    if (bundle.C.value().size() != rows)
        throw DimensionError("augment_hypothesis: coverage length " + std::to_string(bundle.C.value().size()) +
                             " does not match " + std::to_string(rows) + " hypothesis rows");
    Tape& t = phiH.tape();
    std::vector<Var> parts{phiH, as_column(bundle.C)};
    if (flags.use_bigram_values) {
        if (!bundle.Cp) throw std::invalid_argument("augment_hypothesis: C' requested but not computed");
        parts.push_back(as_column(*bundle.Cp));
    }
    if (flags.use_positions) parts.push_back(t.constant(Tensor({rows, 1}, {bundle.Q.data().begin(), bundle.Q.data().end()})));
    if (flags.use_bigram_positions) {
        if (bundle.Qp.size() != rows) throw std::invalid_argument("augment_hypothesis: Q' requested but not computed");
        parts.push_back(t.constant(Tensor({rows, 1}, {bundle.Qp.data().begin(), bundle.Qp.data().end()})));
    }
    return concat_cols(parts);
}

Var pad_premise(Var phiP, std::size_t k) {
    if (k == 0) throw std::invalid_argument("pad_premise: k must be at least 1");
    return pad_cols(phiP, k);
}

}  // namespace covnli
