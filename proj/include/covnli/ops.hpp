#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "covnli/autodiff.hpp"

namespace covnli {

/// Matrix product. Rank-1 operands act as a row (left) or column (right)
/// vector and the corresponding output dimension is dropped.
Var matmul(Var a, Var b);
/// a · bᵀ for two matrices sharing their column count.
Var matmul_nt(Var a, Var b);
Var transpose(Var a);

/// Elementwise ops. `add` and `sub` also accept a matrix with a row vector
/// on the right, broadcast over rows.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var abs_diff(Var a, Var b);
Var relu(Var a);
Var tanh(Var a);
Var scale(Var a, double c);
Var sum(Var a);

struct RowMax {
    Var values;
    std::vector<std::size_t> indices;
};

/// Row-wise maximum and argmax. Ties resolve to the lowest column index and
/// the subgradient routes entirely to that one entry.
RowMax row_max_argmax(Var a);

/// Sliding-window linear map: row i is concat(x[i - left_pad], ..., x[i - left_pad + window - 1]) · w + b,
/// where rows outside [0, L) read as zeros. Output has L rows.
Var conv1d(Var x, Var w, Var b, std::size_t window, std::size_t left_pad);

/// tanh(conv1d) with window two and a single zero row appended on the right,
/// so row i encodes the bigram starting at token i.
Var conv1d_w2(Var x, Var w, Var b);

Var concat_cols(std::span<const Var> parts);
Var concat_cols(std::initializer_list<Var> parts);
/// Concatenation of rank-1 tensors.
Var concat(std::initializer_list<Var> parts);

/// [m] -> [m x 1].
Var as_column(Var v);
/// Appends k all-zero columns.
Var pad_cols(Var x, std::size_t k);

/// Column-wise max followed by column-wise mean, as one vector of length 2d.
Var pool_max_avg(Var x);
/// Column-wise mean, [L x d] -> [d].
Var mean_rows(Var x);

Var softmax(Var v);
/// Scales each row to unit Euclidean norm (rows of norm zero are left at zero).
Var l2_normalize_rows(Var x);

/// x · w + b for x of shape [n] or [m x n].
Var affine(Var x, Var w, Var b);

/// Gathers rows of `table` for the given ids.
Var embedding_lookup(Var table, std::span<const std::size_t> ids);

/// Numerically stable negative log-likelihood of `gold` under softmax(logits).
Var softmax_cross_entropy(Var logits, std::size_t gold);

}  // namespace covnli
