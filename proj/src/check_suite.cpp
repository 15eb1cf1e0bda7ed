#include "covnli/check_suite.hpp"

#include <functional>

#include "covnli/coverage.hpp"
#include "covnli/model.hpp"
#include "covnli/ops.hpp"
#include "covnli/rng.hpp"

namespace covnli {

bool SuiteReport::passed() const {
    for (const auto& e : entries)
        if (!e.passed()) return false;
    return !entries.empty();
}

nlohmann::json SuiteReport::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : entries)
        arr.push_back({{"name", e.name},
                       {"points", e.points},
                       {"excluded", e.excluded},
                       {"max_rel_error", e.max_rel_error},
                       {"worst_input", e.worst_input},
                       {"tolerance", e.tolerance},
                       {"passed", e.passed()}});
    return {{"passed", passed()}, {"entries", arr}};
}

namespace {

struct Case {
    GraphBuilder f;
    std::vector<NamedTensor> inputs;
};

using CaseFactory = std::function<Case(Rng&)>;

Tensor random_tensor(Rng& rng, Shape shape) {
    Tensor t(std::move(shape));
    for (auto& x : t.data()) x = rng.uniform(-1.0, 1.0);
    return t;
}

std::size_t dim(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); }

// Weighted sum with fixed random weights, so every output entry gets a distinct upstream gradient.
Var reduce(Tape& t, Var y, const Tensor& weights) { return sum(mul(y, t.constant(weights))); }

// A case whose graph is reduce(op(inputs)); the reduction weights are drawn once per point.
Case unary_case(Rng& rng, std::vector<NamedTensor> inputs, Shape out_shape,
                std::function<Var(Tape&, std::span<const Var>)> op) {
    Tensor w = random_tensor(rng, std::move(out_shape));
    return {[op, w](Tape& t, std::span<const Var> v) { return reduce(t, op(t, v), w); }, std::move(inputs)};
}

std::vector<std::pair<std::string, CaseFactory>> op_cases() {
    std::vector<std::pair<std::string, CaseFactory>> cases;
    auto binary_same = [&](std::string name, Var (*op)(Var, Var)) {
        cases.emplace_back(name, [op](Rng& r) {
            const Shape s{dim(r, 1, 4), dim(r, 1, 4)};
            return unary_case(r, {{"a", random_tensor(r, s)}, {"b", random_tensor(r, s)}}, s,
                              [op](Tape&, std::span<const Var> v) { return op(v[0], v[1]); });
        });
    };
    auto binary_row = [&](std::string name, Var (*op)(Var, Var)) {
        cases.emplace_back(name, [op](Rng& r) {
            const std::size_t m = dim(r, 1, 4), n = dim(r, 1, 4);
            return unary_case(r, {{"a", random_tensor(r, {m, n})}, {"row", random_tensor(r, {n})}}, {m, n},
                              [op](Tape&, std::span<const Var> v) { return op(v[0], v[1]); });
        });
    };
    auto unary = [&](std::string name, std::function<Var(Var)> op) {
        cases.emplace_back(name, [op](Rng& r) {
            const Shape s{dim(r, 1, 4), dim(r, 1, 4)};
            return unary_case(r, {{"x", random_tensor(r, s)}}, s, [op](Tape&, std::span<const Var> v) { return op(v[0]); });
        });
    };

    cases.emplace_back("matmul", [](Rng& r) {
        const std::size_t m = dim(r, 1, 4), k = dim(r, 1, 4), n = dim(r, 1, 4);
        return unary_case(r, {{"a", random_tensor(r, {m, k})}, {"b", random_tensor(r, {k, n})}}, {m, n},
                          [](Tape&, std::span<const Var> v) { return matmul(v[0], v[1]); });
    });
    cases.emplace_back("matmul_vector", [](Rng& r) {
        const std::size_t k = dim(r, 1, 4), n = dim(r, 1, 4);
        return unary_case(r, {{"x", random_tensor(r, {k})}, {"w", random_tensor(r, {k, n})}}, {n},
                          [](Tape&, std::span<const Var> v) { return matmul(v[0], v[1]); });
    });
    cases.emplace_back("matmul_nt", [](Rng& r) {
        const std::size_t m = dim(r, 1, 4), k = dim(r, 1, 4), n = dim(r, 1, 4);
        return unary_case(r, {{"a", random_tensor(r, {m, k})}, {"b", random_tensor(r, {n, k})}}, {m, n},
                          [](Tape&, std::span<const Var> v) { return matmul_nt(v[0], v[1]); });
    });
    cases.emplace_back("transpose", [](Rng& r) {
        const std::size_t m = dim(r, 1, 4), n = dim(r, 1, 4);
        return unary_case(r, {{"x", random_tensor(r, {m, n})}}, {n, m},
                          [](Tape&, std::span<const Var> v) { return transpose(v[0]); });
    });
    binary_same("add", add);
    binary_same("sub", sub);
    binary_same("mul", mul);
    binary_same("abs_diff", abs_diff);
    binary_row("add_row_broadcast", add);
    binary_row("mul_row_broadcast", mul);
    unary("relu", [](Var x) { return relu(x); });
    unary("tanh", [](Var x) { return covnli::tanh(x); });
    unary("scale", [](Var x) { return scale(x, -1.7); });
    unary("l2_normalize_rows", [](Var x) { return l2_normalize_rows(x); });
    cases.emplace_back("sum", [](Rng& r) {
        return Case{[](Tape&, std::span<const Var> v) { return sum(v[0]); },
                    {{"x", random_tensor(r, {dim(r, 1, 4), dim(r, 1, 4)})}}};
    });
    cases.emplace_back("row_max_argmax", [](Rng& r) {
        const std::size_t m = dim(r, 1, 5), n = dim(r, 1, 6);
        return unary_case(r, {{"x", random_tensor(r, {m, n})}}, {m},
                          [](Tape&, std::span<const Var> v) { return row_max_argmax(v[0]).values; });
    });
    cases.emplace_back("pool_max_avg", [](Rng& r) {
        const std::size_t m = dim(r, 1, 5), n = dim(r, 1, 4);
        return unary_case(r, {{"x", random_tensor(r, {m, n})}}, {2 * n},
                          [](Tape&, std::span<const Var> v) { return pool_max_avg(v[0]); });
    });
    cases.emplace_back("mean_rows", [](Rng& r) {
        const std::size_t m = dim(r, 1, 5), n = dim(r, 1, 4);
        return unary_case(r, {{"x", random_tensor(r, {m, n})}}, {n},
                          [](Tape&, std::span<const Var> v) { return mean_rows(v[0]); });
    });
    cases.emplace_back("conv1d_w3", [](Rng& r) {
        const std::size_t L = dim(r, 1, 5), d = dim(r, 1, 3), o = dim(r, 1, 3);
        return unary_case(r,
                          {{"x", random_tensor(r, {L, d})}, {"w", random_tensor(r, {3 * d, o})}, {"b", random_tensor(r, {o})}},
                          {L, o}, [](Tape&, std::span<const Var> v) { return conv1d(v[0], v[1], v[2], 3, 1); });
    });
    cases.emplace_back("conv1d_w2", [](Rng& r) {
        const std::size_t L = dim(r, 1, 5), d = dim(r, 1, 3), o = dim(r, 1, 3);
        return unary_case(r,
                          {{"x", random_tensor(r, {L, d})}, {"w", random_tensor(r, {2 * d, o})}, {"b", random_tensor(r, {o})}},
                          {L, o}, [](Tape&, std::span<const Var> v) { return conv1d_w2(v[0], v[1], v[2]); });
    });
    cases.emplace_back("concat_cols", [](Rng& r) {
        const std::size_t m = dim(r, 1, 4), a = dim(r, 1, 3), b = dim(r, 1, 3);
        return unary_case(r, {{"a", random_tensor(r, {m, a})}, {"b", random_tensor(r, {m, b})}}, {m, a + b},
                          [](Tape&, std::span<const Var> v) { return concat_cols({v[0], v[1]}); });
    });
    cases.emplace_back("concat", [](Rng& r) {
        const std::size_t a = dim(r, 1, 4), b = dim(r, 1, 4);
        return unary_case(r, {{"a", random_tensor(r, {a})}, {"b", random_tensor(r, {b})}}, {a + b},
                          [](Tape&, std::span<const Var> v) { return concat({v[0], v[1]}); });
    });
    cases.emplace_back("as_column", [](Rng& r) {
        const std::size_t m = dim(r, 1, 5);
        return unary_case(r, {{"x", random_tensor(r, {m})}}, {m, 1},
                          [](Tape&, std::span<const Var> v) { return as_column(v[0]); });
    });
    cases.emplace_back("pad_cols", [](Rng& r) {
        const std::size_t m = dim(r, 1, 4), n = dim(r, 1, 4), k = dim(r, 1, 4);
        return unary_case(r, {{"x", random_tensor(r, {m, n})}}, {m, n + k},
                          [k](Tape&, std::span<const Var> v) { return pad_cols(v[0], k); });
    });
    cases.emplace_back("softmax", [](Rng& r) {
        const std::size_t n = dim(r, 2, 6);
        return unary_case(r, {{"x", random_tensor(r, {n})}}, {n},
                          [](Tape&, std::span<const Var> v) { return softmax(v[0]); });
    });
    cases.emplace_back("affine", [](Rng& r) {
        const std::size_t m = dim(r, 1, 4), k = dim(r, 1, 4), n = dim(r, 1, 4);
        return unary_case(r,
                          {{"x", random_tensor(r, {m, k})}, {"w", random_tensor(r, {k, n})}, {"b", random_tensor(r, {n})}},
                          {m, n}, [](Tape&, std::span<const Var> v) { return affine(v[0], v[1], v[2]); });
    });
    cases.emplace_back("embedding_lookup", [](Rng& r) {
        const std::size_t V = dim(r, 2, 6), d = dim(r, 1, 4), L = dim(r, 1, 6);
        std::vector<std::size_t> ids(L);
        for (auto& id : ids) id = r.below(V);
        return unary_case(r, {{"table", random_tensor(r, {V, d})}}, {L, d},
                          [ids](Tape&, std::span<const Var> v) { return embedding_lookup(v[0], ids); });
    });
    cases.emplace_back("softmax_cross_entropy", [](Rng& r) {
        const std::size_t c = dim(r, 2, 5);
        const std::size_t gold = r.below(c);
        Tensor logits = random_tensor(r, {c});
        for (auto& x : logits.data()) x *= 3.0;
        return Case{[gold](Tape&, std::span<const Var> v) { return softmax_cross_entropy(v[0], gold); },
                    {{"logits", std::move(logits)}}};
    });
    for (const Similarity sim : {Similarity::dot, Similarity::cosine}) {
        cases.emplace_back("similarity_matrix_" + to_string(sim), [sim](Rng& r) {
            const std::size_t h = dim(r, 1, 5), p = dim(r, 1, 5), d = dim(r, 1, 4);
            return unary_case(r, {{"phiH", random_tensor(r, {h, d})}, {"phiP", random_tensor(r, {p, d})}}, {h, p},
                              [sim](Tape&, std::span<const Var> v) { return similarity_matrix(v[0], v[1], sim); });
        });
    }
    cases.emplace_back("coverage_values", [](Rng& r) {
        const std::size_t h = dim(r, 1, 5), p = dim(r, 1, 6), d = dim(r, 1, 4);
        return unary_case(r, {{"phiH", random_tensor(r, {h, d})}, {"phiP", random_tensor(r, {p, d})}}, {h},
                          [](Tape&, std::span<const Var> v) {
                              return coverage_values_positions(similarity_matrix(v[0], v[1])).values;
                          });
    });
    cases.emplace_back("augment_hypothesis", [](Rng& r) {
        const std::size_t h = dim(r, 1, 5), p = dim(r, 1, 6), d = dim(r, 1, 4), db = dim(r, 1, 3);
        return unary_case(r,
                          {{"phiH", random_tensor(r, {h, d})},
                           {"phiP", random_tensor(r, {p, d})},
                           {"bigram.weight", random_tensor(r, {2 * d, db})},
                           {"bigram.bias", random_tensor(r, {db})}},
                          {h, d + 4}, [](Tape&, std::span<const Var> v) {
                              const BigramEncoder enc{v[2], v[3]};
                              const CoverageFlags flags = CoverageFlags::all();
                              const CoverageBundle b = compute_coverage(v[0], v[1], flags, &enc);
                              return augment_hypothesis(v[0], b, flags);
                          });
    });
    cases.emplace_back("pad_premise", [](Rng& r) {
        const std::size_t p = dim(r, 1, 5), d = dim(r, 1, 4), k = dim(r, 1, 4);
        return unary_case(r, {{"phiP", random_tensor(r, {p, d})}}, {p, d + k},
                          [k](Tape&, std::span<const Var> v) { return pad_premise(v[0], k); });
    });
    return cases;
}

SuiteEntry run_entry(const std::string& name, std::size_t points, std::uint64_t seed, double tolerance,
                     const CaseFactory& make) {
    SuiteEntry entry;
    entry.name = name;
    entry.points = points;
    entry.tolerance = tolerance;
    for (std::size_t i = 0; i < points; ++i) {
        Rng rng(derive_seed(derive_seed(seed, "gradcheck:" + name), i));
        Case c = make(rng);
        const GradCheckReport r = grad_check(c.f, std::move(c.inputs));
        if (r.near_kink) {
            ++entry.excluded;
            continue;
        }
        if (r.max_rel_error >= entry.max_rel_error) {
            entry.max_rel_error = r.max_rel_error;
            entry.worst_input = r.worst;
        }
    }
    return entry;
}

}  // namespace

SuiteReport run_op_gradcheck(std::size_t points, std::uint64_t seed, double tolerance) {
    SuiteReport report;
    for (const auto& [name, make] : op_cases()) report.entries.push_back(run_entry(name, points, seed, tolerance, make));
    return report;
}

SuiteReport run_model_gradcheck(std::size_t points, std::uint64_t seed, double tolerance) {
    struct Variant {
        std::string name;
        HeadKind head;
        std::optional<CoverageFlags> flags;
        Similarity sim = Similarity::dot;
    };
    const std::vector<Variant> variants{
        {"pooled_baseline", HeadKind::pooled, std::nullopt},
        {"pooled_all_embedding", HeadKind::pooled, CoverageFlags::all(PhiLayer::embedding)},
        {"pooled_all_encoder", HeadKind::pooled, CoverageFlags::all(PhiLayer::encoder_output)},
        {"attentive_baseline", HeadKind::attentive, std::nullopt},
        {"attentive_all_encoder", HeadKind::attentive, CoverageFlags::all(PhiLayer::encoder_output)},
        {"attentive_c_only_cosine", HeadKind::attentive, CoverageFlags{}, Similarity::cosine},
    };
    SuiteReport report;
    for (std::size_t vi = 0; vi < variants.size(); ++vi) {
        const Variant& var = variants[vi];
        ModelConfig mc;
        mc.vocab_size = 9;
        mc.d = 5;
        mc.d_bigram = 4;
        mc.hidden = 6;
        mc.head = var.head;
        mc.coverage = var.flags;
        mc.similarity = var.sim;
        mc.trainable_embeddings = true;
        // Spread the requested points over the variants, at least one each.
        const std::size_t share = std::max<std::size_t>(1, (points + variants.size() - 1 - vi) / variants.size());
        report.entries.push_back(run_entry("model_" + var.name, share, seed, tolerance, [mc](Rng& r) {
            const auto shapes = parameter_shapes(mc);
            std::vector<NamedTensor> inputs;
            for (const auto& [name, shape] : shapes) {
                Tensor t = random_tensor(r, shape);
                for (auto& x : t.data()) x *= 0.8;
                inputs.push_back({name, std::move(t)});
            }
            TokenPair pair;
            for (std::size_t i = 0, n = dim(r, 1, 6); i < n; ++i) pair.premise.push_back(r.below(mc.vocab_size));
            for (std::size_t i = 0, n = dim(r, 1, 5); i < n; ++i) pair.hypothesis.push_back(r.below(mc.vocab_size));
            const std::size_t gold = r.below(kNumClasses);
            return Case{[mc, pair, gold](Tape&, std::span<const Var> v) {
                            return softmax_cross_entropy(forward(covnli::bind(v), mc, pair), gold);
                        },
                        std::move(inputs)};
        }));
    }
    return report;
}

}  // namespace covnli
