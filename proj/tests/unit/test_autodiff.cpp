#include <cmath>

#include "covnli/check_suite.hpp"
#include "covnli/grad_check.hpp"
#include "covnli/ops.hpp"
#include "helpers.hpp"

using namespace covnli;
using covnli::test::random_tensor;

TEST_CASE("backward of sum(A.B) gives ones times B transposed") {
    Rng rng(1);
    Tape t;
    const Tensor a = random_tensor(rng, {3, 4}), b = random_tensor(rng, {4, 2});
    Var A = t.leaf(a), B = t.leaf(b);
    t.backward(sum(matmul(A, B)));
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(A.grad()(i, k) - (b(k, 0) + b(k, 1))) < 1e-15);
    for (std::size_t k = 0; k < 4; ++k)
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(std::abs(B.grad()(k, j) - (a(0, k) + a(1, k) + a(2, k))) < 1e-15);
}

TEST_CASE("backward misuse") {
    Tape t;
    Var x = t.leaf(Tensor::vector({1, 2}));
    CHECK_THROWS_AS(t.backward(scale(x, 2.0)), GraphError);
    Var y = sum(x);
    t.backward(y);
    CHECK_THROWS_AS(t.backward(y), GraphError);
    t.reset();
    Var z = t.leaf(Tensor::vector({3}));
    t.backward(sum(z));
    CHECK(z.grad() == Tensor::vector({1}));

    Tape other;
    Var w = other.leaf(Tensor::vector({1}));
    Tape t2;
    Var v = t2.leaf(Tensor::vector({1}));
    CHECK_THROWS_AS(add(v, w), GraphError);
}

TEST_CASE("every requires_grad node has a gradient of its value's shape after backward") {
    Tape t;
    Rng rng(3);
    Var a = t.leaf(random_tensor(rng, {3, 2}));
    Var b = t.leaf(random_tensor(rng, {3, 2}));
    Var unused = t.leaf(random_tensor(rng, {5}));
    Var mid = mul(a, covnli::tanh(b));
    t.backward(sum(mid));
    for (const Var& v : {a, b, unused, mid}) CHECK(v.grad().shape() == v.value().shape());
    CHECK(unused.grad() == Tensor::zeros({5}));
}

TEST_CASE("parameters accumulate gradients across passes until zeroed") {
    Parameter p{"w", Tensor::vector({2.0}), {}, true};
    for (int pass = 0; pass < 3; ++pass) {
        Tape t;
        t.backward(sum(mul(t.parameter(p), t.constant(Tensor::vector({1.5})))));
    }
    CHECK(p.grad == Tensor::vector({4.5}));
    p.zero_grad();
    CHECK(p.grad == Tensor::vector({0.0}));

    Parameter frozen{"e", Tensor::vector({1.0}), {}, false};
    Tape t;
    Var f = t.parameter(frozen);
    CHECK_FALSE(f.requires_grad());
    t.set_grad_enabled(false);
    CHECK_FALSE(t.parameter(p).requires_grad());
}

TEST_CASE("random four-op graphs agree with central differences") {
    const std::vector<std::pair<const char*, std::function<Var(Var, Var)>>> ops{
        {"add", [](Var x, Var y) { return add(x, y); }},
        {"mul", [](Var x, Var y) { return mul(x, y); }},
        {"sub", [](Var x, Var y) { return sub(x, y); }},
        {"tanh", [](Var x, Var) { return covnli::tanh(x); }},
        {"relu", [](Var x, Var) { return relu(x); }},
        {"abs_diff", [](Var x, Var y) { return abs_diff(x, y); }},
        {"scale", [](Var x, Var) { return scale(x, 0.7); }},
        {"l2norm", [](Var x, Var) { return l2_normalize_rows(x); }},
        {"nt", [](Var x, Var y) { return covnli::tanh(matmul(matmul_nt(x, y), x)); }},
    };
    std::size_t checked = 0;
    for (std::size_t point = 0; point < 100; ++point) {
        Rng rng(derive_seed(99, point));
        std::vector<std::size_t> pick(4);
        for (auto& p : pick) p = rng.below(ops.size());
        const std::size_t m = 1 + rng.below(4), n = 1 + rng.below(4);
        const GraphBuilder f = [&ops, pick](Tape&, std::span<const Var> v) {
            Var x = v[0];
            for (std::size_t k = 0; k < pick.size(); ++k) x = ops[pick[k]].second(x, v[1 + k % 2]);
            return sum(pool_max_avg(x));
        };
        const auto rep = grad_check(f, {{"x", {m, n}}, {"y", {m, n}}, {"z", {m, n}}}, derive_seed(7, point));
        if (rep.near_kink) continue;
        ++checked;
        CHECK(rep.max_rel_error < 1e-4);
    }
    CHECK(checked > 80);
}

TEST_CASE("linear regression toy passes at 1e-6") {
    Rng rng(5);
    const Tensor X = random_tensor(rng, {20, 3});
    const Tensor y = random_tensor(rng, {20, 1});
    const GraphBuilder f = [X, y](Tape& t, std::span<const Var> v) {
        Var pred = affine(t.constant(X), v[0], v[1]);
        Var r = sub(pred, t.constant(y));
        return scale(sum(mul(r, r)), 1.0 / 20.0);
    };
    const auto rep = grad_check(f, {{"w", {3, 1}}, {"b", {1}}}, 1);
    CHECK_FALSE(rep.near_kink);
    CHECK(rep.max_rel_error < 1e-6);
    CHECK(rep.entries.size() == 2);
}

TEST_CASE("constant function has exactly zero gradient") {
    const GraphBuilder f = [](Tape& t, std::span<const Var> v) {
        return add(sum(scale(v[0], 0.0)), sum(t.constant(Tensor::vector({4.0}))));
    };
    Tape t;
    Var x = t.leaf(Tensor::vector({1, 2, 3}));
    t.backward(f(t, std::span<const Var>(&x, 1)));
    CHECK(x.grad() == Tensor::zeros({3}));
    const auto rep = grad_check(f, {{"x", {3}}}, 2);
    CHECK(rep.max_rel_error == 0.0);
}

TEST_CASE("grad_check flags points next to a kink") {
    const GraphBuilder f = [](Tape&, std::span<const Var> v) { return sum(relu(v[0])); };
    const auto rep = grad_check(f, {{"x", Tensor::vector({1e-7, 0.5})}});
    CHECK(rep.near_kink);
    CHECK(rep.passed(1e-12));
}

TEST_CASE("op suite passes with zero exclusions at 100 points") {
    const SuiteReport r = run_op_gradcheck(100, 0, 1e-6);
    CHECK(r.entries.size() >= 30);
    for (const auto& e : r.entries) {
        INFO(e.name << " rel " << e.max_rel_error << " excluded " << e.excluded);
        CHECK(e.passed());
        CHECK(e.points == 100);
        CHECK(e.excluded <= 5);
    }
}
