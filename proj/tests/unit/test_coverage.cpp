#include <algorithm>
#include <cmath>
#include <numeric>

#include "covnli/coverage.hpp"
#include "helpers.hpp"

using namespace covnli;
using covnli::test::random_tensor;

namespace {

struct Brute {
    std::vector<double> c;
    std::vector<std::size_t> q;
};

// Plain double loops, same summation order as a dot product read left to right.
Brute brute_coverage(const Tensor& h, const Tensor& p) {
    Brute out;
    for (std::size_t i = 0; i < h.rows(); ++i) {
        double best = 0.0;
        std::size_t arg = 0;
        for (std::size_t j = 0; j < p.rows(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < h.cols(); ++k) s += h(i, k) * p(j, k);
            if (j == 0 || s > best) {
                best = s;
                arg = j;
            }
        }
        out.c.push_back(best);
        out.q.push_back(arg);
    }
    return out;
}

// Window-two convolution, right-padded with a zero row, then tanh.
Tensor brute_bigrams(const Tensor& x, const Tensor& w, const Tensor& b) {
    const std::size_t L = x.rows(), d = x.cols(), out_w = w.cols();
    Tensor y({L, out_w});
    for (std::size_t i = 0; i < L; ++i)
        for (std::size_t j = 0; j < out_w; ++j) {
            double s = b[j];
            for (std::size_t tap = 0; tap < 2; ++tap) {
                if (i + tap >= L) continue;
                for (std::size_t c = 0; c < d; ++c)
                    if (x(i + tap, c) != 0.0) s += x(i + tap, c) * w(tap * d + c, j);
            }
            y(i, j) = std::tanh(s);
        }
    return y;
}

Tensor permute_rows(const Tensor& x, const std::vector<std::size_t>& perm) {
    Tensor y(x.shape());
    for (std::size_t r = 0; r < perm.size(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c) y(r, c) = x(perm[r], c);
    return y;
}

Tensor rows_of(const std::vector<std::vector<double>>& rows) {
    Tensor t({rows.size(), rows.front().size()});
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) t(r, c) = rows[r][c];
    return t;
}

}  // namespace

TEST_CASE("coverage values and positions on a small example") {
    Tape t;
    const Var H = t.constant(Tensor::matrix({{1, 0}, {0, 1}, {1, 1}}));
    const Var P = t.constant(Tensor::matrix({{0, 2}, {1, 0}, {3, 0}}));
    const RowMax r = coverage_values_positions(similarity_matrix(H, P));
    CHECK(r.values.value() == Tensor::vector({3, 2, 3}));
    CHECK(r.indices == std::vector<std::size_t>{2, 0, 2});
    CHECK(normalize_positions(r.indices, 3) == Tensor::vector({2.0 / 3, 0, 2.0 / 3}));
}

TEST_CASE("ties in a coverage row resolve to the earliest premise token") {
    Tape t;
    const Var H = t.constant(Tensor::matrix({{1, 0}}));
    const Var P = t.constant(Tensor::matrix({{0, 1}, {1, 0}, {1, 5}}));
    const RowMax r = coverage_values_positions(similarity_matrix(H, P));
    CHECK(r.indices[0] == 1);
}

TEST_CASE("cosine similarity ignores vector scale") {
    Tape t;
    const Var H = t.constant(Tensor::matrix({{3, 4}}));
    const Var P = t.constant(Tensor::matrix({{0, 10}, {6, 8}}));
    const Tensor S = similarity_matrix(H, P, Similarity::cosine).value();
    CHECK(std::abs(S(0, 0) - 0.8) < 1e-15);
    CHECK(std::abs(S(0, 1) - 1.0) < 1e-15);
}

TEST_CASE("empty or mismatched inputs are rejected") {
    Tape t;
    CHECK_THROWS_AS(similarity_matrix(t.constant(Tensor::zeros({2, 3})), t.constant(Tensor::zeros({2, 4}))),
                    DimensionError);
    CHECK_THROWS_AS(similarity_matrix(t.constant(Tensor::zeros({0, 3})), t.constant(Tensor::zeros({2, 3}))),
                    EmptyInputError);
    CHECK_THROWS_AS(normalize_positions({0}, 0), EmptyInputError);
}

TEST_CASE("unigram and bigram coverage match a brute-force oracle on 1000 random pairs") {
    for (std::size_t pair = 0; pair < 1000; ++pair) {
        Rng rng(derive_seed(2024, pair));
        const std::size_t lh = 1 + rng.below(12), lp = 1 + rng.below(15), d = 1 + rng.below(8), db = 1 + rng.below(8);
        Tape t;
        const Tensor h = random_tensor(rng, {lh, d}), p = random_tensor(rng, {lp, d});
        const Tensor w = random_tensor(rng, {2 * d, db}, -0.7, 0.7), b = random_tensor(rng, {db}, -0.2, 0.2);
        const BigramEncoder enc{t.constant(w), t.constant(b)};
        const CoverageBundle got =
            compute_coverage(t.constant(h), t.constant(p), CoverageFlags::all(), &enc, Similarity::dot);

        const Brute uni = brute_coverage(h, p);
        const Brute bi = brute_coverage(brute_bigrams(h, w, b), brute_bigrams(p, w, b));
        INFO("pair " << pair);
        for (std::size_t i = 0; i < lh; ++i) {
            CHECK(got.C.value()[i] == uni.c[i]);
            CHECK(got.raw_Q[i] == uni.q[i]);
            CHECK(got.Cp->value()[i] == bi.c[i]);
            CHECK(got.raw_Qp[i] == bi.q[i]);
            CHECK(got.Q[i] == static_cast<double>(uni.q[i]) / static_cast<double>(lp));
        }
    }
}

TEST_CASE("permuting premise rows permutes positions and keeps values") {
    for (std::size_t rep = 0; rep < 100; ++rep) {
        Rng rng(derive_seed(31, rep));
        const std::size_t lh = 1 + rng.below(8), lp = 2 + rng.below(8), d = 1 + rng.below(6);
        const Tensor h = random_tensor(rng, {lh, d}), p = random_tensor(rng, {lp, d});
        std::vector<std::size_t> perm(lp);
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(std::span<std::size_t>(perm));
        Tape t;
        const RowMax a = coverage_values_positions(similarity_matrix(t.constant(h), t.constant(p)));
        const RowMax b = coverage_values_positions(similarity_matrix(t.constant(h), t.constant(permute_rows(p, perm))));
        CHECK(a.values.value() == b.values.value());
        // Continuous random values make ties impossible, so positions map exactly.
        for (std::size_t i = 0; i < lh; ++i) CHECK(perm[b.indices[i]] == a.indices[i]);
    }
}

TEST_CASE("positive scaling of the premise scales values and keeps positions") {
    Rng rng(8);
    const Tensor h = random_tensor(rng, {5, 4}), p = random_tensor(rng, {7, 4});
    Tensor p2 = p;
    for (auto& x : p2.data()) x *= 4.0;  // exact in binary
    Tape t;
    const RowMax a = coverage_values_positions(similarity_matrix(t.constant(h), t.constant(p)));
    const RowMax b = coverage_values_positions(similarity_matrix(t.constant(h), t.constant(p2)));
    CHECK(a.indices == b.indices);
    for (std::size_t i = 0; i < 5; ++i) CHECK(b.values.value()[i] == 4.0 * a.values.value()[i]);
}

TEST_CASE("appending a dominated premise token changes nothing") {
    Rng rng(9);
    const Tensor h = random_tensor(rng, {4, 3}, 0.1, 1.0), p = random_tensor(rng, {5, 3}, 0.1, 1.0);
    Tensor p2({6, 3});
    for (std::size_t r = 0; r < 5; ++r)
        for (std::size_t c = 0; c < 3; ++c) p2(r, c) = p(r, c);
    for (std::size_t c = 0; c < 3; ++c) p2(5, c) = -1.0;  // negative similarity to every positive row
    Tape t;
    const RowMax a = coverage_values_positions(similarity_matrix(t.constant(h), t.constant(p)));
    const RowMax b = coverage_values_positions(similarity_matrix(t.constant(h), t.constant(p2)));
    CHECK(a.values.value() == b.values.value());
    CHECK(a.indices == b.indices);
}

TEST_CASE("augmentation widens by the number of selected vectors and keeps the original columns") {
    Rng rng(4);
    const std::size_t d = 6;
    const Tensor h = random_tensor(rng, {5, d}), p = random_tensor(rng, {7, d});
    const Tensor w = random_tensor(rng, {2 * d, 3}), b = random_tensor(rng, {3});
    for (int mask = 0; mask < 8; ++mask) {
        const CoverageFlags flags{(mask & 1) != 0, (mask & 2) != 0, (mask & 4) != 0, PhiLayer::embedding};
        Tape t;
        const BigramEncoder enc{t.constant(w), t.constant(b)};
        const Var H = t.constant(h);
        const CoverageBundle bundle = compute_coverage(H, t.constant(p), flags, &enc);
        const Tensor aug = augment_hypothesis(H, bundle, flags).value();
        REQUIRE(aug.shape() == Shape{5, d + flags.extra_columns()});
        for (std::size_t i = 0; i < 5; ++i) {
            for (std::size_t c = 0; c < d; ++c) CHECK(aug(i, c) == h(i, c));
            // Fixed column order: C, C', Q, Q'.
            std::size_t col = d;
            CHECK(aug(i, col++) == bundle.C.value()[i]);
            if (flags.use_bigram_values) CHECK(aug(i, col++) == bundle.Cp->value()[i]);
            if (flags.use_positions) CHECK(aug(i, col++) == bundle.Q[i]);
            if (flags.use_bigram_positions) CHECK(aug(i, col++) == bundle.Qp[i]);
        }
        const Tensor padded = pad_premise(t.constant(p), flags.extra_columns()).value();
        REQUIRE(padded.shape() == Shape{7, d + flags.extra_columns()});
        for (std::size_t j = 0; j < 7; ++j)
            for (std::size_t c = d; c < padded.cols(); ++c) CHECK(padded(j, c) == 0.0);
    }
    CHECK(CoverageFlags{}.extra_columns() == 1);
    CHECK(CoverageFlags::all().extra_columns() == 4);
}

TEST_CASE("positions carry no gradient while C does") {
    Rng rng(12);
    Tape t;
    const Var H = t.leaf(random_tensor(rng, {3, 4}));
    const Var P = t.leaf(random_tensor(rng, {4, 4}));
    CoverageFlags flags;
    flags.use_positions = true;
    const CoverageBundle bundle = compute_coverage(H, P, flags, nullptr);
    const Var aug = augment_hypothesis(H, bundle, flags);
    // Only the Q column contributes to this loss.
    Tensor sel(aug.value().shape());
    for (std::size_t i = 0; i < 3; ++i) sel(i, 5) = 1.0;
    t.backward(sum(mul(aug, t.constant(sel))));
    CHECK(H.grad() == Tensor::zeros({3, 4}));
    CHECK(P.grad() == Tensor::zeros({4, 4}));
}

TEST_CASE("bigram flags without a bigram encoder are rejected") {
    Tape t;
    CoverageFlags flags;
    flags.use_bigram_values = true;
    CHECK_THROWS_AS(compute_coverage(t.constant(Tensor::zeros({2, 2})), t.constant(Tensor::zeros({2, 2})), flags, nullptr),
                    std::invalid_argument);
}

TEST_CASE("reversed subject and object give non-monotonic bigram positions") {
    // P: the man spoke to the lady with the red dress
    // H: the woman lectured the man
    enum { THE, MAN, LADY, SPOKE, TO, WITH, RED, DRESS, D };
    auto axis = [](int k) {
        std::vector<double> v(D, 0.0);
        v[k] = 0.5;
        return v;
    };
    const auto woman = [&] { auto v = axis(LADY); v[RED] = 0.02; return v; }();
    const auto lectured = [&] { auto v = axis(SPOKE); v[DRESS] = 0.02; return v; }();
    const Tensor p = rows_of({axis(THE), axis(MAN), axis(SPOKE), axis(TO), axis(THE), axis(LADY), axis(WITH),
                                     axis(THE), axis(RED), axis(DRESS)});
    const Tensor h = rows_of({axis(THE), woman, lectured, axis(THE), axis(MAN)});
    // Bigram representation = tanh([x_i; x_{i+1}]), so a bigram matches the same word pair.
    Tensor w({2 * D, 2 * D});
    for (std::size_t i = 0; i < 2 * D; ++i) w(i, i) = 1.0;
    Tape t;
    const BigramEncoder enc{t.constant(w), t.constant(Tensor::zeros({2 * D}))};
    const CoverageBundle b = compute_coverage(t.constant(h), t.constant(p), CoverageFlags::all(), &enc);

    CHECK(b.raw_Q[1] == 5);  // woman -> lady
    CHECK(b.raw_Q[2] == 2);  // lectured -> spoke
    CHECK(b.raw_Qp[0] == 4);  // "the woman" -> "the lady"
    CHECK(b.raw_Qp[3] == 0);  // "the man" -> "the man"
    CHECK(b.raw_Qp[0] > b.raw_Qp[3]);
    CHECK(b.Cp->value()[0] > 0.3);
}

TEST_CASE("a sentence covers itself fully under cosine similarity") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed);
        const Tensor x = random_tensor(rng, {1 + rng.below(10), 6});
        Tape t;
        const Var v = t.constant(x);
        const RowMax rm = coverage_values_positions(similarity_matrix(v, v, Similarity::cosine));
        for (std::size_t i = 0; i < x.rows(); ++i) {
            CHECK(std::abs(rm.values.value()[i] - 1.0) < 1e-12);
            // Random rows are never parallel, so each token finds itself.
            CHECK(rm.indices[i] == i);
        }
    }
}
