#pragma once

#include <doctest.h>

#include "covnli/autodiff.hpp"
#include "covnli/rng.hpp"

namespace covnli::test {

inline Tensor random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (auto& x : t.data()) x = rng.uniform(lo, hi);
    return t;
}

inline void check_close(const Tensor& a, const Tensor& b, double tol) {
    REQUIRE(a.shape() == b.shape());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < tol);
}

}  // namespace covnli::test
