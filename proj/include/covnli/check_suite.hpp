#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "covnli/grad_check.hpp"

namespace covnli {

/// Finite-difference results for one op (or model configuration) over many random points.
struct SuiteEntry {
    std::string name;
    std::size_t points = 0;
    /// Points skipped because they sat within the kink threshold of a non-differentiable point.
    std::size_t excluded = 0;
    double max_rel_error = 0.0;
    std::string worst_input;
    double tolerance = 0.0;

    bool passed() const { return excluded < points && max_rel_error < tolerance; }
};

struct SuiteReport {
    std::vector<SuiteEntry> entries;

    bool passed() const;
    nlohmann::json to_json() const;
};

/// Every differentiable op at `points` seeded points each.
SuiteReport run_op_gradcheck(std::size_t points = 100, std::uint64_t seed = 0, double tolerance = 1e-6);

/// Full forward + cross-entropy loss of small models (both heads, several coverage
/// settings) with every parameter, embeddings included, as a checked input.
SuiteReport run_model_gradcheck(std::size_t points = 100, std::uint64_t seed = 0, double tolerance = 1e-4);

}  // namespace covnli
