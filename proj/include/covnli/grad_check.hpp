#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "covnli/autodiff.hpp"

namespace covnli {

/// Builds a scalar loss from leaf variables, in the order the inputs were given.
using GraphBuilder = std::function<Var(Tape&, std::span<const Var>)>;

struct NamedTensor {
    std::string name;
    Tensor value;
};

struct GradCheckEntry {
    std::string name;
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    std::size_t worst_index = 0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double max_rel_error = 0.0;
    std::string worst;
    /// Smallest distance to a non-differentiable point seen while building the graph.
    double kink_margin = 0.0;
    /// True when the point sits too close to a kink for finite differences to be meaningful.
    bool near_kink = false;

    bool passed(double tolerance) const { return near_kink || max_rel_error < tolerance; }
};

struct GradCheckOptions {
    double step = 1e-5;
    /// Relative error is |analytic - numeric| / max(|analytic|, |numeric|, floor).
    double floor = 1e-6;
    /// Points whose kink margin falls below this are flagged and excluded.
    double kink_threshold = 1e-4;
};

/// Compares reverse-mode gradients against central differences for every input.
GradCheckReport grad_check(const GraphBuilder& f, std::vector<NamedTensor> inputs, const GradCheckOptions& opts = {});

/// Same, with inputs of the given shapes drawn uniformly from [-1, 1) using `seed`.
GradCheckReport grad_check(const GraphBuilder& f, const std::vector<std::pair<std::string, Shape>>& shapes,
                           std::uint64_t seed, const GradCheckOptions& opts = {});

double relative_error(double analytic, double numeric, double floor);

}  // namespace covnli
