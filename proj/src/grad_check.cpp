#include "covnli/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "covnli/rng.hpp"

namespace covnli {
namespace {

double evaluate(const GraphBuilder& f, const std::vector<NamedTensor>& inputs) {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(inputs.size());
    for (const auto& in : inputs) vars.push_back(tape.constant(in.value));
    return f(tape, vars).value()[0];
}

}  // namespace

double relative_error(double analytic, double numeric, double floor) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / denom;
}

GradCheckReport grad_check(const GraphBuilder& f, std::vector<NamedTensor> inputs, const GradCheckOptions& opts) {
    GradCheckReport report;

    Tape tape;
    std::vector<Var> vars;
    vars.reserve(inputs.size());
    for (const auto& in : inputs) vars.push_back(tape.leaf(in.value));
    Var loss = f(tape, vars);
    tape.backward(loss);
    report.kink_margin = tape.kink_margin();
    report.near_kink = report.kink_margin < opts.kink_threshold;

    for (std::size_t p = 0; p < inputs.size(); ++p) {
        GradCheckEntry entry{inputs[p].name};
        const Tensor analytic = vars[p].grad();
        auto data = inputs[p].value.data();
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double orig = data[i];
            data[i] = orig + opts.step;
            const double fp = evaluate(f, inputs);
            data[i] = orig - opts.step;
            const double fm = evaluate(f, inputs);
            data[i] = orig;
            const double numeric = (fp - fm) / (2.0 * opts.step);
            const double rel = relative_error(analytic[i], numeric, opts.floor);
            const double abs = std::abs(analytic[i] - numeric);
            if (rel > entry.max_rel_error) {
                entry.max_rel_error = rel;
                entry.worst_index = i;
            }
            entry.max_abs_error = std::max(entry.max_abs_error, abs);
        }
        if (entry.max_rel_error >= report.max_rel_error) {
            report.max_rel_error = entry.max_rel_error;
            report.worst = entry.name;
        }
        report.entries.push_back(std::move(entry));
    }
    return report;
}

GradCheckReport grad_check(const GraphBuilder& f, const std::vector<std::pair<std::string, Shape>>& shapes,
                           std::uint64_t seed, const GradCheckOptions& opts) {
    Rng rng(seed);
    std::vector<NamedTensor> inputs;
    for (const auto& [name, shape] : shapes) {
        Tensor t(shape);
        for (auto& x : t.data()) x = rng.uniform(-1.0, 1.0);
        inputs.push_back({name, std::move(t)});
    }
    return grad_check(f, std::move(inputs), opts);
}

}  // namespace covnli
