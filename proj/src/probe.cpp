#include "covnli/probe.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace covnli {

HypothesisProbe::HypothesisProbe(const Vocabulary& vocab, Features features, Options opts)
    : vocab_(&vocab),
      features_(features),
      opts_(opts),
      dim_(features == Features::bag_of_words ? vocab.size() : opts.max_length + 1),
      weights_(kNumClasses * (dim_ + 1), 0.0) {}

std::vector<double> HypothesisProbe::featurize(const Example& ex) const {
    std::vector<double> x(dim_ + 1, 0.0);
    if (features_ == Features::bag_of_words) {
        for (const auto& t : ex.hypothesis) x[vocab_->id(t)] += 1.0;
    } else {
        x[std::min(ex.hypothesis.size(), opts_.max_length)] = 1.0;
    }
    x[dim_] = 1.0;
    return x;
}

void HypothesisProbe::fit(const std::vector<Example>& train) {
    if (train.empty()) throw std::invalid_argument("probe: empty training set");
    const std::size_t width = dim_ + 1;
    std::vector<std::vector<double>> xs;
    xs.reserve(train.size());
    for (const auto& ex : train) xs.push_back(featurize(ex));
    std::fill(weights_.begin(), weights_.end(), 0.0);
    std::vector<double> grad(weights_.size());
    const double inv_n = 1.0 / static_cast<double>(train.size());

    for (std::size_t it = 0; it < opts_.iterations; ++it) {
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t n = 0; n < xs.size(); ++n) {
            double z[kNumClasses];
            for (std::size_t c = 0; c < kNumClasses; ++c) {
                double s = 0.0;
                for (std::size_t j = 0; j < width; ++j) s += weights_[c * width + j] * xs[n][j];
                z[c] = s;
            }
            const double mx = *std::max_element(z, z + kNumClasses);
            double sum = 0.0;
            for (double& v : z) sum += (v = std::exp(v - mx));
            const auto gold = static_cast<std::size_t>(train[n].label);
            for (std::size_t c = 0; c < kNumClasses; ++c) {
                const double delta = (z[c] / sum - (c == gold ? 1.0 : 0.0)) * inv_n;
                for (std::size_t j = 0; j < width; ++j) grad[c * width + j] += delta * xs[n][j];
            }
        }
        for (std::size_t i = 0; i < weights_.size(); ++i)
            weights_[i] -= opts_.learning_rate * (grad[i] + opts_.l2 * weights_[i]);
    }
}

Label HypothesisProbe::predict(const Example& ex) const {
    const auto x = featurize(ex);
    const std::size_t width = dim_ + 1;
    std::size_t best = 0;
    double best_score = 0.0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        double s = 0.0;
        for (std::size_t j = 0; j < width; ++j) s += weights_[c * width + j] * x[j];
        if (c == 0 || s > best_score) {
            best = c;
            best_score = s;
        }
    }
    return static_cast<Label>(best);
}

double HypothesisProbe::accuracy(const std::vector<Example>& data) const {
    if (data.empty()) throw std::invalid_argument("probe: empty evaluation set");
    std::size_t hits = 0;
    for (const auto& ex : data) hits += predict(ex) == ex.label;
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace covnli
