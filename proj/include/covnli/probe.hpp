#pragma once

#include <cstddef>
#include <vector>

#include "covnli/datagen.hpp"
#include "covnli/lexicon.hpp"

namespace covnli {

/// Multinomial logistic regression over hypothesis-only features. Used to
/// certify that the planted artifacts are learnable from the hypothesis alone.
class HypothesisProbe {
public:
    enum class Features { bag_of_words, length };

    struct Options {
        std::size_t iterations = 400;
        double learning_rate = 0.5;
        double l2 = 1e-4;
        std::size_t max_length = 24;
    };

    HypothesisProbe(const Vocabulary& vocab, Features features, Options opts);
    HypothesisProbe(const Vocabulary& vocab, Features features) : HypothesisProbe(vocab, features, Options{}) {}

    /// Full-batch gradient descent from zero weights; deterministic.
    void fit(const std::vector<Example>& train);
    Label predict(const Example& ex) const;
    double accuracy(const std::vector<Example>& data) const;

private:
    std::vector<double> featurize(const Example& ex) const;

    const Vocabulary* vocab_;
    Features features_;
    Options opts_;
    std::size_t dim_;
    std::vector<double> weights_;  // [kNumClasses x (dim + 1)], bias last
};

}  // namespace covnli
