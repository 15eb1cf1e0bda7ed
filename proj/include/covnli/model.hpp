#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "covnli/coverage.hpp"
#include "covnli/datagen.hpp"
#include "covnli/lexicon.hpp"

namespace covnli {

enum class HeadKind { pooled, attentive };
std::string to_string(HeadKind head);
HeadKind parse_head_kind(const std::string& s);

struct ModelConfig {
    std::size_t vocab_size = 0;
    std::size_t d = 32;
    std::size_t d_bigram = 32;
    std::size_t hidden = 64;
    HeadKind head = HeadKind::pooled;
    /// Absent for the baseline: no coverage columns at all.
    std::optional<CoverageFlags> coverage;
    Similarity similarity = Similarity::dot;
    bool trainable_embeddings = false;

    std::size_t coverage_columns() const noexcept { return coverage ? coverage->extra_columns() : 0; }
    bool injects_at(PhiLayer layer) const noexcept { return coverage && coverage->phi_layer == layer; }
    /// Per-token width entering the window-3 encoder.
    std::size_t encoder_input_width() const noexcept { return d + (injects_at(PhiLayer::embedding) ? coverage_columns() : 0); }
    /// Per-token width entering the classifier head.
    std::size_t head_token_width() const noexcept { return d + (injects_at(PhiLayer::encoder_output) ? coverage_columns() : 0); }
    /// Width of the first MLP layer input.
    std::size_t head_input_width() const noexcept {
        return (head == HeadKind::pooled ? 8 : 4) * head_token_width();
    }
};

/// Named parameters, each registered exactly once, in a fixed order.
class ParamStore {
public:
    Parameter& add(std::string name, Tensor value, bool trainable = true);
    Parameter& get(const std::string& name);
    const Parameter& get(const std::string& name) const;
    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    std::deque<Parameter>& all() noexcept { return params_; }
    const std::deque<Parameter>& all() const noexcept { return params_; }
    std::size_t scalar_count() const;
    void zero_grad();

private:
    std::deque<Parameter> params_;
    std::unordered_map<std::string, std::size_t> index_;
};

namespace param_names {
inline constexpr const char* embedding = "embedding";
inline constexpr const char* encoder_weight = "encoder.weight";
inline constexpr const char* encoder_bias = "encoder.bias";
inline constexpr const char* bigram_weight = "bigram.weight";
inline constexpr const char* bigram_bias = "bigram.bias";
inline constexpr const char* hidden_weight = "head.hidden.weight";
inline constexpr const char* hidden_bias = "head.hidden.bias";
inline constexpr const char* output_weight = "head.output.weight";
inline constexpr const char* output_bias = "head.output.bias";
}  // namespace param_names

/// Parameter names in registration order.
const std::vector<std::string>& parameter_order();

struct ModelParams {
    ModelConfig config;
    ParamStore store;
};

/// Shapes of every parameter for a config (a pure function of it).
std::vector<std::pair<std::string, Shape>> parameter_shapes(const ModelConfig& config);

/// Builds parameters: the embedding table is taken as given, weights use
/// uniform(±sqrt(6 / (fan_in + fan_out))) from a per-parameter sub-seed so that
/// widening one layer leaves every other initial value unchanged; biases start at zero.
ModelParams init_params(const ModelConfig& config, const Tensor& embeddings, std::uint64_t seed);

/// The parameters as tape variables.
struct ModelVars {
    Var embedding, encoder_weight, encoder_bias, bigram_weight, bigram_bias;
    Var hidden_weight, hidden_bias, output_weight, output_bias;

    BigramEncoder bigram() const { return {bigram_weight, bigram_bias}; }
};

ModelVars bind(Tape& tape, ModelParams& params);
/// Binds variables given in parameter_order().
ModelVars bind(std::span<const Var> vars);

struct TokenPair {
    std::vector<std::size_t> premise;
    std::vector<std::size_t> hypothesis;
};

TokenPair encode_pair(const Vocabulary& vocab, const Example& ex);

/// Per-token representation of one sentence at the requested layer. At the
/// encoder layer, embeddings are zero-padded to the encoder's input width.
Var encode(const ModelVars& vars, const ModelConfig& config, std::span<const std::size_t> tokens, PhiLayer layer);

struct ForwardTrace {
    std::optional<CoverageBundle> bundle;
    Shape head_token_shape;
    Shape premise_head_shape;
};

/// Logits [3] for one pair.
Var forward(const ModelVars& vars, const ModelConfig& config, const TokenPair& pair, ForwardTrace* trace = nullptr);

/// argmax of logits; ties go to the lowest class index.
Label predict_label(const Tensor& logits);

/// Evaluates without recording gradients.
Label predict(ModelParams& params, const TokenPair& pair);

/// Coverage vectors (all four) for a pair at the given layer, using the model's bigram encoder.
CoverageBundle coverage_for(Tape& tape, ModelParams& params, const TokenPair& pair, PhiLayer layer);

}  // namespace covnli
