#include "covnli/model.hpp"

#include <cmath>
#include <stdexcept>

#include "covnli/rng.hpp"

namespace covnli {

std::string to_string(HeadKind head) { return head == HeadKind::pooled ? "pooled" : "attentive"; }

HeadKind parse_head_kind(const std::string& s) {
    if (s == "pooled") return HeadKind::pooled;
    if (s == "attentive") return HeadKind::attentive;
    throw std::invalid_argument("unknown head kind '" + s + "'");
}

Parameter& ParamStore::add(std::string name, Tensor value, bool trainable) {
    if (index_.count(name)) throw std::invalid_argument("parameter '" + name + "' registered twice");
    index_.emplace(name, params_.size());
    return params_.emplace_back(Parameter{std::move(name), std::move(value), Tensor{}, trainable});
}

Parameter& ParamStore::get(const std::string& name) {
    const auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("unknown parameter '" + name + "'");
    return params_[it->second];
}

const Parameter& ParamStore::get(const std::string& name) const {
    return const_cast<ParamStore*>(this)->get(name);
}

std::size_t ParamStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

void ParamStore::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

const std::vector<std::string>& parameter_order() {
    using namespace param_names;
    static const std::vector<std::string> order{embedding,     encoder_weight, encoder_bias,  bigram_weight, bigram_bias,
                                                hidden_weight, hidden_bias,    output_weight, output_bias};
    return order;
}

std::vector<std::pair<std::string, Shape>> parameter_shapes(const ModelConfig& c) {
    using namespace param_names;
    return {{embedding, {c.vocab_size, c.d}},
            {encoder_weight, {3 * c.encoder_input_width(), c.d}},
            {encoder_bias, {c.d}},
            {bigram_weight, {2 * c.d, c.d_bigram}},
            {bigram_bias, {c.d_bigram}},
            {hidden_weight, {c.head_input_width(), c.hidden}},
            {hidden_bias, {c.hidden}},
            {output_weight, {c.hidden, kNumClasses}},
            {output_bias, {kNumClasses}}};
}

ModelParams init_params(const ModelConfig& config, const Tensor& embeddings, std::uint64_t seed) {
    if (config.vocab_size == 0) throw std::invalid_argument("model: vocab_size must be positive");
    ModelParams mp{config, {}};
    for (const auto& [name, shape] : parameter_shapes(config)) {
        if (name == param_names::embedding) {
            if (embeddings.shape() != shape)
                throw DimensionError("embedding table " + to_string(embeddings.shape()) + " does not match " + to_string(shape));
            mp.store.add(name, embeddings, config.trainable_embeddings);
            continue;
        }
        Tensor t(shape);
        if (shape.size() == 2) {
            const double bound = std::sqrt(6.0 / static_cast<double>(shape[0] + shape[1]));
            Rng rng(derive_seed(seed, name));
            for (auto& x : t.data()) x = rng.uniform(-bound, bound);
        }
        mp.store.add(name, std::move(t));
    }
    return mp;
}

ModelVars bind(Tape& tape, ModelParams& params) {
    std::vector<Var> vars;
    for (const auto& name : parameter_order()) vars.push_back(tape.parameter(params.store.get(name)));
    return covnli::bind(std::span<const Var>(vars));
}

ModelVars bind(std::span<const Var> v) {
    if (v.size() != parameter_order().size()) throw std::invalid_argument("bind: wrong number of variables");
    return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]};
}

TokenPair encode_pair(const Vocabulary& vocab, const Example& ex) {
    return {vocab.encode(ex.premise), vocab.encode(ex.hypothesis)};
}

namespace {

Var contextual(const ModelVars& vars, Var x) { return tanh(conv1d(x, vars.encoder_weight, vars.encoder_bias, 3, 1)); }

Var mlp(const ModelVars& vars, Var features) {
    Var hidden = relu(affine(features, vars.hidden_weight, vars.hidden_bias));
    return affine(hidden, vars.output_weight, vars.output_bias);
}

Var pair_features(Var h, Var p) { return concat({h, p, abs_diff(h, p), mul(h, p)}); }

}  // namespace

Var encode(const ModelVars& vars, const ModelConfig& config, std::span<const std::size_t> tokens, PhiLayer layer) {
    if (tokens.empty()) throw EmptyInputError("encode: empty token sequence");
    Var emb = embedding_lookup(vars.embedding, tokens);
    if (layer == PhiLayer::embedding) return emb;
    const std::size_t extra = config.encoder_input_width() - config.d;
    return contextual(vars, extra ? pad_cols(emb, extra) : emb);
}

Var forward(const ModelVars& vars, const ModelConfig& config, const TokenPair& pair, ForwardTrace* trace) {
    if (pair.premise.empty() || pair.hypothesis.empty()) throw EmptyInputError("forward: empty premise or hypothesis");
    const BigramEncoder bigram = vars.bigram();
    const std::size_t k = config.coverage_columns();

    Var h = embedding_lookup(vars.embedding, pair.hypothesis);
    Var p = embedding_lookup(vars.embedding, pair.premise);
    auto inject = [&](PhiLayer layer) {
        if (!config.injects_at(layer)) return;
        CoverageBundle bundle = compute_coverage(h, p, *config.coverage, &bigram, config.similarity);
        h = augment_hypothesis(h, bundle, *config.coverage);
        p = pad_premise(p, k);
        if (trace) trace->bundle = std::move(bundle);
    };

    inject(PhiLayer::embedding);
    h = contextual(vars, h);
    p = contextual(vars, p);
    inject(PhiLayer::encoder_output);
    if (trace) {
        trace->head_token_shape = h.shape();
        trace->premise_head_shape = p.shape();
    }

    if (config.head == HeadKind::pooled) return mlp(vars, pair_features(pool_max_avg(h), pool_max_avg(p)));

    Var query = mean_rows(p);
    Var weights = softmax(matmul(h, query));
    Var attended = matmul(weights, h);
    return mlp(vars, pair_features(attended, query));
}

Label predict_label(const Tensor& logits) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.size(); ++c)
        if (logits[c] > logits[best]) best = c;
    return static_cast<Label>(best);
}

Label predict(ModelParams& params, const TokenPair& pair) {
    Tape tape;
    tape.set_grad_enabled(false);
    const ModelVars vars = bind(tape, params);
    return predict_label(forward(vars, params.config, pair).value());
}

CoverageBundle coverage_for(Tape& tape, ModelParams& params, const TokenPair& pair, PhiLayer layer) {
    const ModelVars vars = bind(tape, params);
    const BigramEncoder bigram = vars.bigram();
    Var h = encode(vars, params.config, pair.hypothesis, layer);
    Var p = encode(vars, params.config, pair.premise, layer);
    return compute_coverage(h, p, CoverageFlags::all(layer), &bigram, params.config.similarity);
}

}  // namespace covnli
