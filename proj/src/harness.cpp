#include "covnli/harness.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "covnli/io.hpp"
#include "covnli/rng.hpp"

namespace covnli {

// ---------------------------------------------------------------- config

nlohmann::json to_json(const CoverageFlags& f) {
    return {{"bigram_values", f.use_bigram_values},
            {"positions", f.use_positions},
            {"bigram_positions", f.use_bigram_positions},
            {"phi_layer", to_string(f.phi_layer)}};
}

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

}  // namespace

CoverageFlags coverage_flags_from_json(const nlohmann::json& j) {
    reject_unknown(j, {"bigram_values", "positions", "bigram_positions", "phi_layer"}, "coverage");
    CoverageFlags f;
    read_opt(j, "bigram_values", f.use_bigram_values, "coverage");
    read_opt(j, "positions", f.use_positions, "coverage");
    read_opt(j, "bigram_positions", f.use_bigram_positions, "coverage");
    std::string layer = to_string(f.phi_layer);
    read_opt(j, "phi_layer", layer, "coverage");
    try {
        f.phi_layer = parse_phi_layer(layer);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("coverage.phi_layer: ") + e.what());
    }
    return f;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    reject_unknown(j,
                   {"seed", "head", "coverage", "similarity", "optimizer", "batch_size", "max_epochs", "patience",
                    "model", "data"},
                   "config");
    ExperimentConfig c;
    if (!j.contains("seed") || !j.at("seed").is_number_integer() || j.at("seed").get<std::int64_t>() < 0)
        throw ConfigError("config.seed: a non-negative integer seed is required");
    c.seed = j.at("seed").get<std::uint64_t>();
    try {
        if (j.contains("head")) c.head = parse_head_kind(j.at("head").get<std::string>());
        if (j.contains("similarity")) c.similarity = parse_similarity(j.at("similarity").get<std::string>());
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (j.contains("coverage") && !j.at("coverage").is_null()) c.coverage = coverage_flags_from_json(j.at("coverage"));
    if (j.contains("optimizer")) {
        const auto& o = j.at("optimizer");
        reject_unknown(o, {"learning_rate", "beta1", "beta2", "epsilon"}, "optimizer");
        read_opt(o, "learning_rate", c.optimizer.learning_rate, "optimizer");
        read_opt(o, "beta1", c.optimizer.beta1, "optimizer");
        read_opt(o, "beta2", c.optimizer.beta2, "optimizer");
        read_opt(o, "epsilon", c.optimizer.epsilon, "optimizer");
    }
    read_opt(j, "batch_size", c.batch_size, "config");
    read_opt(j, "max_epochs", c.max_epochs, "config");
    read_opt(j, "patience", c.patience, "config");
    if (j.contains("model")) {
        const auto& m = j.at("model");
        reject_unknown(m, {"d", "d_bigram", "hidden", "trainable_embeddings"}, "model");
        read_opt(m, "d", c.d, "model");
        read_opt(m, "d_bigram", c.d_bigram, "model");
        read_opt(m, "hidden", c.hidden, "model");
        read_opt(m, "trainable_embeddings", c.trainable_embeddings, "model");
    }
    if (j.contains("data")) {
        const auto& d = j.at("data");
        reject_unknown(d, {"train", "dev", "ood_glockner", "ood_sick"}, "data");
        for (const auto& [name, path] : d.items()) {
            std::filesystem::path p = path.get<std::string>();
            if (!std::filesystem::exists(p)) throw ConfigError("data." + name + ": file not found: " + p.string());
            c.data[name] = p;
        }
    }
    if (c.batch_size == 0) throw ConfigError("config.batch_size must be positive");
    if (c.max_epochs == 0) throw ConfigError("config.max_epochs must be positive");
    if (c.d < 8) throw ConfigError("model.d must be at least 8");
    if (c.optimizer.learning_rate < 0.0) throw ConfigError("optimizer.learning_rate must be non-negative");
    return c;
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json data_j = nlohmann::json::object();
    for (const auto& [name, path] : data) data_j[name] = path.string();
    return {{"seed", seed},
            {"head", to_string(head)},
            {"coverage", coverage ? covnli::to_json(*coverage) : nlohmann::json(nullptr)},
            {"similarity", to_string(similarity)},
            {"optimizer",
             {{"learning_rate", optimizer.learning_rate},
              {"beta1", optimizer.beta1},
              {"beta2", optimizer.beta2},
              {"epsilon", optimizer.epsilon}}},
            {"batch_size", batch_size},
            {"max_epochs", max_epochs},
            {"patience", patience},
            {"model", {{"d", d}, {"d_bigram", d_bigram}, {"hidden", hidden}, {"trainable_embeddings", trainable_embeddings}}},
            {"data", data_j}};
}

ModelConfig ExperimentConfig::model_config(std::size_t vocab_size) const {
    ModelConfig m;
    m.vocab_size = vocab_size;
    m.d = d;
    m.d_bigram = d_bigram;
    m.hidden = hidden;
    m.head = head;
    m.coverage = coverage;
    m.similarity = similarity;
    m.trainable_embeddings = trainable_embeddings;
    return m;
}

// ---------------------------------------------------------------- reports

nlohmann::json RunReport::to_json(bool with_timing) const {
    nlohmann::json curve_j = nlohmann::json::array();
    for (const auto& e : curve) curve_j.push_back({{"epoch", e.epoch}, {"loss", e.loss}, {"dev_accuracy", e.dev_accuracy}});
    nlohmann::json j{{"config", config}, {"accuracy", accuracy}, {"best_epoch", best_epoch}, {"curve", curve_j}};
    if (with_timing) j["wall_time_s"] = wall_time_s;
    return j;
}

RunReport RunReport::from_json(const nlohmann::json& j) {
    RunReport r;
    r.config = j.at("config");
    r.accuracy = j.at("accuracy").get<std::map<std::string, double>>();
    r.best_epoch = j.at("best_epoch").get<std::size_t>();
    for (const auto& e : j.at("curve"))
        r.curve.push_back({e.at("epoch").get<std::size_t>(), e.at("loss").get<double>(), e.at("dev_accuracy").get<double>()});
    r.wall_time_s = j.value("wall_time_s", 0.0);
    return r;
}

Tensor Workspace::embeddings(std::size_t d, std::uint64_t seed) const {
    return build_embeddings(*lexicon, vocab, d, derive_seed(seed, "embeddings"));
}

// ---------------------------------------------------------------- training

namespace {

struct AdamState {
    std::vector<Tensor> m, v;
    std::size_t step = 0;
};

void adam_step(ParamStore& store, AdamState& st, const OptimizerConfig& opt, double grad_scale) {
    auto& params = store.all();
    if (st.m.empty())
        for (const auto& p : params) {
            st.m.emplace_back(p.value.shape());
            st.v.emplace_back(p.value.shape());
        }
    ++st.step;
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(st.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i];
        if (!p.trainable || p.grad.empty()) continue;
        auto w = p.value.data();
        auto g = p.grad.data();
        auto m = st.m[i].data();
        auto v = st.v[i].data();
        for (std::size_t k = 0; k < w.size(); ++k) {
            const double gk = g[k] * grad_scale;
            m[k] = opt.beta1 * m[k] + (1.0 - opt.beta1) * gk;
            v[k] = opt.beta2 * v[k] + (1.0 - opt.beta2) * gk * gk;
            w[k] -= opt.learning_rate * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + opt.epsilon);
        }
    }
}

std::vector<TokenPair> encode_all(const Workspace& ws, const std::vector<Example>& data) {
    std::vector<TokenPair> out;
    out.reserve(data.size());
    for (const auto& ex : data) out.push_back(encode_pair(ws.vocab, ex));
    return out;
}

double accuracy_of(ModelParams& params, const std::vector<TokenPair>& pairs, const std::vector<Example>& data) {
    std::size_t hits = 0;
    Tape tape;
    tape.set_grad_enabled(false);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        tape.reset();
        const ModelVars vars = bind(tape, params);
        hits += predict_label(forward(vars, params.config, pairs[i]).value()) == data[i].label;
    }
    return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

std::vector<Tensor> snapshot(const ParamStore& store) {
    std::vector<Tensor> out;
    for (const auto& p : store.all()) out.push_back(p.value);
    return out;
}

}  // namespace

ModelParams initial_params(const ExperimentConfig& config, const Workspace& ws) {
    return init_params(config.model_config(ws.vocab.size()), ws.embeddings(config.d, config.seed),
                       derive_seed(config.seed, "init"));
}

TrainResult train(const ExperimentConfig& config, const Workspace& ws, const std::vector<Example>& train_set,
                  const std::vector<Example>& dev_set, const EpochHook& hook) {
    if (train_set.empty()) throw TrainingError("training split is empty");
    if (dev_set.empty()) throw TrainingError("dev split is empty");
    const auto start = std::chrono::steady_clock::now();

    ModelParams params = initial_params(config, ws);
    const ModelConfig mc = params.config;
    const auto train_pairs = encode_all(ws, train_set);
    const auto dev_pairs = encode_all(ws, dev_set);

    RunReport report;
    report.config = config.to_json();
    Rng shuffle_rng(derive_seed(config.seed, "shuffle"));
    std::vector<std::size_t> order(train_pairs.size());
    std::iota(order.begin(), order.end(), 0);

    AdamState adam;
    double best_dev = -1.0;
    std::vector<Tensor> best = snapshot(params.store);
    std::size_t since_best = 0;
    Tape tape;

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        shuffle_rng.shuffle(std::span<std::size_t>(order));
        double total_loss = 0.0;
        for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
            const std::size_t e = std::min(order.size(), b + config.batch_size);
            params.store.zero_grad();
            for (std::size_t i = b; i < e; ++i) {
                const std::size_t idx = order[i];
                tape.reset();
                const ModelVars vars = bind(tape, params);
                Var loss = softmax_cross_entropy(forward(vars, mc, train_pairs[idx]),
                                                 static_cast<std::size_t>(train_set[idx].label));
                const double l = loss.value()[0];
                if (!std::isfinite(l))
                    throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", training example " +
                                        std::to_string(idx));
                total_loss += l;
                tape.backward(loss);
            }
            adam_step(params.store, adam, config.optimizer, 1.0 / static_cast<double>(e - b));
        }
        const double dev_acc = accuracy_of(params, dev_pairs, dev_set);
        report.curve.push_back({epoch, total_loss / static_cast<double>(order.size()), dev_acc});
        if (hook) hook(report.curve.back(), params);
        if (dev_acc > best_dev) {
            best_dev = dev_acc;
            report.best_epoch = epoch;
            best = snapshot(params.store);
            since_best = 0;
        } else if (++since_best >= config.patience) {
            break;
        }
    }

    auto& all = params.store.all();
    for (std::size_t i = 0; i < all.size(); ++i) {
        all[i].value = std::move(best[i]);
        all[i].grad = Tensor{};
    }
    report.accuracy["dev"] = best_dev;
    report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(params), std::move(report)};
}

double evaluate(ModelParams& params, const Workspace& ws, const std::vector<Example>& split) {
    if (split.empty()) throw std::invalid_argument("evaluate: empty split");
    for (const auto& ex : split)
        if (static_cast<std::size_t>(ex.label) >= kNumClasses) throw std::invalid_argument("evaluate: label outside the model's classes");
    return accuracy_of(params, encode_all(ws, split), split);
}

// ---------------------------------------------------------------- grid search

std::vector<CoverageFlags> full_grid() {
    std::vector<CoverageFlags> out;
    for (PhiLayer layer : {PhiLayer::embedding, PhiLayer::encoder_output})
        for (int mask = 0; mask < 8; ++mask)
            out.push_back({(mask & 1) != 0, (mask & 2) != 0, (mask & 4) != 0, layer});
    return out;
}

std::size_t select_best(const std::vector<GridRun>& runs) {
    if (runs.empty()) throw std::invalid_argument("select_best: no runs");
    std::size_t best = 0;
    for (std::size_t i = 1; i < runs.size(); ++i) {
        const auto& a = runs[i];
        const auto& b = runs[best];
        if (a.dev_accuracy != b.dev_accuracy) {
            if (a.dev_accuracy > b.dev_accuracy) best = i;
            continue;
        }
        if (a.flags.extra_columns() != b.flags.extra_columns()) {
            if (a.flags.extra_columns() < b.flags.extra_columns()) best = i;
            continue;
        }
        if (a.flags.phi_layer != b.flags.phi_layer && a.flags.phi_layer == PhiLayer::embedding) best = i;
    }
    return best;
}

nlohmann::json GridResult::to_json() const {
    nlohmann::json runs_j = nlohmann::json::array();
    for (const auto& r : runs)
        runs_j.push_back({{"flags", covnli::to_json(r.flags)},
                          {"label", describe(r.flags)},
                          {"dev_accuracy", r.dev_accuracy},
                          {"report", r.report.to_json(false)}});
    return {{"runs", runs_j}, {"selected", best}, {"selected_flags", covnli::to_json(selected().flags)},
            {"selected_label", describe(selected().flags)}, {"selected_dev_accuracy", selected().dev_accuracy}};
}

GridResult grid_search(const ExperimentConfig& base, const Workspace& ws, const std::vector<Example>& train_set,
                       const std::vector<Example>& dev_set, const std::vector<CoverageFlags>& candidates) {
    if (candidates.empty()) throw std::invalid_argument("grid_search: no candidates");
    GridResult result;
    std::vector<ModelParams> trained;
    for (const auto& flags : candidates) {
        ExperimentConfig cfg = base;
        cfg.coverage = flags;
        auto [params, report] = train(cfg, ws, train_set, dev_set);
        result.runs.push_back({flags, report.accuracy.at("dev"), std::move(report)});
        trained.push_back(std::move(params));
    }
    result.best = select_best(result.runs);
    result.best_params = std::move(trained[result.best]);
    return result;
}

// ---------------------------------------------------------------- comparison

const std::vector<std::string>& ComparisonTable::columns() {
    static const std::vector<std::string> c{"dev", "ood_glockner", "ood_sick"};
    return c;
}

const std::vector<std::string>& ComparisonTable::rows() {
    static const std::vector<std::string> r{"baseline", "+coverage"};
    return r;
}

namespace {

const std::map<std::string, double>& row_of(const SeedComparison& s, const std::string& row) {
    if (row == "baseline") return s.baseline;
    if (row == "+coverage") return s.coverage;
    throw std::invalid_argument("unknown row '" + row + "'");
}

}  // namespace

double ComparisonTable::mean(const std::string& row, const std::string& column) const {
    if (seeds.empty()) return 0.0;
    double s = 0.0;
    for (const auto& sc : seeds) s += row_of(sc, row).at(column);
    return s / static_cast<double>(seeds.size());
}

double ComparisonTable::stddev(const std::string& row, const std::string& column) const {
    if (seeds.size() < 2) return 0.0;
    const double mu = mean(row, column);
    double s = 0.0;
    for (const auto& sc : seeds) {
        const double d = row_of(sc, row).at(column) - mu;
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(seeds.size() - 1));
}

nlohmann::json ComparisonTable::to_json() const {
    nlohmann::json per_seed = nlohmann::json::array();
    for (const auto& s : seeds)
        per_seed.push_back({{"seed", s.seed},
                            {"baseline", s.baseline},
                            {"coverage", s.coverage},
                            {"selected_flags", covnli::to_json(s.selected)},
                            {"selected_label", describe(s.selected)},
                            {"selected_dev_accuracy", s.selected_dev_accuracy},
                            {"baseline_widened_width", s.baseline_widened_width},
                            {"coverage_widened_width", s.coverage_widened_width}});
    nlohmann::json summary = nlohmann::json::object();
    for (const auto& r : rows())
        for (const auto& c : columns()) summary[r][c] = {{"mean", mean(r, c)}, {"sd", stddev(r, c)}};
    return {{"columns", columns()}, {"rows", rows()}, {"summary", summary}, {"per_seed", per_seed}};
}

std::string ComparisonTable::to_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "model,split,seed,accuracy\n";
    for (const auto& r : rows())
        for (const auto& s : seeds)
            for (const auto& c : columns()) os << r << ',' << c << ',' << s.seed << ',' << row_of(s, r).at(c) << '\n';
    return os.str();
}

std::string ComparisonTable::to_markdown() const {
    auto cell = [this](const std::string& r, const std::string& c) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.2f ± %.2f", 100.0 * mean(r, c), 100.0 * stddev(r, c));
        return std::string(buf);
    };
    std::ostringstream os;
    os << "| | in-domain | out-of-domain | |\n";
    os << "|---|---|---|---|\n";
    os << "| | dev | ood_glockner | ood_sick |\n";
    for (const auto& r : rows()) {
        os << "| " << r;
        for (const auto& c : columns()) os << " | " << cell(r, c);
        os << " |\n";
    }
    return os.str();
}

ComparisonTable compare_experiment(const ExperimentConfig& base, const Workspace& ws,
                                   const std::vector<std::uint64_t>& seeds, const DataForSeed& data,
                                   const std::vector<CoverageFlags>& candidates, const ProgressFn& progress) {
    if (seeds.size() < 3) throw std::invalid_argument("compare_experiment: at least 3 seeds required");
    ComparisonTable table;
    for (const auto seed : seeds) {
        const SplitSet splits = data(seed);
        ExperimentConfig cfg = base;
        cfg.seed = seed;
        cfg.coverage.reset();

        SeedComparison sc;
        sc.seed = seed;
        const ModelConfig baseline_mc = cfg.model_config(ws.vocab.size());
        sc.baseline_widened_width = baseline_mc.encoder_input_width();
        if (baseline_mc.head_token_width() != cfg.d || baseline_mc.encoder_input_width() != cfg.d)
            throw std::logic_error("baseline must carry no coverage columns");
        for (const auto& flags : candidates) {
            ExperimentConfig with = cfg;
            with.coverage = flags;
            const ModelConfig mc = with.model_config(ws.vocab.size());
            const std::size_t widened =
                flags.phi_layer == PhiLayer::embedding ? mc.encoder_input_width() : mc.head_token_width();
            if (widened != cfg.d + flags.extra_columns())
                throw std::logic_error("coverage model widened layer is not d + k");
        }

        if (progress) progress("seed " + std::to_string(seed) + ": baseline");
        auto baseline = train(cfg, ws, splits.train, splits.dev);
        if (progress) progress("seed " + std::to_string(seed) + ": grid search");
        auto grid = grid_search(cfg, ws, splits.train, splits.dev, candidates);

        sc.selected = grid.selected().flags;
        sc.selected_dev_accuracy = grid.selected().dev_accuracy;
        const ModelConfig sel_mc = grid.best_params.config;
        sc.coverage_widened_width =
            sc.selected.phi_layer == PhiLayer::embedding ? sel_mc.encoder_input_width() : sel_mc.head_token_width();
        for (const auto kind : {SplitKind::dev, SplitKind::ood_glockner, SplitKind::ood_sick}) {
            const auto& split = splits.get(kind);
            sc.baseline[to_string(kind)] = evaluate(baseline.params, ws, split);
            sc.coverage[to_string(kind)] = evaluate(grid.best_params, ws, split);
        }
        if (progress) {
            std::ostringstream os;
            os << "seed " << seed << ": selected " << describe(sc.selected);
            for (const auto& c : ComparisonTable::columns())
                os << " | " << c << " base=" << sc.baseline[c] << " cov=" << sc.coverage[c];
            progress(os.str());
        }
        table.seeds.push_back(std::move(sc));
    }
    return table;
}

// ---------------------------------------------------------------- checkpoints

namespace {

std::string encode_doubles(std::span<const double> values) {
    std::string bytes;
    bytes.reserve(values.size() * 8);
    for (double v : values) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        for (int b = 0; b < 8; ++b) bytes += static_cast<char>((bits >> (8 * b)) & 0xff);
    }
    return base64_encode(bytes);
}

std::vector<double> decode_doubles(const std::string& text) {
    const std::string bytes = base64_decode(text);
    if (bytes.size() % 8 != 0) throw std::invalid_argument("checkpoint: payload is not a whole number of float64 values");
    std::vector<double> out(bytes.size() / 8);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= std::uint64_t(static_cast<unsigned char>(bytes[i * 8 + b])) << (8 * b);
        out[i] = std::bit_cast<double>(bits);
    }
    return out;
}

}  // namespace

nlohmann::json checkpoint_to_json(const ModelParams& params, const ExperimentConfig& config) {
    nlohmann::json p = nlohmann::json::object();
    for (const auto& param : params.store.all())
        p[param.name] = {{"shape", param.value.shape()}, {"data", encode_doubles(param.value.data())}};
    return {{"format", "covnli-checkpoint"},
            {"version", 1},
            {"vocab_size", params.config.vocab_size},
            {"config", config.to_json()},
            {"parameters", p}};
}

std::pair<ModelParams, ExperimentConfig> checkpoint_from_json(const nlohmann::json& j) {
    if (j.value("format", std::string{}) != "covnli-checkpoint") throw ConfigError("not a checkpoint file");
    nlohmann::json cfg_j = j.at("config");
    cfg_j["data"] = nlohmann::json::object();  // data paths need not exist where the checkpoint is loaded
    ExperimentConfig config = ExperimentConfig::from_json(cfg_j);
    config.data.clear();
    for (const auto& [name, path] : j.at("config").at("data").items()) config.data[name] = path.get<std::string>();

    const ModelConfig mc = config.model_config(j.at("vocab_size").get<std::size_t>());
    ModelParams params{mc, {}};
    const auto& payload = j.at("parameters");
    for (const auto& [name, shape] : parameter_shapes(mc)) {
        if (!payload.contains(name)) throw ConfigError("checkpoint: missing parameter '" + name + "'");
        const auto& entry = payload.at(name);
        if (entry.at("shape").get<Shape>() != shape)
            throw ConfigError("checkpoint: parameter '" + name + "' has unexpected shape");
        Tensor t(shape, decode_doubles(entry.at("data").get<std::string>()));
        const bool trainable = name != param_names::embedding || mc.trainable_embeddings;
        params.store.add(name, std::move(t), trainable);
    }
    return {std::move(params), std::move(config)};
}

}  // namespace covnli

// ---------------------------------------------------------------- datasets

namespace covnli {

GenSpec gen_spec_from_json(const nlohmann::json& j) {
    reject_unknown(j, {"seed", "cue_rate", "sizes"}, "spec");
    GenSpec s;
    read_opt(j, "seed", s.seed, "spec");
    read_opt(j, "cue_rate", s.cue_rate, "spec");
    if (j.contains("sizes")) {
        const auto& z = j.at("sizes");
        reject_unknown(z, {"train", "dev", "ood_glockner", "ood_sick"}, "spec.sizes");
        read_opt(z, "train", s.train_size, "spec.sizes");
        read_opt(z, "dev", s.dev_size, "spec.sizes");
        read_opt(z, "ood_glockner", s.glockner_size, "spec.sizes");
        read_opt(z, "ood_sick", s.sick_size, "spec.sizes");
    }
    if (!(s.cue_rate >= 0.0 && s.cue_rate <= 1.0)) throw ConfigError("spec.cue_rate must lie in [0, 1]");
    for (const auto& split : s.splits())
        if (split.size == 0) throw ConfigError("spec.sizes." + to_string(split.kind) + " must be positive");
    return s;
}

nlohmann::json to_json(const GenSpec& s) {
    return {{"seed", s.seed},
            {"cue_rate", s.cue_rate},
            {"sizes",
             {{"train", s.train_size}, {"dev", s.dev_size}, {"ood_glockner", s.glockner_size}, {"ood_sick", s.sick_size}}}};
}

nlohmann::json write_dataset(const std::filesystem::path& dir, const GenSpec& spec, const Lexicon& lex) {
    std::filesystem::create_directories(dir);
    const SplitSet set = generate_splits(lex, spec);
    nlohmann::json splits = nlohmann::json::array();
    for (const auto& s : spec.splits()) {
        const std::string name = to_string(s.kind);
        const std::string text = to_jsonl(set.get(s.kind));
        write_file_atomic(dir / (name + ".jsonl"), text);
        splits.push_back({{"name", name},
                          {"file", name + ".jsonl"},
                          {"size", s.size},
                          {"seed", s.seed},
                          {"cue_rate", s.cue_rate},
                          {"sha256", sha256_hex(text)}});
    }
    nlohmann::json manifest = {{"format", "covnli-dataset"},
                               {"spec", to_json(spec)},
                               {"lexicon", {{"version", lex.version()}, {"sha256", sha256_hex(Lexicon::builtin_source())}}},
                               {"splits", splits}};
    write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
    return manifest;
}

std::filesystem::path split_path(const ExperimentConfig& config, const std::filesystem::path& data_dir,
                                 SplitKind kind) {
    const std::string name = to_string(kind);
    if (auto it = config.data.find(name); it != config.data.end()) return it->second;
    return data_dir / (name + ".jsonl");
}

}  // namespace covnli
