#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "covnli/datagen.hpp"
#include "covnli/model.hpp"

namespace covnli {

/// Invalid configuration file or field.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Training diverged or was handed unusable data.
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OptimizerConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Declarative description of one run. Serialized with every default made
/// explicit, so a report carrying it is self-describing.
struct ExperimentConfig {
    std::uint64_t seed = 0;
    HeadKind head = HeadKind::pooled;
    std::optional<CoverageFlags> coverage;
    Similarity similarity = Similarity::dot;
    OptimizerConfig optimizer;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 30;
    std::size_t patience = 5;
    std::size_t d = 32;
    std::size_t d_bigram = 32;
    std::size_t hidden = 64;
    bool trainable_embeddings = false;
    /// Split name -> JSONL path. Optional; the CLI may supply a data directory instead.
    std::map<std::string, std::filesystem::path> data;

    /// Strict parse: unknown keys and a missing seed are errors.
    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    ModelConfig model_config(std::size_t vocab_size) const;
};

nlohmann::json to_json(const CoverageFlags& flags);
CoverageFlags coverage_flags_from_json(const nlohmann::json& j);

struct EpochRecord {
    std::size_t epoch = 0;
    double loss = 0.0;
    double dev_accuracy = 0.0;

    friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct RunReport {
    nlohmann::json config;
    std::map<std::string, double> accuracy;
    std::size_t best_epoch = 0;
    std::vector<EpochRecord> curve;
    double wall_time_s = 0.0;

    /// Wall time is the only field that varies between identical runs; leave it
    /// out when the JSON must be reproducible.
    nlohmann::json to_json(bool with_timing = true) const;
    static RunReport from_json(const nlohmann::json& j);
};

/// Training/evaluation context shared by every run: lexicon, vocabulary and
/// the seeded initial embedding table.
struct Workspace {
    const Lexicon* lexicon;
    Vocabulary vocab;

    explicit Workspace(const Lexicon& lex = Lexicon::builtin()) : lexicon(&lex), vocab(lex) {}
    Tensor embeddings(std::size_t d, std::uint64_t seed) const;
};

/// Parameters a run starts from: seeded embeddings and per-parameter initialization.
ModelParams initial_params(const ExperimentConfig& config, const Workspace& ws);

struct TrainResult {
    ModelParams params;
    RunReport report;
};

/// Adam on shuffled minibatches with early stopping on dev accuracy; returns
/// the parameters from the first epoch reaching the best dev accuracy.
/// Called after each epoch's dev evaluation with the current (not the best) parameters.
using EpochHook = std::function<void(const EpochRecord&, ModelParams&)>;

TrainResult train(const ExperimentConfig& config, const Workspace& ws, const std::vector<Example>& train_set,
                  const std::vector<Example>& dev_set, const EpochHook& hook = {});

/// Fraction of exact label matches. Predictions range over all three classes
/// even on two-class splits.
double evaluate(ModelParams& params, const Workspace& ws, const std::vector<Example>& split);

/// All 16 candidates: the 8 inclusion patterns of C', Q, Q' at both layers.
std::vector<CoverageFlags> full_grid();

struct GridRun {
    CoverageFlags flags;
    double dev_accuracy = 0.0;
    RunReport report;
};

struct GridResult {
    std::vector<GridRun> runs;
    std::size_t best = 0;
    ModelParams best_params;

    const GridRun& selected() const { return runs.at(best); }
    nlohmann::json to_json() const;
};

/// Index of the preferred run: highest dev accuracy, then fewer coverage
/// columns, then the embedding layer, then candidate order.
std::size_t select_best(const std::vector<GridRun>& runs);

/// Trains one model per candidate and selects on in-domain dev accuracy.
/// Only the training and dev splits are visible here.
GridResult grid_search(const ExperimentConfig& base, const Workspace& ws, const std::vector<Example>& train_set,
                       const std::vector<Example>& dev_set, const std::vector<CoverageFlags>& candidates = full_grid());

struct SeedComparison {
    std::uint64_t seed = 0;
    std::map<std::string, double> baseline;  // split -> accuracy
    std::map<std::string, double> coverage;
    CoverageFlags selected;
    double selected_dev_accuracy = 0.0;
    std::size_t baseline_widened_width = 0;
    std::size_t coverage_widened_width = 0;
};

/// Rows {baseline, +coverage} x columns {dev, ood_glockner, ood_sick}, over seeds.
struct ComparisonTable {
    static const std::vector<std::string>& columns();
    static const std::vector<std::string>& rows();

    std::vector<SeedComparison> seeds;

    double mean(const std::string& row, const std::string& column) const;
    double stddev(const std::string& row, const std::string& column) const;

    nlohmann::json to_json() const;
    std::string to_csv() const;
    std::string to_markdown() const;
};

using DataForSeed = std::function<SplitSet(std::uint64_t seed)>;
using ProgressFn = std::function<void(const std::string&)>;

/// For each seed: the baseline (no coverage columns) and the grid-selected
/// +coverage model, trained on the same splits from the same seed.
ComparisonTable compare_experiment(const ExperimentConfig& base, const Workspace& ws,
                                   const std::vector<std::uint64_t>& seeds, const DataForSeed& data,
                                   const std::vector<CoverageFlags>& candidates = full_grid(),
                                   const ProgressFn& progress = {});

/// Generation spec as JSON: {"seed", "cue_rate", "sizes": {split: n}}. Strict like configs.
GenSpec gen_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GenSpec& spec);

/// Writes <split>.jsonl for all four splits plus manifest.json (seeds, sizes,
/// lexicon version and content hashes) into `dir`. Returns the manifest.
nlohmann::json write_dataset(const std::filesystem::path& dir, const GenSpec& spec, const Lexicon& lex);

/// Path of one split: the config's explicit path if present, else <data_dir>/<split>.jsonl.
std::filesystem::path split_path(const ExperimentConfig& config, const std::filesystem::path& data_dir,
                                 SplitKind kind);

/// Checkpoint: parameter name -> {shape, base64 little-endian float64 payload},
/// plus the experiment config that produced it.
nlohmann::json checkpoint_to_json(const ModelParams& params, const ExperimentConfig& config);
std::pair<ModelParams, ExperimentConfig> checkpoint_from_json(const nlohmann::json& j);

}  // namespace covnli
