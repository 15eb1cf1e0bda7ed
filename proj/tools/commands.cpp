#include "commands.hpp"

#include <filesystem>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "covnli/check_suite.hpp"
#include "covnli/harness.hpp"
#include "covnli/io.hpp"

namespace covnli::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json_file(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw UserError(path + ": invalid JSON: " + e.what());
    }
}

// Config from --config (or an empty object), with --seed taking precedence.
ExperimentConfig load_config(const Common& a) {
    json j = a.config.empty() ? json::object() : read_json_file(a.config);
    if (a.seed) j["seed"] = *a.seed;
    if (!j.contains("seed")) throw UserError("a seed is required: pass --seed or set \"seed\" in the config");
    return ExperimentConfig::from_json(j);
}

fs::path out_dir(const Common& a) {
    fs::path p(a.out);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec || !fs::is_directory(p)) throw UserError("cannot create output directory " + p.string());
    return p;
}

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

std::optional<std::vector<Example>> load_split(const ExperimentConfig& cfg, const std::string& data_dir, SplitKind kind,
                                               bool required) {
    const fs::path p = split_path(cfg, data_dir.empty() ? fs::path{} : fs::path(data_dir), kind);
    if ((data_dir.empty() && !cfg.data.count(to_string(kind))) || !fs::exists(p)) {
        if (required)
            throw UserError("no " + to_string(kind) + " split: pass --data <dir> or set data." + to_string(kind));
        return std::nullopt;
    }
    try {
        auto examples = read_jsonl(p);
        if (examples.empty()) throw UserError(p.string() + ": empty split");
        return examples;
    } catch (const UserError&) {
        throw;
    } catch (const std::exception& e) {
        throw UserError(p.string() + ": " + e.what());
    }
}

constexpr SplitKind kEvalSplits[] = {SplitKind::dev, SplitKind::ood_glockner, SplitKind::ood_sick};

void print_accuracies(const std::map<std::string, double>& acc) {
    for (const auto& [name, value] : acc) std::cout << name << '\t' << value << '\n';
}

}  // namespace

int cmd_gen(const GenArgs& a) {
    if (!a.spec.empty() && !a.config.empty()) throw UserError("pass either --spec or --config, not both");
    const std::string& spec_path = a.spec.empty() ? a.config : a.spec;
    json j = spec_path.empty() ? json::object() : read_json_file(spec_path);
    if (a.seed) j["seed"] = *a.seed;
    const GenSpec spec = gen_spec_from_json(j);
    const json manifest = write_dataset(out_dir(a), spec, Lexicon::builtin());
    for (const auto& s : manifest.at("splits"))
        std::cout << s.at("name").get<std::string>() << '\t' << s.at("size") << '\t' << s.at("sha256").get<std::string>()
                  << '\n';
    return 0;
}

int cmd_train(const RunArgs& a) {
    const ExperimentConfig cfg = load_config(a);
    const Workspace ws;
    const auto train_set = load_split(cfg, a.data, SplitKind::train, true);
    const auto dev_set = load_split(cfg, a.data, SplitKind::dev, true);
    auto [params, report] = train(cfg, ws, *train_set, *dev_set);
    for (const auto kind : {SplitKind::ood_glockner, SplitKind::ood_sick})
        if (const auto split = load_split(cfg, a.data, kind, false))
            report.accuracy[to_string(kind)] = evaluate(params, ws, *split);

    const fs::path out = out_dir(a);
    write_json(out / "report.json", report.to_json(false));
    write_json(out / "timing.json", {{"wall_time_s", report.wall_time_s}});
    write_json(out / "checkpoint.json", checkpoint_to_json(params, cfg));
    std::cout << "best_epoch\t" << report.best_epoch << '\n';
    print_accuracies(report.accuracy);
    return 0;
}

int cmd_eval(const EvalArgs& a) {
    auto [params, cfg] = checkpoint_from_json(read_json_file(a.checkpoint));
    if (!a.config.empty()) cfg.data = load_config(Common{a.config, cfg.seed, {}}).data;
    if (a.seed && *a.seed != cfg.seed)
        throw UserError("--seed " + std::to_string(*a.seed) + " does not match the checkpoint seed " +
                        std::to_string(cfg.seed));
    const Workspace ws;
    if (params.config.vocab_size != ws.vocab.size()) throw UserError("checkpoint vocabulary size does not match the lexicon");

    std::map<std::string, double> acc;
    for (const auto kind : kEvalSplits)
        if (const auto split = load_split(cfg, a.data, kind, false)) acc[to_string(kind)] = evaluate(params, ws, *split);
    if (acc.empty()) throw UserError("no evaluation splits found: pass --data <dir>");

    write_json(out_dir(a) / "eval.json", {{"config", cfg.to_json()}, {"accuracy", acc}});
    print_accuracies(acc);
    return 0;
}

int cmd_grid(const RunArgs& a) {
    const ExperimentConfig cfg = load_config(a);
    const Workspace ws;
    // Only the in-domain splits are ever loaded here.
    const auto train_set = load_split(cfg, a.data, SplitKind::train, true);
    const auto dev_set = load_split(cfg, a.data, SplitKind::dev, true);
    GridResult grid = grid_search(cfg, ws, *train_set, *dev_set);

    std::ostringstream csv;
    csv.precision(17);
    csv << "candidate,phi_layer,bigram_values,positions,bigram_positions,k,dev_accuracy,best_epoch\n";
    for (std::size_t i = 0; i < grid.runs.size(); ++i) {
        const auto& r = grid.runs[i];
        csv << i << ',' << to_string(r.flags.phi_layer) << ',' << r.flags.use_bigram_values << ','
            << r.flags.use_positions << ',' << r.flags.use_bigram_positions << ',' << r.flags.extra_columns() << ','
            << r.dev_accuracy << ',' << r.report.best_epoch << '\n';
    }
    ExperimentConfig best = cfg;
    best.coverage = grid.selected().flags;

    const fs::path out = out_dir(a);
    json j = grid.to_json();
    j["config"] = cfg.to_json();
    write_json(out / "grid.json", j);
    write_file_atomic(out / "grid.csv", csv.str());
    write_json(out / "checkpoint.json", checkpoint_to_json(grid.best_params, best));
    std::cout << "selected\t" << describe(grid.selected().flags) << "\ndev\t" << grid.selected().dev_accuracy << '\n';
    return 0;
}

int cmd_compare(const CompareArgs& a) {
    const ExperimentConfig cfg = load_config(a);
    const Workspace ws;
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < a.seeds; ++i) seeds.push_back(cfg.seed + i);

    DataForSeed data;
    if (!a.data.empty() || !cfg.data.empty()) {
        if (!a.spec.empty()) throw UserError("--spec only applies when data is generated per seed");
        SplitSet shared;
        for (const auto kind : {SplitKind::train, SplitKind::dev, SplitKind::ood_glockner, SplitKind::ood_sick})
            shared.get(kind) = *load_split(cfg, a.data, kind, true);
        data = [shared](std::uint64_t) { return shared; };
    } else {
        const GenSpec base = gen_spec_from_json(a.spec.empty() ? json::object() : read_json_file(a.spec));
        data = [base, &ws](std::uint64_t seed) {
            GenSpec s = base;
            s.seed = seed;
            return generate_splits(*ws.lexicon, s);
        };
    }

    const ComparisonTable table =
        compare_experiment(cfg, ws, seeds, data, full_grid(), [](const std::string& msg) { std::cerr << msg << '\n'; });

    const fs::path out = out_dir(a);
    json j = table.to_json();
    j["config"] = cfg.to_json();
    j["data"] = a.data.empty() && cfg.data.empty() ? json{{"generated_per_seed", true}} : json{{"directory", a.data}};
    write_json(out / "comparison.json", j);
    write_file_atomic(out / "comparison.csv", table.to_csv());
    const std::string md = table.to_markdown();
    write_file_atomic(out / "comparison.md", md);
    std::cout << md;
    return 0;
}

int cmd_gradcheck(const GradcheckArgs& a) {
    const std::uint64_t seed = a.seed ? *a.seed : (a.config.empty() ? 0 : load_config(a).seed);
    const SuiteReport report =
        a.scope == "ops" ? run_op_gradcheck(a.points, seed) : run_model_gradcheck(a.points, seed);
    for (const auto& e : report.entries) {
        char line[256];
        std::snprintf(line, sizeof line, "%-28s %-4s max_rel_err=%.3e tol=%.0e points=%zu excluded=%zu worst=%s",
                      e.name.c_str(), e.passed() ? "ok" : "FAIL", e.max_rel_error, e.tolerance, e.points, e.excluded,
                      e.worst_input.c_str());
        std::cout << line << '\n';
    }
    if (!a.out.empty()) write_json(out_dir(a) / "gradcheck.json", report.to_json());
    return report.passed() ? 0 : 1;
}

int cmd_dump_coverage(const DumpArgs& a) {
    const Workspace ws;
    std::optional<ModelParams> params;
    if (!a.checkpoint.empty()) {
        auto [p, cfg] = checkpoint_from_json(read_json_file(a.checkpoint));
        params = std::move(p);
    } else {
        params = initial_params(load_config(a), ws);
    }

    json pair;
    const bool inline_json = !a.pair.empty() && a.pair.front() == '{';
    if (inline_json) {
        try {
            pair = json::parse(a.pair);
        } catch (const json::parse_error& e) {
            throw UserError(std::string("--pair: invalid JSON: ") + e.what());
        }
    } else {
        if (!fs::exists(a.pair)) throw UserError("--pair: file not found: " + a.pair);
        pair = read_json_file(a.pair);
    }
    auto tokens = [&](const char* key) {
        if (!pair.contains(key)) throw UserError(std::string("--pair: missing \"") + key + "\"");
        const auto& v = pair.at(key);
        std::vector<std::string> out;
        if (v.is_string()) {
            std::istringstream ss(v.get<std::string>());
            for (std::string w; ss >> w;) out.push_back(w);
        } else {
            out = v.get<std::vector<std::string>>();
        }
        if (out.empty()) throw UserError(std::string("--pair: empty ") + key);
        return out;
    };
    Example ex{tokens("premise"), tokens("hypothesis"), Label::entailment, ""};
    std::vector<std::string> oov;
    for (const auto* side : {&ex.premise, &ex.hypothesis})
        for (const auto& w : *side)
            if (!ws.vocab.contains(w)) oov.push_back(w);
    if (!oov.empty()) {
        std::string list;
        for (const auto& w : oov) list += (list.empty() ? "" : ", ") + w;
        throw UserError("out-of-vocabulary tokens: " + list);
    }

    PhiLayer layer = PhiLayer::embedding;
    if (params->config.coverage) layer = params->config.coverage->phi_layer;
    if (!a.layer.empty()) layer = parse_phi_layer(a.layer);

    Tape tape;
    tape.set_grad_enabled(false);
    const CoverageBundle b = coverage_for(tape, *params, encode_pair(ws.vocab, ex), layer);
    json rows = json::array();
    for (std::size_t i = 0; i < ex.hypothesis.size(); ++i)
        rows.push_back({{"token", ex.hypothesis[i]},
                        {"C", b.C.value()[i]},
                        {"rawQ", b.raw_Q[i]},
                        {"premise_token", ex.premise[b.raw_Q[i]]},
                        {"Cp", b.Cp->value()[i]},
                        {"rawQp", b.raw_Qp[i]}});
    const json out = {{"premise", ex.premise},
                      {"hypothesis", ex.hypothesis},
                      {"phi_layer", to_string(layer)},
                      {"similarity", to_string(params->config.similarity)},
                      {"tokens", rows}};
    if (!a.out.empty()) write_json(out_dir(a) / "coverage.json", out);
    std::cout << out.dump(2) << '\n';
    return 0;
}

}  // namespace covnli::cli
