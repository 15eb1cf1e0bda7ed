#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "commands.hpp"
#include "covnli/harness.hpp"

namespace {

// One line on stderr, parseable as JSON.
int fail(const char* kind, const std::string& message, int code) {
    std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << '\n';
    return code;
}

void add_common(CLI::App* cmd, covnli::cli::Common& c, bool needs_out) {
    cmd->add_option("--config", c.config, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", c.seed, "Seed (overrides the config)");
    auto* out = cmd->add_option("--out", c.out, "Output directory");
    if (needs_out) out->required();
}

}  // namespace

int main(int argc, char** argv) {
    using namespace covnli::cli;

    CLI::App app{"Coverage-augmented NLI experiments"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* c_gen = app.add_subcommand("gen", "Generate the synthetic splits and a manifest");
    add_common(c_gen, gen, true);
    c_gen->add_option("--spec", gen.spec, "Generation spec JSON")->check(CLI::ExistingFile);

    RunArgs train;
    auto* c_train = app.add_subcommand("train", "Train one model and write a report and checkpoint");
    add_common(c_train, train, true);
    c_train->add_option("--data", train.data, "Directory with <split>.jsonl files")->check(CLI::ExistingDirectory);

    EvalArgs eval;
    auto* c_eval = app.add_subcommand("eval", "Evaluate a checkpoint on every available split");
    add_common(c_eval, eval, true);
    c_eval->add_option("--data", eval.data, "Directory with <split>.jsonl files")->check(CLI::ExistingDirectory);
    c_eval->add_option("--checkpoint", eval.checkpoint, "Checkpoint JSON")->required()->check(CLI::ExistingFile);

    RunArgs grid;
    auto* c_grid = app.add_subcommand("grid", "Select coverage flags and layer on in-domain dev accuracy");
    add_common(c_grid, grid, true);
    c_grid->add_option("--data", grid.data, "Directory with train.jsonl and dev.jsonl")->check(CLI::ExistingDirectory);

    CompareArgs compare;
    auto* c_compare = app.add_subcommand("compare", "Baseline vs grid-selected coverage over several seeds");
    add_common(c_compare, compare, true);
    c_compare->add_option("--data", compare.data, "Shared data directory (default: generate per seed)")
        ->check(CLI::ExistingDirectory);
    c_compare->add_option("--spec", compare.spec, "Generation spec used when no --data is given")
        ->check(CLI::ExistingFile);
    c_compare->add_option("--seeds", compare.seeds, "Number of consecutive seeds")->check(CLI::Range(3, 1000));

    GradcheckArgs gc;
    auto* c_gc = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
    add_common(c_gc, gc, false);
    c_gc->add_option("--scope", gc.scope, "ops or model")->check(CLI::IsMember({"ops", "model"}));
    c_gc->add_option("--points", gc.points, "Random points per check")->check(CLI::Range(1, 100000));

    DumpArgs dump;
    auto* c_dump = app.add_subcommand("dump-coverage", "Print C, Q, C', Q' for one pair");
    add_common(c_dump, dump, false);
    c_dump->add_option("--pair", dump.pair, "Pair JSON file or inline JSON")->required();
    c_dump->add_option("--checkpoint", dump.checkpoint, "Checkpoint JSON")->check(CLI::ExistingFile);
    c_dump->add_option("--layer", dump.layer, "embedding or encoder_output")
        ->check(CLI::IsMember({"embedding", "encoder_output"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what(), 1);
    }

    try {
        if (*c_gen) return cmd_gen(gen);
        if (*c_train) return cmd_train(train);
        if (*c_eval) return cmd_eval(eval);
        if (*c_grid) return cmd_grid(grid);
        if (*c_compare) return cmd_compare(compare);
        if (*c_gc) return cmd_gradcheck(gc);
        if (*c_dump) return cmd_dump_coverage(dump);
    } catch (const UserError& e) {
        return fail("user", e.what(), 1);
    } catch (const covnli::ConfigError& e) {
        return fail("config", e.what(), 1);
    } catch (const nlohmann::json::exception& e) {
        return fail("json", e.what(), 1);
    } catch (const covnli::TrainingError& e) {
        return fail("training", e.what(), 2);
    } catch (const std::exception& e) {
        return fail("internal", e.what(), 2);
    }
    return fail("internal", "no command ran", 2);
}
