// Thin JSON-text bindings; the Python package decodes them.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "covnli/check_suite.hpp"
#include "covnli/harness.hpp"

namespace py = pybind11;
using namespace covnli;
using nlohmann::json;

namespace {

const Workspace& workspace() {
    static const Workspace ws;
    return ws;
}

std::string generate_splits_jsonl(const std::string& spec_json) {
    const GenSpec spec = gen_spec_from_json(json::parse(spec_json));
    SplitSet s;
    {
        py::gil_scoped_release release;
        s = generate_splits(*workspace().lexicon, spec);
    }
    json out;
    for (const auto kind : {SplitKind::train, SplitKind::dev, SplitKind::ood_glockner, SplitKind::ood_sick})
        out[to_string(kind)] = to_jsonl(s.get(kind));
    return out.dump();
}

std::string write_dataset_dir(const std::string& dir, const std::string& spec_json) {
    const GenSpec spec = gen_spec_from_json(json::parse(spec_json));
    py::gil_scoped_release release;
    return write_dataset(dir, spec, *workspace().lexicon).dump();
}

std::pair<std::string, std::string> train_jsonl(const std::string& config_json, const std::string& train_text,
                                                const std::string& dev_text) {
    const ExperimentConfig cfg = ExperimentConfig::from_json(json::parse(config_json));
    const auto train_set = parse_jsonl(train_text), dev_set = parse_jsonl(dev_text);
    py::gil_scoped_release release;
    TrainResult r = train(cfg, workspace(), train_set, dev_set);
    return {r.report.to_json(false).dump(), checkpoint_to_json(r.params, cfg).dump()};
}

double evaluate_jsonl(const std::string& checkpoint_json, const std::string& split_text) {
    auto [params, cfg] = checkpoint_from_json(json::parse(checkpoint_json));
    const auto split = parse_jsonl(split_text);
    py::gil_scoped_release release;
    return evaluate(params, workspace(), split);
}

std::string grid_jsonl(const std::string& config_json, const std::string& train_text, const std::string& dev_text) {
    const ExperimentConfig cfg = ExperimentConfig::from_json(json::parse(config_json));
    const auto train_set = parse_jsonl(train_text), dev_set = parse_jsonl(dev_text);
    py::gil_scoped_release release;
    return grid_search(cfg, workspace(), train_set, dev_set).to_json().dump();
}

std::string coverage_json(const std::vector<std::string>& premise, const std::vector<std::string>& hypothesis,
                          const std::string& checkpoint_json, std::uint64_t seed, const std::string& layer) {
    const Workspace& ws = workspace();
    ModelParams params = [&] {
        if (!checkpoint_json.empty()) return checkpoint_from_json(json::parse(checkpoint_json)).first;
        ExperimentConfig cfg;
        cfg.seed = seed;
        return initial_params(cfg, ws);
    }();
    for (const auto* side : {&premise, &hypothesis})
        for (const auto& w : *side)
            if (!ws.vocab.contains(w)) throw py::key_error("out-of-vocabulary token: " + w);
    if (premise.empty() || hypothesis.empty()) throw py::value_error("premise and hypothesis must be non-empty");

    Tape tape;
    tape.set_grad_enabled(false);
    const Example ex{premise, hypothesis, Label::entailment, ""};
    const CoverageBundle b = coverage_for(tape, params, encode_pair(ws.vocab, ex), parse_phi_layer(layer));
    json out = {{"C", json::array()}, {"rawQ", b.raw_Q}, {"Q", json::array()},
                {"Cp", json::array()}, {"rawQp", b.raw_Qp}, {"Qp", json::array()}};
    for (std::size_t i = 0; i < hypothesis.size(); ++i) {
        out["C"].push_back(b.C.value()[i]);
        out["Q"].push_back(b.Q[i]);
        out["Cp"].push_back(b.Cp->value()[i]);
        out["Qp"].push_back(b.Qp[i]);
    }
    return out.dump();
}

std::string gradcheck_json(const std::string& scope, std::size_t points, std::uint64_t seed) {
    if (scope != "ops" && scope != "model") throw py::value_error("scope must be 'ops' or 'model'");
    py::gil_scoped_release release;
    return (scope == "ops" ? run_op_gradcheck(points, seed) : run_model_gradcheck(points, seed)).to_json().dump();
}

}  // namespace

PYBIND11_MODULE(_covnli, m) {
    m.doc() = "Coverage-augmented NLI core";
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);

    m.def("generate", &generate_splits_jsonl, py::arg("spec_json"));
    m.def("write_dataset", &write_dataset_dir, py::arg("dir"), py::arg("spec_json"));
    m.def("train", &train_jsonl, py::arg("config_json"), py::arg("train_jsonl"), py::arg("dev_jsonl"));
    m.def("evaluate", &evaluate_jsonl, py::arg("checkpoint_json"), py::arg("split_jsonl"));
    m.def("grid_search", &grid_jsonl, py::arg("config_json"), py::arg("train_jsonl"), py::arg("dev_jsonl"));
    m.def("coverage", &coverage_json, py::arg("premise"), py::arg("hypothesis"), py::arg("checkpoint_json") = "",
          py::arg("seed") = 0, py::arg("layer") = "embedding");
    m.def("gradcheck", &gradcheck_json, py::arg("scope") = "ops", py::arg("points") = 10, py::arg("seed") = 0);
}
