#ifdef COVNLI_CLI_PATH

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>

#include <json.hpp>

#include "covnli/io.hpp"
#include "helpers.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(const std::string& args) {
    const fs::path dir = fs::temp_directory_path() / "covnli_cli_io";
    fs::create_directories(dir);
    const std::string cmd = std::string(COVNLI_CLI_PATH) + " " + args + " >" + (dir / "out").string() + " 2>" +
                            (dir / "err").string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, covnli::read_file(dir / "out"), covnli::read_file(dir / "err")};
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("covnli_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// Numeric leaves compared to a tolerance, everything else exactly.
void check_json_close(const json& a, const json& b, double tol, const std::string& path = "") {
    INFO(path);
    if (a.is_number() && b.is_number()) {
        CHECK(std::abs(a.get<double>() - b.get<double>()) <= tol);
        return;
    }
    REQUIRE(a.type() == b.type());
    if (a.is_object()) {
        REQUIRE(a.size() == b.size());
        for (auto it = a.begin(); it != a.end(); ++it) {
            REQUIRE(b.contains(it.key()));
            check_json_close(it.value(), b.at(it.key()), tol, path + "." + it.key());
        }
    } else if (a.is_array()) {
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) check_json_close(a[i], b[i], tol, path + "[" + std::to_string(i) + "]");
    } else {
        CHECK(a == b);
    }
}

std::string small_spec(const fs::path& dir) {
    const fs::path p = dir / "spec.json";
    covnli::write_file_atomic(p, R"({"seed": 3, "sizes": {"train": 90, "dev": 45, "ood_glockner": 20, "ood_sick": 21}})");
    return p.string();
}

std::string small_config(const fs::path& dir) {
    const fs::path p = dir / "config.json";
    covnli::write_file_atomic(
        p, R"({"seed": 5, "max_epochs": 3, "model": {"d": 16, "d_bigram": 8, "hidden": 12}, "coverage": {"positions": true}})");
    return p.string();
}

}  // namespace

TEST_CASE("cli: gen is reproducible and writes a manifest") {
    const fs::path dir = scratch("gen");
    const std::string spec = small_spec(dir);
    REQUIRE(cli("gen --spec " + spec + " --out " + (dir / "a").string()).code == 0);
    REQUIRE(cli("gen --spec " + spec + " --out " + (dir / "b").string()).code == 0);
    for (const char* f : {"train.jsonl", "dev.jsonl", "ood_glockner.jsonl", "ood_sick.jsonl", "manifest.json"})
        CHECK(covnli::read_file(dir / "a" / f) == covnli::read_file(dir / "b" / f));
    const json m = json::parse(covnli::read_file(dir / "a" / "manifest.json"));
    CHECK(m.at("splits").size() == 4);
    CHECK(cli("gen --spec " + spec + " --seed 4 --out " + (dir / "c").string()).code == 0);
    CHECK(covnli::read_file(dir / "a" / "train.jsonl") != covnli::read_file(dir / "c" / "train.jsonl"));
}

TEST_CASE("cli: train then eval reproduces the report") {
    const fs::path dir = scratch("train");
    REQUIRE(cli("gen --spec " + small_spec(dir) + " --out " + (dir / "data").string()).code == 0);
    const std::string cfg = small_config(dir);
    const Run tr = cli("train --config " + cfg + " --data " + (dir / "data").string() + " --out " + (dir / "run").string());
    REQUIRE(tr.code == 0);
    CHECK(tr.out.find("ood_glockner") != std::string::npos);
    const json report = json::parse(covnli::read_file(dir / "run" / "report.json"));
    CHECK(fs::exists(dir / "run" / "timing.json"));

    const Run again = cli("train --config " + cfg + " --data " + (dir / "data").string() + " --out " + (dir / "run2").string());
    REQUIRE(again.code == 0);
    check_json_close(report, json::parse(covnli::read_file(dir / "run2" / "report.json")), 1e-9);
    CHECK(covnli::read_file(dir / "run" / "checkpoint.json") == covnli::read_file(dir / "run2" / "checkpoint.json"));

    const Run ev = cli("eval --checkpoint " + (dir / "run" / "checkpoint.json").string() + " --data " +
                       (dir / "data").string() + " --out " + (dir / "eval").string());
    REQUIRE(ev.code == 0);
    const json e = json::parse(covnli::read_file(dir / "eval" / "eval.json"));
    for (const auto& [split, acc] : report.at("accuracy").items())
        CHECK(std::abs(e.at("accuracy").at(split).get<double>() - acc.get<double>()) <= 1e-9);

    const Run wrong_seed = cli("eval --checkpoint " + (dir / "run" / "checkpoint.json").string() + " --seed 99 --data " +
                               (dir / "data").string() + " --out " + (dir / "eval2").string());
    CHECK(wrong_seed.code == 1);
}

TEST_CASE("cli: dump-coverage prints positions for a pair") {
    const fs::path dir = scratch("dump");
    const Run r = cli(R"(dump-coverage --seed 1 --pair '{"premise": "the man spoke to the lady", "hypothesis": "the lady talked to the man"}')");
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    REQUIRE(j.at("tokens").size() == 6);
    CHECK(j.at("tokens")[1].at("premise_token") == "lady");
    CHECK(j.at("tokens")[1].at("rawQ") == 5);
    const Run oov = cli(R"(dump-coverage --seed 1 --pair '{"premise": "the zebra", "hypothesis": "the man"}')");
    CHECK(oov.code == 1);
    CHECK(oov.err.find("zebra") != std::string::npos);
}

TEST_CASE("cli: usage errors exit 1 with a JSON message") {
    const Run r = cli("train --bogus");
    CHECK(r.code == 1);
    CHECK(json::parse(r.err).at("error") == "usage");
    CHECK(cli("").code == 1);
    const fs::path dir = scratch("bad");
    covnli::write_file_atomic(dir / "c.json", R"({"seed": 1, "learning_rate": 3})");
    const Run bad = cli("train --config " + (dir / "c.json").string() + " --out " + (dir / "o").string());
    CHECK(bad.code == 1);
    CHECK(json::parse(bad.err).at("error") == "config");
    CHECK(cli("train --seed 1 --out " + (dir / "o").string()).code == 1);  // no data
}

TEST_CASE("cli: gradcheck passes and reports every op") {
    const Run r = cli("gradcheck --scope ops --points 5");
    CHECK(r.code == 0);
    CHECK(r.out.find("matmul") != std::string::npos);
    CHECK(r.out.find("FAIL") == std::string::npos);
}

#endif
