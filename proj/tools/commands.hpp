#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace covnli::cli {

/// Bad flags, configs or inputs. Exit code 1.
class UserError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

struct GenArgs : Common {
    std::string spec;
};

struct RunArgs : Common {
    std::string data;
};

struct EvalArgs : RunArgs {
    std::string checkpoint;
};

struct CompareArgs : RunArgs {
    std::string spec;
    std::size_t seeds = 5;
};

struct GradcheckArgs : Common {
    std::string scope = "ops";
    std::size_t points = 100;
};

struct DumpArgs : Common {
    std::string pair;
    std::string checkpoint;
    std::string layer;
};

int cmd_gen(const GenArgs& a);
int cmd_train(const RunArgs& a);
int cmd_eval(const EvalArgs& a);
int cmd_grid(const RunArgs& a);
int cmd_compare(const CompareArgs& a);
int cmd_gradcheck(const GradcheckArgs& a);
int cmd_dump_coverage(const DumpArgs& a);

}  // namespace covnli::cli
