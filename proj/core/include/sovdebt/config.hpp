#pragma once

/// @file config.hpp
/// @brief INI-style run configuration: [model], [costs], [risk], [salvage],
/// [solver], [sim], [output]. Unknown sections or keys are errors; every
/// message carries the offending line. Schema: docs/config.md.

#include "sovdebt/model.hpp"
#include "sovdebt/montecarlo.hpp"
#include "sovdebt/solver.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sovdebt {

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& source, int line, const std::string& message);

    /// 0 when the problem is not tied to a single line.
    int line() const noexcept { return line_; }

private:
    int line_;
};

struct RunConfig {
    Model model;
    SolverConfig solver;
    SimConfig sim;
    std::string output_dir = "out";
};

/// Parses and validates (including the model assumptions) before returning.
RunConfig parse_config(std::string_view text, const std::string& source = "<config>");

RunConfig load_config(const std::filesystem::path& path);

/// Canonical text form; parse_config(to_config_text(c)) reproduces c.
std::string to_config_text(const RunConfig& config);

}  // namespace sovdebt
