#pragma once

/// @file io.hpp
/// @brief Solution files and JSON artifacts.
///
/// A solution file is CSV with one leading comment line holding a JSON header:
///
///   # {"format":"sovdebt-solution","version":1,"n":801,...}
///   x,V,dV,p,dp,u_star,v_star,res_V,res_p
///   0,0,...
///
/// Numbers are written with 17 significant digits, so read_solution returns
/// bit-identical columns. JSON artifacts are returned as text; keys are
/// emitted in a fixed order so that reruns are byte-identical.

#include "sovdebt/analysis.hpp"
#include "sovdebt/model.hpp"
#include "sovdebt/montecarlo.hpp"
#include "sovdebt/solver.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

namespace sovdebt {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Model parameters recorded in a solution header.
struct SolutionHeader {
    ModelParams params;
    double alpha_L = 0.0;
    double alpha_c = 0.0;
    double kappa = 0.0;
    double q = 0.0;
    double m = 0.0;
    double epsilon = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

struct SolutionFile {
    SolutionHeader header;
    Solution solution;
};

void write_solution(std::ostream& out, const Solution& solution, const Model& model);
void write_solution(const std::filesystem::path& path, const Solution& solution, const Model& model);

SolutionFile read_solution(std::istream& in, const std::string& source = "<solution>");
SolutionFile read_solution(const std::filesystem::path& path);

/// Empty when the header matches the model, otherwise a description of the
/// first mismatching parameter.
std::string header_mismatch(const SolutionHeader& header, const Model& model);

std::string to_json(const BoundsReport& bounds, const BoundCurves* curves = nullptr);
std::string to_json(const VerificationReport& report);
std::string to_json(const RegimeClassification& classification);
std::string to_json(const ContinuationTrace& trace);
std::string to_json(const McResult& result, const SimConfig& sim);
std::string to_json(const DeviationResult& result, const Perturbation& perturbation);

/// Writes `text` plus a trailing newline, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace sovdebt
