#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ancov/model.hpp"

namespace ancov {

// Raised on malformed configs, unknown keys, or schema violations.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Flat key = value run description. Every key is schema-checked; unknown keys
// are rejected. See README for the full key list.
struct RunConfig {
    // model.*
    std::string clones_kind = "constant";  // constant | piecewise
    double clones_rate = 1.0;
    std::vector<double> clones_breaks, clones_rates;
    std::string anchors_kind = "constant";
    double anchors_rate = 1.0;
    std::vector<double> anchors_breaks, anchors_rates;
    std::string lengths_kind = "deterministic";  // deterministic|exponential|uniform|atoms
    double lengths_param1 = 1.0;
    double lengths_param2 = 0.0;
    std::vector<double> lengths_values, lengths_probs;

    // run.*
    double G = 100.0;
    std::uint64_t reps = 1000;
    std::uint64_t seed = 1;
    int threads = 0;  // 0: use ANCOV_THREADS or 1
    double z = 0.0;
    double zp = 0.5;
    double x = 0.0;
    double u = 0.0;
    double n = 1.0;
    std::vector<double> grid;

    // quad.*
    QuadConfig quad;

    // exact.* / verify.* / scan.* / simulate.* / bounds.*
    std::vector<std::string> exact_quantities;
    std::vector<std::string> verify_tests;
    std::string scan_parameter;
    std::vector<double> scan_values;
    std::string scan_quantity;
    std::string simulate_dump_prefix;
    std::vector<double> bounds_kappa;  // lo,hi for the envelope computation
    std::vector<double> bounds_alpha;

    // output.*
    std::string output_format = "csv";  // csv | json
    std::string output_path;            // empty: stdout

    ModelSpec to_model() const;
    int effective_threads() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config_file(const std::string& path);
std::string serialize_config(const RunConfig& config);

}  // namespace ancov
