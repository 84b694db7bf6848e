#ifndef RSB_EXPERIMENT_HPP
#define RSB_EXPERIMENT_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rsb/eval.hpp"
#include "rsb/learner.hpp"
#include "rsb/memory.hpp"
#include "rsb/streams.hpp"

namespace rsb {

enum class Method { Offline, Nn, Cb0, Cb1, Sb, Rsb };
std::string to_string(Method m);
Method parse_method(const std::string& s);

enum class ScheduleKind { Stationary, Drift };

// Environment variable holding the default output directory.
inline constexpr const char* kOutDirEnv = "RSB_OUT_DIR";

struct ExperimentConfig {
    // "synthetic" or "file:<path>"
    std::string dataset = "synthetic";
    GaussianStreamSpec synthetic{};  // seed is derived per run seed
    ScheduleKind schedule = ScheduleKind::Stationary;
    std::optional<std::string> schedule_file;
    DriftLayout drift{};

    std::vector<Method> methods{Method::Offline, Method::Nn, Method::Cb0,
                                Method::Cb1, Method::Sb, Method::Rsb};
    RsbConfig rsb{};
    std::size_t cb_b_max = 2000;
    std::size_t cb_draws_per_label = 10;
    ClassifierSpec classifier{};  // input_dim taken from the dataset

    std::vector<std::uint64_t> seeds{1};
    std::string out_dir = "rsb_out";
    std::size_t threads = 1;

    bool uses_file_dataset() const { return dataset.rfind("file:", 0) == 0; }
    std::string dataset_path() const { return dataset.substr(5); }

    // Throws ConfigError.
    void validate() const;
};

// Canonical flat key-value rendering; parse_config of this text (as a config
// file) reproduces the config.
std::string to_text(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

// Flat key-value text: `key = value` per line, '#' comments. Keys use the
// flag spelling without the leading dashes ('_' and '-' are equivalent).
std::map<std::string, std::string> read_config_file(const std::string& path);

// Parses run flags (without the program or subcommand name). A --config file
// is applied first, explicit flags override it. Throws ConfigError.
ExperimentConfig parse_config(const std::vector<std::string>& args);
ExperimentConfig config_from_values(const std::map<std::string, std::string>& values);
const std::vector<std::string>& config_keys();

// Synthetic dataset spec for gen-data: flat key-value text with keys
// subconcepts, dim, stddev, separation, offset, n-train, n-test, seed.
GaussianStreamSpec read_gaussian_spec(const std::string& path);

struct CellResult {
    Method method = Method::Rsb;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    double seconds = 0.0;
    std::vector<double> accuracy;
    std::vector<std::map<int, double>> per_subconcept;
    std::vector<TrainRecord> training;
};

struct ExperimentResult {
    int exit_code = 0;
    std::vector<MetricsRecord> records;  // successful method cells, with offline attached
    std::vector<CellFailure> failures;
    std::vector<CellResult> cells;       // every cell, offline included
    std::vector<std::string> written;
    std::size_t batches = 0;

    // Median omega over seeds, nullopt when no seed produced a value.
    std::optional<double> median_omega(Method m) const;
    const MetricsRecord* record(Method m, std::uint64_t seed) const;
    // Sum of cell runtimes (single-core cost) for one seed.
    double seed_seconds(std::uint64_t seed) const;
};

struct RunOptions {
    bool write_reports = true;
    std::function<void(const std::string&)> log;  // progress lines, may be empty
};

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

}  // namespace rsb

#endif  // RSB_EXPERIMENT_HPP
