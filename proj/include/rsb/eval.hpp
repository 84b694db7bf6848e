#ifndef RSB_EVAL_HPP
#define RSB_EVAL_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rsb/streams.hpp"
#include "rsb/types.hpp"

namespace rsb {

using Predictor = std::function<Label(const FeatureVector&)>;

struct BatchAccuracy {
    double overall = 0.0;
    std::map<int, double> per_subconcept;
};

// Throws InvalidValueError on an empty pool.
BatchAccuracy evaluate_batch(const Predictor& predict, const EvaluationPool& pool);

// Normalized average accuracy: mean of alpha_t / offline_t.
// Throws InvalidValueError on length mismatch, empty input or a
// non-positive offline accuracy.
double omega_all(std::span<const double> alphas, std::span<const double> offline_alphas);

struct MetricsRecord {
    std::string method;
    std::uint64_t seed = 0;
    std::vector<double> accuracy;                         // alpha_t
    std::vector<std::map<int, double>> per_subconcept;    // parallel to accuracy
    std::vector<double> offline;                          // alpha_offline,t

    std::size_t batches() const { return accuracy.size(); }
    double omega() const { return omega_all(accuracy, offline); }
};

struct CellFailure {
    std::string method;
    std::uint64_t seed = 0;
    std::string message;
};

struct ReportMeta {
    std::string config_hash;
    std::vector<std::uint64_t> seeds;
    std::vector<CellFailure> failures;
};

// Rows: batch,method,accuracy,subconcept,subconcept_accuracy. The overall row
// of a batch leaves the two subconcept fields empty; it is followed by one row
// per subconcept.
void write_metrics_csv(std::span<const MetricsRecord> records, std::ostream& out);
// Parses rows back into records (offline accuracies are not part of the CSV).
std::vector<MetricsRecord> read_metrics_csv(std::istream& in, std::uint64_t seed = 0);

// Writes metrics_seed<S>.csv for every seed and summary.json into dir.
// Returns the written paths.
std::vector<std::string> emit_report(std::span<const MetricsRecord> records, const std::string& dir,
                                     const ReportMeta& meta);

double median(std::vector<double> values);

}  // namespace rsb

#endif  // RSB_EVAL_HPP
