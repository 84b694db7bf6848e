#include "rsb/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace rsb {

namespace {

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

BatchAccuracy evaluate_batch(const Predictor& predict, const EvaluationPool& pool) {
    if (pool.empty()) throw InvalidValueError("evaluation pool is empty");
    std::map<int, std::pair<std::size_t, std::size_t>> tally;  // correct, total
    std::size_t correct = 0;
    for (const auto& inst : pool.instances) {
        const bool hit = predict(inst.features) == inst.label;
        auto& t = tally[inst.subconcept];
        t.first += hit ? 1 : 0;
        ++t.second;
        correct += hit ? 1 : 0;
    }
    BatchAccuracy acc;
    acc.overall = static_cast<double>(correct) / static_cast<double>(pool.instances.size());
    for (const auto& [sid, t] : tally)
        acc.per_subconcept[sid] = static_cast<double>(t.first) / static_cast<double>(t.second);
    return acc;
}

double omega_all(std::span<const double> alphas, std::span<const double> offline_alphas) {
    if (alphas.empty()) throw InvalidValueError("omega_all needs at least one batch");
    if (alphas.size() != offline_alphas.size())
        throw InvalidValueError("omega_all: accuracy and offline sequences differ in length");
    double sum = 0.0;
    for (std::size_t t = 0; t < alphas.size(); ++t) {
        if (!(offline_alphas[t] > 0.0))
            throw InvalidValueError("omega_all: offline accuracy at batch " + std::to_string(t) +
                                    " is not positive");
        sum += alphas[t] / offline_alphas[t];
    }
    return sum / static_cast<double>(alphas.size());
}

double median(std::vector<double> values) {
    if (values.empty()) throw InvalidValueError("median of an empty set");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

void write_metrics_csv(std::span<const MetricsRecord> records, std::ostream& out) {
    out << "batch,method,accuracy,subconcept,subconcept_accuracy\n";
    for (const auto& r : records) {
        for (std::size_t t = 0; t < r.accuracy.size(); ++t) {
            const std::string acc = format_double(r.accuracy[t]);
            out << t << ',' << r.method << ',' << acc << ",,\n";
            if (t < r.per_subconcept.size()) {
                for (const auto& [sid, a] : r.per_subconcept[t])
                    out << t << ',' << r.method << ',' << acc << ',' << sid << ',' << format_double(a) << '\n';
            }
        }
    }
}

std::vector<MetricsRecord> read_metrics_csv(std::istream& in, std::uint64_t seed) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line) || line != "batch,method,accuracy,subconcept,subconcept_accuracy")
        throw ParseError(line_no, "unexpected metrics header");
    std::vector<MetricsRecord> records;
    auto record_for = [&](const std::string& method) -> MetricsRecord& {
        for (auto& r : records) {
            if (r.method == method) return r;
        }
        records.push_back(MetricsRecord{method, seed, {}, {}, {}});
        return records.back();
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 5) throw ParseError(line_no, "metrics row needs 5 fields");
        try {
            const std::size_t t = std::stoul(cells[0]);
            MetricsRecord& r = record_for(cells[1]);
            if (cells[3].empty()) {
                if (t != r.accuracy.size()) throw ParseError(line_no, "batches out of order");
                r.accuracy.push_back(std::stod(cells[2]));
                r.per_subconcept.emplace_back();
            } else {
                if (t + 1 != r.accuracy.size()) throw ParseError(line_no, "subconcept row before its batch row");
                r.per_subconcept.back()[std::stoi(cells[3])] = std::stod(cells[4]);
            }
        } catch (const std::logic_error&) {
            throw ParseError(line_no, "malformed number");
        }
    }
    return records;
}

std::vector<std::string> emit_report(std::span<const MetricsRecord> records, const std::string& dir,
                                     const ReportMeta& meta) {
    if (records.empty() && meta.failures.empty()) throw InvalidValueError("nothing to report");
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory " + dir + ": " + ec.message());

    std::vector<std::string> written;
    std::set<std::uint64_t> seeds(meta.seeds.begin(), meta.seeds.end());
    for (const auto& r : records) seeds.insert(r.seed);

    for (std::uint64_t seed : seeds) {
        std::vector<MetricsRecord> subset;
        for (const auto& r : records) {
            if (r.seed == seed) subset.push_back(r);
        }
        const std::string path = (fs::path(dir) / ("metrics_seed" + std::to_string(seed) + ".csv")).string();
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot write " + path);
        write_metrics_csv(subset, out);
        if (!out) throw Error("failed writing " + path);
        written.push_back(path);
    }

    nlohmann::json summary;
    summary["config_hash"] = meta.config_hash;
    summary["seeds"] = std::vector<std::uint64_t>(seeds.begin(), seeds.end());
    summary["batches"] = records.empty() ? 0 : records.front().batches();
    summary["methods"] = nlohmann::json::object();
    std::map<std::string, std::vector<double>> omegas;
    for (const auto& r : records) {
        auto& m = summary["methods"][r.method];
        try {
            const double w = r.omega();
            m["omega_all"][std::to_string(r.seed)] = w;
            omegas[r.method].push_back(w);
        } catch (const InvalidValueError&) {
            m["omega_all"][std::to_string(r.seed)] = nullptr;
        }
    }
    for (auto& [method, values] : omegas) summary["methods"][method]["median_omega_all"] = median(values);
    summary["failures"] = nlohmann::json::array();
    for (const auto& f : meta.failures)
        summary["failures"].push_back({{"method", f.method}, {"seed", f.seed}, {"message", f.message}});

    const std::string path = (fs::path(dir) / "summary.json").string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << summary.dump(2) << '\n';
    if (!out) throw Error("failed writing " + path);
    written.push_back(path);
    return written;
}

}  // namespace rsb
