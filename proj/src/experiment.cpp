#include "rsb/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "rsb/replay.hpp"

namespace rsb {

// ---------------------------------------------------------------------------
// Names
// ---------------------------------------------------------------------------

std::string to_string(Method m) {
    switch (m) {
        case Method::Offline: return "offline";
        case Method::Nn: return "nn";
        case Method::Cb0: return "cb0";
        case Method::Cb1: return "cb1";
        case Method::Sb: return "sb";
        case Method::Rsb: return "rsb";
    }
    return "unknown";
}

Method parse_method(const std::string& s) {
    for (Method m : {Method::Offline, Method::Nn, Method::Cb0, Method::Cb1, Method::Sb, Method::Rsb}) {
        if (to_string(m) == s) return m;
    }
    throw ConfigError("unknown method '" + s + "'");
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string normalize_key(std::string key) {
    std::replace(key.begin(), key.end(), '_', '-');
    return key;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::logic_error&) {
        throw ConfigError("invalid number for '" + key + "': '" + v + "'");
    }
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
        throw ConfigError("invalid non-negative integer for '" + key + "': '" + v + "'");
    try {
        return std::stoull(v);
    } catch (const std::logic_error&) {
        throw ConfigError("integer out of range for '" + key + "': '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("invalid boolean for '" + key + "': '" + v + "'");
}

template <typename T>
std::string join(const std::vector<T>& items) {
    std::ostringstream os;
    for (std::size_t i = 0; i < items.size(); ++i) os << (i ? "," : "") << items[i];
    return os.str();
}

std::string fmt(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "dataset", "schedule", "schedule-file", "methods", "seeds", "out", "threads",
        "subconcepts", "dim", "stddev", "separation", "offset", "n-train", "n-test",
        "batches", "drift-positions", "drift-subconcepts",
        "c-min", "c-max", "b-max", "omega-max", "n-s", "tau-s", "alpha-r", "beta",
        "sigma-k", "switch-fraction", "cadence",
        "cb-b-max", "cb-draws",
        "hidden", "lr", "adam", "epochs", "minibatch"};
    return keys;
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

void ExperimentConfig::validate() const {
    rsb.validate();
    if (methods.empty()) throw ConfigError("at least one method is required");
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    if (threads == 0) throw ConfigError("threads must be positive");
    if (cb_b_max == 0) throw ConfigError("cb-b-max must be positive");
    if (cb_draws_per_label == 0) throw ConfigError("cb-draws must be positive");
    if (out_dir.empty()) throw ConfigError("output directory must not be empty");
    if (dataset != "synthetic" && !uses_file_dataset())
        throw ConfigError("dataset must be 'synthetic' or 'file:PATH'");
    if (uses_file_dataset() && !std::filesystem::exists(dataset_path()))
        throw ConfigError("feature file not found: " + dataset_path());
    if (schedule_file && !std::filesystem::exists(*schedule_file))
        throw ConfigError("schedule file not found: " + *schedule_file);
    if (!uses_file_dataset()) {
        GaussianStreamSpec probe = synthetic;
        probe.validate();
    }
    ClassifierSpec probe = classifier;
    probe.input_dim = 1;
    probe.validate();
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config file not found: " + path);
    std::map<std::string, std::string> values;
    std::string line;
    std::size_t line_no = 0;
    const auto& keys = config_keys();
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        const std::string row = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (row.empty()) continue;
        const auto eq = row.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
        const std::string key = normalize_key(trim(row.substr(0, eq)));
        if (std::find(keys.begin(), keys.end(), key) == keys.end())
            throw ConfigError(path + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
        values[key] = trim(row.substr(eq + 1));
    }
    return values;
}

ExperimentConfig config_from_values(const std::map<std::string, std::string>& values) {
    ExperimentConfig cfg;
    bool c_min_given = false;
    if (const char* env = std::getenv(kOutDirEnv); env && *env) cfg.out_dir = env;

    for (const auto& [raw_key, v] : values) {
        const std::string key = normalize_key(raw_key);
        if (key == "dataset") cfg.dataset = v;
        else if (key == "schedule") {
            if (v == "stationary") cfg.schedule = ScheduleKind::Stationary;
            else if (v == "drift") cfg.schedule = ScheduleKind::Drift;
            else throw ConfigError("schedule must be 'stationary' or 'drift'");
        } else if (key == "schedule-file") {
            if (v.empty()) cfg.schedule_file.reset();
            else cfg.schedule_file = v;
        } else if (key == "methods") {
            cfg.methods.clear();
            for (const auto& m : split_list(v)) {
                const Method parsed = parse_method(m);
                if (std::find(cfg.methods.begin(), cfg.methods.end(), parsed) == cfg.methods.end())
                    cfg.methods.push_back(parsed);
            }
        } else if (key == "seeds") {
            cfg.seeds.clear();
            for (const auto& s : split_list(v)) cfg.seeds.push_back(to_uint(key, s));
        } else if (key == "out") cfg.out_dir = v;
        else if (key == "threads") cfg.threads = to_uint(key, v);
        else if (key == "subconcepts") cfg.synthetic.n_subconcepts = to_uint(key, v);
        else if (key == "dim") cfg.synthetic.dim = to_uint(key, v);
        else if (key == "stddev") cfg.synthetic.stddev = to_double(key, v);
        else if (key == "separation") cfg.synthetic.mean_separation = to_double(key, v);
        else if (key == "offset") cfg.synthetic.mean_offset = to_double(key, v);
        else if (key == "n-train") cfg.synthetic.train_per_subconcept = to_uint(key, v);
        else if (key == "n-test") cfg.synthetic.test_per_subconcept = to_uint(key, v);
        else if (key == "batches") cfg.drift.total_batches = to_uint(key, v);
        else if (key == "drift-positions") {
            cfg.drift.positions.clear();
            for (const auto& s : split_list(v)) cfg.drift.positions.push_back(to_uint(key, s));
        } else if (key == "drift-subconcepts") {
            cfg.drift.subconcepts.clear();
            for (const auto& s : split_list(v)) cfg.drift.subconcepts.push_back(static_cast<int>(to_uint(key, s)));
        } else if (key == "c-min") {
            cfg.rsb.c_min = static_cast<int>(to_uint(key, v));
            c_min_given = true;
        } else if (key == "c-max") cfg.rsb.c_max = static_cast<int>(to_uint(key, v));
        else if (key == "b-max") cfg.rsb.b_max = to_uint(key, v);
        else if (key == "omega-max") cfg.rsb.omega_max = to_uint(key, v);
        else if (key == "n-s") cfg.rsb.n_s = to_uint(key, v);
        else if (key == "tau-s") cfg.rsb.tau_s = to_double(key, v);
        else if (key == "alpha-r") cfg.rsb.alpha_r = to_double(key, v);
        else if (key == "beta") cfg.rsb.beta = to_double(key, v);
        else if (key == "sigma-k") cfg.rsb.sigma_k = to_double(key, v);
        else if (key == "switch-fraction") cfg.rsb.switch_fraction = to_double(key, v);
        else if (key == "cadence") {
            if (v == "global") cfg.rsb.cadence = MaintenanceCadence::Global;
            else if (v == "per-centroid") cfg.rsb.cadence = MaintenanceCadence::PerCentroid;
            else throw ConfigError("cadence must be 'global' or 'per-centroid'");
        } else if (key == "cb-b-max") cfg.cb_b_max = to_uint(key, v);
        else if (key == "cb-draws") cfg.cb_draws_per_label = to_uint(key, v);
        else if (key == "hidden") {
            cfg.classifier.hidden_sizes.clear();
            if (v != "none") {
                for (const auto& s : split_list(v)) cfg.classifier.hidden_sizes.push_back(to_uint(key, s));
            }
        } else if (key == "lr") cfg.classifier.learning_rate = to_double(key, v);
        else if (key == "adam") cfg.classifier.adaptive_moments = to_bool(key, v);
        else if (key == "epochs") cfg.classifier.epochs_per_batch = to_uint(key, v);
        else if (key == "minibatch") cfg.classifier.minibatch_size = to_uint(key, v);
        else throw ConfigError("unknown key '" + key + "'");
    }
    // c_min defaults to half of c_max.
    if (!c_min_given) cfg.rsb.c_min = std::max(1, (cfg.rsb.c_max + 1) / 2);
    cfg.validate();
    return cfg;
}

ExperimentConfig parse_config(const std::vector<std::string>& args) {
    CLI::App app{"rsb run"};
    app.set_help_flag();
    std::map<std::string, std::string> flag_values;
    std::map<std::string, CLI::Option*> flags;
    for (const auto& key : config_keys()) flags[key] = app.add_option("--" + key, flag_values[key]);
    std::string config_path;
    auto* config_opt = app.add_option("--config", config_path);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        throw ConfigError(std::string("usage error: ") + e.what());
    }

    std::map<std::string, std::string> values;
    if (config_opt->count() > 0) values = read_config_file(config_path);
    for (const auto& [key, opt] : flags) {
        if (opt->count() > 0) values[key] = flag_values[key];
    }
    return config_from_values(values);
}

std::string to_text(const ExperimentConfig& cfg) {
    std::vector<std::string> methods;
    for (Method m : cfg.methods) methods.push_back(to_string(m));
    std::ostringstream os;
    os << "dataset = " << cfg.dataset << '\n'
       << "schedule = " << (cfg.schedule == ScheduleKind::Stationary ? "stationary" : "drift") << '\n'
       << "schedule-file = " << cfg.schedule_file.value_or("") << '\n'
       << "methods = " << join(methods) << '\n'
       << "seeds = " << join(cfg.seeds) << '\n'
       << "out = " << cfg.out_dir << '\n'
       << "threads = " << cfg.threads << '\n'
       << "subconcepts = " << cfg.synthetic.n_subconcepts << '\n'
       << "dim = " << cfg.synthetic.dim << '\n'
       << "stddev = " << fmt(cfg.synthetic.stddev) << '\n'
       << "separation = " << fmt(cfg.synthetic.mean_separation) << '\n'
       << "offset = " << fmt(cfg.synthetic.mean_offset) << '\n'
       << "n-train = " << cfg.synthetic.train_per_subconcept << '\n'
       << "n-test = " << cfg.synthetic.test_per_subconcept << '\n'
       << "batches = " << cfg.drift.total_batches << '\n'
       << "drift-positions = " << join(cfg.drift.positions) << '\n'
       << "drift-subconcepts = " << join(cfg.drift.subconcepts) << '\n'
       << "c-min = " << cfg.rsb.c_min << '\n'
       << "c-max = " << cfg.rsb.c_max << '\n'
       << "b-max = " << cfg.rsb.b_max << '\n'
       << "omega-max = " << cfg.rsb.omega_max << '\n'
       << "n-s = " << cfg.rsb.n_s << '\n'
       << "tau-s = " << fmt(cfg.rsb.tau_s) << '\n'
       << "alpha-r = " << fmt(cfg.rsb.alpha_r) << '\n'
       << "beta = " << fmt(cfg.rsb.beta) << '\n'
       << "sigma-k = " << fmt(cfg.rsb.sigma_k) << '\n'
       << "switch-fraction = " << fmt(cfg.rsb.switch_fraction) << '\n'
       << "cadence = " << (cfg.rsb.cadence == MaintenanceCadence::Global ? "global" : "per-centroid") << '\n'
       << "cb-b-max = " << cfg.cb_b_max << '\n'
       << "cb-draws = " << cfg.cb_draws_per_label << '\n'
       << "hidden = " << (cfg.classifier.hidden_sizes.empty() ? "none" : join(cfg.classifier.hidden_sizes)) << '\n'
       << "lr = " << fmt(cfg.classifier.learning_rate) << '\n'
       << "adam = " << (cfg.classifier.adaptive_moments ? "true" : "false") << '\n'
       << "epochs = " << cfg.classifier.epochs_per_batch << '\n'
       << "minibatch = " << cfg.classifier.minibatch_size << '\n';
    return os.str();
}

std::string config_hash(const ExperimentConfig& cfg) {
    // Output location and thread count do not change results.
    ExperimentConfig canon = cfg;
    canon.out_dir = "-";
    canon.threads = 1;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_text(canon))));
    return buf;
}

GaussianStreamSpec read_gaussian_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("spec file not found: " + path);
    GaussianStreamSpec spec;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        const std::string row = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (row.empty()) continue;
        const auto eq = row.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
        const std::string key = normalize_key(trim(row.substr(0, eq)));
        const std::string v = trim(row.substr(eq + 1));
        if (key == "subconcepts") spec.n_subconcepts = to_uint(key, v);
        else if (key == "dim") spec.dim = to_uint(key, v);
        else if (key == "stddev") spec.stddev = to_double(key, v);
        else if (key == "separation") spec.mean_separation = to_double(key, v);
        else if (key == "offset") spec.mean_offset = to_double(key, v);
        else if (key == "n-train") spec.train_per_subconcept = to_uint(key, v);
        else if (key == "n-test") spec.test_per_subconcept = to_uint(key, v);
        else if (key == "seed") spec.seed = to_uint(key, v);
        else throw ConfigError(path + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    spec.validate();
    return spec;
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

std::optional<double> ExperimentResult::median_omega(Method m) const {
    std::vector<double> values;
    for (const auto& r : records) {
        if (r.method != to_string(m)) continue;
        try {
            values.push_back(r.omega());
        } catch (const InvalidValueError&) {
        }
    }
    if (values.empty()) return std::nullopt;
    return median(values);
}

const MetricsRecord* ExperimentResult::record(Method m, std::uint64_t seed) const {
    for (const auto& r : records) {
        if (r.method == to_string(m) && r.seed == seed) return &r;
    }
    return nullptr;
}

double ExperimentResult::seed_seconds(std::uint64_t seed) const {
    double total = 0.0;
    for (const auto& c : cells) {
        if (c.seed == seed) total += c.seconds;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

namespace {

// Everything a cell of one seed shares. Immutable once built.
struct PreparedSeed {
    std::uint64_t seed = 0;
    SubconceptDataset data;
    std::optional<StreamSchedule> schedule;
    std::vector<LabeledInstance> warmup;
    std::vector<StreamBatch> batches;
    std::string error;
};

PreparedSeed prepare_seed(const ExperimentConfig& cfg, std::uint64_t seed,
                          const SubconceptDataset* file_data) {
    PreparedSeed p;
    p.seed = seed;
    if (file_data) {
        p.data = *file_data;
    } else {
        GaussianStreamSpec spec = cfg.synthetic;
        spec.seed = Rng::substream(seed, "data").engine()();
        p.data = generate_gaussian(spec);
    }
    const std::size_t n = p.data.subconcepts.size();
    if (cfg.schedule_file) {
        p.schedule = load_schedule(*cfg.schedule_file);
    } else if (cfg.schedule == ScheduleKind::Stationary) {
        p.schedule = build_stationary_schedule(n);
    } else {
        p.schedule = build_drift_schedule(n, cfg.drift);
    }
    if (p.schedule->max_subconcept() >= static_cast<int>(n))
        throw ConfigError("schedule refers to subconcepts missing from the dataset");

    Rng schedule_rng = Rng::substream(seed, "schedule");
    p.warmup = warmup_batch(*p.schedule, p.data, schedule_rng);
    for (std::size_t t = 0; t < p.schedule->size(); ++t)
        p.batches.push_back(next_batch(*p.schedule, p.data, t, schedule_rng));
    return p;
}

std::unique_ptr<ReplayMemory> make_memory(const ExperimentConfig& cfg, Method m, std::uint64_t seed) {
    switch (m) {
        case Method::Rsb: return std::make_unique<RsbReplay>(cfg.rsb, seed);
        case Method::Sb: return std::make_unique<StaticCentroidReplay>(cfg.rsb, seed);
        case Method::Cb0: return std::make_unique<ClassBufferReplay>(cfg.cb_b_max, 0.0, cfg.cb_draws_per_label, seed);
        case Method::Cb1: return std::make_unique<ClassBufferReplay>(cfg.cb_b_max, 1.0, cfg.cb_draws_per_label, seed);
        case Method::Nn:
        case Method::Offline: return nullptr;
    }
    return nullptr;
}

void run_offline_cell(const ExperimentConfig& cfg, const PreparedSeed& p, CellResult& cell) {
    ClassifierSpec spec = cfg.classifier;
    spec.input_dim = p.data.dim;
    Rng rng = Rng::substream(p.seed, "offline");
    for (std::size_t t = 0; t < p.batches.size(); ++t) {
        const auto train = presented_training_set(*p.schedule, p.data, t);
        const Mlp model = fit_offline(spec, train, rng);
        const auto acc = evaluate_batch([&](const FeatureVector& x) { return model.classify(x); },
                                        p.batches[t].pool);
        cell.accuracy.push_back(acc.overall);
        cell.per_subconcept.push_back(acc.per_subconcept);
    }
}

void run_method_cell(const ExperimentConfig& cfg, const PreparedSeed& p, CellResult& cell) {
    ClassifierSpec spec = cfg.classifier;
    spec.input_dim = p.data.dim;
    Rng learner_rng = Rng::substream(p.seed, "learner");
    Rng replay_rng = Rng::substream(p.seed, "replay");
    const std::uint64_t memory_seed = Rng::substream(p.seed, "memory").engine()();

    Mlp model(spec, learner_rng);
    auto memory = make_memory(cfg, cell.method, memory_seed);
    const bool replay = memory != nullptr;

    if (!p.warmup.empty())
        cell.training.push_back(fit_batch(model, p.warmup, memory.get(), replay, learner_rng, replay_rng, 0));
    for (std::size_t t = 0; t < p.batches.size(); ++t) {
        cell.training.push_back(
            fit_batch(model, p.batches[t].train, memory.get(), replay, learner_rng, replay_rng, t));
        const auto acc = evaluate_batch([&](const FeatureVector& x) { return model.classify(x); },
                                        p.batches[t].pool);
        cell.accuracy.push_back(acc.overall);
        cell.per_subconcept.push_back(acc.per_subconcept);
    }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
    cfg.validate();
    auto log = [&](const std::string& msg) {
        if (options.log) options.log(msg);
    };

    std::optional<SubconceptDataset> file_data;
    if (cfg.uses_file_dataset()) file_data = load_features(cfg.dataset_path());

    std::vector<PreparedSeed> prepared;
    for (std::uint64_t seed : cfg.seeds) {
        try {
            prepared.push_back(prepare_seed(cfg, seed, file_data ? &*file_data : nullptr));
        } catch (const std::exception& e) {
            PreparedSeed failed;
            failed.seed = seed;
            failed.error = e.what();
            prepared.push_back(std::move(failed));
        }
    }

    // Offline runs once per seed whether or not it is reported.
    struct Job {
        std::size_t seed_index;
        Method method;
    };
    std::vector<Job> jobs;
    for (std::size_t s = 0; s < prepared.size(); ++s) {
        jobs.push_back({s, Method::Offline});
        for (Method m : cfg.methods) {
            if (m != Method::Offline) jobs.push_back({s, m});
        }
    }

    std::vector<CellResult> cells(jobs.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto worker = [&] {
        for (std::size_t j = next++; j < jobs.size(); j = next++) {
            const Job& job = jobs[j];
            const PreparedSeed& p = prepared[job.seed_index];
            CellResult& cell = cells[j];
            cell.method = job.method;
            cell.seed = p.seed;
            const auto start = std::chrono::steady_clock::now();
            try {
                if (!p.error.empty()) throw Error(p.error);
                if (job.method == Method::Offline) run_offline_cell(cfg, p, cell);
                else run_method_cell(cfg, p, cell);
                cell.ok = true;
            } catch (const std::exception& e) {
                cell.ok = false;
                cell.error = e.what();
            }
            cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            std::lock_guard lock(log_mutex);
            log(to_string(cell.method) + " seed " + std::to_string(cell.seed) +
                (cell.ok ? " done in " + fmt(cell.seconds) + "s" : " FAILED: " + cell.error));
        }
    };
    const std::size_t n_threads = std::min(cfg.threads, jobs.size());
    std::vector<std::thread> pool;
    for (std::size_t i = 1; i < n_threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    ExperimentResult result;
    result.cells = cells;
    const bool report_offline =
        std::find(cfg.methods.begin(), cfg.methods.end(), Method::Offline) != cfg.methods.end();
    std::size_t ok_cells = 0, reported_cells = 0;
    for (std::size_t s = 0; s < prepared.size(); ++s) {
        const CellResult* offline = nullptr;
        for (std::size_t j = 0; j < jobs.size(); ++j) {
            if (jobs[j].seed_index == s && jobs[j].method == Method::Offline) offline = &cells[j];
        }
        for (Method m : cfg.methods) {
            for (std::size_t j = 0; j < jobs.size(); ++j) {
                if (jobs[j].seed_index != s || jobs[j].method != m) continue;
                const CellResult& c = cells[j];
                ++reported_cells;
                if (!c.ok) {
                    result.failures.push_back({to_string(m), c.seed, c.error});
                    continue;
                }
                ++ok_cells;
                MetricsRecord r{to_string(m), c.seed, c.accuracy, c.per_subconcept, {}};
                if (offline && offline->ok) r.offline = offline->accuracy;
                result.records.push_back(std::move(r));
            }
        }
        if (!report_offline && offline && !offline->ok)
            result.failures.push_back({to_string(Method::Offline), offline->seed, offline->error});
        if (prepared[s].schedule) result.batches = prepared[s].schedule->size();
    }
    result.exit_code = (reported_cells > 0 && ok_cells == 0) ? 1 : 0;

    if (options.write_reports) {
        ReportMeta meta{config_hash(cfg), cfg.seeds, result.failures};
        result.written = emit_report(result.records, cfg.out_dir, meta);
    }
    return result;
}

}  // namespace rsb
