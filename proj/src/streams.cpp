#include "rsb/streams.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace rsb {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    parts.push_back(cur);
    return parts;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

template <typename T>
bool parse_number(const std::string& text, T& out) {
    const std::string t = trim(text);
    if (t.empty()) return false;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    if constexpr (std::is_floating_point_v<T>) {
        if (*first == '+') ++first;
    }
    const auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void shuffle_instances(std::vector<LabeledInstance>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.index(i)]);
}

}  // namespace

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

const Subconcept& SubconceptDataset::at(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= subconcepts.size())
        throw NotFoundError("unknown subconcept " + std::to_string(id));
    return subconcepts[static_cast<std::size_t>(id)];
}

void SubconceptDataset::validate() const {
    if (dim == 0) throw InvalidValueError("dataset dimension must be positive");
    for (std::size_t k = 0; k < subconcepts.size(); ++k) {
        const auto& s = subconcepts[k];
        if (s.id != static_cast<int>(k)) throw InvalidValueError("subconcept ids must be 0..k-1");
        if (s.train.empty() || s.test.empty())
            throw InvalidValueError("subconcept " + std::to_string(k) +
                                    " needs both train and test instances");
        for (const auto& x : s.train) validate_features(x, dim);
        for (const auto& x : s.test) validate_features(x, dim);
    }
}

void GaussianStreamSpec::validate() const {
    if (n_subconcepts < 1) throw ConfigError("need at least one subconcept");
    if (dim < 1) throw ConfigError("dim must be positive");
    if (!(stddev > 0.0)) throw ConfigError("stddev must be positive");
    if (!(mean_separation >= 0.0)) throw ConfigError("mean_separation must be non-negative");
    if (!std::isfinite(mean_offset)) throw ConfigError("mean_offset must be finite");
    if (train_per_subconcept < 1 || test_per_subconcept < 1)
        throw ConfigError("train and test sizes must be positive");
    if (!means.empty()) {
        if (means.size() != n_subconcepts) throw ConfigError("need one mean per subconcept");
        for (std::size_t a = 0; a < means.size(); ++a) {
            if (means[a].size() != dim) throw ConfigError("mean has wrong dimension");
            for (std::size_t b = 0; b < a; ++b) {
                if (means[a] == means[b]) throw ConfigError("subconcept means must be distinct");
            }
        }
    }
}

std::vector<FeatureVector> gaussian_means(const GaussianStreamSpec& spec) {
    spec.validate();
    if (!spec.means.empty()) return spec.means;
    Rng rng = Rng::substream(spec.seed, "means");
    // Typical pairwise distance of the draws is 1.5x the required minimum.
    const double spread = 1.5 * std::max(spec.mean_separation, 1.0) * spec.stddev /
                          std::sqrt(2.0 * static_cast<double>(spec.dim));
    const double offset = spec.mean_offset * spec.stddev;
    const double min_d2 = std::pow(spec.mean_separation * spec.stddev, 2);
    std::vector<FeatureVector> means;
    std::size_t attempts = 0;
    while (means.size() < spec.n_subconcepts) {
        if (++attempts > 100000)
            throw ConfigError("could not place subconcept means at the requested separation");
        FeatureVector m(spec.dim);
        for (auto& v : m) v = rng.normal(offset, spread);
        const bool ok = std::all_of(means.begin(), means.end(), [&](const FeatureVector& o) {
            return squared_distance(o, m) >= min_d2;
        });
        if (ok) means.push_back(std::move(m));
    }
    return means;
}

SubconceptDataset generate_gaussian(const GaussianStreamSpec& spec) {
    const auto means = gaussian_means(spec);
    Rng rng = Rng::substream(spec.seed, "samples");
    SubconceptDataset data;
    data.dim = spec.dim;
    auto draw = [&](const FeatureVector& mean) {
        FeatureVector x(spec.dim);
        for (std::size_t j = 0; j < spec.dim; ++j) x[j] = rng.normal(mean[j], spec.stddev);
        return x;
    };
    for (std::size_t k = 0; k < spec.n_subconcepts; ++k) {
        Subconcept s;
        s.id = static_cast<int>(k);
        for (std::size_t i = 0; i < spec.train_per_subconcept; ++i) s.train.push_back(draw(means[k]));
        for (std::size_t i = 0; i < spec.test_per_subconcept; ++i) s.test.push_back(draw(means[k]));
        data.subconcepts.push_back(std::move(s));
    }
    return data;
}

SubconceptDataset read_features(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    SubconceptDataset data;
    std::size_t k = 0;

    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) break;
    }
    if (trim(line).empty()) throw ParseError(line_no, "missing header");
    {
        std::istringstream hs(trim(line));
        std::string tok;
        bool have_dim = false, have_k = false;
        while (hs >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos) throw ParseError(line_no, "malformed header token '" + tok + "'");
            const std::string key = tok.substr(0, eq), value = tok.substr(eq + 1);
            std::size_t n = 0;
            if (!parse_number(value, n) || n == 0)
                throw ParseError(line_no, "header value for '" + key + "' must be a positive integer");
            if (key == "dim") {
                data.dim = n;
                have_dim = true;
            } else if (key == "subconcepts") {
                k = n;
                have_k = true;
            } else {
                throw ParseError(line_no, "unknown header key '" + key + "'");
            }
        }
        if (!have_dim || !have_k) throw ParseError(line_no, "header needs dim= and subconcepts=");
    }
    data.subconcepts.resize(k);
    for (std::size_t i = 0; i < k; ++i) data.subconcepts[i].id = static_cast<int>(i);

    while (std::getline(in, line)) {
        ++line_no;
        const std::string row = trim(line);
        if (row.empty()) continue;
        const auto cells = split(row, ',');
        if (cells.size() != data.dim + 2) {
            throw ParseError(line_no, "row has " + std::to_string(cells.size()) + " fields, expected " +
                                          std::to_string(data.dim + 2));
        }
        int sid = 0;
        if (!parse_number(cells[0], sid)) throw ParseError(line_no, "bad subconcept id '" + cells[0] + "'");
        if (sid < 0 || static_cast<std::size_t>(sid) >= k)
            throw ParseError(line_no, "unknown subconcept " + std::to_string(sid));
        const std::string part = trim(cells[1]);
        if (part != "train" && part != "test")
            throw ParseError(line_no, "split must be train or test, got '" + part + "'");
        FeatureVector x(data.dim);
        for (std::size_t j = 0; j < data.dim; ++j) {
            if (!parse_number(cells[j + 2], x[j]) || !std::isfinite(x[j]))
                throw ParseError(line_no, "bad value '" + cells[j + 2] + "' in column " + std::to_string(j + 3));
        }
        auto& s = data.subconcepts[static_cast<std::size_t>(sid)];
        (part == "train" ? s.train : s.test).push_back(std::move(x));
    }
    for (const auto& s : data.subconcepts) {
        if (s.train.empty() || s.test.empty())
            throw ParseError(line_no, "subconcept " + std::to_string(s.id) + " lacks train or test rows");
    }
    return data;
}

SubconceptDataset load_features(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open feature file " + path);
    return read_features(in);
}

void write_features(const SubconceptDataset& data, std::ostream& out) {
    out << "dim=" << data.dim << " subconcepts=" << data.subconcepts.size() << '\n';
    auto row = [&](int sid, const char* part, const FeatureVector& x) {
        out << sid << ',' << part;
        for (double v : x) out << ',' << format_double(v);
        out << '\n';
    };
    for (const auto& s : data.subconcepts) {
        for (const auto& x : s.train) row(s.id, "train", x);
        for (const auto& x : s.test) row(s.id, "test", x);
    }
}

void save_features(const SubconceptDataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write feature file " + path);
    write_features(data, out);
    if (!out) throw Error("failed writing feature file " + path);
}

// ---------------------------------------------------------------------------
// Schedules
// ---------------------------------------------------------------------------

std::string to_string(EntryKind kind) {
    switch (kind) {
        case EntryKind::Intro: return "intro";
        case EntryKind::Drift: return "drift";
        case EntryKind::Revisit: return "revisit";
    }
    return "unknown";
}

EntryKind parse_entry_kind(const std::string& s) {
    if (s == "intro") return EntryKind::Intro;
    if (s == "drift") return EntryKind::Drift;
    if (s == "revisit") return EntryKind::Revisit;
    throw InvalidValueError("unknown entry kind '" + s + "'");
}

std::pair<std::size_t, std::size_t> slice_bounds(double begin, double end, std::size_t n) {
    const double dn = static_cast<double>(n);
    auto at = [&](double f) {
        return std::min(n, static_cast<std::size_t>(std::floor(f * dn + 1e-9)));
    };
    return {at(begin), at(end)};
}

StreamSchedule::StreamSchedule(std::vector<ScheduleEntry> entries, std::vector<WarmupPart> warmup)
    : entries_(std::move(entries)), warmup_(std::move(warmup)) {
    validate();
}

void StreamSchedule::validate() const {
    if (entries_.empty()) throw InvalidValueError("schedule has no batches");
    std::map<int, const ScheduleEntry*> last;
    for (std::size_t t = 0; t < entries_.size(); ++t) {
        const auto& e = entries_[t];
        const std::string where = "batch " + std::to_string(t) + ": ";
        if (e.batch_index != t) throw InvalidValueError(where + "batch indices must be 0..n-1 in order");
        if (e.subconcept < 0) throw InvalidValueError(where + "negative subconcept id");
        validate_label(e.label);
        if (!(e.slice_begin >= 0.0 && e.slice_begin < e.slice_end && e.slice_end <= 1.0))
            throw InvalidValueError(where + "slice must satisfy 0 <= start < end <= 1");
        const auto it = last.find(e.subconcept);
        if (it == last.end()) {
            if (e.kind != EntryKind::Intro)
                throw InvalidValueError(where + "subconcept " + std::to_string(e.subconcept) +
                                        " appears before its intro");
        } else if (e.kind == EntryKind::Drift) {
            const ScheduleEntry& prev = *it->second;
            const bool continues = prev.kind == EntryKind::Drift && prev.batch_index + 1 == t &&
                                   prev.label == e.label;
            if (!continues && prev.label == e.label)
                throw InvalidValueError(where + "drift entry must flip the subconcept's label");
        }
        last[e.subconcept] = &e;
    }
    for (const auto& w : warmup_) {
        if (!(w.fraction > 0.0 && w.fraction <= 1.0))
            throw InvalidValueError("warmup fraction must be in (0,1]");
        const bool appears = std::any_of(entries_.begin(), entries_.end(),
                                         [&](const ScheduleEntry& e) { return e.subconcept == w.subconcept; });
        if (!appears) throw InvalidValueError("warmup subconcept " + std::to_string(w.subconcept) +
                                              " never appears in the schedule");
    }
}

Label StreamSchedule::label_at(int subconcept, std::size_t t) const {
    const ScheduleEntry* first = nullptr;
    const ScheduleEntry* latest = nullptr;
    for (const auto& e : entries_) {
        if (e.subconcept != subconcept) continue;
        if (!first) first = &e;
        if (e.batch_index <= t) latest = &e;
    }
    if (latest) return latest->label;
    if (first) return first->label;
    throw NotFoundError("subconcept " + std::to_string(subconcept) + " is not scheduled");
}

std::vector<int> StreamSchedule::seen_by(std::size_t t) const {
    std::set<int> seen;
    for (const auto& w : warmup_) seen.insert(w.subconcept);
    for (const auto& e : entries_) {
        if (e.batch_index <= t) seen.insert(e.subconcept);
    }
    return {seen.begin(), seen.end()};
}

int StreamSchedule::max_subconcept() const {
    int m = -1;
    for (const auto& e : entries_) m = std::max(m, e.subconcept);
    return m;
}

StreamSchedule build_stationary_schedule(std::size_t n_subconcepts) {
    if (n_subconcepts < 2) throw ConfigError("a stationary schedule needs at least 2 subconcepts");
    DriftLayout layout;
    layout.positions.clear();
    layout.subconcepts.clear();
    layout.total_batches = n_subconcepts;
    return build_drift_schedule(n_subconcepts, layout);
}

StreamSchedule build_drift_schedule(std::size_t n_subconcepts, const DriftLayout& layout) {
    if (n_subconcepts < 2) throw ConfigError("a schedule needs at least 2 subconcepts");
    if (layout.positions.size() != layout.subconcepts.size())
        throw ConfigError("drift positions and drift subconcepts must have equal length");
    for (std::size_t i = 0; i < layout.positions.size(); ++i) {
        if (layout.positions[i] >= layout.total_batches)
            throw ConfigError("drift position beyond the schedule length");
        if (i > 0 && layout.positions[i] <= layout.positions[i - 1])
            throw ConfigError("drift positions must be strictly increasing");
        if (layout.subconcepts[i] < 0 || static_cast<std::size_t>(layout.subconcepts[i]) >= n_subconcepts)
            throw ConfigError("drift refers to unknown subconcept " + std::to_string(layout.subconcepts[i]));
    }

    constexpr double kWarmupFraction = 0.1;
    const std::set<int> drifting(layout.subconcepts.begin(), layout.subconcepts.end());
    std::map<std::size_t, int> drift_at;
    for (std::size_t i = 0; i < layout.positions.size(); ++i)
        drift_at[layout.positions[i]] = layout.subconcepts[i];

    std::vector<Label> current(n_subconcepts);
    for (std::size_t k = 0; k < n_subconcepts; ++k) current[k] = static_cast<Label>((k + 1) % 2);

    std::vector<ScheduleEntry> entries;
    std::vector<int> introduced;
    std::size_t next_intro = 0;
    std::size_t revisit_cursor = 0;

    for (std::size_t t = 0; t < layout.total_batches; ++t) {
        ScheduleEntry e;
        e.batch_index = t;
        if (const auto d = drift_at.find(t); d != drift_at.end()) {
            const int sid = d->second;
            if (std::find(introduced.begin(), introduced.end(), sid) == introduced.end())
                throw ConfigError("drift at batch " + std::to_string(t) + " refers to unseen subconcept " +
                                  std::to_string(sid));
            // Episode = maximal run of adjacent positions for the same subconcept.
            std::size_t first = t, last = t;
            while (first > 0 && drift_at.count(first - 1) && drift_at.at(first - 1) == sid) --first;
            while (drift_at.count(last + 1) && drift_at.at(last + 1) == sid) ++last;
            const double parts = static_cast<double>(last - first + 1);
            if (t == first) current[sid] = 1 - current[sid];
            e.subconcept = sid;
            e.label = current[sid];
            e.kind = EntryKind::Drift;
            e.slice_begin = static_cast<double>(t - first) / parts;
            e.slice_end = static_cast<double>(t - first + 1) / parts;
        } else if (next_intro < n_subconcepts) {
            const int sid = static_cast<int>(next_intro++);
            introduced.push_back(sid);
            e.subconcept = sid;
            e.label = current[sid];
            e.kind = EntryKind::Intro;
            e.slice_begin = sid < 2 ? kWarmupFraction : 0.0;
            e.slice_end = 1.0;
        } else {
            std::vector<int> pool;
            for (int sid : introduced) {
                if (!drifting.count(sid)) pool.push_back(sid);
            }
            if (pool.empty()) pool = introduced;
            const int sid = pool[revisit_cursor++ % pool.size()];
            e.subconcept = sid;
            e.label = current[sid];
            e.kind = EntryKind::Revisit;
        }
        entries.push_back(e);
    }
    if (next_intro < n_subconcepts)
        throw ConfigError("schedule too short to introduce every subconcept");

    return StreamSchedule(std::move(entries), {{0, kWarmupFraction}, {1, kWarmupFraction}});
}

StreamSchedule read_schedule(std::istream& in) {
    std::vector<ScheduleEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        const std::string row = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (row.empty()) continue;
        const auto cells = split(row, ',');
        if (cells.size() != 6) throw ParseError(line_no, "schedule row needs 6 fields");
        ScheduleEntry e;
        int label = 0;
        if (!parse_number(cells[0], e.batch_index)) throw ParseError(line_no, "bad batch index");
        if (!parse_number(cells[1], e.subconcept)) throw ParseError(line_no, "bad subconcept id");
        if (!parse_number(cells[2], label) || (label != 0 && label != 1))
            throw ParseError(line_no, "label must be 0 or 1");
        e.label = label;
        try {
            e.kind = parse_entry_kind(trim(cells[3]));
        } catch (const InvalidValueError& err) {
            throw ParseError(line_no, err.what());
        }
        if (!parse_number(cells[4], e.slice_begin) || !parse_number(cells[5], e.slice_end))
            throw ParseError(line_no, "bad slice bounds");
        entries.push_back(e);
    }
    std::vector<WarmupPart> warmup;
    for (const auto& e : entries) {
        if (warmup.size() == 2) break;
        if (e.kind == EntryKind::Intro) warmup.push_back({e.subconcept, 0.1});
    }
    try {
        return StreamSchedule(std::move(entries), std::move(warmup));
    } catch (const InvalidValueError& err) {
        throw ParseError(line_no, err.what());
    }
}

StreamSchedule load_schedule(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open schedule file " + path);
    return read_schedule(in);
}

void write_schedule(const StreamSchedule& schedule, std::ostream& out) {
    for (const auto& e : schedule.entries()) {
        out << e.batch_index << ',' << e.subconcept << ',' << e.label << ',' << to_string(e.kind) << ','
            << format_double(e.slice_begin) << ',' << format_double(e.slice_end) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

std::vector<LabeledInstance> warmup_batch(const StreamSchedule& schedule, const SubconceptDataset& data,
                                          Rng& rng) {
    std::vector<LabeledInstance> out;
    for (const auto& w : schedule.warmup()) {
        const auto& s = data.at(w.subconcept);
        const auto [first, last] = slice_bounds(0.0, w.fraction, s.train.size());
        const Label y = schedule.label_at(w.subconcept, 0);
        for (std::size_t i = first; i < last; ++i) out.push_back({s.train[i], y, w.subconcept});
    }
    shuffle_instances(out, rng);
    return out;
}

EvaluationPool evaluation_pool(const StreamSchedule& schedule, const SubconceptDataset& data,
                               std::size_t batch_index) {
    if (batch_index >= schedule.size()) throw NotFoundError("batch index out of range");
    EvaluationPool pool;
    pool.batch_index = batch_index;
    for (int sid : schedule.seen_by(batch_index)) {
        const Label y = schedule.label_at(sid, batch_index);
        for (const auto& x : data.at(sid).test) pool.instances.push_back({x, y, sid});
    }
    return pool;
}

StreamBatch next_batch(const StreamSchedule& schedule, const SubconceptDataset& data,
                       std::size_t batch_index, Rng& rng) {
    if (batch_index >= schedule.size()) throw NotFoundError("batch index out of range");
    const auto& e = schedule.entries()[batch_index];
    const auto& s = data.at(e.subconcept);
    StreamBatch batch;
    const auto [first, last] = slice_bounds(e.slice_begin, e.slice_end, s.train.size());
    for (std::size_t i = first; i < last; ++i) batch.train.push_back({s.train[i], e.label, e.subconcept});
    shuffle_instances(batch.train, rng);
    batch.pool = evaluation_pool(schedule, data, batch_index);
    return batch;
}

std::vector<LabeledInstance> presented_training_set(const StreamSchedule& schedule,
                                                     const SubconceptDataset& data,
                                                     std::size_t batch_index) {
    if (batch_index >= schedule.size()) throw NotFoundError("batch index out of range");
    std::map<int, std::vector<bool>> covered;
    auto mark = [&](int sid, double b, double e) {
        const auto& s = data.at(sid);
        auto& mask = covered[sid];
        mask.resize(s.train.size(), false);
        const auto [first, last] = slice_bounds(b, e, s.train.size());
        for (std::size_t i = first; i < last; ++i) mask[i] = true;
    };
    for (const auto& w : schedule.warmup()) mark(w.subconcept, 0.0, w.fraction);
    for (const auto& e : schedule.entries()) {
        if (e.batch_index <= batch_index) mark(e.subconcept, e.slice_begin, e.slice_end);
    }
    std::vector<LabeledInstance> out;
    for (const auto& [sid, mask] : covered) {
        const Label y = schedule.label_at(sid, batch_index);
        const auto& train = data.at(sid).train;
        for (std::size_t i = 0; i < mask.size(); ++i) {
            if (mask[i]) out.push_back({train[i], y, sid});
        }
    }
    return out;
}

}  // namespace rsb
