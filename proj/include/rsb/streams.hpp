#ifndef RSB_STREAMS_HPP
#define RSB_STREAMS_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rsb/rng.hpp"
#include "rsb/types.hpp"

namespace rsb {

struct Subconcept {
    int id = 0;
    std::vector<FeatureVector> train;
    std::vector<FeatureVector> test;
};

struct SubconceptDataset {
    std::size_t dim = 0;
    std::vector<Subconcept> subconcepts;  // index == id

    const Subconcept& at(int id) const;
    // Throws InvalidValueError when a subconcept has an empty partition or a
    // vector has the wrong dimension.
    void validate() const;
};

struct GaussianStreamSpec {
    std::size_t n_subconcepts = 10;
    std::size_t dim = 16;
    double stddev = 1.0;                // isotropic, shared by all subconcepts
    double mean_separation = 6.0;       // minimum pairwise mean distance, in stddev units
    double mean_offset = 5.0;           // shared shift of every mean coordinate, in stddev units
    std::size_t train_per_subconcept = 1000;
    std::size_t test_per_subconcept = 200;
    std::uint64_t seed = 1;
    // Optional explicit means (one per subconcept); generated when empty.
    std::vector<FeatureVector> means;

    void validate() const;
};

SubconceptDataset generate_gaussian(const GaussianStreamSpec& spec);
// Means used by generate_gaussian(spec) (explicit or generated).
std::vector<FeatureVector> gaussian_means(const GaussianStreamSpec& spec);

// Headered text format:
//   dim=<d> subconcepts=<k>
//   <subconcept_id>,<train|test>,<v1>,...,<vd>
SubconceptDataset load_features(const std::string& path);
SubconceptDataset read_features(std::istream& in);
void write_features(const SubconceptDataset& data, std::ostream& out);
void save_features(const SubconceptDataset& data, const std::string& path);

enum class EntryKind { Intro, Drift, Revisit };
std::string to_string(EntryKind kind);
EntryKind parse_entry_kind(const std::string& s);

struct ScheduleEntry {
    std::size_t batch_index = 0;
    int subconcept = 0;
    Label label = 0;
    EntryKind kind = EntryKind::Intro;
    // Fraction [slice_begin, slice_end) of the subconcept's training data.
    double slice_begin = 0.0;
    double slice_end = 1.0;

    bool operator==(const ScheduleEntry&) const = default;
};

struct WarmupPart {
    int subconcept = 0;
    double fraction = 0.1;  // leading fraction of the training data
};

class StreamSchedule {
public:
    StreamSchedule(std::vector<ScheduleEntry> entries, std::vector<WarmupPart> warmup);

    const std::vector<ScheduleEntry>& entries() const { return entries_; }
    const std::vector<WarmupPart>& warmup() const { return warmup_; }
    std::size_t size() const { return entries_.size(); }

    // Label of a subconcept as of batch t (most recent entry at or before t,
    // otherwise its first appearance).
    Label label_at(int subconcept, std::size_t t) const;
    // Subconcepts present in the warmup or in any entry up to batch t.
    std::vector<int> seen_by(std::size_t t) const;
    int max_subconcept() const;

private:
    void validate() const;

    std::vector<ScheduleEntry> entries_;
    std::vector<WarmupPart> warmup_;
};

// n batches, subconcept k labelled (k + 1) mod 2, warmup of 10% of
// subconcepts 0 and 1 (their intro slices start after the warmup part).
StreamSchedule build_stationary_schedule(std::size_t n_subconcepts);

struct DriftLayout {
    // One entry per drift batch; consecutive positions of the same subconcept
    // form one episode whose batches split the subconcept's training data.
    std::vector<std::size_t> positions{4, 5, 9, 10, 14, 15, 19, 20, 24, 25};
    std::vector<int> subconcepts{0, 0, 2, 2, 4, 4, 6, 6, 8, 8};
    std::size_t total_batches = 30;
};

// Intros in subconcept order, drift episodes at the given positions (labels
// flipped permanently), remaining batches filled with round-robin revisits of
// subconcepts that never drift.
StreamSchedule build_drift_schedule(std::size_t n_subconcepts, const DriftLayout& layout = {});

// Override file: `<index>,<subconcept_id>,<label>,<kind>,<slice_start>,<slice_end>`
// per line; '#' starts a comment.
StreamSchedule read_schedule(std::istream& in);
StreamSchedule load_schedule(const std::string& path);
void write_schedule(const StreamSchedule& schedule, std::ostream& out);

// Test data of every subconcept seen so far, labelled by the label map at
// the pool's batch.
struct EvaluationPool {
    std::size_t batch_index = 0;
    std::vector<LabeledInstance> instances;
    bool empty() const { return instances.empty(); }
};

struct StreamBatch {
    std::vector<LabeledInstance> train;  // shuffled
    EvaluationPool pool;
};

std::vector<LabeledInstance> warmup_batch(const StreamSchedule& schedule,
                                          const SubconceptDataset& data, Rng& rng);
StreamBatch next_batch(const StreamSchedule& schedule, const SubconceptDataset& data,
                       std::size_t batch_index, Rng& rng);
EvaluationPool evaluation_pool(const StreamSchedule& schedule, const SubconceptDataset& data,
                               std::size_t batch_index);

// Union of all training data presented up to batch t (warmup included),
// relabelled to the label map at t. Ordered by subconcept, then index.
std::vector<LabeledInstance> presented_training_set(const StreamSchedule& schedule,
                                                     const SubconceptDataset& data,
                                                     std::size_t batch_index);

// [first, last) instance indices of a fractional slice over n items.
std::pair<std::size_t, std::size_t> slice_bounds(double begin, double end, std::size_t n);

}  // namespace rsb

#endif  // RSB_STREAMS_HPP
