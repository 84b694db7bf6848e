#include "rsb/replay.hpp"

#include <algorithm>
#include <cmath>

namespace rsb {

void ReplayBatch::add(LabeledInstance inst, ReplayOrigin origin) {
    instances.push_back(std::move(inst));
    provenance.push_back(origin);
}

double purity(std::size_t c1, std::size_t c2, double beta) {
    const std::size_t total = c1 + c2;
    if (total == 0) return 0.0;
    const double diff = static_cast<double>(c1) - static_cast<double>(c2);
    return std::tanh(beta * diff / static_cast<double>(total));
}

ReplayBatch sample_replay(const RsbMemory& memory, Rng& rng) {
    ReplayBatch out;
    std::vector<std::size_t> eligible;
    for (const auto& c : memory.centroids()) {
        auto counts = c.window.label_counts();
        std::sort(counts.begin(), counts.end(), std::greater<>());
        const double gate = purity(counts[0], counts[1], memory.config().beta);
        const double r = rng.uniform();
        if (!(gate > r)) continue;

        eligible.clear();
        const auto& items = c.buffer.items();
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (items[i].label == c.label) eligible.push_back(i);
        }
        if (eligible.empty()) continue;
        out.add(items[eligible[rng.index(eligible.size())]],
                {ReplayOrigin::Kind::Centroid, c.id});
    }
    return out;
}

ReplayBatch sample_replay(const StaticCentroidMemory& memory, Rng& rng) {
    ReplayBatch out;
    for (const auto& c : memory.centroids()) {
        const auto& items = c.buffer.items();
        if (items.empty()) continue;
        out.add(items[rng.index(items.size())], {ReplayOrigin::Kind::Centroid, c.id});
    }
    return out;
}

ReplayBatch sample_replay(const ClassBuffer& buffer, std::size_t k, Rng& rng) {
    ReplayBatch out;
    for (Label y = 0; y < kNumLabels; ++y) {
        const auto& items = buffer.items(y);
        if (items.empty()) continue;
        for (std::size_t i = 0; i < k; ++i) {
            out.add(items[rng.index(items.size())], {ReplayOrigin::Kind::ClassBuffer, y});
        }
    }
    return out;
}

ReplayBatch oversample_balance(ReplayBatch batch, Rng& rng) {
    std::array<std::vector<std::size_t>, kNumLabels> by_label;
    for (std::size_t i = 0; i < batch.size(); ++i) by_label[batch.instances[i].label].push_back(i);
    if (by_label[0].empty() || by_label[1].empty()) return batch;

    const Label minority = by_label[0].size() < by_label[1].size() ? 0 : 1;
    const auto& pool = by_label[minority];
    const std::size_t need = by_label[1 - minority].size() - pool.size();
    for (std::size_t n = 0; n < need; ++n) {
        const std::size_t src = pool[rng.index(pool.size())];
        LabeledInstance copy = batch.instances[src];
        const ReplayOrigin origin = batch.provenance[src];
        batch.add(std::move(copy), origin);
    }
    return batch;
}

}  // namespace rsb
