#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "rsb/replay.hpp"

using namespace rsb;

namespace {

LabeledInstance inst(FeatureVector x, Label y) { return LabeledInstance{std::move(x), y, -1}; }

bool in_some_buffer(const RsbMemory& mem, const LabeledInstance& x) {
    for (const auto& c : mem.centroids()) {
        for (const auto& it : c.buffer.items()) {
            if (it.features == x.features && it.label == x.label) return true;
        }
    }
    return false;
}

}  // namespace

TEST_CASE("purity examples") {
    CHECK(purity(50, 50, 4.0) == 0.0);
    // Reference values of tanh(4) and tanh(2) to 15 digits.
    CHECK(purity(100, 0, 4.0) == doctest::Approx(0.999329299739067).epsilon(1e-12));
    CHECK(purity(75, 25, 4.0) == doctest::Approx(0.964027580075817).epsilon(1e-12));
    CHECK(purity(0, 0, 4.0) == 0.0);
}

TEST_CASE("purity is monotone in the count gap and below one") {
    for (std::size_t total : {1u, 2u, 10u, 100u, 1000u}) {
        double prev = -1.0;
        for (std::size_t c2 = total / 2 + 1; c2-- > 0;) {
            const std::size_t c1 = total - c2;
            if (c1 < c2) continue;
            const double g = purity(c1, c2, 4.0);
            CHECK(g >= prev);
            CHECK(g < 1.0);
            CHECK(g >= 0.0);
            prev = g;
        }
    }
    for (std::size_t c : {1u, 7u, 50u}) CHECK(purity(c, c, 4.0) == 0.0);
}

TEST_CASE("empty memory produces an empty replay batch") {
    RsbMemory mem(RsbConfig{}, 1);
    Rng rng(1);
    CHECK(sample_replay(mem, rng).empty());
    StaticCentroidMemory sb(RsbConfig{}, 1);
    CHECK(sample_replay(sb, rng).empty());
    ClassBuffer cb(10, 0.0);
    CHECK(sample_replay(cb, 4, rng).empty());
}

TEST_CASE("pure centroid inclusion frequency matches tanh(4)") {
    RsbConfig cfg;
    cfg.c_min = 1;
    RsbMemory mem(cfg, 2);
    Rng data(3);
    for (int i = 0; i < 150; ++i) mem.ingest(inst({data.normal(0, 1)}, 1));
    REQUIRE(mem.centroids().size() == 1);
    REQUIRE(mem.centroids()[0].window.label_counts()[0] == 0);

    Rng rng(4);
    const int draws = 10000;
    int included = 0;
    for (int i = 0; i < draws; ++i) included += static_cast<int>(sample_replay(mem, rng).size());
    CHECK(std::abs(included / double(draws) - std::tanh(4.0)) <= 0.01);
}

TEST_CASE("balanced centroid is never replayed") {
    RsbConfig cfg;
    cfg.c_min = 1;
    RsbMemory mem(cfg, 2);
    mem.ingest(inst({100.0}, 0));
    for (int i = 0; i < 30; ++i) mem.ingest(inst({i % 2 ? 0.5 : -0.5}, 1));
    for (int i = 0; i < 30; ++i) mem.ingest(inst({0.0}, 0));
    const int balanced = mem.centroids()[1].id;
    const auto counts = mem.centroid(balanced).window.label_counts();
    REQUIRE(counts[0] == 30);
    REQUIRE(counts[1] == 30);

    Rng rng(5);
    int from_balanced = 0, from_pure = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto batch = sample_replay(mem, rng);
        for (const auto& o : batch.provenance) {
            (o.id == balanced ? from_balanced : from_pure) += 1;
        }
    }
    CHECK(from_balanced == 0);
    CHECK(from_pure > 9000);
}

TEST_CASE("replayed instances come from buffers and carry the centroid label") {
    RsbConfig cfg;
    cfg.n_s = 200;
    cfg.omega_max = 50;
    RsbMemory mem(cfg, 8);
    Rng data(6);
    Rng rng(7);
    for (int t = 0; t < 4000; ++t) {
        const int region = static_cast<int>(data.index(4));
        const Label y = static_cast<Label>((region + (t > 2000 && region == 0 ? 1 : 0)) % 2);
        mem.ingest(inst({region * 6.0 + data.normal(0, 1), data.normal(0, 1)}, y));
        if (t % 100 == 0) {
            const auto batch = sample_replay(mem, rng);
            REQUIRE(batch.instances.size() == batch.provenance.size());
            for (std::size_t i = 0; i < batch.size(); ++i) {
                CHECK(in_some_buffer(mem, batch.instances[i]));
                CHECK(batch.provenance[i].kind == ReplayOrigin::Kind::Centroid);
                CHECK(batch.instances[i].label == mem.centroid(batch.provenance[i].id).label);
            }
        }
    }
}

TEST_CASE("static memory replays one instance per centroid") {
    RsbConfig cfg;
    cfg.c_min = 2;
    StaticCentroidMemory sb(cfg, 1);
    for (int i = 0; i < 20; ++i) sb.ingest(inst({double(i % 4) * 10.0}, i % 2));
    Rng rng(3);
    const auto batch = sample_replay(sb, rng);
    CHECK(batch.size() == sb.centroids().size());
    for (std::size_t i = 0; i < batch.size(); ++i) CHECK(batch.provenance[i].id == sb.centroids()[i].id);
}

TEST_CASE("class buffer replay draws k per non-empty label") {
    ClassBuffer cb(10, 1.0);
    Rng rng(2);
    for (int i = 0; i < 5; ++i) cb.ingest(inst({double(i)}, 1), rng);
    auto batch = sample_replay(cb, 6, rng);
    CHECK(batch.size() == 6);
    for (const auto& o : batch.provenance) CHECK(o == ReplayOrigin{ReplayOrigin::Kind::ClassBuffer, 1});
    cb.ingest(inst({-1.0}, 0), rng);
    batch = sample_replay(cb, 6, rng);
    CHECK(batch.size() == 12);
}

TEST_CASE("oversample_balance examples") {
    Rng rng(1);
    ReplayBatch b;
    b.add(inst({1.0}, 1), {});
    b.add(inst({2.0}, 1), {});
    b.add(inst({3.0}, 1), {});
    b.add(inst({4.0}, 0), {});
    const auto out = oversample_balance(b, rng);
    REQUIRE(out.size() == 6);
    std::size_t zeros = 0;
    for (const auto& x : out.instances) {
        if (x.label == 0) {
            ++zeros;
            CHECK(x.features[0] == 4.0);
        }
    }
    CHECK(zeros == 3);
    CHECK(out.provenance.size() == out.instances.size());

    CHECK(oversample_balance(ReplayBatch{}, rng).empty());

    ReplayBatch even;
    even.add(inst({1.0}, 1), {});
    even.add(inst({2.0}, 1), {});
    even.add(inst({3.0}, 0), {});
    even.add(inst({4.0}, 0), {});
    CHECK(oversample_balance(even, rng).instances.size() == 4);

    ReplayBatch single;
    single.add(inst({1.0}, 0), {});
    single.add(inst({2.0}, 0), {});
    CHECK(oversample_balance(single, rng).size() == 2);
}

TEST_CASE("balanced output has equal label counts whenever both labels are present") {
    Rng rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        ReplayBatch b;
        const std::size_t n = 1 + rng.index(30);
        for (std::size_t i = 0; i < n; ++i) b.add(inst({double(i)}, static_cast<Label>(rng.index(2))), {});
        std::array<std::size_t, 2> before{};
        for (const auto& x : b.instances) ++before[x.label];
        const auto out = oversample_balance(b, rng);
        std::array<std::size_t, 2> after{};
        for (const auto& x : out.instances) ++after[x.label];
        if (before[0] && before[1]) {
            CHECK(after[0] == after[1]);
            CHECK(after[0] == std::max(before[0], before[1]));
        } else {
            CHECK(out.size() == b.size());
        }
        // Originals come first and are untouched.
        for (std::size_t i = 0; i < b.size(); ++i) CHECK(out.instances[i].features == b.instances[i].features);
    }
}

TEST_CASE("replay adapters forward to their memories") {
    RsbConfig cfg;
    cfg.c_min = 1;
    Rng rng(3);
    RsbReplay rsb(cfg, 1);
    StaticCentroidReplay sb(cfg, 1);
    ClassBufferReplay cb(50, 0.0, 4, 1);
    for (int i = 0; i < 40; ++i) {
        const auto x = inst({double(i % 2) * 50.0}, i % 2);
        rsb.observe(x);
        sb.observe(x);
        cb.observe(x);
    }
    CHECK(rsb.memory().centroids().size() == 2);
    CHECK(sb.memory().centroids().size() == 2);
    CHECK(cb.buffer().items(0).size() == 20);
    CHECK(cb.draw(rng).size() == 8);
    CHECK(sb.draw(rng).size() == 2);
    CHECK(rsb.draw(rng).size() <= 2);
}
