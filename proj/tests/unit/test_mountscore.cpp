#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "aerosynth/airframe.hpp"
#include "aerosynth/mountscore.hpp"
#include "aerosynth/voxelizer.hpp"

using namespace aerosynth;

namespace {

// hand-written piecewise oracle, thresholds as fractions of e
double oracle(double d, double e) {
    const double dm = 0.05 * e, dg = 0.15 * e, dx = 0.5 * e;
    if (d >= dg) return 1.0;
    if (d >= dm) return 0.75 + 0.25 * (d - dm) / (dg - dm);
    if (d >= 0.0) return 0.30 + 0.45 * d / dm;
    if (d >= -dx) return 0.30 * (1.0 + d / dx);
    return 0.0;
}

VoxelGrid empty_grid(int r, double pitch = 0.1) {
    VoxelGrid g(r, pitch, {0, 0, 0});
    g.meta.topology = Topology::Conventional;
    g.meta.engine_mount = EngineMount::WingPod;
    return g;
}

void fill(VoxelGrid& g, Label l, int i0, int i1, int j0, int j1, int k0, int k1) {
    for (int k = k0; k <= k1; ++k)
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i) g.at(i, j, k) = l;
}

MountEntry entry(double score) {
    MountEntry e;
    e.score = score;
    return e;
}

}  // namespace

TEST_CASE("mount score hits the four breakpoint values") {
    const MountThresholds t;
    const double e = 2.0;
    CHECK(mount_score(0.15 * e, e, t) == 1.0);
    CHECK(mount_score(0.05 * e, e, t) == 0.75);
    CHECK(mount_score(0.0, e, t) == 0.30);
    CHECK(mount_score(-0.5 * e, e, t) == 0.0);
    CHECK(mount_score(5.0, e, t) == 1.0);
    CHECK(mount_score(-5.0, e, t) == 0.0);
}

TEST_CASE("mount score matches the oracle at random points") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> ue(0.1, 5.0), uf(-0.7, 0.3);
    const MountThresholds t;
    for (int n = 0; n < 1000; ++n) {
        const double e = ue(rng), d = uf(rng) * e;
        CHECK(std::abs(mount_score(d, e, t) - oracle(d, e)) <= 1e-12);
    }
}

TEST_CASE("mount score is continuous and monotone") {
    const MountThresholds t;
    const double e = 1.0;
    double prev = mount_score(-1.0, e, t);
    for (int n = 1; n <= 200000; ++n) {
        const double d = -1.0 + 1.5 * n / 200000.0;
        const double s = mount_score(d, e, t);
        CHECK(s >= prev);
        CHECK(s - prev < 1e-4);
        prev = s;
    }
}

TEST_CASE("mount score rejects non-positive size and bad thresholds") {
    CHECK_THROWS_AS(mount_score(0.1, 0.0, MountThresholds{}), std::domain_error);
    MountThresholds bad;
    bad.d_m = 0.2;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("host tables") {
    CHECK(host_labels(Label::Engine, Topology::Conventional) == std::vector<Label>{Label::Fuselage, Label::Wing});
    CHECK(host_labels(Label::HTail, Topology::Conventional) == std::vector<Label>{Label::Fuselage});
    CHECK(host_labels(Label::HTail, Topology::TTail) == std::vector<Label>{Label::VTail});
    CHECK(host_labels(Label::Wing, Topology::Conventional).empty());
    CHECK(host_labels(Label::Fuselage, Topology::Conventional).empty());
}

TEST_CASE("separation depth counts empty voxels between boxes") {
    auto g = empty_grid(32);
    fill(g, Label::Wing, 0, 31, 10, 20, 10, 11);    // host slab at k 10..11
    fill(g, Label::Engine, 14, 17, 14, 17, 15, 18);  // three empty layers above the slab
    const auto parts = part_bounds(g);
    const PartAabb* engine = nullptr;
    for (const auto& p : parts)
        if (p.part == Label::Engine) engine = &p;
    REQUIRE(engine);
    const auto pen = penetration_depth(*engine, g);
    REQUIRE(pen.has_value());
    CHECK(pen->depth == doctest::Approx(-3 * 0.1));
    CHECK(pen->host == Label::Wing);
}

TEST_CASE("overlap depth is the host extent inside the box along the mount axis") {
    auto g = empty_grid(32);
    fill(g, Label::Engine, 12, 19, 12, 19, 8, 15);
    fill(g, Label::Wing, 0, 31, 6, 15, 13, 14);   // host paints through half the part
    const auto parts = part_bounds(g);
    for (const auto& p : parts) {
        if (p.part != Label::Engine) continue;
        const auto pen = penetration_depth(p, g);
        REQUIRE(pen.has_value());
        CHECK(pen->depth == doctest::Approx(2 * 0.1));
    }
}

TEST_CASE("a part with no host anywhere scores zero") {
    auto g = empty_grid(16);
    fill(g, Label::Engine, 4, 6, 4, 6, 4, 6);
    const auto report = evaluate_mounts(g, part_bounds(g), MountThresholds{});
    REQUIRE(report.entries.size() == 1);
    CHECK(report.entries[0].score == 0.0);
    CHECK(report.multiplier == kMountPenaltyFloor);
}

TEST_CASE("mount penalty multiplies floored scores below the firm threshold") {
    std::vector<MountEntry> es{entry(1.0), entry(0.8), entry(0.5), entry(0.01)};
    CHECK(mount_penalty(es) == doctest::Approx(0.5 * 0.05));
    std::vector<MountEntry> firm{entry(0.75), entry(1.0)};
    CHECK(mount_penalty(firm) == 1.0);
    CHECK(mount_penalty({}) == 1.0);
}

TEST_CASE("overlap penalty ignores gaps and charges interpenetration") {
    MountEntry gap;
    gap.depth = -10.0;
    gap.size = 1.0;
    gap.score = 0.0;
    CHECK(overlap_penalty(std::vector<MountEntry>{gap}) == 1.0);
    MountEntry deep;
    deep.depth = 0.5;
    deep.size = 1.0;
    CHECK(overlap_penalty(std::vector<MountEntry>{deep}) == doctest::Approx(std::exp(-1.0)));
    deep.depth = 50.0;
    CHECK(overlap_penalty(std::vector<MountEntry>{deep, deep}) == doctest::Approx(std::max(0.05, std::exp(-4.0))));
}

TEST_CASE("pods hung at the leading edge mount firmly") {
    AnatomyGenome g;
    const Airframe af = build_airframe(g);
    g.engine_x_pos = af.wing.x_le(g.engine_spanwise * af.wing.semispan) / af.fuselage.length;
    const auto grid = voxelize(g, EnvelopeSpec{}, 96);
    const auto report = evaluate_mounts(grid, part_bounds(grid), MountThresholds{});
    CHECK(report.multiplier == 1.0);
    for (const auto& e : report.entries) CHECK(e.score >= kFirmMountScore);
}

TEST_CASE("pods ahead of the wing float") {
    AnatomyGenome g;
    const Airframe af = build_airframe(g);
    g.engine_x_pos = (af.wing.x_le(g.engine_spanwise * af.wing.semispan) - 2.0 * g.engine_length) / af.fuselage.length;
    const auto grid = voxelize(g, EnvelopeSpec{}, 96);
    const auto report = evaluate_mounts(grid, part_bounds(grid), MountThresholds{});
    CHECK(report.multiplier < 0.1);
    int floating = 0;
    for (const auto& e : report.entries)
        if (e.part == Label::Engine && e.depth < -0.3 * e.size) ++floating;
    CHECK(floating == 2);
}
