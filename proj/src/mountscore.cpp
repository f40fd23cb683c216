#include "aerosynth/mountscore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace aerosynth {

void MountThresholds::validate() const {
    if (!(d_m > 0.0 && d_m < d_g)) throw std::invalid_argument("mount thresholds need 0 < d_m < d_g");
    if (!(d_x > 0.0)) throw std::invalid_argument("mount threshold d_x must be positive");
}

double mount_score(double d, double e, const MountThresholds& t) {
    if (!(e > 0.0)) throw std::domain_error("mount_score: characteristic size must be positive");
    if (d >= t.d_g * e) return 1.0;
    if (d >= t.d_m * e) return 0.75 + 0.25 * (d - t.d_m * e) / ((t.d_g - t.d_m) * e);
    if (d >= 0.0) return 0.30 + 0.45 * d / (t.d_m * e);
    if (d >= -t.d_x * e) return std::max(0.0, 0.30 * (1.0 + d / (t.d_x * e)));
    return 0.0;
}

std::vector<Label> host_labels(Label part, Topology topology) {
    switch (part) {
    case Label::Engine: return {Label::Fuselage, Label::Wing};
    case Label::VTail: return {Label::Fuselage};
    case Label::HTail:
        if (topology == Topology::Conventional) return {Label::Fuselage};
        return {Label::VTail};
    default: return {};
    }
}

int mount_axis(Label part, const GridMeta& meta) {
    if (part == Label::Engine) {
        switch (meta.engine_mount) {
        case EngineMount::FuselageRear: return 0;
        case EngineMount::FuselageSide: return 1;
        case EngineMount::WingPod: return 2;
        }
    }
    return 2;
}

namespace {

struct Scan {
    bool overlap = false;
    int overlap_lo = std::numeric_limits<int>::max();
    int overlap_hi = std::numeric_limits<int>::min();
    Label overlap_host = Label::Empty;
    double best_gap2 = std::numeric_limits<double>::infinity();
    Label gap_host = Label::Empty;
};

int axis_gap(int v, int lo, int hi) { return std::max({0, lo - v - 1, v - hi - 1}); }

void scan_window(const VoxelGrid& grid, const PartAabb& part, const std::vector<Label>& hosts, int axis, int pad, Scan& s) {
    const int r = grid.resolution;
    const int i0 = std::max(0, part.min[0] - pad), i1 = std::min(r - 1, part.max[0] + pad);
    const int j0 = std::max(0, part.min[1] - pad), j1 = std::min(r - 1, part.max[1] + pad);
    const int k0 = std::max(0, part.min[2] - pad), k1 = std::min(r - 1, part.max[2] + pad);
    for (int k = k0; k <= k1; ++k)
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i) {
                const Label l = grid.at(i, j, k);
                if (l == Label::Empty || std::find(hosts.begin(), hosts.end(), l) == hosts.end()) continue;
                const std::array<int, 3> c{i, j, k};
                bool inside = true;
                double g2 = 0.0;
                for (int a = 0; a < 3; ++a) {
                    if (c[a] < part.min[a] || c[a] > part.max[a]) inside = false;
                    const double g = axis_gap(c[a], part.min[a], part.max[a]);
                    g2 += g * g;
                }
                if (inside) {
                    s.overlap = true;
                    if (c[axis] < s.overlap_lo || c[axis] > s.overlap_hi) s.overlap_host = l;
                    s.overlap_lo = std::min(s.overlap_lo, c[axis]);
                    s.overlap_hi = std::max(s.overlap_hi, c[axis]);
                } else if (g2 < s.best_gap2) {
                    s.best_gap2 = g2;
                    s.gap_host = l;
                }
            }
}

}  // namespace

std::optional<Penetration> penetration_depth(const PartAabb& part, const VoxelGrid& grid) {
    const auto hosts = host_labels(part.part, grid.meta.topology);
    if (hosts.empty()) return std::nullopt;
    const int axis = mount_axis(part.part, grid.meta);

    const int pad = std::max(4, static_cast<int>(std::ceil(part.characteristic_size / grid.pitch)) + 1);
    Scan s;
    scan_window(grid, part, hosts, axis, pad, s);
    if (!s.overlap && !(s.best_gap2 <= static_cast<double>(pad) * pad)) {
        s = Scan{};
        scan_window(grid, part, hosts, axis, grid.resolution, s);
    }
    Penetration p;
    if (s.overlap) {
        p.depth = (s.overlap_hi - s.overlap_lo + 1) * grid.pitch;
        p.host = s.overlap_host;
        return p;
    }
    if (!std::isfinite(s.best_gap2)) return std::nullopt;
    p.depth = -std::sqrt(s.best_gap2) * grid.pitch;
    p.host = s.gap_host;
    return p;
}

double mount_penalty(std::span<const MountEntry> entries, double floor) {
    double m = 1.0;
    for (const auto& e : entries) {
        if (e.score < kFirmMountScore) m *= std::max(e.score, floor);
    }
    return m;
}

MountReport evaluate_mounts(const VoxelGrid& grid, const std::vector<PartAabb>& parts, const MountThresholds& t) {
    MountReport report;
    for (std::size_t n = 0; n < parts.size(); ++n) {
        const auto& part = parts[n];
        if (host_labels(part.part, grid.meta.topology).empty()) {
            ++report.not_applicable;
            continue;
        }
        MountEntry e;
        e.part_index = n;
        e.part = part.part;
        e.size = part.characteristic_size;
        const auto pen = penetration_depth(part, grid);
        if (!pen) {
            // nothing to attach to at all: treat as maximally floating
            e.depth = -std::numeric_limits<double>::infinity();
            e.score = 0.0;
        } else {
            e.depth = pen->depth;
            e.host = pen->host;
            e.score = e.size > 0.0 ? mount_score(e.depth, e.size, t) : 0.0;
        }
        report.entries.push_back(e);
    }
    report.multiplier = mount_penalty(report.entries);
    return report;
}

double overlap_penalty(std::span<const MountEntry> entries, double floor) {
    constexpr double kOverlapWeight = 2.0;
    double charged = 0.0;
    for (const auto& e : entries) {
        if (e.size > 0.0 && e.depth > 0.0) charged += std::min(1.0, e.depth / e.size);
    }
    return std::max(floor, std::exp(-kOverlapWeight * charged));
}

}  // namespace aerosynth
