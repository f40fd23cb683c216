#include "aerosynth/voxelizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace aerosynth {

namespace {

constexpr int kMargin = 2;   // empty voxels on each side of the aircraft

double max_extent(const Box3& b) { return std::max({b.extent(0), b.extent(1), b.extent(2)}); }

struct IndexRange {
    int lo = 0;
    int hi = -1;
};

class Painter {
public:
    explicit Painter(VoxelGrid& g) : g_(g) {}

    template <typename Pred>
    void paint(const Box3& box, Label label, Pred&& inside) {
        const auto xr = range(box.lo[0] - g_.origin[0], box.hi[0] - g_.origin[0]);
        const auto yr = range(box.lo[1] + 0.5 * g_.resolution * g_.pitch, box.hi[1] + 0.5 * g_.resolution * g_.pitch);
        const auto zr = range(box.lo[2] - g_.origin[2], box.hi[2] - g_.origin[2]);
        for (int k = zr.lo; k <= zr.hi; ++k) {
            const double z = g_.z_of(k);
            for (int j = yr.lo; j <= yr.hi; ++j) {
                const double y = g_.y_of(j);
                for (int i = xr.lo; i <= xr.hi; ++i) {
                    if (inside(g_.x_of(i), y, z)) g_.at(i, j, k) = label;
                }
            }
        }
    }

private:
    IndexRange range(double lo, double hi) const {
        IndexRange r;
        r.lo = std::max(0, static_cast<int>(std::floor(lo / g_.pitch - 0.5)));
        r.hi = std::min(g_.resolution - 1, static_cast<int>(std::ceil(hi / g_.pitch - 0.5)));
        return r;
    }
    VoxelGrid& g_;
};

Box3 mirrored_bounds(const Box3& b) {
    Box3 m = b;
    const double y = std::max(std::abs(b.lo[1]), std::abs(b.hi[1]));
    m.lo[1] = -y;
    m.hi[1] = y;
    return m;
}

}  // namespace

VoxelGrid rasterize(const AnatomyGenome& g, int resolution, bool inflate_thin) {
    if (resolution < kMinResolution) {
        throw std::invalid_argument("voxel resolution must be at least " + std::to_string(kMinResolution) + ", got " +
                                    std::to_string(resolution));
    }
    const int usable = resolution - 2 * kMargin;

    // Pitch depends on the inflated layout and vice versa; iterate to a fixed point.
    double pitch = max_extent(build_airframe(g, 0.0).bounds()) / usable;
    Airframe af = build_airframe(g, pitch);
    if (!inflate_thin) af = build_airframe(g, 0.0);
    for (int iter = 0; inflate_thin && iter < 16; ++iter) {
        const double needed = max_extent(af.bounds()) / usable;
        if (needed <= pitch) break;
        pitch = needed * (iter < 8 ? 1.0 : 1.01);
        af = build_airframe(g, pitch);
    }

    const Box3 b = mirrored_bounds(af.bounds());
    const double side = pitch * resolution;
    const std::array<double, 3> origin{0.5 * (b.lo[0] + b.hi[0]) - 0.5 * side, -0.5 * side,
                                       0.5 * (b.lo[2] + b.hi[2]) - 0.5 * side};
    VoxelGrid grid(resolution, pitch, origin);

    // Thin surfaces are at least one voxel thick so they never fall between centres.
    // Hosts are painted after the parts mounted on them, so a buried root stays
    // visible as host voxels inside the mounted part's box.
    const double min_half = inflate_thin ? 0.5 * pitch * (1.0 + 1e-9) : 0.0;
    Painter painter(grid);
    for (const auto& n : af.nacelles) {
        painter.paint(n.bounds(), Label::Engine, [&](double x, double y, double z) { return n.contains(x, y, z); });
    }
    if (af.htail) {
        const auto& h = *af.htail;
        painter.paint(h.bounds(min_half), Label::HTail, [&](double x, double y, double z) { return h.contains(x, y, z, min_half); });
    }
    if (af.fin) {
        const auto& f = *af.fin;
        painter.paint(f.bounds(min_half), Label::VTail, [&](double x, double y, double z) { return f.contains(x, y, z, min_half); });
    }
    const auto& w = af.wing;
    painter.paint(w.bounds(min_half), Label::Wing, [&](double x, double y, double z) { return w.contains(x, y, z, min_half); });
    const auto& fus = af.fuselage;
    painter.paint(fus.bounds(), Label::Fuselage, [&](double x, double y, double z) { return fus.contains(x, y, z); });

    grid.meta.topology = g.topology;
    grid.meta.engine_mount = af.engine_mount;
    grid.meta.engine_count = af.engine_count;
    grid.meta.engine_diameter = af.engine_diameter;
    grid.meta.htail_thickness = af.htail_thickness;
    grid.meta.fin_thickness = af.fin_thickness;
    grid.meta.wing_root_thickness = g.wing_thickness * g.wing_root_chord;
    grid.meta.fuselage_diameter = 2.0 * g.fuselage_radius;
    return grid;
}

VoxelGrid voxelize(const AnatomyGenome& genome, const EnvelopeSpec& env, int resolution) {
    return rasterize(project_envelope(genome, env), resolution);
}

namespace {

double characteristic_size(const GridMeta& m, Label l) {
    switch (l) {
    case Label::Engine: return m.engine_diameter;
    case Label::HTail: return m.htail_thickness;
    case Label::VTail: return m.fin_thickness;
    case Label::Wing: return m.wing_root_thickness;
    case Label::Fuselage: return m.fuselage_diameter;
    case Label::Empty: break;
    }
    return 0.0;
}

}  // namespace

std::vector<PartAabb> part_bounds(const VoxelGrid& grid) {
    std::vector<std::size_t> occupied;
    for (std::size_t n = 0; n < grid.size(); ++n) {
        if (grid.labels[n] != Label::Empty) occupied.push_back(n);
    }
    const std::size_t r = static_cast<std::size_t>(grid.resolution);
    auto coords = [r](std::size_t n) {
        return std::array<int, 3>{static_cast<int>(n % r), static_cast<int>((n / r) % r), static_cast<int>(n / (r * r))};
    };

    const int res = grid.resolution;
    struct Offset {
        std::array<int, 3> d;
        std::ptrdiff_t step;
    };
    std::array<Offset, 26> offsets{};
    int nq = 0;
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0 && dz == 0) continue;
                offsets[nq++] = {{dx, dy, dz}, dx + static_cast<std::ptrdiff_t>(res) * (dy + static_cast<std::ptrdiff_t>(res) * dz)};
            }

    std::vector<PartAabb> parts;
    std::vector<std::uint8_t> seen(grid.size(), 0);
    std::vector<std::size_t> stack;
    for (Label label : {Label::Fuselage, Label::Wing, Label::VTail, Label::HTail, Label::Engine}) {
        // a horizontal tail cut in two by the fin or fuselage is still one part
        const bool bridge = label == Label::HTail;
        auto walkable = [&](Label l) { return l == label || (bridge && (l == Label::VTail || l == Label::Fuselage)); };
        for (std::size_t n : occupied) seen[n] = 0;
        for (std::size_t start : occupied) {
            if (grid.labels[start] != label || seen[start]) continue;
            PartAabb box;
            box.part = label;
            box.min = box.max = coords(start);
            box.characteristic_size = characteristic_size(grid.meta, label);
            seen[start] = 1;
            stack.push_back(start);
            while (!stack.empty()) {
                const std::size_t cur = stack.back();
                stack.pop_back();
                const auto c = coords(cur);
                if (grid.labels[cur] == label) {
                    ++box.voxels;
                    for (int a = 0; a < 3; ++a) {
                        box.min[a] = std::min(box.min[a], c[a]);
                        box.max[a] = std::max(box.max[a], c[a]);
                    }
                }
                const bool interior = c[0] > 0 && c[1] > 0 && c[2] > 0 && c[0] < res - 1 && c[1] < res - 1 && c[2] < res - 1;
                for (int q = 0; q < 26; ++q) {
                    std::size_t nb;
                    if (interior) {
                        nb = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(cur) + offsets[q].step);
                    } else {
                        const int x = c[0] + offsets[q].d[0], y = c[1] + offsets[q].d[1], z = c[2] + offsets[q].d[2];
                        if (!grid.in_bounds(x, y, z)) continue;
                        nb = grid.index(x, y, z);
                    }
                    if (seen[nb] || !walkable(grid.labels[nb])) continue;
                    seen[nb] = 1;
                    stack.push_back(nb);
                }
            }
            parts.push_back(box);
        }
    }
    return parts;
}

}  // namespace aerosynth
