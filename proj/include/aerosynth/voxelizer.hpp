#ifndef AEROSYNTH_VOXELIZER_HPP
#define AEROSYNTH_VOXELIZER_HPP

#include <array>
#include <vector>

#include "aerosynth/voxel_grid.hpp"

namespace aerosynth {

inline constexpr int kDeskResolution = 96;
inline constexpr int kReferenceResolution = 384;
inline constexpr int kMinResolution = 16;

/// Rasterizes the genome by point-membership tests at voxel centres. The cube
/// is fitted to the aircraft with a two-voxel margin. Where solids overlap the
/// host wins: fuselage over wing over fin over horizontal tail over engines.
/// Throws std::invalid_argument for resolution < 16.
VoxelGrid voxelize(const AnatomyGenome& genome, const EnvelopeSpec& env, int resolution);

/// voxelize() without the envelope projection step. With inflate_thin off the
/// solids are sampled as-is, so sub-voxel features may vanish.
VoxelGrid rasterize(const AnatomyGenome& projected, int resolution, bool inflate_thin = true);

struct PartAabb {
    Label part = Label::Empty;
    std::array<int, 3> min{0, 0, 0};
    std::array<int, 3> max{0, 0, 0};
    double characteristic_size = 0;   // m
    std::size_t voxels = 0;
};

/// One box per 26-connected component per label. Horizontal-tail components
/// may connect through fin and fuselage voxels, which overwrite the tail where they cross.
std::vector<PartAabb> part_bounds(const VoxelGrid& grid);

}  // namespace aerosynth

#endif  // AEROSYNTH_VOXELIZER_HPP
