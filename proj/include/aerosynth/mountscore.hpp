#ifndef AEROSYNTH_MOUNTSCORE_HPP
#define AEROSYNTH_MOUNTSCORE_HPP

#include <optional>
#include <span>
#include <vector>

#include "aerosynth/voxelizer.hpp"

namespace aerosynth {

/// Penetration thresholds as fractions of the part's characteristic size.
struct MountThresholds {
    double d_m = 0.05;   // firm mount
    double d_g = 0.15;   // good mount, score saturates
    double d_x = 0.50;   // largest tolerated gap

    void validate() const;
};

inline constexpr double kFirmMountScore = 0.75;
inline constexpr double kMountPenaltyFloor = 0.05;

/// Five-branch piecewise-linear attachment score in [0, 1].
/// Throws std::domain_error when e <= 0.
double mount_score(double d, double e, const MountThresholds& t);

/// Labels a part may attach to; empty when the label is not a mounted part.
std::vector<Label> host_labels(Label part, Topology topology);

/// 0 = x, 1 = y, 2 = z.
int mount_axis(Label part, const GridMeta& meta);

struct Penetration {
    double depth = 0;          // m, > 0 overlapping, < 0 separated
    Label host = Label::Empty; // host label that produced the depth
};

/// Signed penetration between the part's box and its nearest host voxels.
/// Overlap depth is the host extent inside the box along the mount axis;
/// separation is the Euclidean count of empty voxels between them.
/// Returns nullopt when the part has no host (not applicable) or no host voxel exists.
std::optional<Penetration> penetration_depth(const PartAabb& part, const VoxelGrid& grid);

struct MountEntry {
    std::size_t part_index = 0;   // into the part_bounds() list
    Label part = Label::Empty;
    Label host = Label::Empty;
    double depth = 0;
    double size = 0;
    double score = 0;
};

struct MountReport {
    std::vector<MountEntry> entries;
    double multiplier = 1.0;
    std::size_t not_applicable = 0;
};

/// Product over parts below the firm-mount score of max(S, floor).
double mount_penalty(std::span<const MountEntry> entries, double floor = kMountPenaltyFloor);

MountReport evaluate_mounts(const VoxelGrid& grid, const std::vector<PartAabb>& parts, const MountThresholds& t);

/// Plain interpenetration penalty used when the mount score is ablated: it
/// charges overlap depth and ignores gaps entirely.
double overlap_penalty(std::span<const MountEntry> entries, double floor = kMountPenaltyFloor);

}  // namespace aerosynth

#endif  // AEROSYNTH_MOUNTSCORE_HPP
