#ifndef AEROSYNTH_VOXEL_GRID_HPP
#define AEROSYNTH_VOXEL_GRID_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "aerosynth/airframe.hpp"

namespace aerosynth {

enum class Label : std::uint8_t { Empty = 0, Fuselage, Wing, VTail, HTail, Engine };
inline constexpr std::size_t kLabelCount = 6;

std::string_view label_name(Label l);

/// Per-grid facts the rasterizer knows and downstream scoring needs.
struct GridMeta {
    Topology topology = Topology::Conventional;
    EngineMount engine_mount = EngineMount::WingPod;
    int engine_count = 0;
    double engine_diameter = 0;
    double htail_thickness = 0;
    double fin_thickness = 0;
    double wing_root_thickness = 0;
    double fuselage_diameter = 0;
};

/// Dense cubic label grid. Index order is x-fastest: i + R*(j + R*k).
struct VoxelGrid {
    int resolution = 0;
    double pitch = 0;
    std::array<double, 3> origin{0, 0, 0};
    std::vector<Label> labels;
    GridMeta meta;

    VoxelGrid() = default;
    VoxelGrid(int res, double pitch_m, std::array<double, 3> origin_m);

    std::size_t size() const { return labels.size(); }
    std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) + static_cast<std::size_t>(resolution) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(resolution) * static_cast<std::size_t>(k));
    }
    Label at(int i, int j, int k) const { return labels[index(i, j, k)]; }
    Label& at(int i, int j, int k) { return labels[index(i, j, k)]; }
    bool in_bounds(int i, int j, int k) const {
        return i >= 0 && j >= 0 && k >= 0 && i < resolution && j < resolution && k < resolution;
    }

    /// Voxel-centre coordinates. The y axis is exactly antisymmetric about the centre plane.
    double x_of(int i) const { return origin[0] + (i + 0.5) * pitch; }
    double y_of(int j) const { return ((j + 0.5) - 0.5 * resolution) * pitch; }
    double z_of(int k) const { return origin[2] + (k + 0.5) * pitch; }

    std::size_t count(Label l) const;
    std::size_t occupied() const;
    double voxel_volume() const { return pitch * pitch * pitch; }

    bool operator==(const VoxelGrid& o) const {
        return resolution == o.resolution && pitch == o.pitch && origin == o.origin && labels == o.labels;
    }
};

/// Grid mirrored about the y = 0 centre plane.
VoxelGrid mirrored(const VoxelGrid& g);

// ---- serialization ---------------------------------------------------------
// Flat file: "AVXG" | u32 version | u32 resolution | f64 pitch | f64 origin[3] | R^3 label bytes.
// RLE:       "AVXR" | u32 version | u32 resolution | f64 pitch | f64 origin[3] | u32 runs | runs × (u8 label, u32 length).
// All integers and floats little-endian.

std::vector<std::uint8_t> encode_flat(const VoxelGrid& g);
VoxelGrid decode_flat(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_rle(const VoxelGrid& g);
VoxelGrid decode_rle(std::span<const std::uint8_t> bytes);

/// FNV-1a 64 over the raw label bytes, as 16 lowercase hex digits.
std::string label_checksum(const VoxelGrid& g);

void write_grid_file(const std::string& path, const VoxelGrid& g);
VoxelGrid read_grid_file(const std::string& path);

class GridFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace aerosynth

#endif  // AEROSYNTH_VOXEL_GRID_HPP
