#ifndef AEROSYNTH_AIRFRAME_HPP
#define AEROSYNTH_AIRFRAME_HPP

#include <array>
#include <optional>
#include <vector>

#include "aerosynth/anatomy.hpp"

namespace aerosynth {

// Analytic solids derived from a genome. Body axes: x aft from the nose tip,
// y to starboard, z up. Everything is symmetric about y = 0.

struct Box3 {
    std::array<double, 3> lo{0, 0, 0};
    std::array<double, 3> hi{0, 0, 0};

    void extend(const Box3& o);
    double extent(int axis) const { return hi[axis] - lo[axis]; }
};

inline constexpr double kTailUpsweepDeg = 6.0;
inline constexpr double kYehudiStation = 0.30;

struct FuselageShape {
    double length = 0;
    double radius = 0;
    double nose_length = 0;
    double tail_length = 0;
    double tan_upsweep = 0;

    double radius_at(double x) const;
    double centerline_z(double x) const;
    bool contains(double x, double y, double z) const;
    Box3 bounds() const;
    double volume() const;   // solid of revolution
};

/// Trapezoidal panel pair with an optional spanwise kink. Used for the main
/// wing (kink = yehudi break) and the horizontal tail (no kink).
struct LiftingSurface {
    double semispan = 0;
    double y_break = 0;
    double root_chord = 0;
    double break_chord = 0;
    double tip_chord = 0;
    double x_le_root = 0;
    double tan_sweep = 0;      // leading edge
    double z_root = 0;
    double tan_dihedral = 0;
    double thickness_ratio = 0.12;

    double chord(double y) const;
    double x_le(double y) const;
    double z_mid(double y) const;
    /// Both sides.
    double area() const;
    double span() const { return 2.0 * semispan; }
    double aspect_ratio() const;
    double mac() const;
    /// Area-weighted station at fraction `frac` of local chord (0.25 = aerodynamic centre).
    double x_at_chord_fraction(double frac) const;
    bool contains(double x, double y, double z, double min_half_thickness) const;
    Box3 bounds(double min_half_thickness) const;
};

/// Vertical fin, or one of a mirrored canted pair for the V-tail class.
struct FinShape {
    double x_le_root = 0;
    double z_root = 0;
    double height = 0;        // along the surface
    double root_chord = 0;
    double taper = 0.5;
    double tan_sweep = 0;
    double cant = 0;          // rad from vertical
    double thickness_ratio = 0.12;
    bool pair = false;

    double chord_at(double s) const;
    double x_le_at(double s) const;
    /// Planform area of all panels.
    double area() const;
    double mean_chord() const { return root_chord * (1.0 + taper) * 0.5; }
    double x_at_chord_fraction(double frac) const;
    bool contains(double x, double y, double z, double min_half_thickness) const;
    Box3 bounds(double min_half_thickness) const;
};

enum class EngineMount : std::uint8_t { FuselageRear = 0, FuselageSide, WingPod };

struct Nacelle {
    double xc = 0;
    double yc = 0;   // >= 0; yc > 0 means a mirrored pair
    double zc = 0;
    double length = 0;
    double radius = 0;

    bool contains(double x, double y, double z) const;
    Box3 bounds() const;
};

struct Airframe {
    Topology topology = Topology::Conventional;
    FuselageShape fuselage;
    LiftingSurface wing;
    std::optional<FinShape> fin;
    std::optional<LiftingSurface> htail;
    EngineMount engine_mount = EngineMount::WingPod;
    int engine_count = 2;
    std::vector<Nacelle> nacelles;   // one entry per station, mirrored when yc > 0

    /// Characteristic sizes used by mount scoring.
    double engine_diameter = 0;
    double htail_thickness = 0;
    double fin_thickness = 0;

    /// Minimum rendered feature size the layout was built for (0 = analytic).
    double min_feature = 0;

    Box3 bounds() const;
    double mean_engine_x() const;
};

/// Lays the solids out from the genome. `min_feature` is the voxel pitch the
/// layout will be rasterized at; it inflates sub-voxel features so every part
/// stays visible and keeps single-engine nozzles at least two voxels proud.
Airframe build_airframe(const AnatomyGenome& g, double min_feature = 0.0);

/// Radius of the fuselage at station x_frac in [0, 1] of its length.
double fuselage_radius_profile(double x_frac, const AnatomyGenome& g);

}  // namespace aerosynth

#endif  // AEROSYNTH_AIRFRAME_HPP
