#include "aerosynth/airframe.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace aerosynth {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

constexpr double kFinAspectRatio = 1.5;
constexpr double kFinTaper = 0.5;
constexpr double kHtailTaper = 0.6;
constexpr double kNoseTailMaxFraction = 0.9;
constexpr double kRearMountStart = 0.70;   // nacelle must start aft of this fraction
constexpr double kPodOffset = 0.35;        // nacelle centre below mount line, in diameters

struct PanelIntegrals {
    double c = 0;     // ∫ c dy
    double c2 = 0;    // ∫ c² dy
    double cx = 0;    // ∫ c·x_le dy
};

PanelIntegrals panel(double len, double c1, double c2, double x1, double x2) {
    PanelIntegrals p;
    p.c = len * (c1 + c2) / 2.0;
    p.c2 = len * (c1 * c1 + c1 * c2 + c2 * c2) / 3.0;
    p.cx = len * (2.0 * c1 * x1 + c1 * x2 + c2 * x1 + 2.0 * c2 * x2) / 6.0;
    return p;
}

PanelIntegrals surface_integrals(const LiftingSurface& s) {
    PanelIntegrals in = panel(s.y_break, s.root_chord, s.break_chord, s.x_le(0.0), s.x_le(s.y_break));
    PanelIntegrals out = panel(s.semispan - s.y_break, s.break_chord, s.tip_chord, s.x_le(s.y_break), s.x_le(s.semispan));
    return {in.c + out.c, in.c2 + out.c2, in.cx + out.cx};
}

double thin_half_thickness(double thickness_ratio, double chord, double xi, double min_half) {
    return std::max(2.0 * thickness_ratio * chord * xi * (1.0 - xi), min_half);
}

}  // namespace

void Box3::extend(const Box3& o) {
    for (int a = 0; a < 3; ++a) {
        lo[a] = std::min(lo[a], o.lo[a]);
        hi[a] = std::max(hi[a], o.hi[a]);
    }
}

// ---- fuselage -------------------------------------------------------------

double FuselageShape::radius_at(double x) const {
    if (x < 0.0 || x > length) return 0.0;
    if (x < nose_length) {
        const double t = 1.0 - x / nose_length;
        return radius * std::sqrt(std::max(0.0, 1.0 - t * t));
    }
    const double tail_start = length - tail_length;
    if (x > tail_start) return radius * (length - x) / tail_length;
    return radius;
}

double FuselageShape::centerline_z(double x) const {
    const double tail_start = length - tail_length;
    if (x <= tail_start) return 0.0;
    return (std::min(x, length) - tail_start) * tan_upsweep;
}

bool FuselageShape::contains(double x, double y, double z) const {
    if (x < 0.0 || x > length) return false;
    const double r = radius_at(x);
    const double dz = z - centerline_z(x);
    return y * y + dz * dz <= r * r;
}

Box3 FuselageShape::bounds() const {
    Box3 b;
    b.lo = {0.0, -radius, -radius};
    b.hi = {length, radius, radius + tail_length * tan_upsweep};
    return b;
}

double FuselageShape::volume() const {
    // ellipsoidal nose + cylinder + cone
    const double pi = std::numbers::pi;
    const double mid = std::max(0.0, length - nose_length - tail_length);
    return pi * radius * radius * (2.0 / 3.0 * nose_length + mid + tail_length / 3.0);
}

// ---- lifting surfaces ------------------------------------------------------

double LiftingSurface::chord(double y) const {
    y = std::abs(y);
    if (y <= y_break && y_break > 0.0) return root_chord + (break_chord - root_chord) * (y / y_break);
    const double outboard = semispan - y_break;
    if (outboard <= 0.0) return break_chord;
    return break_chord + (tip_chord - break_chord) * ((y - y_break) / outboard);
}

double LiftingSurface::x_le(double y) const { return x_le_root + std::abs(y) * tan_sweep; }
double LiftingSurface::z_mid(double y) const { return z_root + std::abs(y) * tan_dihedral; }

double LiftingSurface::area() const { return 2.0 * surface_integrals(*this).c; }

double LiftingSurface::aspect_ratio() const {
    const double s = area();
    return s > 0.0 ? span() * span() / s : 0.0;
}

double LiftingSurface::mac() const {
    const auto in = surface_integrals(*this);
    return in.c > 0.0 ? in.c2 / in.c : 0.0;
}

double LiftingSurface::x_at_chord_fraction(double frac) const {
    const auto in = surface_integrals(*this);
    return in.c > 0.0 ? (in.cx + frac * in.c2) / in.c : x_le_root;
}

bool LiftingSurface::contains(double x, double y, double z, double min_half_thickness) const {
    const double ya = std::abs(y);
    if (ya > semispan) return false;
    const double c = chord(ya);
    if (c <= 0.0) return false;
    const double xi = (x - x_le(ya)) / c;
    if (xi < 0.0 || xi > 1.0) return false;
    const double half = thin_half_thickness(thickness_ratio, c, xi, min_half_thickness);
    return std::abs(z - z_mid(ya)) <= half;
}

Box3 LiftingSurface::bounds(double min_half_thickness) const {
    const double half = std::max(thickness_ratio * root_chord * 0.5, min_half_thickness);
    const double x_te = std::max({x_le_root + root_chord, x_le(y_break) + break_chord, x_le(semispan) + tip_chord});
    const double z_tip = semispan * tan_dihedral;
    Box3 b;
    b.lo = {x_le_root, -semispan, z_root + std::min(0.0, z_tip) - half};
    b.hi = {x_te, semispan, z_root + std::max(0.0, z_tip) + half};
    return b;
}

// ---- fin -------------------------------------------------------------------

double FinShape::chord_at(double s) const { return root_chord * (1.0 - (1.0 - taper) * (s / height)); }
double FinShape::x_le_at(double s) const { return x_le_root + s * tan_sweep; }

double FinShape::area() const {
    const double panel_area = height * root_chord * (1.0 + taper) / 2.0;
    return pair ? 2.0 * panel_area : panel_area;
}

double FinShape::x_at_chord_fraction(double frac) const {
    const auto p = panel(height, root_chord, root_chord * taper, x_le_root, x_le_at(height));
    return p.c > 0.0 ? (p.cx + frac * p.c2) / p.c : x_le_root;
}

bool FinShape::contains(double x, double y, double z, double min_half_thickness) const {
    const double ya = std::abs(y);
    const double dz = z - z_root;
    const double sc = std::sin(cant);
    const double cc = std::cos(cant);
    const double s = ya * sc + dz * cc;
    if (s < 0.0 || s > height) return false;
    const double n = ya * cc - dz * sc;
    const double c = chord_at(s);
    const double xi = (x - x_le_at(s)) / c;
    if (xi < 0.0 || xi > 1.0) return false;
    return std::abs(n) <= thin_half_thickness(thickness_ratio, c, xi, min_half_thickness);
}

Box3 FinShape::bounds(double min_half_thickness) const {
    const double half = std::max(thickness_ratio * root_chord * 0.5, min_half_thickness);
    const double y_reach = height * std::sin(cant) + half;
    Box3 b;
    b.lo = {x_le_root, -y_reach, z_root - half};
    b.hi = {std::max(x_le_root + root_chord, x_le_at(height) + root_chord * taper), y_reach,
            z_root + height * std::cos(cant) + half};
    return b;
}

// ---- nacelle ---------------------------------------------------------------

bool Nacelle::contains(double x, double y, double z) const {
    if (std::abs(x - xc) > 0.5 * length) return false;
    const double dy = std::abs(y) - yc;
    const double dz = z - zc;
    return dy * dy + dz * dz <= radius * radius;
}

Box3 Nacelle::bounds() const {
    Box3 b;
    b.lo = {xc - 0.5 * length, -(yc + radius), zc - radius};
    b.hi = {xc + 0.5 * length, yc + radius, zc + radius};
    return b;
}

// ---- layout ----------------------------------------------------------------

Box3 Airframe::bounds() const {
    const double half = 0.5 * min_feature;
    Box3 b = fuselage.bounds();
    b.extend(wing.bounds(half));
    if (fin) b.extend(fin->bounds(half));
    if (htail) b.extend(htail->bounds(half));
    for (const auto& n : nacelles) b.extend(n.bounds());
    return b;
}

double Airframe::mean_engine_x() const {
    if (nacelles.empty()) return fuselage.length * 0.5;
    double sum = 0.0;
    for (const auto& n : nacelles) sum += n.xc;
    return sum / static_cast<double>(nacelles.size());
}

Airframe build_airframe(const AnatomyGenome& g, double min_feature) {
    Airframe af;
    af.topology = g.topology;
    af.min_feature = min_feature;

    auto& fus = af.fuselage;
    fus.length = g.fuselage_length;
    fus.radius = g.fuselage_radius;
    fus.nose_length = g.nose_fineness * g.fuselage_radius;
    fus.tail_length = g.tailcone_fineness * g.fuselage_radius;
    const double taper_total = fus.nose_length + fus.tail_length;
    if (taper_total > kNoseTailMaxFraction * fus.length) {
        const double k = kNoseTailMaxFraction * fus.length / taper_total;
        fus.nose_length *= k;
        fus.tail_length *= k;
    }
    fus.tan_upsweep = std::tan(kTailUpsweepDeg * kDegToRad);

    auto& w = af.wing;
    w.semispan = 0.5 * g.wing_span;
    w.y_break = kYehudiStation * w.semispan;
    w.root_chord = g.wing_root_chord;
    w.tip_chord = g.wing_taper * g.wing_root_chord;
    w.tan_sweep = std::tan(g.wing_sweep * kDegToRad);
    // inboard trailing edge unswept where the planform allows it
    w.break_chord = std::clamp(w.root_chord - w.y_break * w.tan_sweep, w.tip_chord, w.root_chord);
    w.x_le_root = g.wing_x_pos * fus.length;
    w.z_root = g.wing_z_pos * fus.radius;
    w.tan_dihedral = std::tan(g.wing_dihedral * kDegToRad);
    w.thickness_ratio = g.wing_thickness;

    if (g.topology != Topology::FlyingWing && g.vtail_exists) {
        FinShape fin;
        fin.pair = g.topology == Topology::VTail;
        fin.cant = fin.pair ? g.vtail_cant * kDegToRad : 0.0;
        const double panel_area = fin.pair ? 0.5 * g.vtail_size : g.vtail_size;
        fin.height = std::sqrt(kFinAspectRatio * panel_area);
        fin.taper = kFinTaper;
        fin.root_chord = 2.0 * panel_area / (fin.height * (1.0 + fin.taper));
        fin.tan_sweep = std::tan(g.vtail_sweep * kDegToRad);
        fin.thickness_ratio = g.wing_thickness;
        fin.x_le_root = std::max(0.45 * fus.length, 0.98 * fus.length - fin.root_chord);
        fin.z_root = fus.centerline_z(fin.x_le_root) + 0.6 * fus.radius_at(fin.x_le_root);
        af.fin_thickness = g.wing_thickness * fin.root_chord;
        af.fin = fin;

        if (!fin.pair && g.htail_exists) {
            LiftingSurface h;
            h.semispan = 0.5 * g.htail_span;
            h.y_break = 0.0;
            h.root_chord = g.htail_chord;
            h.break_chord = g.htail_chord;
            h.tip_chord = kHtailTaper * g.htail_chord;
            h.tan_sweep = std::tan(std::min(g.wing_sweep + 5.0, 45.0) * kDegToRad);
            const double mount_height = g.htail_z_pos * fin.height;
            h.x_le_root = fin.x_le_at(mount_height);
            h.z_root = fin.z_root + mount_height;
            h.tan_dihedral = 0.0;
            h.thickness_ratio = g.wing_thickness;
            af.htail_thickness = g.wing_thickness * g.htail_chord;
            af.htail = h;
        }
    }

    const double radius = std::max(0.5 * g.engine_size, 0.75 * min_feature);
    const double diameter = 2.0 * radius;
    af.engine_diameter = diameter;
    af.engine_count = g.engine_count;

    if (g.engine_count == 1) {
        af.engine_mount = EngineMount::FuselageRear;
        const double nozzle = std::max(0.25 * g.engine_length, 2.0 * min_feature);
        // clear any root trailing edge that overhangs the tail cone, or the host-wins paint hides the nozzle
        double x_clear = std::max(fus.length, w.x_le_root + w.root_chord);
        if (af.fin) x_clear = std::max(x_clear, af.fin->x_le_root + af.fin->root_chord);
        if (af.htail) x_clear = std::max(x_clear, af.htail->x_le_root + af.htail->root_chord);
        const double x_aft = x_clear + nozzle;
        const double x_front_min = kRearMountStart * fus.length + 1.5 * min_feature;
        Nacelle n;
        n.length = std::min(g.engine_length, x_aft - x_front_min);
        n.xc = x_aft - 0.5 * n.length;
        n.yc = 0.0;
        n.zc = fus.centerline_z(n.xc);
        n.radius = radius;
        af.nacelles.push_back(n);
    } else if (g.engine_count == 2 && g.engine_x_pos > 0.75) {
        af.engine_mount = EngineMount::FuselageSide;
        Nacelle n;
        n.length = g.engine_length;
        n.xc = g.engine_x_pos * fus.length;
        n.yc = fus.radius_at(n.xc) + kPodOffset * diameter;
        n.zc = fus.centerline_z(n.xc);
        n.radius = radius;
        af.nacelles.push_back(n);
    } else {
        af.engine_mount = EngineMount::WingPod;
        std::vector<double> stations;
        const double y_out = g.engine_spanwise * w.semispan;
        if (g.engine_count == 4) stations = {0.5 * y_out, y_out};
        else stations = {y_out};
        for (double y : stations) {
            Nacelle n;
            n.length = g.engine_length;
            n.xc = g.engine_x_pos * fus.length;
            n.yc = y;
            n.zc = w.z_mid(y) - kPodOffset * diameter;
            n.radius = radius;
            af.nacelles.push_back(n);
        }
    }
    return af;
}

double fuselage_radius_profile(double x_frac, const AnatomyGenome& g) {
    const auto af = build_airframe(g);
    return af.fuselage.radius_at(std::clamp(x_frac, 0.0, 1.0) * af.fuselage.length);
}

}  // namespace aerosynth
