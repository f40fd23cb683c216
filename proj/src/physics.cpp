#include "aerosynth/physics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace aerosynth {

void PhysicsConfig::validate() const {
    const std::pair<const char*, double> positive[] = {
        {"air_density", air_density},     {"viscosity", viscosity},           {"gravity", gravity},
        {"tsfc", tsfc},                   {"yield_stress", yield_stress},     {"ultimate_factor", ultimate_factor},
        {"limit_load", limit_load},       {"oswald_e", oswald_e},             {"fuel_density", fuel_density},
        {"fuel_cap_fraction", fuel_cap_fraction}, {"wing_tank_fraction", wing_tank_fraction},
        {"payload_fraction", payload_fraction},   {"payload_density", payload_density},
        {"skin_density", skin_density},   {"downwash_factor", downwash_factor}, {"grace", grace},
        {"range_gate", range_gate},       {"envelope_decay", envelope_decay},
    };
    for (const auto& [name, v] : positive) {
        if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string("physics config: ") + name + " must be positive");
    }
    if (ld_target && !(*ld_target > 0.0)) throw std::invalid_argument("physics config: ld_target must be positive");
    if (!(margin_min < margin_max)) throw std::invalid_argument("physics config: margin_min must be below margin_max");
    if (systems_fraction < 0.0 || prior_weight < 0.0 || ld_tolerance < 0.0)
        throw std::invalid_argument("physics config: fractions and weights must be non-negative");
}

double class_ld_target(double mass_kg) {
    switch (size_tier(mass_kg)) {
    case SizeTier::Small: return 11.0;
    case SizeTier::Medium: return 15.0;
    case SizeTier::Large: return 19.0;
    }
    return 19.0;
}

double ld_target(const MissionSpec& m, const PhysicsConfig& cfg) { return cfg.ld_target.value_or(class_ld_target(m.mass)); }

namespace {

struct GridStats {
    std::array<std::size_t, kLabelCount> count{};
    std::array<std::size_t, kLabelCount> faces{};
    int i_lo = 0, i_hi = -1, k_lo = 0, k_hi = -1, j_lo = 0, j_hi = -1;
};

GridStats grid_stats(const VoxelGrid& grid) {
    GridStats st;
    const int r = grid.resolution;
    st.i_lo = st.j_lo = st.k_lo = r;
    const std::size_t sx = 1, sy = static_cast<std::size_t>(r), sz = sy * sy;
    const auto* lab = grid.labels.data();
    for (int k = 0; k < r; ++k)
        for (int j = 0; j < r; ++j) {
            const std::size_t row = grid.index(0, j, k);
            const bool edge_jk = j == 0 || k == 0 || j == r - 1 || k == r - 1;
            for (int i = 0; i < r; ++i) {
                const std::size_t n = row + static_cast<std::size_t>(i);
                const Label l = lab[n];
                if (l == Label::Empty) continue;
                const auto li = static_cast<std::size_t>(l);
                ++st.count[li];
                st.i_lo = std::min(st.i_lo, i);
                st.i_hi = std::max(st.i_hi, i);
                st.j_lo = std::min(st.j_lo, j);
                st.j_hi = std::max(st.j_hi, j);
                st.k_lo = std::min(st.k_lo, k);
                st.k_hi = std::max(st.k_hi, k);
                if (edge_jk || i == 0 || i == r - 1) {
                    auto open = [&](int a, int b, int c) { return !grid.in_bounds(a, b, c) || grid.at(a, b, c) == Label::Empty; };
                    st.faces[li] += open(i - 1, j, k) + open(i + 1, j, k) + open(i, j - 1, k) + open(i, j + 1, k) +
                                    open(i, j, k - 1) + open(i, j, k + 1);
                } else {
                    st.faces[li] += (lab[n - sx] == Label::Empty) + (lab[n + sx] == Label::Empty) +
                                    (lab[n - sy] == Label::Empty) + (lab[n + sy] == Label::Empty) +
                                    (lab[n - sz] == Label::Empty) + (lab[n + sz] == Label::Empty);
                }
            }
        }
    return st;
}

double skin_friction(double reynolds) {
    const double re = std::max(reynolds, 1e5);
    return 0.455 / std::pow(std::log10(re), 2.58);
}

double surface_form_factor(double tc) { return 1.0 + 2.0 * tc + 60.0 * std::pow(tc, 4); }
double body_form_factor(double f) { return 1.0 + 60.0 / (f * f * f) + f / 400.0; }
double nacelle_form_factor(double f) { return 1.0 + 0.35 / f; }

// Staircase surfaces overcount the area of a round body by about 4/pi.
constexpr double kRoundBodyFaceCorrection = std::numbers::pi / 4.0;

double lift_slope(double aspect, double tan_half_chord_sweep) {
    const double a2 = aspect * aspect * (1.0 + tan_half_chord_sweep * tan_half_chord_sweep);
    return 2.0 * std::numbers::pi * aspect / (2.0 + std::sqrt(4.0 + a2));
}

double half_chord_sweep(const LiftingSurface& s) {
    const double ar = s.aspect_ratio();
    const double taper = s.root_chord > 0.0 ? s.tip_chord / s.root_chord : 1.0;
    return s.tan_sweep - 2.0 * (1.0 - taper) / (ar * (1.0 + taper));
}

struct TailTerm {
    double area = 0;      // effective horizontal area
    double x_ac = 0;
    double slope = 0;
};

std::optional<TailTerm> horizontal_tail(const Airframe& af) {
    if (af.topology == Topology::FlyingWing) return std::nullopt;
    if (af.topology == Topology::VTail) {
        if (!af.fin) return std::nullopt;
        const auto& f = *af.fin;
        const double s = std::sin(f.cant);
        TailTerm t;
        t.area = f.area() * s * s;
        t.x_ac = f.x_at_chord_fraction(0.25);
        const double ar = f.area() > 0.0 ? 4.0 * f.height * f.height / f.area() : 0.0;
        t.slope = ar > 0.0 ? lift_slope(ar, f.tan_sweep) : 0.0;
        return t;
    }
    if (!af.htail) return std::nullopt;
    const auto& h = *af.htail;
    TailTerm t;
    t.area = h.area();
    t.x_ac = h.x_at_chord_fraction(0.25);
    t.slope = lift_slope(h.aspect_ratio(), half_chord_sweep(h));
    return t;
}

double volume_of(const GridStats& st, const VoxelGrid& grid, Label l) {
    return static_cast<double>(st.count[static_cast<std::size_t>(l)]) * grid.voxel_volume();
}

double tank_fuel(const GridStats& st, const VoxelGrid& grid, const MissionSpec& m, const PhysicsConfig& cfg) {
    const double wing_volume = volume_of(st, grid, Label::Wing);
    return std::min(cfg.fuel_density * cfg.wing_tank_fraction * wing_volume, cfg.fuel_cap_fraction * m.mass);
}

double smoothstep(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return t * t * (3.0 - 2.0 * t);
}

Aero lift_to_drag_impl(const AnatomyGenome& g, const GridStats& st, const VoxelGrid& grid, const MissionSpec& m,
                       const PhysicsConfig& cfg) {
    const Airframe af = build_airframe(g, 0.0);
    const double s_ref = af.wing.area();
    if (!(s_ref > 0.0)) throw std::domain_error("lift_to_drag: wing area is zero");

    Aero a;
    a.wing_area = s_ref;
    a.aspect_ratio = af.wing.aspect_ratio();
    const double v = m.cruise_speed;
    const double q = 0.5 * cfg.air_density * v * v;
    a.lift_coefficient = m.mass * cfg.gravity / (q * s_ref);

    const auto& faces = st.faces;
    const double face_area = grid.pitch * grid.pitch;
    auto wet = [&](Label l) { return static_cast<double>(faces[static_cast<std::size_t>(l)]) * face_area; };
    auto reynolds = [&](double length) { return cfg.air_density * v * length / cfg.viscosity; };

    double drag_area = 0.0;
    auto add = [&](double s_wet, double length, double ff) {
        if (s_wet <= 0.0 || length <= 0.0) return;
        a.wetted_area += s_wet;
        drag_area += skin_friction(reynolds(length)) * ff * s_wet;
    };
    const auto& fus = af.fuselage;
    add(wet(Label::Fuselage) * kRoundBodyFaceCorrection, fus.length, body_form_factor(fus.length / (2.0 * fus.radius)));
    add(wet(Label::Wing), af.wing.mac(), surface_form_factor(af.wing.thickness_ratio));
    if (af.htail) add(wet(Label::HTail), af.htail->mac(), surface_form_factor(af.htail->thickness_ratio));
    if (af.fin) add(wet(Label::VTail), af.fin->mean_chord(), surface_form_factor(af.fin->thickness_ratio));
    if (!af.nacelles.empty()) {
        const auto& n = af.nacelles.front();
        add(wet(Label::Engine) * kRoundBodyFaceCorrection, n.length, nacelle_form_factor(n.length / (2.0 * n.radius)));
    }
    a.parasite_drag = drag_area / s_ref;
    a.induced_drag = a.lift_coefficient * a.lift_coefficient / (std::numbers::pi * a.aspect_ratio * cfg.oswald_e);
    a.lift_to_drag = a.lift_coefficient / (a.parasite_drag + a.induced_drag);
    return a;
}

Range breguet_impl(const GridStats& st, const VoxelGrid& grid, double lift_to_drag, const MissionSpec& m,
                   const PhysicsConfig& cfg) {
    Range r;
    r.fuel_mass = tank_fuel(st, grid, m, cfg);
    if (!(r.fuel_mass > 0.0) || !(lift_to_drag > 0.0)) return r;
    const double range_m =
        m.cruise_speed / (cfg.gravity * cfg.tsfc) * lift_to_drag * std::log(m.mass / (m.mass - r.fuel_mass));
    r.range_km = range_m / 1000.0;
    r.ratio = r.range_km / m.range;
    return r;
}

Packaging packaging_impl(const GridStats& st, const VoxelGrid& grid, const MissionSpec& m, const PhysicsConfig& cfg) {
    Packaging p;
    const double fuselage = volume_of(st, grid, Label::Fuselage);
    p.available = fuselage + 0.5 * volume_of(st, grid, Label::Wing);
    p.required = tank_fuel(st, grid, m, cfg) / cfg.fuel_density + cfg.payload_fraction * m.mass / cfg.payload_density +
                 cfg.systems_fraction * fuselage;
    constexpr double kComfort = 1.15;
    p.score = p.required > 0.0 ? smoothstep(p.available / p.required / kComfort) : 1.0;
    return p;
}

Envelope envelope_impl(const GridStats& st, const VoxelGrid& grid, const EnvelopeSpec& env, double decay) {
    Envelope e;
    if (st.i_hi < 0) return e;
    const double y_max = std::max(std::abs(grid.y_of(st.j_lo)), std::abs(grid.y_of(st.j_hi))) + 0.5 * grid.pitch;
    const double over_x = std::max(0.0, (st.i_hi - st.i_lo + 1) * grid.pitch - env.box_length);
    const double over_z = std::max(0.0, (st.k_hi - st.k_lo + 1) * grid.pitch - env.box_height);
    const double over_y = std::max(0.0, y_max - 0.5 * env.box_width);
    e.violation = std::max({over_x, over_y, over_z});
    e.score = std::min({std::exp(-over_x / (decay * env.box_length)), std::exp(-over_y / (decay * env.box_width)),
                        std::exp(-over_z / (decay * env.box_height))});
    return e;
}

}  // namespace

double exposed_area(const VoxelGrid& grid, Label l) {
    return static_cast<double>(grid_stats(grid).faces[static_cast<std::size_t>(l)]) * grid.pitch * grid.pitch;
}

Aero lift_to_drag(const AnatomyGenome& g, const VoxelGrid& grid, const MissionSpec& m, const PhysicsConfig& cfg) {
    return lift_to_drag_impl(g, grid_stats(grid), grid, m, cfg);
}

Range breguet_range_ratio(const VoxelGrid& grid, double lift_to_drag, const MissionSpec& m, const PhysicsConfig& cfg) {
    return breguet_impl(grid_stats(grid), grid, lift_to_drag, m, cfg);
}

double root_stress(const AnatomyGenome& g, const MissionSpec& m, const PhysicsConfig& cfg) {
    const double n = cfg.ultimate_factor * cfg.limit_load;
    const double lift_per_side = 0.5 * n * m.mass * cfg.gravity;
    const double moment = lift_per_side * 0.42 * 0.5 * g.wing_span;
    const double width = 0.5 * g.wing_root_chord;
    const double depth = g.wing_thickness * g.wing_root_chord;
    const double skin = 0.5 * m.areal_density / cfg.skin_density;
    // two flanges of width*skin at +-depth/2: I = width*skin*depth^2/2, Z = I/(depth/2)
    const double modulus = width * skin * depth;
    return moment / modulus;
}

MassBuildup mass_buildup(const Airframe& af, double fuel_mass, const MissionSpec& m, const PhysicsConfig& cfg) {
    MassBuildup b;
    const double ad = m.areal_density;
    const double wing_x = af.wing.x_at_chord_fraction(0.40);
    b.items.push_back({"wing", ad * af.wing.area(), wing_x});

    double tail_mass = 0.0, tail_moment = 0.0;
    if (af.htail) {
        const double mt = 0.6 * ad * af.htail->area();
        tail_mass += mt;
        tail_moment += mt * af.htail->x_at_chord_fraction(0.40);
    }
    if (af.fin) {
        const double mt = 0.6 * ad * af.fin->area();
        tail_mass += mt;
        tail_moment += mt * af.fin->x_at_chord_fraction(0.40);
    }
    if (tail_mass > 0.0) b.items.push_back({"tail", tail_mass, tail_moment / tail_mass});

    b.items.push_back({"engines", 0.06 * m.mass, af.mean_engine_x()});
    const auto& fus = af.fuselage;
    b.items.push_back({"payload", cfg.payload_fraction * m.mass, 0.5 * (fus.nose_length + fus.length - fus.tail_length)});
    b.fuel = {"fuel", fuel_mass, wing_x};

    double fixed = fuel_mass;
    for (const auto& it : b.items) fixed += it.mass;
    b.items.push_back({"fuselage", std::max(0.1 * m.mass, m.mass - fixed), 0.45 * fus.length});
    return b;
}

double MassBuildup::cg(FuelState state) const {
    double mass = 0.0, moment = 0.0;
    for (const auto& it : items) {
        mass += it.mass;
        moment += it.mass * it.x;
    }
    if (state == FuelState::Full) {
        mass += fuel.mass;
        moment += fuel.mass * fuel.x;
    }
    return moment / mass;
}

double neutral_point(const Airframe& af, const PhysicsConfig& cfg) {
    const double x_acw = af.wing.x_at_chord_fraction(0.25);
    const auto tail = horizontal_tail(af);
    if (!tail || tail->area <= 0.0) return x_acw;
    const double a_w = lift_slope(af.wing.aspect_ratio(), half_chord_sweep(af.wing));
    const double volume = tail->area * (tail->x_ac - x_acw) / af.wing.area();
    return x_acw + volume * (tail->slope / a_w) * cfg.downwash_factor;
}

double static_margin(const AnatomyGenome& g, const VoxelGrid& grid, const MissionSpec& m, const PhysicsConfig& cfg,
                     FuelState state) {
    const Airframe af = build_airframe(g, 0.0);
    if (!(af.wing.area() > 0.0)) throw std::domain_error("static_margin: wing area is zero");
    const auto mb = mass_buildup(af, tank_fuel(grid_stats(grid), grid, m, cfg), m, cfg);
    return (neutral_point(af, cfg) - mb.cg(state)) / af.wing.mac();
}

Packaging packaging_score(const VoxelGrid& grid, const MissionSpec& m, const PhysicsConfig& cfg) {
    return packaging_impl(grid_stats(grid), grid, m, cfg);
}

Envelope envelope_penalty(const VoxelGrid& grid, const EnvelopeSpec& env, double decay) {
    return envelope_impl(grid_stats(grid), grid, env, decay);
}

double engine_count_score(int count, int cap) {
    if (count <= cap) return 1.0;
    const double r = static_cast<double>(cap) / count;
    return r * r;
}

double gate_score(double shortfall, double grace_unit) {
    if (!(shortfall > 0.0)) return 1.0;
    // linear to 0.5 across the grace band, then an exponential tail with matching slope
    const double u = shortfall / grace_unit;
    if (u <= 1.0) return 1.0 - 0.5 * u;
    return 0.5 * std::exp(1.0 - u);
}

bool ld_gate(const FitnessBreakdown& b, const PhysicsConfig& cfg) {
    return std::abs(b.lift_to_drag - b.ld_target) <= cfg.ld_tolerance * b.ld_target;
}
bool stress_gate(const FitnessBreakdown& b, const PhysicsConfig& cfg) { return b.root_stress < cfg.yield_stress; }
bool stability_gate(const FitnessBreakdown& b, const PhysicsConfig& cfg) {
    auto in = [&](double h) { return h >= cfg.margin_min && h <= cfg.margin_max; };
    return in(b.static_margin_full) && in(b.static_margin_empty);
}
bool range_gate(const FitnessBreakdown& b, const PhysicsConfig& cfg) { return b.range_ratio >= cfg.range_gate; }

void aggregate_fitness(FitnessBreakdown& b, double mount_multiplier, double prior_penalty, const PhysicsConfig& cfg) {
    b.mount_multiplier = mount_multiplier;
    b.prior_penalty = prior_penalty;
    const std::pair<double, double> terms[] = {
        {b.ld_score, 1.5},       {b.range_score, 1.0},    {b.stress_score, 1.0},      {b.stability_score, 1.5},
        {b.packaging_score, 0.5}, {b.envelope_score, 1.0}, {b.engine_count_score, 1.0},
    };
    double log_sum = 0.0, weight = 0.0;
    bool zero = false;
    for (const auto& [score, w] : terms) {
        if (!(score > 0.0)) zero = true;
        else log_sum += w * std::log(std::min(score, 1.0));
        weight += w;
    }
    const double gm = zero ? 0.0 : std::exp(log_sum / weight);
    const double f = gm * mount_multiplier * std::exp(-cfg.prior_weight * prior_penalty);
    b.fitness = std::isfinite(f) ? std::clamp(f, 0.0, 1.0) : 0.0;

    b.gates_passed = ld_gate(b, cfg) + stress_gate(b, cfg) + stability_gate(b, cfg) + range_gate(b, cfg);
    b.feasible = b.valid && b.gates_passed == 4 && mount_multiplier == 1.0 && b.envelope_violation == 0.0;
}

FitnessBreakdown evaluate(const AnatomyGenome& g, const VoxelGrid& grid, const MissionSpec& m, const PhysicsConfig& cfg,
                          const MountReport& mounts, double prior_penalty, bool use_overlap_penalty) {
    FitnessBreakdown b;
    b.ld_target = ld_target(m, cfg);
    b.engine_count = g.engine_count;
    b.fuselage_fineness = g.fuselage_length / (2.0 * g.fuselage_radius);
    b.prior_penalty = prior_penalty;
    for (const auto& e : mounts.entries) b.mount_min_score = std::min(b.mount_min_score, e.score);
    try {
        const GridStats st = grid_stats(grid);
        const Aero a = lift_to_drag_impl(g, st, grid, m, cfg);
        b.lift_coefficient = a.lift_coefficient;
        b.parasite_drag = a.parasite_drag;
        b.induced_drag = a.induced_drag;
        b.lift_to_drag = a.lift_to_drag;
        b.wing_area = a.wing_area;
        b.aspect_ratio = a.aspect_ratio;
        b.wetted_area = a.wetted_area;
        b.ld_score = gate_score(std::abs(a.lift_to_drag - b.ld_target) - cfg.ld_tolerance * b.ld_target,
                                cfg.grace * b.ld_target);

        const Range r = breguet_impl(st, grid, a.lift_to_drag, m, cfg);
        b.fuel_mass = r.fuel_mass;
        b.breguet_range_km = r.range_km;
        b.range_ratio = r.ratio;
        b.range_score = r.ratio > 0.0 ? gate_score(cfg.range_gate - r.ratio, cfg.grace * cfg.range_gate) : 0.0;

        b.root_stress = root_stress(g, m, cfg);
        b.stress_score = gate_score(b.root_stress - cfg.yield_stress, cfg.grace * cfg.yield_stress);

        const Airframe af = build_airframe(g, 0.0);
        const auto mb = mass_buildup(af, r.fuel_mass, m, cfg);
        const double x_np = neutral_point(af, cfg);
        const double mac = af.wing.mac();
        b.static_margin_full = (x_np - mb.cg(FuelState::Full)) / mac;
        b.static_margin_empty = (x_np - mb.cg(FuelState::Empty)) / mac;
        auto margin_shortfall = [&](double h) { return std::max(cfg.margin_min - h, h - cfg.margin_max); };
        const double unit = cfg.grace * cfg.margin_max;
        b.stability_score = gate_score(margin_shortfall(b.static_margin_full), unit) *
                            gate_score(margin_shortfall(b.static_margin_empty), unit);

        const Packaging p = packaging_impl(st, grid, m, cfg);
        b.required_volume = p.required;
        b.available_volume = p.available;
        b.packaging_score = p.score;

        const Envelope e = envelope_impl(st, grid, m.envelope, cfg.envelope_decay);
        b.envelope_violation = e.violation;
        b.envelope_score = e.score;

        b.engine_count_score = engine_count_score(g.engine_count, m.engine_cap);
    } catch (const std::exception&) {
        b.valid = false;
    }
    for (const auto& [name, v] : b.entries()) {
        if (!std::isfinite(v)) b.valid = false;
    }
    const double multiplier = use_overlap_penalty ? overlap_penalty(mounts.entries) : mounts.multiplier;
    aggregate_fitness(b, multiplier, prior_penalty, cfg);
    if (!b.valid) {
        b.fitness = 0.0;
        b.feasible = false;
    }
    return b;
}

std::vector<std::pair<std::string, double>> FitnessBreakdown::entries() const {
    return {
        {"lift_coefficient", lift_coefficient},
        {"parasite_drag", parasite_drag},
        {"induced_drag", induced_drag},
        {"lift_to_drag", lift_to_drag},
        {"ld_target", ld_target},
        {"ld_score", ld_score},
        {"wing_area", wing_area},
        {"aspect_ratio", aspect_ratio},
        {"wetted_area", wetted_area},
        {"fuel_mass", fuel_mass},
        {"breguet_range_km", breguet_range_km},
        {"range_ratio", range_ratio},
        {"range_score", range_score},
        {"root_stress", root_stress},
        {"stress_score", stress_score},
        {"static_margin_full", static_margin_full},
        {"static_margin_empty", static_margin_empty},
        {"stability_score", stability_score},
        {"required_volume", required_volume},
        {"available_volume", available_volume},
        {"packaging_score", packaging_score},
        {"envelope_violation", envelope_violation},
        {"envelope_score", envelope_score},
        {"engine_count", engine_count},
        {"engine_count_score", engine_count_score},
        {"fuselage_fineness", fuselage_fineness},
        {"prior_penalty", prior_penalty},
        {"mount_multiplier", mount_multiplier},
        {"mount_min_score", mount_min_score},
        {"gates_passed", gates_passed},
        {"fitness", fitness},
        {"feasible", feasible ? 1.0 : 0.0},
        {"valid", valid ? 1.0 : 0.0},
    };
}

}  // namespace aerosynth
