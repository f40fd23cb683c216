#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "aerosynth/physics.hpp"

using namespace aerosynth;

namespace {

VoxelGrid box_grid(int r, double pitch, Label l, int nx, int ny, int nz) {
    VoxelGrid g(r, pitch, {0, 0, 0});
    for (int k = 2; k < 2 + nz; ++k)
        for (int j = 2; j < 2 + ny; ++j)
            for (int i = 2; i < 2 + nx; ++i) g.at(i, j, k) = l;
    return g;
}

double cf(double re) { return 0.455 / std::pow(std::log10(std::max(re, 1e5)), 2.58); }

FitnessBreakdown all_ones() {
    FitnessBreakdown b;
    b.ld_score = b.range_score = b.stress_score = b.stability_score = 1.0;
    b.packaging_score = b.envelope_score = b.engine_count_score = 1.0;
    b.lift_to_drag = b.ld_target = 15.0;
    b.range_ratio = 1.2;
    b.root_stress = 100e6;
    b.static_margin_full = b.static_margin_empty = 0.12;
    return b;
}

}  // namespace

TEST_CASE("class lift-to-drag targets by mass tier") {
    CHECK(class_ld_target(600.0) == 11.0);
    CHECK(class_ld_target(12000.0) == 15.0);
    CHECK(class_ld_target(45000.0) == 19.0);
    PhysicsConfig cfg;
    cfg.ld_target = 17.0;
    CHECK(ld_target(MissionSpec{}, cfg) == 17.0);
}

TEST_CASE("exposed area of a voxel box is its surface") {
    const double pitch = 0.25;
    const auto g = box_grid(16, pitch, Label::Wing, 5, 3, 2);
    CHECK(exposed_area(g, Label::Wing) == doctest::Approx(2.0 * (5 * 3 + 3 * 2 + 5 * 2) * pitch * pitch));
    CHECK(exposed_area(g, Label::Fuselage) == 0.0);
}

TEST_CASE("lift-to-drag follows the component drag build-up") {
    const MissionSpec m;
    const PhysicsConfig cfg;
    const AnatomyGenome g;
    const auto grid = voxelize(g, m.envelope, 64);
    const auto a = lift_to_drag(g, grid, m, cfg);
    const Airframe af = build_airframe(g, 0.0);
    const double q = 0.5 * cfg.air_density * m.cruise_speed * m.cruise_speed;
    const double s = af.wing.area();
    const double cl = m.mass * cfg.gravity / (q * s);
    auto re = [&](double len) { return cfg.air_density * m.cruise_speed * len / cfg.viscosity; };
    const double f = af.fuselage.length / (2 * af.fuselage.radius);
    double cd0 = 0.0;
    cd0 += cf(re(af.fuselage.length)) * (1 + 60 / (f * f * f) + f / 400) * exposed_area(grid, Label::Fuselage) * std::numbers::pi / 4;
    const double tc = af.wing.thickness_ratio;
    cd0 += cf(re(af.wing.mac())) * (1 + 2 * tc + 60 * std::pow(tc, 4)) * exposed_area(grid, Label::Wing);
    const double th = af.htail->thickness_ratio;
    cd0 += cf(re(af.htail->mac())) * (1 + 2 * th + 60 * std::pow(th, 4)) * exposed_area(grid, Label::HTail);
    const double tv = af.fin->thickness_ratio;
    cd0 += cf(re(af.fin->mean_chord())) * (1 + 2 * tv + 60 * std::pow(tv, 4)) * exposed_area(grid, Label::VTail);
    const auto& n = af.nacelles.front();
    cd0 += cf(re(n.length)) * (1 + 0.35 / (n.length / (2 * n.radius))) * exposed_area(grid, Label::Engine) * std::numbers::pi / 4;
    cd0 /= s;
    const double cdi = cl * cl / (std::numbers::pi * af.wing.aspect_ratio() * cfg.oswald_e);
    CHECK(a.lift_coefficient == doctest::Approx(cl).epsilon(1e-12));
    CHECK(a.parasite_drag == doctest::Approx(cd0).epsilon(1e-9));
    CHECK(a.induced_drag == doctest::Approx(cdi).epsilon(1e-12));
    CHECK(a.lift_to_drag == doctest::Approx(cl / (cd0 + cdi)).epsilon(1e-9));
    CHECK(a.lift_to_drag > 5.0);
    CHECK(a.lift_to_drag < 30.0);
}

TEST_CASE("skin friction is clamped at low Reynolds number") {
    MissionSpec m;
    m.cruise_speed = 1e-3;
    PhysicsConfig cfg;
    const AnatomyGenome g;
    const auto grid = voxelize(g, m.envelope, 32);
    const auto a = lift_to_drag(g, grid, m, cfg);
    CHECK(std::isfinite(a.parasite_drag));
    CHECK(a.parasite_drag > 0.0);
}

TEST_CASE("Breguet range from wing tank fuel") {
    const MissionSpec m;
    const PhysicsConfig cfg;
    const auto grid = box_grid(32, 0.5, Label::Wing, 20, 10, 2);   // 50 m^3 of wing
    const auto r = breguet_range_ratio(grid, 18.0, m, cfg);
    const double fuel = std::min(800.0 * 0.5 * 50.0, 0.45 * m.mass);
    CHECK(r.fuel_mass == doctest::Approx(fuel));
    const double km = m.cruise_speed / (cfg.gravity * cfg.tsfc) * 18.0 * std::log(m.mass / (m.mass - fuel)) / 1000.0;
    CHECK(r.range_km == doctest::Approx(km).epsilon(1e-12));
    CHECK(r.ratio == doctest::Approx(km / m.range).epsilon(1e-12));
    const auto big = box_grid(32, 1.0, Label::Wing, 25, 25, 25);
    CHECK(breguet_range_ratio(big, 18.0, m, cfg).fuel_mass == doctest::Approx(0.45 * m.mass));
}

TEST_CASE("root stress of the flange box") {
    const MissionSpec m;
    const PhysicsConfig cfg;
    AnatomyGenome g;
    g.wing_span = 32.0;
    g.wing_root_chord = 6.0;
    g.wing_thickness = 0.12;
    const double n = 1.5 * 3.5;
    const double moment = 0.5 * n * m.mass * cfg.gravity * 0.42 * 16.0;
    const double z = (0.5 * 6.0) * (0.5 * m.areal_density / 2700.0) * (0.12 * 6.0);
    CHECK(root_stress(g, m, cfg) == doctest::Approx(moment / z).epsilon(1e-12));
}

TEST_CASE("mass build-up sums to MTOW when full") {
    const MissionSpec m;
    const PhysicsConfig cfg;
    const Airframe af = build_airframe(AnatomyGenome{}, 0.0);
    const auto mb = mass_buildup(af, 9000.0, m, cfg);
    double total = mb.fuel.mass;
    for (const auto& it : mb.items) total += it.mass;
    CHECK(total == doctest::Approx(m.mass));
    CHECK(mb.cg(FuelState::Full) > 0.0);
    CHECK(mb.cg(FuelState::Full) < af.fuselage.length);
}

TEST_CASE("flying wing neutral point is the wing aerodynamic centre") {
    AnatomyGenome g;
    g.topology = Topology::FlyingWing;
    conform_to_topology(g);
    const Airframe af = build_airframe(g, 0.0);
    CHECK(neutral_point(af, PhysicsConfig{}) == doctest::Approx(af.wing.x_at_chord_fraction(0.25)));
    const Airframe conv = build_airframe(AnatomyGenome{}, 0.0);
    CHECK(neutral_point(conv, PhysicsConfig{}) > conv.wing.x_at_chord_fraction(0.25));
}

TEST_CASE("gate shaping") {
    CHECK(gate_score(-1.0, 2.0) == 1.0);
    CHECK(gate_score(0.0, 2.0) == 1.0);
    CHECK(gate_score(1.0, 2.0) == doctest::Approx(0.75));
    CHECK(gate_score(2.0, 2.0) == doctest::Approx(0.5));
    CHECK(gate_score(2.0 + 1e-9, 2.0) == doctest::Approx(0.5));
    CHECK(gate_score(6.0, 2.0) == doctest::Approx(0.5 * std::exp(-2.0)));
    double prev = 1.0;
    for (int n = 0; n < 1000; ++n) {
        const double s = gate_score(n * 0.01, 1.0);
        CHECK(s <= prev);
        prev = s;
    }
}

TEST_CASE("engine count score") {
    CHECK(engine_count_score(1, 2) == 1.0);
    CHECK(engine_count_score(2, 2) == 1.0);
    CHECK(engine_count_score(4, 2) == doctest::Approx(0.25));
    CHECK(engine_count_score(2, 1) == doctest::Approx(0.25));
}

TEST_CASE("packaging score saturates with spare volume") {
    MissionSpec m;
    m.mass = 600.0;
    const auto roomy = box_grid(40, 0.5, Label::Fuselage, 20, 4, 4);   // 40 m^3
    const auto p = packaging_score(roomy, m, PhysicsConfig{});
    CHECK(p.available == doctest::Approx(40.0));
    CHECK(p.required == doctest::Approx(0.2 * 600.0 / 160.0 + 0.08 * 40.0));
    CHECK(p.score == 1.0);
    m.mass = 45000.0;
    CHECK(packaging_score(roomy, m, PhysicsConfig{}).score < 1.0);
}

TEST_CASE("envelope overhang on a synthetic box") {
    const auto g = box_grid(40, 0.5, Label::Fuselage, 30, 8, 4);   // 15 x 4 x 2 m
    EnvelopeSpec env;
    env.box_length = 12.0;
    env.box_width = 30.0;   // the slab sits off-centre in y
    env.box_height = 3.0;
    const auto e = envelope_penalty(g, env, 0.02);
    CHECK(e.violation == doctest::Approx(3.0));
    CHECK(e.score == doctest::Approx(std::exp(-3.0 / (0.02 * 12.0))));
    env.box_length = 20.0;
    const auto ok = envelope_penalty(g, env, 0.02);
    CHECK(ok.violation == 0.0);
    CHECK(ok.score == 1.0);
}

TEST_CASE("aggregate fitness is the weighted geometric mean times the multipliers") {
    PhysicsConfig cfg;
    auto b = all_ones();
    b.ld_score = 0.5;
    b.packaging_score = 0.8;
    aggregate_fitness(b, 0.9, 2.0, cfg);
    const double gm = std::exp((1.5 * std::log(0.5) + 0.5 * std::log(0.8)) / 7.5);
    CHECK(b.fitness == doctest::Approx(gm * 0.9 * std::exp(-0.05 * 2.0)).epsilon(1e-12));
    CHECK_FALSE(b.feasible);   // multiplier below 1

    auto f = all_ones();
    aggregate_fitness(f, 1.0, 0.0, cfg);
    CHECK(f.fitness == 1.0);
    CHECK(f.feasible);
    CHECK(f.gates_passed == 4);

    auto z = all_ones();
    z.range_score = 0.0;
    aggregate_fitness(z, 1.0, 0.0, cfg);
    CHECK(z.fitness == 0.0);
}

TEST_CASE("feasibility needs every gate") {
    const PhysicsConfig cfg;
    auto b = all_ones();
    b.lift_to_drag = 15.0 * 1.11;
    CHECK_FALSE(ld_gate(b, cfg));
    b = all_ones();
    b.root_stress = cfg.yield_stress;
    CHECK_FALSE(stress_gate(b, cfg));
    b = all_ones();
    b.static_margin_empty = 0.26;
    CHECK_FALSE(stability_gate(b, cfg));
    b = all_ones();
    b.range_ratio = 0.98;
    CHECK_FALSE(range_gate(b, cfg));
    b = all_ones();
    b.envelope_violation = 0.01;
    aggregate_fitness(b, 1.0, 0.0, cfg);
    CHECK_FALSE(b.feasible);
}

TEST_CASE("evaluate fills every named sub-metric") {
    const MissionSpec m;
    const AnatomyGenome g;
    const auto grid = voxelize(g, m.envelope, 64);
    const auto mounts = evaluate_mounts(grid, part_bounds(grid), MountThresholds{});
    const auto b = evaluate(project_envelope(g, m.envelope), grid, m, PhysicsConfig{}, mounts, 0.0);
    CHECK(b.valid);
    std::set<std::string> names;
    for (const auto& [k, v] : b.entries()) {
        names.insert(k);
        CHECK(std::isfinite(v));
    }
    CHECK(b.entries().size() >= 30);
    for (const char* k : {"lift_coefficient", "parasite_drag", "induced_drag", "lift_to_drag", "ld_score", "breguet_range_km",
                          "range_ratio", "range_score", "root_stress", "stress_score", "static_margin_full",
                          "static_margin_empty", "stability_score", "required_volume", "available_volume", "packaging_score",
                          "envelope_violation", "envelope_score", "engine_count_score", "prior_penalty", "mount_multiplier",
                          "fitness", "feasible"})
        CHECK(names.count(k) == 1);
    CHECK(b.fitness >= 0.0);
    CHECK(b.fitness <= 1.0);
}

TEST_CASE("evaluation failures come back as invalid with zero fitness") {
    const MissionSpec m;
    const VoxelGrid empty(16, 1.0, {0, 0, 0});
    AnatomyGenome g;
    g.wing_span = 0.0;
    const auto b = evaluate(g, empty, m, PhysicsConfig{}, MountReport{}, 0.0);
    CHECK_FALSE(b.valid);
    CHECK(b.fitness == 0.0);
    CHECK_FALSE(b.feasible);
}

TEST_CASE("physics config validation") {
    PhysicsConfig cfg;
    cfg.margin_min = 0.3;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = PhysicsConfig{};
    cfg.tsfc = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
