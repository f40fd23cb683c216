#ifndef AEROSYNTH_PHYSICS_HPP
#define AEROSYNTH_PHYSICS_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "aerosynth/mission.hpp"
#include "aerosynth/mountscore.hpp"

namespace aerosynth {

struct PhysicsConfig {
    double air_density = 0.3639;        // kg/m^3, ISA 11 km
    double viscosity = 1.422e-5;        // Pa s, ISA 11 km
    double gravity = 9.80665;
    double tsfc = 1.7e-5;               // kg fuel per N thrust per s
    double yield_stress = 280e6;        // Pa
    double ultimate_factor = 1.5;
    double limit_load = 3.5;
    double oswald_e = 0.8;
    double fuel_density = 800.0;
    double fuel_cap_fraction = 0.45;    // of MTOW
    double wing_tank_fraction = 0.5;    // of wing voxel volume usable for fuel
    double payload_fraction = 0.20;     // of MTOW
    double payload_density = 160.0;
    double systems_fraction = 0.08;     // of fuselage volume
    double skin_density = 2700.0;
    double downwash_factor = 0.6;       // 1 - d(eps)/d(alpha)
    std::optional<double> ld_target;    // unset: by mission mass class
    double ld_tolerance = 0.10;
    double range_gate = 0.99;
    double margin_min = 0.05;
    double margin_max = 0.25;
    double grace = 0.15;
    double prior_weight = 0.05;
    double envelope_decay = 0.02;       // of the box dimension

    void validate() const;
};

/// Class-typical lift-to-drag: drone, business jet, airliner.
double class_ld_target(double mass_kg);
double ld_target(const MissionSpec& m, const PhysicsConfig& cfg);

struct Aero {
    double lift_coefficient = 0;
    double parasite_drag = 0;
    double induced_drag = 0;
    double lift_to_drag = 0;
    double wing_area = 0;
    double aspect_ratio = 0;
    double wetted_area = 0;
};

struct Range {
    double fuel_mass = 0;
    double range_km = 0;
    double ratio = 0;
};

enum class FuelState { Full, Empty };

/// Exposed voxel faces times pitch squared for one label.
double exposed_area(const VoxelGrid& grid, Label l);

/// Throws std::domain_error when the wing has no area.
Aero lift_to_drag(const AnatomyGenome& g, const VoxelGrid& grid, const MissionSpec& m, const PhysicsConfig& cfg);
Range breguet_range_ratio(const VoxelGrid& grid, double lift_to_drag, const MissionSpec& m, const PhysicsConfig& cfg);
/// Flange-dominated box beam at the wing root.
double root_stress(const AnatomyGenome& g, const MissionSpec& m, const PhysicsConfig& cfg);
struct MassItem {
    std::string name;
    double mass = 0;   // kg
    double x = 0;      // m from the nose
};

/// Point-mass build-up summing to MTOW when full. The fuselage and systems
/// item takes whatever mass is left over, never less than 10% of MTOW.
struct MassBuildup {
    std::vector<MassItem> items;   // everything except fuel
    MassItem fuel;

    double cg(FuelState state) const;
};

MassBuildup mass_buildup(const Airframe& af, double fuel_mass, const MissionSpec& m, const PhysicsConfig& cfg);

/// Wing aerodynamic centre shifted aft by the tail-volume term.
double neutral_point(const Airframe& af, const PhysicsConfig& cfg);

/// (x_np - x_cg) / MAC.
double static_margin(const AnatomyGenome& g, const VoxelGrid& grid, const MissionSpec& m, const PhysicsConfig& cfg,
                     FuelState state);

struct Packaging {
    double required = 0;    // m^3
    double available = 0;   // m^3
    double score = 0;
};
Packaging packaging_score(const VoxelGrid& grid, const MissionSpec& m, const PhysicsConfig& cfg);

struct Envelope {
    double violation = 0;   // m, largest overhang
    double score = 1;
};
/// The box is aligned with the nose and the lowest voxel and centred in y.
Envelope envelope_penalty(const VoxelGrid& grid, const EnvelopeSpec& env, double decay = 0.02);

double engine_count_score(int count, int cap);

/// 1 inside the gate; u = shortfall in grace units, 1 - u/2 up to u = 1, then 0.5 exp(1 - u).
double gate_score(double shortfall, double grace_unit);

struct FitnessBreakdown {
    double lift_coefficient = 0;
    double parasite_drag = 0;
    double induced_drag = 0;
    double lift_to_drag = 0;
    double ld_target = 0;
    double ld_score = 0;
    double wing_area = 0;
    double aspect_ratio = 0;
    double wetted_area = 0;
    double fuel_mass = 0;
    double breguet_range_km = 0;
    double range_ratio = 0;
    double range_score = 0;
    double root_stress = 0;
    double stress_score = 0;
    double static_margin_full = 0;
    double static_margin_empty = 0;
    double stability_score = 0;
    double required_volume = 0;
    double available_volume = 0;
    double packaging_score = 0;
    double envelope_violation = 0;
    double envelope_score = 0;
    double engine_count = 0;
    double engine_count_score = 0;
    double fuselage_fineness = 0;
    double prior_penalty = 0;
    double mount_multiplier = 1;
    double mount_min_score = 1;
    double gates_passed = 0;
    double fitness = 0;
    bool feasible = false;
    bool valid = true;   // false when evaluation failed and fitness was forced to 0

    /// Flat name -> value list in a fixed order; booleans as 0/1.
    std::vector<std::pair<std::string, double>> entries() const;
};

/// Sets fitness and feasible from the sub-scores already in the breakdown.
void aggregate_fitness(FitnessBreakdown& b, double mount_multiplier, double prior_penalty, const PhysicsConfig& cfg);

bool ld_gate(const FitnessBreakdown& b, const PhysicsConfig& cfg);
bool stress_gate(const FitnessBreakdown& b, const PhysicsConfig& cfg);
bool stability_gate(const FitnessBreakdown& b, const PhysicsConfig& cfg);
bool range_gate(const FitnessBreakdown& b, const PhysicsConfig& cfg);

/// Full evaluation of an envelope-projected genome and its grid. Never throws
/// for in-range input; failures come back as fitness 0 with valid = false.
FitnessBreakdown evaluate(const AnatomyGenome& projected, const VoxelGrid& grid, const MissionSpec& m,
                          const PhysicsConfig& cfg, const MountReport& mounts, double prior_penalty,
                          bool use_overlap_penalty = false);

}  // namespace aerosynth

#endif  // AEROSYNTH_PHYSICS_HPP
