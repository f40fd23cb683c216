#ifndef AEROSYNTH_ANATOMY_HPP
#define AEROSYNTH_ANATOMY_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace aerosynth {

enum class Topology : std::uint8_t { Conventional = 0, TTail, Cruciform, VTail, FlyingWing };

inline constexpr std::size_t kTopologyCount = 5;
inline constexpr std::size_t kParamCount = 25;

std::string_view topology_name(Topology t);
std::optional<Topology> topology_from_name(std::string_view name);
inline Topology topology_from_index(std::size_t i) { return static_cast<Topology>(i % kTopologyCount); }
inline std::size_t topology_index(Topology t) { return static_cast<std::size_t>(t); }

/// Index of each anatomical axis in the normalized vector.
enum class Param : std::size_t {
    FuselageLength = 0,
    FuselageRadius,
    NoseFineness,
    TailconeFineness,
    WingSpan,
    WingRootChord,
    WingTaper,
    WingSweep,
    WingDihedral,
    WingXPos,
    WingZPos,
    WingThickness,
    VtailSize,
    VtailSweep,
    VtailCant,
    HtailSpan,
    HtailChord,
    HtailZPos,
    HtailExists,
    VtailExists,
    EngineCount,
    EngineLength,
    EngineSize,
    EngineXPos,
    EngineSpanwise,
};

inline constexpr std::size_t idx(Param p) { return static_cast<std::size_t>(p); }

enum class ParamKind : std::uint8_t { Continuous, Flag, EngineCount };

struct ParamInfo {
    std::string_view name;
    double lo;
    double hi;
    ParamKind kind;
};

const std::array<ParamInfo, kParamCount>& param_table();
const ParamInfo& param_info(Param p);
std::optional<Param> param_from_name(std::string_view name);

/// Physical-unit aircraft description. Angles in degrees, lengths in metres.
struct AnatomyGenome {
    Topology topology = Topology::Conventional;

    double fuselage_length = 30.0;
    double fuselage_radius = 1.8;
    double nose_fineness = 2.0;
    double tailcone_fineness = 3.0;

    double wing_span = 30.0;
    double wing_root_chord = 5.0;
    double wing_taper = 0.35;
    double wing_sweep = 25.0;
    double wing_dihedral = 4.0;
    double wing_x_pos = 0.4;
    double wing_z_pos = -0.5;
    double wing_thickness = 0.12;

    double vtail_size = 12.0;
    double vtail_sweep = 35.0;
    double vtail_cant = 0.0;
    double htail_span = 10.0;
    double htail_chord = 2.5;
    double htail_z_pos = 0.05;
    bool htail_exists = true;
    bool vtail_exists = true;

    int engine_count = 2;
    double engine_length = 3.5;
    double engine_size = 1.6;
    double engine_x_pos = 0.38;
    double engine_spanwise = 0.35;

    bool operator==(const AnatomyGenome&) const = default;
};

double get(const AnatomyGenome& g, Param p);
void set(AnatomyGenome& g, Param p, double v);

struct NormalizedGenome {
    std::array<double, kParamCount> values{};
    Topology topology = Topology::Conventional;

    double& operator[](Param p) { return values[idx(p)]; }
    double operator[](Param p) const { return values[idx(p)]; }
    bool operator==(const NormalizedGenome&) const = default;
};

struct EnvelopeSpec {
    double box_length = 40.0;
    double box_height = 12.0;
    double box_width = 36.0;
    double engine_max_length = 5.0;
    double engine_max_diameter = 2.5;

    void validate() const;
};

struct MissionSpec;  // mission.hpp

class RangeError : public std::out_of_range {
public:
    RangeError(Param p, double value);
    Param param() const { return param_; }

private:
    Param param_;
};

/// Linear map of every axis from [lo, hi] to [-1, 1]. Throws RangeError.
NormalizedGenome normalize(const AnatomyGenome& genome);

struct Denormalized {
    AnatomyGenome genome;
    bool clamped = false;   ///< some component was outside [-1, 1]
};

/// Inverse of normalize. Components outside [-1, 1] are clamped and flagged.
Denormalized denormalize(const NormalizedGenome& ng);

/// Forces the topology-governed genes into the class's admissible sub-ranges and
/// sets genes the class does not render to canonical values.
void conform_to_topology(AnatomyGenome& g);
void conform_to_topology(NormalizedGenome& ng);

/// Topology consistency invariant (flags, cant, horizontal tail height, rear mount).
bool topology_consistent(const AnatomyGenome& g);

enum class SizeTier : std::uint8_t { Small = 0, Medium, Large };
SizeTier size_tier(double mass_kg);

/// Uniform sample inside the class-conditioned and mass-tiered sub-ranges.
/// Engine counts above engine_cap are never seeded.
NormalizedGenome seed_individual(Topology topology, double mission_mass, int engine_cap, std::mt19937_64& rng);
NormalizedGenome seed_individual(Topology topology, const MissionSpec& mission, std::mt19937_64& rng);

/// Engine and fuselage clamps from the hard envelope. Wing span is left alone.
AnatomyGenome project_envelope(const AnatomyGenome& genome, const EnvelopeSpec& env);

}  // namespace aerosynth

#endif  // AEROSYNTH_ANATOMY_HPP
