#include "aerosynth/anatomy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "aerosynth/mission.hpp"

namespace aerosynth {

namespace {

constexpr std::array<ParamInfo, kParamCount> kParams{{
    {"fuselage_length", 8.0, 60.0, ParamKind::Continuous},
    {"fuselage_radius", 0.5, 3.5, ParamKind::Continuous},
    {"nose_fineness", 1.0, 4.0, ParamKind::Continuous},
    {"tailcone_fineness", 1.0, 4.0, ParamKind::Continuous},
    {"wing_span", 6.0, 65.0, ParamKind::Continuous},
    {"wing_root_chord", 1.0, 12.0, ParamKind::Continuous},
    {"wing_taper", 0.1, 1.0, ParamKind::Continuous},
    {"wing_sweep", 0.0, 40.0, ParamKind::Continuous},
    {"wing_dihedral", -5.0, 10.0, ParamKind::Continuous},
    {"wing_x_pos", 0.15, 0.65, ParamKind::Continuous},
    {"wing_z_pos", -1.0, 1.0, ParamKind::Continuous},
    {"wing_thickness", 0.08, 0.16, ParamKind::Continuous},
    {"vtail_size", 0.5, 40.0, ParamKind::Continuous},
    {"vtail_sweep", 0.0, 50.0, ParamKind::Continuous},
    {"vtail_cant", 0.0, 90.0, ParamKind::Continuous},
    {"htail_span", 1.0, 25.0, ParamKind::Continuous},
    {"htail_chord", 0.4, 6.0, ParamKind::Continuous},
    {"htail_z_pos", 0.0, 1.0, ParamKind::Continuous},
    {"htail_exists", 0.0, 1.0, ParamKind::Flag},
    {"vtail_exists", 0.0, 1.0, ParamKind::Flag},
    {"engine_count", 1.0, 4.0, ParamKind::EngineCount},
    {"engine_length", 0.8, 6.0, ParamKind::Continuous},
    {"engine_size", 0.3, 3.0, ParamKind::Continuous},
    {"engine_x_pos", 0.10, 0.95, ParamKind::Continuous},
    {"engine_spanwise", 0.0, 1.0, ParamKind::Continuous},
}};

constexpr std::array<std::string_view, kTopologyCount> kTopologyNames{
    "conventional", "t_tail", "cruciform", "v_tail", "flying_wing"};

// Class sub-ranges for the topology-governed genes.
constexpr double kVtailCantMin = 30.0;
constexpr double kVtailCantMax = 60.0;
constexpr double kConventionalZMax = 0.15;
constexpr double kTTailZMin = 0.9;
constexpr double kCruciformZMin = 0.3;
constexpr double kCruciformZMax = 0.7;
constexpr double kFuselageMountX = 0.75;

double to_unit(double v, double lo, double hi) { return 2.0 * (v - lo) / (hi - lo) - 1.0; }
double from_unit(double u, double lo, double hi) { return lo + (u + 1.0) * 0.5 * (hi - lo); }

struct Interval {
    double lo;
    double hi;
};

// Mass-tier sub-ranges for the size genes.
struct TierRanges {
    Interval fuselage_length, fuselage_radius, wing_span, root_chord;
    Interval vtail_size, htail_span, htail_chord, engine_length, engine_size;
};

constexpr std::array<TierRanges, 3> kTiers{{
    // < 2 000 kg: drones, light aircraft
    {{8, 14}, {0.5, 0.9}, {10, 22}, {1.0, 2.2}, {0.6, 4}, {1.5, 5}, {0.4, 1.4}, {0.8, 2.0}, {0.3, 0.7}},
    // < 20 000 kg: business jets, regional turboprops
    {{14, 28}, {0.9, 1.6}, {15, 28}, {2.2, 5.0}, {3, 12}, {4, 9}, {1.0, 2.6}, {1.5, 3.5}, {0.6, 1.4}},
    // heavier: transports
    {{26, 48}, {1.6, 2.9}, {26, 45}, {4.0, 9.0}, {10, 35}, {8, 17}, {2.0, 4.5}, {2.5, 5.0}, {1.2, 2.4}},
}};

double uniform(std::mt19937_64& rng, Interval iv) {
    std::uniform_real_distribution<double> d(iv.lo, iv.hi);
    return d(rng);
}

}  // namespace

std::string_view topology_name(Topology t) { return kTopologyNames.at(topology_index(t)); }

std::optional<Topology> topology_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kTopologyCount; ++i) {
        if (kTopologyNames[i] == name) return topology_from_index(i);
    }
    return std::nullopt;
}

const std::array<ParamInfo, kParamCount>& param_table() { return kParams; }
const ParamInfo& param_info(Param p) { return kParams[idx(p)]; }

std::optional<Param> param_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kParamCount; ++i) {
        if (kParams[i].name == name) return static_cast<Param>(i);
    }
    return std::nullopt;
}

double get(const AnatomyGenome& g, Param p) {
    switch (p) {
    case Param::FuselageLength: return g.fuselage_length;
    case Param::FuselageRadius: return g.fuselage_radius;
    case Param::NoseFineness: return g.nose_fineness;
    case Param::TailconeFineness: return g.tailcone_fineness;
    case Param::WingSpan: return g.wing_span;
    case Param::WingRootChord: return g.wing_root_chord;
    case Param::WingTaper: return g.wing_taper;
    case Param::WingSweep: return g.wing_sweep;
    case Param::WingDihedral: return g.wing_dihedral;
    case Param::WingXPos: return g.wing_x_pos;
    case Param::WingZPos: return g.wing_z_pos;
    case Param::WingThickness: return g.wing_thickness;
    case Param::VtailSize: return g.vtail_size;
    case Param::VtailSweep: return g.vtail_sweep;
    case Param::VtailCant: return g.vtail_cant;
    case Param::HtailSpan: return g.htail_span;
    case Param::HtailChord: return g.htail_chord;
    case Param::HtailZPos: return g.htail_z_pos;
    case Param::HtailExists: return g.htail_exists ? 1.0 : 0.0;
    case Param::VtailExists: return g.vtail_exists ? 1.0 : 0.0;
    case Param::EngineCount: return static_cast<double>(g.engine_count);
    case Param::EngineLength: return g.engine_length;
    case Param::EngineSize: return g.engine_size;
    case Param::EngineXPos: return g.engine_x_pos;
    case Param::EngineSpanwise: return g.engine_spanwise;
    }
    throw std::logic_error("unknown parameter");
}

void set(AnatomyGenome& g, Param p, double v) {
    switch (p) {
    case Param::FuselageLength: g.fuselage_length = v; return;
    case Param::FuselageRadius: g.fuselage_radius = v; return;
    case Param::NoseFineness: g.nose_fineness = v; return;
    case Param::TailconeFineness: g.tailcone_fineness = v; return;
    case Param::WingSpan: g.wing_span = v; return;
    case Param::WingRootChord: g.wing_root_chord = v; return;
    case Param::WingTaper: g.wing_taper = v; return;
    case Param::WingSweep: g.wing_sweep = v; return;
    case Param::WingDihedral: g.wing_dihedral = v; return;
    case Param::WingXPos: g.wing_x_pos = v; return;
    case Param::WingZPos: g.wing_z_pos = v; return;
    case Param::WingThickness: g.wing_thickness = v; return;
    case Param::VtailSize: g.vtail_size = v; return;
    case Param::VtailSweep: g.vtail_sweep = v; return;
    case Param::VtailCant: g.vtail_cant = v; return;
    case Param::HtailSpan: g.htail_span = v; return;
    case Param::HtailChord: g.htail_chord = v; return;
    case Param::HtailZPos: g.htail_z_pos = v; return;
    case Param::HtailExists: g.htail_exists = v > 0.5; return;
    case Param::VtailExists: g.vtail_exists = v > 0.5; return;
    case Param::EngineCount: g.engine_count = static_cast<int>(std::lround(v)); return;
    case Param::EngineLength: g.engine_length = v; return;
    case Param::EngineSize: g.engine_size = v; return;
    case Param::EngineXPos: g.engine_x_pos = v; return;
    case Param::EngineSpanwise: g.engine_spanwise = v; return;
    }
    throw std::logic_error("unknown parameter");
}

void EnvelopeSpec::validate() const {
    auto check = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument(std::string("envelope field '") + name + "' must be strictly positive");
        }
    };
    check(box_length, "box_length");
    check(box_height, "box_height");
    check(box_width, "box_width");
    check(engine_max_length, "engine_max_length");
    check(engine_max_diameter, "engine_max_diameter");
}

namespace {
std::string range_message(Param p, double value) {
    const auto& info = param_info(p);
    std::ostringstream os;
    os << "parameter '" << info.name << "' = " << value << " outside [" << info.lo << ", " << info.hi << "]";
    return os.str();
}
}  // namespace

RangeError::RangeError(Param p, double value) : std::out_of_range(range_message(p, value)), param_(p) {}

NormalizedGenome normalize(const AnatomyGenome& genome) {
    NormalizedGenome ng;
    ng.topology = genome.topology;
    for (std::size_t i = 0; i < kParamCount; ++i) {
        const auto p = static_cast<Param>(i);
        const auto& info = kParams[i];
        const double v = get(genome, p);
        switch (info.kind) {
        case ParamKind::Continuous:
            if (!(v >= info.lo && v <= info.hi)) throw RangeError(p, v);
            ng.values[i] = to_unit(v, info.lo, info.hi);
            break;
        case ParamKind::Flag:
            ng.values[i] = v > 0.5 ? 1.0 : -1.0;
            break;
        case ParamKind::EngineCount:
            // centres of the thirds partition
            if (genome.engine_count == 1) ng.values[i] = -2.0 / 3.0;
            else if (genome.engine_count == 2) ng.values[i] = 0.0;
            else if (genome.engine_count == 4) ng.values[i] = 2.0 / 3.0;
            else throw RangeError(p, v);
            break;
        }
    }
    return ng;
}

Denormalized denormalize(const NormalizedGenome& ng) {
    Denormalized out;
    out.genome.topology = ng.topology;
    for (std::size_t i = 0; i < kParamCount; ++i) {
        const auto p = static_cast<Param>(i);
        const auto& info = kParams[i];
        double u = ng.values[i];
        if (!std::isfinite(u)) {
            u = 0.0;
            out.clamped = true;
        } else if (u < -1.0 || u > 1.0) {
            u = std::clamp(u, -1.0, 1.0);
            out.clamped = true;
        }
        switch (info.kind) {
        case ParamKind::Continuous: set(out.genome, p, from_unit(u, info.lo, info.hi)); break;
        case ParamKind::Flag: set(out.genome, p, u > 0.0 ? 1.0 : 0.0); break;
        case ParamKind::EngineCount:
            out.genome.engine_count = u < -1.0 / 3.0 ? 1 : (u > 1.0 / 3.0 ? 4 : 2);
            break;
        }
    }
    return out;
}

void conform_to_topology(AnatomyGenome& g) {
    const auto& cant = param_info(Param::VtailCant);
    const auto& hspan = param_info(Param::HtailSpan);
    const auto& hchord = param_info(Param::HtailChord);
    switch (g.topology) {
    case Topology::FlyingWing:
        g.htail_exists = false;
        g.vtail_exists = false;
        g.vtail_size = param_info(Param::VtailSize).lo;
        g.vtail_sweep = param_info(Param::VtailSweep).lo;
        g.vtail_cant = cant.lo;
        g.htail_span = hspan.lo;
        g.htail_chord = hchord.lo;
        g.htail_z_pos = 0.0;
        break;
    case Topology::VTail:
        g.htail_exists = false;
        g.vtail_exists = true;
        g.vtail_cant = std::clamp(g.vtail_cant, kVtailCantMin, kVtailCantMax);
        g.htail_span = hspan.lo;
        g.htail_chord = hchord.lo;
        g.htail_z_pos = 0.0;
        break;
    case Topology::Conventional:
        g.htail_exists = g.vtail_exists = true;
        g.vtail_cant = cant.lo;
        g.htail_z_pos = std::clamp(g.htail_z_pos, 0.0, kConventionalZMax);
        break;
    case Topology::TTail:
        g.htail_exists = g.vtail_exists = true;
        g.vtail_cant = cant.lo;
        g.htail_z_pos = std::clamp(g.htail_z_pos, kTTailZMin, 1.0);
        break;
    case Topology::Cruciform:
        g.htail_exists = g.vtail_exists = true;
        g.vtail_cant = cant.lo;
        g.htail_z_pos = std::clamp(g.htail_z_pos, kCruciformZMin, kCruciformZMax);
        break;
    }
    // A single engine always sits in the tail cone; its position genes are unused.
    if (g.engine_count == 1) {
        g.engine_x_pos = param_info(Param::EngineXPos).hi;
        g.engine_spanwise = 0.0;
    } else if (g.engine_count == 2 && g.engine_x_pos > kFuselageMountX) {
        g.engine_spanwise = 0.0;
    }
}

void conform_to_topology(NormalizedGenome& ng) {
    const AnatomyGenome before = denormalize(ng).genome;
    AnatomyGenome g = before;
    conform_to_topology(g);
    // only touched axes move, so a conforming genome is a fixed point
    const NormalizedGenome n = normalize(g);
    for (std::size_t i = 0; i < kParamCount; ++i) {
        const auto p = static_cast<Param>(i);
        if (get(g, p) != get(before, p)) ng.values[i] = n.values[i];
    }
    ng.topology = g.topology;
}

bool topology_consistent(const AnatomyGenome& g) {
    bool ok = true;
    switch (g.topology) {
    case Topology::FlyingWing: ok = !g.htail_exists && !g.vtail_exists; break;
    case Topology::VTail: ok = g.vtail_cant >= kVtailCantMin; break;
    case Topology::TTail: ok = g.htail_z_pos >= kTTailZMin; break;
    case Topology::Conventional: ok = g.htail_z_pos <= kConventionalZMax; break;
    case Topology::Cruciform: ok = g.htail_z_pos >= kCruciformZMin && g.htail_z_pos <= kCruciformZMax; break;
    }
    if (g.engine_count == 1) ok = ok && g.engine_x_pos >= param_info(Param::EngineXPos).hi;
    return ok;
}

SizeTier size_tier(double mass_kg) {
    if (mass_kg < 2000.0) return SizeTier::Small;
    if (mass_kg < 20000.0) return SizeTier::Medium;
    return SizeTier::Large;
}

NormalizedGenome seed_individual(Topology topology, double mission_mass, int engine_cap, std::mt19937_64& rng) {
    const auto& tier = kTiers[static_cast<std::size_t>(size_tier(mission_mass))];
    AnatomyGenome g;
    g.topology = topology;

    g.fuselage_length = uniform(rng, tier.fuselage_length);
    g.fuselage_radius = uniform(rng, tier.fuselage_radius);
    g.nose_fineness = uniform(rng, {1.2, 3.0});
    g.tailcone_fineness = uniform(rng, {2.0, 4.0});
    g.wing_span = uniform(rng, tier.wing_span);
    g.wing_root_chord = uniform(rng, tier.root_chord);
    g.wing_taper = uniform(rng, {0.2, 0.6});
    g.wing_sweep = uniform(rng, {0.0, 35.0});
    g.wing_dihedral = uniform(rng, {-2.0, 7.0});
    g.wing_x_pos = uniform(rng, {0.3, 0.55});
    g.wing_z_pos = uniform(rng, {-0.8, 0.8});
    g.wing_thickness = uniform(rng, {0.09, 0.15});
    g.vtail_size = uniform(rng, tier.vtail_size);
    g.vtail_sweep = uniform(rng, {15.0, 45.0});
    g.vtail_cant = 0.0;
    g.htail_span = uniform(rng, tier.htail_span);
    g.htail_chord = uniform(rng, tier.htail_chord);
    g.htail_z_pos = 0.0;

    switch (topology) {
    case Topology::Conventional: g.htail_z_pos = uniform(rng, {0.0, kConventionalZMax}); break;
    case Topology::TTail: g.htail_z_pos = uniform(rng, {kTTailZMin, 1.0}); break;
    case Topology::Cruciform: g.htail_z_pos = uniform(rng, {kCruciformZMin, kCruciformZMax}); break;
    case Topology::VTail: g.vtail_cant = uniform(rng, {kVtailCantMin, kVtailCantMax}); break;
    case Topology::FlyingWing: {
        // blended planform: deeper root, more sweep
        const auto& chord = param_info(Param::WingRootChord);
        g.wing_root_chord = std::min(chord.hi, uniform(rng, {2.0 * tier.root_chord.lo, 2.0 * tier.root_chord.hi}));
        g.wing_sweep = uniform(rng, {20.0, 40.0});
        break;
    }
    }

    std::vector<int> counts;
    for (int c : {1, 2, 4}) {
        if (c <= std::max(1, engine_cap)) counts.push_back(c);
    }
    std::uniform_int_distribution<std::size_t> pick(0, counts.size() - 1);
    g.engine_count = counts[pick(rng)];
    g.engine_length = uniform(rng, tier.engine_length);
    g.engine_size = uniform(rng, tier.engine_size);
    g.engine_x_pos = uniform(rng, {0.25, 0.9});
    g.engine_spanwise = uniform(rng, {0.2, 0.7});

    conform_to_topology(g);
    return normalize(g);
}

NormalizedGenome seed_individual(Topology topology, const MissionSpec& mission, std::mt19937_64& rng) {
    return seed_individual(topology, mission.mass, mission.engine_cap, rng);
}

AnatomyGenome project_envelope(const AnatomyGenome& genome, const EnvelopeSpec& env) {
    AnatomyGenome g = genome;
    g.engine_length = std::min(g.engine_length, env.engine_max_length);
    g.engine_size = std::min(g.engine_size, env.engine_max_diameter);
    g.fuselage_length = std::min(g.fuselage_length, env.box_length);
    return g;
}

void MissionSpec::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument(std::string("mission field '") + name + "' must be strictly positive");
        }
    };
    positive(mass, "mass");
    positive(range, "range");
    positive(cruise_speed, "cruise_speed");
    positive(areal_density, "areal_density");
    envelope.validate();
    if (engine_cap != 1 && engine_cap != 2 && engine_cap != 4) {
        throw std::invalid_argument("mission field 'engine_cap' must be 1, 2 or 4");
    }
}

}  // namespace aerosynth
