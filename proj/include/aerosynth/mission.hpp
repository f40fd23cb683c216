#ifndef AEROSYNTH_MISSION_HPP
#define AEROSYNTH_MISSION_HPP

#include "aerosynth/anatomy.hpp"

namespace aerosynth {

/// The user's contract: what the aircraft must carry, how far and how fast,
/// and the hard box it must fit in.
struct MissionSpec {
    double mass = 45000.0;          // kg, MTOW
    double range = 3500.0;          // km
    double cruise_speed = 230.0;    // m/s
    EnvelopeSpec envelope;
    int engine_cap = 2;
    double areal_density = 45.0;    // kg/m^2, wing structure

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

}  // namespace aerosynth

#endif  // AEROSYNTH_MISSION_HPP
