#ifndef AEROSYNTH_SERVER_HPP
#define AEROSYNTH_SERVER_HPP

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "aerosynth/evolve.hpp"

namespace aerosynth {

using Json = nlohmann::ordered_json;

// ---- mission documents -----------------------------------------------------

class MissionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct MissionDocument {
    MissionSpec mission;
    PhysicsConfig physics;
};

/// JSON object with mass, range, cruise_speed, box [length, height, width],
/// engine_cap and areal_density. Optional: engine_envelope [max_length,
/// max_diameter] (default scales with the box) and a "physics" object of
/// overrides. Unknown keys are rejected; every missing key is named.
MissionDocument parse_mission_document(std::string_view text);
MissionSpec parse_mission(std::string_view text);
MissionDocument load_mission_file(const std::string& path);
Json mission_to_json(const MissionSpec& m);

// ---- wire protocol ---------------------------------------------------------

class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ControlCommand {
    enum class Kind { Start, Pause, Resume, PinAxis, UnpinAxis, ForceRestart, Stop };
    Kind kind = Kind::Pause;
    std::optional<MissionDocument> mission;   // start only
    GaFlags flags;
    std::uint64_t seed = 1;
    int index = 0;
    double value = 0;
};

/// Throws ProtocolError with a reason suitable for an error frame.
ControlCommand parse_command(std::string_view text);
std::string_view command_name(ControlCommand::Kind k);
std::optional<Command> to_ga_command(const ControlCommand& c);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::string make_run_id(std::uint64_t seed, const GaFlags& flags);
Json flags_to_json(const GaFlags& f);

/// One frame per generation. The voxel payload is the AVXR stream of the
/// best individual's grid in base64 with the label checksum alongside.
Json generation_message(const std::string& run_id, const GaState& state, const VoxelGrid& best_grid);
Json error_frame(std::string_view reason);
Json ack_frame(const ControlCommand& c);

// ---- runs ------------------------------------------------------------------

struct RunOptions {
    std::uint64_t seed = 1;
    int resolution = kDeskResolution;
    int replicates = 1;
    GaFlags flags;
    GaConfig ga;
    std::string prior_path;   // empty: default_prior_path()
    std::string out_dir = "aerosynth_run";
};

Json ga_config_to_json(const GaConfig& c);
Json genome_to_json(const Individual& best);
/// best_grid.vxg, best_genome.json and manifest.json into dir.
void write_final_artifacts(const std::string& dir, const Json& manifest, const Individual& best, const VoxelGrid& grid);

/// $AEROSYNTH_PRIOR_CACHE, else ~/.cache/aerosynth/prior.avae.
std::string default_prior_path();
inline constexpr std::uint64_t kPriorSeed = 20240601;

/// Writes metrics.jsonl, best_grid.vxg, best_genome.json and manifest.json
/// per replicate (in rep_<k>/ when K > 1) plus summary.json.
/// Returns 0 iff some replicate found a feasible design, 2 otherwise.
int run_headless(const MissionDocument& doc, const RunOptions& opt, const AdVaeModel* prior);
int run_headless(const std::string& mission_path, const RunOptions& opt);

struct ServeOptions {
    std::string address = "127.0.0.1";
    unsigned short port = 8765;
    RunOptions run;                       // resolution, ga, prior path; out_dir empty: no artifacts
    std::function<void(unsigned short)> on_listening;   // actual port, after bind
    const std::atomic<bool>* stop = nullptr;
};

/// Blocks serving WebSocket sessions until *stop becomes true.
void serve(const ServeOptions& opt);

}  // namespace aerosynth

#endif  // AEROSYNTH_SERVER_HPP
