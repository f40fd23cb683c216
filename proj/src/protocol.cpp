#include "aerosynth/server.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/beast/core/detail/base64.hpp>

namespace aerosynth {

namespace {

using PhysField = double PhysicsConfig::*;

const std::vector<std::pair<std::string_view, PhysField>>& physics_fields() {
    static const std::vector<std::pair<std::string_view, PhysField>> f{
        {"air_density", &PhysicsConfig::air_density},
        {"viscosity", &PhysicsConfig::viscosity},
        {"gravity", &PhysicsConfig::gravity},
        {"tsfc", &PhysicsConfig::tsfc},
        {"yield_stress", &PhysicsConfig::yield_stress},
        {"ultimate_factor", &PhysicsConfig::ultimate_factor},
        {"limit_load", &PhysicsConfig::limit_load},
        {"oswald_e", &PhysicsConfig::oswald_e},
        {"fuel_density", &PhysicsConfig::fuel_density},
        {"fuel_cap_fraction", &PhysicsConfig::fuel_cap_fraction},
        {"wing_tank_fraction", &PhysicsConfig::wing_tank_fraction},
        {"payload_fraction", &PhysicsConfig::payload_fraction},
        {"payload_density", &PhysicsConfig::payload_density},
        {"systems_fraction", &PhysicsConfig::systems_fraction},
        {"skin_density", &PhysicsConfig::skin_density},
        {"downwash_factor", &PhysicsConfig::downwash_factor},
        {"ld_tolerance", &PhysicsConfig::ld_tolerance},
        {"range_gate", &PhysicsConfig::range_gate},
        {"margin_min", &PhysicsConfig::margin_min},
        {"margin_max", &PhysicsConfig::margin_max},
        {"grace", &PhysicsConfig::grace},
        {"prior_weight", &PhysicsConfig::prior_weight},
        {"envelope_decay", &PhysicsConfig::envelope_decay},
    };
    return f;
}

double number(const Json& v, const std::string& key) {
    if (!v.is_number()) throw MissionError("\"" + key + "\" must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw MissionError("\"" + key + "\" must be finite");
    return d;
}

double positive(const Json& v, const std::string& key) {
    const double d = number(v, key);
    if (!(d > 0.0)) throw MissionError("\"" + key + "\" must be positive, got " + v.dump());
    return d;
}

std::vector<double> positive_array(const Json& v, const std::string& key, std::size_t n) {
    if (!v.is_array() || v.size() != n)
        throw MissionError("\"" + key + "\" must be an array of " + std::to_string(n) + " numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(positive(v[i], key + "[" + std::to_string(i) + "]"));
    return out;
}

PhysicsConfig parse_physics(const Json& j) {
    if (!j.is_object()) throw MissionError("\"physics\" must be an object");
    PhysicsConfig cfg;
    for (const auto& [key, val] : j.items()) {
        if (key == "ld_target") {
            cfg.ld_target = positive(val, "physics.ld_target");
            continue;
        }
        bool found = false;
        for (const auto& [name, field] : physics_fields()) {
            if (name != key) continue;
            cfg.*field = number(val, "physics." + key);
            found = true;
        }
        if (!found) throw MissionError("unknown key \"physics." + key + "\"");
    }
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw MissionError(std::string("physics: ") + e.what());
    }
    return cfg;
}

}  // namespace

MissionDocument parse_mission_document(std::string_view text) {
    Json j;
    try {
        j = text.find_first_not_of(" \t\r\n") == std::string_view::npos ? Json::object() : Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw MissionError(std::string("mission is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw MissionError("mission must be a JSON object");

    static const std::vector<std::string> required{"mass", "range", "cruise_speed", "box", "engine_cap", "areal_density"};
    static const std::vector<std::string> optional{"engine_envelope", "physics", "name"};
    for (const auto& [key, v] : j.items()) {
        (void)v;
        if (std::find(required.begin(), required.end(), key) == required.end() &&
            std::find(optional.begin(), optional.end(), key) == optional.end())
            throw MissionError("unknown key \"" + key + "\"");
    }
    std::string missing;
    for (const auto& k : required)
        if (!j.contains(k)) missing += (missing.empty() ? "" : ", ") + k;
    if (!missing.empty()) throw MissionError("missing keys: " + missing);

    MissionDocument doc;
    MissionSpec& m = doc.mission;
    m.mass = positive(j["mass"], "mass");
    m.range = positive(j["range"], "range");
    m.cruise_speed = positive(j["cruise_speed"], "cruise_speed");
    const auto box = positive_array(j["box"], "box", 3);
    m.envelope.box_length = box[0];
    m.envelope.box_height = box[1];
    m.envelope.box_width = box[2];
    const double cap = positive(j["engine_cap"], "engine_cap");
    if (cap != std::floor(cap)) throw MissionError("\"engine_cap\" must be an integer");
    m.engine_cap = static_cast<int>(cap);
    m.areal_density = positive(j["areal_density"], "areal_density");
    if (j.contains("engine_envelope")) {
        const auto e = positive_array(j["engine_envelope"], "engine_envelope", 2);
        m.envelope.engine_max_length = e[0];
        m.envelope.engine_max_diameter = e[1];
    } else {
        m.envelope.engine_max_length = box[0] / 8.0;
        m.envelope.engine_max_diameter = box[1] / 4.8;
    }
    if (j.contains("physics")) doc.physics = parse_physics(j["physics"]);
    try {
        m.validate();
    } catch (const std::invalid_argument& e) {
        throw MissionError(e.what());
    }
    return doc;
}

MissionSpec parse_mission(std::string_view text) { return parse_mission_document(text).mission; }

MissionDocument load_mission_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw MissionError("cannot read mission file " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_mission_document(ss.str());
}

Json mission_to_json(const MissionSpec& m) {
    Json j;
    j["mass"] = m.mass;
    j["range"] = m.range;
    j["cruise_speed"] = m.cruise_speed;
    j["box"] = {m.envelope.box_length, m.envelope.box_height, m.envelope.box_width};
    j["engine_cap"] = m.engine_cap;
    j["areal_density"] = m.areal_density;
    j["engine_envelope"] = {m.envelope.engine_max_length, m.envelope.engine_max_diameter};
    return j;
}

// ---- commands --------------------------------------------------------------

std::string_view command_name(ControlCommand::Kind k) {
    switch (k) {
    case ControlCommand::Kind::Start: return "start";
    case ControlCommand::Kind::Pause: return "pause";
    case ControlCommand::Kind::Resume: return "resume";
    case ControlCommand::Kind::PinAxis: return "pin_axis";
    case ControlCommand::Kind::UnpinAxis: return "unpin_axis";
    case ControlCommand::Kind::ForceRestart: return "force_restart";
    case ControlCommand::Kind::Stop: return "stop";
    }
    return "?";
}

namespace {

GaFlags parse_flags(const Json& j) {
    if (!j.is_object()) throw ProtocolError("\"flags\" must be an object");
    GaFlags f;
    for (const auto& [key, v] : j.items()) {
        if (!v.is_boolean()) throw ProtocolError("flag \"" + key + "\" must be boolean");
        const bool b = v.get<bool>();
        if (key == "topology_elitism") f.topology_elitism = b;
        else if (key == "mount_score") f.mount_score = b;
        else if (key == "prior") f.prior = b;
        else if (key == "restart") f.restart = b;
        else throw ProtocolError("unknown flag \"" + key + "\"");
    }
    return f;
}

int axis_index(const Json& j) {
    if (!j.contains("index") || !j["index"].is_number_integer()) throw ProtocolError("\"index\" must be an integer");
    const auto i = j["index"].get<long long>();
    if (i < 0 || i >= static_cast<long long>(kParamCount)) throw ProtocolError("\"index\" must be in [0, 25)");
    return static_cast<int>(i);
}

}  // namespace

ControlCommand parse_command(std::string_view text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error&) {
        throw ProtocolError("frame is not valid JSON");
    }
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) throw ProtocolError("frame needs a string \"type\"");
    const std::string type = j["type"].get<std::string>();
    ControlCommand c;
    if (type == "start") {
        c.kind = ControlCommand::Kind::Start;
        if (!j.contains("mission")) throw ProtocolError("start needs \"mission\"");
        try {
            c.mission = parse_mission_document(j["mission"].dump());
        } catch (const MissionError& e) {
            throw ProtocolError(std::string("mission: ") + e.what());
        }
        if (j.contains("flags")) c.flags = parse_flags(j["flags"]);
        if (j.contains("seed")) {
            if (!j["seed"].is_number_unsigned()) throw ProtocolError("\"seed\" must be a non-negative integer");
            c.seed = j["seed"].get<std::uint64_t>();
        }
    } else if (type == "pause") {
        c.kind = ControlCommand::Kind::Pause;
    } else if (type == "resume") {
        c.kind = ControlCommand::Kind::Resume;
    } else if (type == "pin_axis") {
        c.kind = ControlCommand::Kind::PinAxis;
        c.index = axis_index(j);
        if (!j.contains("value") || !j["value"].is_number()) throw ProtocolError("\"value\" must be a number");
        c.value = j["value"].get<double>();
        if (!(c.value >= -1.0 && c.value <= 1.0)) throw ProtocolError("\"value\" must be in [-1, 1]");
    } else if (type == "unpin_axis") {
        c.kind = ControlCommand::Kind::UnpinAxis;
        c.index = axis_index(j);
    } else if (type == "force_restart") {
        c.kind = ControlCommand::Kind::ForceRestart;
    } else if (type == "stop") {
        c.kind = ControlCommand::Kind::Stop;
    } else {
        throw ProtocolError("unknown command \"" + type + "\"");
    }
    return c;
}

std::optional<Command> to_ga_command(const ControlCommand& c) {
    Command g;
    g.axis = c.index;
    g.value = c.value;
    switch (c.kind) {
    case ControlCommand::Kind::Start: return std::nullopt;
    case ControlCommand::Kind::Pause: g.kind = CommandKind::Pause; break;
    case ControlCommand::Kind::Resume: g.kind = CommandKind::Resume; break;
    case ControlCommand::Kind::PinAxis: g.kind = CommandKind::PinAxis; break;
    case ControlCommand::Kind::UnpinAxis: g.kind = CommandKind::UnpinAxis; break;
    case ControlCommand::Kind::ForceRestart: g.kind = CommandKind::ForceRestart; break;
    case ControlCommand::Kind::Stop: g.kind = CommandKind::Stop; break;
    }
    return g;
}

// ---- frames ----------------------------------------------------------------

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
    namespace b64 = boost::beast::detail::base64;
    std::string out(b64::encoded_size(bytes.size()), '\0');
    out.resize(b64::encode(out.data(), bytes.data(), bytes.size()));
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
    namespace b64 = boost::beast::detail::base64;
    std::vector<std::uint8_t> out(b64::decoded_size(text.size()));
    std::size_t body = text.size();
    while (body > 0 && text.size() - body < 2 && text[body - 1] == '=') --body;
    const auto [written, read] = b64::decode(out.data(), text.data(), text.size());
    if (read < body || (text.size() - body) != (4 - body % 4) % 4) throw ProtocolError("invalid base64 payload");
    out.resize(written);
    return out;
}

std::string make_run_id(std::uint64_t seed, const GaFlags& f) {
    std::string id = "run-" + std::to_string(seed);
    if (!f.topology_elitism) id += "-no-topology-elitism";
    if (!f.mount_score) id += "-no-mount-score";
    if (!f.prior) id += "-no-prior";
    if (!f.restart) id += "-no-restart";
    return id;
}

Json flags_to_json(const GaFlags& f) {
    Json j;
    j["topology_elitism"] = f.topology_elitism;
    j["mount_score"] = f.mount_score;
    j["prior"] = f.prior;
    j["restart"] = f.restart;
    return j;
}

Json generation_message(const std::string& run_id, const GaState& s, const VoxelGrid& grid) {
    Json j;
    j["type"] = "generation";
    j["run_id"] = run_id;
    j["generation"] = s.generation;
    const auto& best = s.best;
    j["topology"] = topology_name(best.genome.topology);
    j["genome"] = best.genome.values;
    Json bd = Json::object();
    for (const auto& [k, v] : best.eval.breakdown.entries()) {
        if (std::isfinite(v)) bd[k] = v;
        else bd[k] = nullptr;
    }
    j["breakdown"] = bd;
    Json mounts;
    mounts["multiplier"] = best.eval.mounts.multiplier;
    mounts["not_applicable"] = best.eval.mounts.not_applicable;
    Json parts = Json::array();
    for (const auto& e : best.eval.mounts.entries) {
        Json p;
        p["part"] = label_name(e.part);
        p["host"] = label_name(e.host);
        if (std::isfinite(e.depth)) p["depth"] = e.depth;
        else p["depth"] = nullptr;
        p["size"] = e.size;
        p["score"] = e.score;
        parts.push_back(p);
    }
    mounts["parts"] = parts;
    j["mounts"] = mounts;
    j["prior_deviation"] = best.eval.prior_deviation;
    j["histogram"] = topology_histogram(s.population);
    j["diversity"] = mean_pairwise_distance(s.population);
    j["stagnation"] = s.stagnation;
    j["sigma"] = s.sigma;
    j["restarted"] = s.restarted;
    Json pins = Json::array();
    for (const auto& [axis, v] : s.pinned) pins.push_back({{"index", axis}, {"value", v}});
    j["pinned"] = pins;
    Json vox;
    vox["encoding"] = "avxr-base64";
    vox["resolution"] = grid.resolution;
    vox["checksum"] = label_checksum(grid);
    vox["data"] = base64_encode(encode_rle(grid));
    j["voxels"] = vox;
    return j;
}

Json error_frame(std::string_view reason) {
    Json j;
    j["type"] = "error";
    j["reason"] = reason;
    return j;
}

Json ack_frame(const ControlCommand& c) {
    Json j;
    j["type"] = "ack";
    j["command"] = command_name(c.kind);
    if (c.kind == ControlCommand::Kind::PinAxis || c.kind == ControlCommand::Kind::UnpinAxis) j["index"] = c.index;
    if (c.kind == ControlCommand::Kind::PinAxis) j["value"] = c.value;
    if (c.kind == ControlCommand::Kind::Start) {
        j["run_id"] = make_run_id(c.seed, c.flags);
        Json names = Json::array();
        for (const auto& p : param_table()) names.push_back(p.name);
        j["axes"] = names;
    }
    return j;
}

}  // namespace aerosynth
