#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "aerosynth/server.hpp"

namespace aerosynth {

namespace fs = std::filesystem;

Json ga_config_to_json(const GaConfig& c) {
    Json j;
    j["population"] = c.population;
    j["generations"] = c.generations;
    j["sigma0"] = c.sigma0;
    j["sigma_min"] = c.sigma_min;
    j["inflation_factor"] = c.inflation_factor;
    j["inflation_threshold"] = c.inflation_threshold;
    j["restart_threshold"] = c.restart_threshold;
    j["fitness_elite_frac"] = c.fitness_elite_frac;
    j["topology_elite"] = c.topology_elite;
    j["diversity_elite_count"] = c.diversity_elite_count;
    j["crossover_rate"] = c.crossover_rate;
    j["topology_mutation_rate"] = c.topology_mutation_rate;
    j["improvement_epsilon"] = c.improvement_epsilon;
    return j;
}

Json genome_to_json(const Individual& best) {
    Json j;
    j["topology"] = topology_name(best.genome.topology);
    j["normalized"] = best.genome.values;
    const AnatomyGenome g = denormalize(best.genome).genome;
    Json phys;
    for (std::size_t i = 0; i < kParamCount; ++i) phys[std::string(param_table()[i].name)] = get(g, static_cast<Param>(i));
    j["physical"] = phys;
    j["fitness"] = best.fitness();
    j["feasible"] = best.eval.breakdown.feasible;
    return j;
}

namespace {

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    os << text;
}

}  // namespace

void write_final_artifacts(const std::string& dir, const Json& manifest, const Individual& best, const VoxelGrid& grid) {
    fs::create_directories(dir);
    write_grid_file((fs::path(dir) / "best_grid.vxg").string(), grid);
    write_text(fs::path(dir) / "best_genome.json", genome_to_json(best).dump(2) + "\n");
    write_text(fs::path(dir) / "manifest.json", manifest.dump(2) + "\n");
}

std::string default_prior_path() {
    if (const char* p = std::getenv("AEROSYNTH_PRIOR_CACHE"); p && *p) return p;
    if (const char* h = std::getenv("HOME"); h && *h) return (fs::path(h) / ".cache" / "aerosynth" / "prior.avae").string();
    return "prior.avae";
}

int run_headless(const MissionDocument& doc, const RunOptions& opt, const AdVaeModel* prior) {
    if (opt.replicates < 1) throw std::invalid_argument("replicates must be >= 1");
    const Pipeline pipe(doc.mission, doc.physics, opt.resolution, opt.flags, opt.flags.prior ? prior : nullptr);
    const Evaluator eval = [&pipe](const NormalizedGenome& g) { return pipe(g); };

    Json summary;
    summary["mission"] = mission_to_json(doc.mission);
    summary["flags"] = flags_to_json(opt.flags);
    Json runs = Json::array();
    int feasible_runs = 0;
    for (int r = 0; r < opt.replicates; ++r) {
        const std::uint64_t seed = opt.seed + static_cast<std::uint64_t>(r);
        const fs::path dir = opt.replicates == 1 ? fs::path(opt.out_dir) : fs::path(opt.out_dir) / ("rep_" + std::to_string(r));
        fs::create_directories(dir);
        const std::string run_id = make_run_id(seed, opt.flags);

        std::ofstream metrics(dir / "metrics.jsonl", std::ios::binary | std::ios::trunc);
        if (!metrics) throw std::runtime_error("cannot write " + (dir / "metrics.jsonl").string());
        RunHooks hooks;
        hooks.on_generation = [&](const GaState& s) {
            metrics << generation_message(run_id, s, pipe.grid(s.best.genome)).dump() << '\n';
        };
        const RunResult res = run(doc.mission, opt.ga, opt.flags, seed, eval, hooks);
        metrics.close();

        Json manifest;
        manifest["run_id"] = run_id;
        manifest["seed"] = seed;
        manifest["flags"] = flags_to_json(opt.flags);
        manifest["resolution"] = opt.resolution;
        manifest["ga"] = ga_config_to_json(opt.ga);
        manifest["mission"] = mission_to_json(doc.mission);
        manifest["prior_loaded"] = opt.flags.prior && prior != nullptr;
        manifest["generations_run"] = res.generations_run;
        write_final_artifacts(dir.string(), manifest, res.best, pipe.grid(res.best.genome));

        const bool feasible = res.best.eval.breakdown.feasible;
        feasible_runs += feasible ? 1 : 0;
        Json rj;
        rj["seed"] = seed;
        rj["feasible"] = feasible;
        if (res.first_feasible) rj["first_feasible"] = *res.first_feasible;
        else rj["first_feasible"] = nullptr;
        rj["best_fitness"] = res.best.fitness();
        rj["topology"] = topology_name(res.best.genome.topology);
        runs.push_back(rj);
    }
    summary["replicates"] = opt.replicates;
    summary["feasible_runs"] = feasible_runs;
    summary["runs"] = runs;
    write_text(fs::path(opt.out_dir) / "summary.json", summary.dump(2) + "\n");
    return feasible_runs > 0 ? 0 : 2;
}

int run_headless(const std::string& mission_path, const RunOptions& opt) {
    const MissionDocument doc = load_mission_file(mission_path);
    std::optional<AdVaeModel> model;
    if (opt.flags.prior)
        model = load_or_train(opt.prior_path.empty() ? default_prior_path() : opt.prior_path, AdVaeConfig{}, EnvelopeSpec{}, kPriorSeed);
    return run_headless(doc, opt, model ? &*model : nullptr);
}

}  // namespace aerosynth
