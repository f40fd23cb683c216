#include "aerosynth/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "aerosynth/voxelizer.hpp"

namespace aerosynth {

void GaConfig::validate() const {
    if (population < 10) throw std::invalid_argument("population must be >= 10");
    if (generations < 1) throw std::invalid_argument("generations must be >= 1");
    if (!(sigma0 >= 0.0 && sigma_min >= 0.0)) throw std::invalid_argument("mutation scales must be >= 0");
    if (!(inflation_factor >= 1.0)) throw std::invalid_argument("inflation_factor must be >= 1");
    if (inflation_threshold < 1 || restart_threshold <= inflation_threshold)
        throw std::invalid_argument("need 0 < inflation_threshold < restart_threshold");
    if (!(fitness_elite_frac > 0.0 && fitness_elite_frac < 1.0)) throw std::invalid_argument("fitness_elite_frac must be in (0, 1)");
    if (topology_elite < 0 || diversity_elite_count < 0) throw std::invalid_argument("elite counts must be >= 0");
    const int elites = static_cast<int>(std::lround(fitness_elite_frac * population)) +
                       topology_elite * static_cast<int>(kTopologyCount) + diversity_elite_count;
    if (elites >= population) throw std::invalid_argument("elite counts must sum below the population");
    if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) throw std::invalid_argument("crossover_rate must be in [0, 1]");
    if (!(topology_mutation_rate >= 0.0 && topology_mutation_rate <= 1.0))
        throw std::invalid_argument("topology_mutation_rate must be in [0, 1]");
    if (!(improvement_epsilon >= 0.0)) throw std::invalid_argument("improvement_epsilon must be >= 0");
}

double mutation_sigma(int generation, int stagnation, const GaConfig& cfg) {
    const double base = cfg.sigma0 * (1.0 - static_cast<double>(generation) / cfg.generations) + cfg.sigma_min;
    return stagnation > cfg.inflation_threshold ? cfg.inflation_factor * base : base;
}

// ---- evaluation pipeline ---------------------------------------------------

Pipeline::Pipeline(MissionSpec mission, PhysicsConfig physics, int resolution, GaFlags flags, const AdVaeModel* prior,
                   MountThresholds thresholds)
    : mission_(mission), physics_(physics), resolution_(resolution), flags_(flags), prior_(prior), thresholds_(thresholds) {
    mission_.validate();
    physics_.validate();
    thresholds_.validate();
    if (resolution_ < kMinResolution) throw std::invalid_argument("resolution below minimum");
}

VoxelGrid Pipeline::grid(const NormalizedGenome& g) const {
    return voxelize(denormalize(g).genome, mission_.envelope, resolution_);
}

Evaluation Pipeline::operator()(const NormalizedGenome& g) const {
    Evaluation ev;
    double prior = 0.0;
    if (flags_.prior && prior_) {
        auto rep = prior_report(g, *prior_, mission_.envelope);
        prior = rep.penalty;
        ev.prior_deviation = std::move(rep.deviation);
    }
    const AnatomyGenome projected = project_envelope(denormalize(g).genome, mission_.envelope);
    const VoxelGrid grid = rasterize(projected, resolution_);
    ev.mounts = evaluate_mounts(grid, part_bounds(grid), thresholds_);
    ev.breakdown = evaluate(projected, grid, mission_, physics_, ev.mounts, prior, !flags_.mount_score);
    return ev;
}

// ---- GA --------------------------------------------------------------------

namespace {

constexpr std::size_t kTailFirst = idx(Param::VtailSize);
constexpr std::size_t kTailLast = idx(Param::VtailExists);

Evaluation safe_eval(const Evaluator& eval, const NormalizedGenome& g) {
    try {
        return eval(g);
    } catch (const std::exception&) {
        Evaluation e;
        e.breakdown.valid = false;
        e.breakdown.fitness = 0.0;
        return e;
    }
}

bool better(const Individual& a, std::size_t ia, const Individual& b, std::size_t ib) {
    if (a.fitness() != b.fitness()) return a.fitness() > b.fitness();
    return ia < ib;
}

double distance2(const NormalizedGenome& a, const NormalizedGenome& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < kParamCount; ++i) s += (a.values[i] - b.values[i]) * (a.values[i] - b.values[i]);
    return s;
}

void apply_pins(NormalizedGenome& g, const std::map<int, double>& pinned) {
    for (const auto& [axis, v] : pinned) g.values[axis] = v;
}

void update_bests(GaState& s, const GaConfig& cfg, bool count_stagnation) {
    std::size_t top = 0;
    for (std::size_t i = 1; i < s.population.size(); ++i)
        if (better(s.population[i], i, s.population[top], top)) top = i;
    const auto& cand = s.population[top];
    if (cand.fitness() > s.best.fitness() + cfg.improvement_epsilon) {
        s.best = cand;
        if (count_stagnation) s.stagnation = 0;
    } else if (count_stagnation) {
        ++s.stagnation;
    }
    for (const auto& ind : s.population) {
        auto& cb = s.class_best[topology_index(ind.genome.topology)];
        if (!cb || ind.fitness() > cb->fitness()) cb = ind;
    }
}

std::size_t tournament(const std::vector<Individual>& pop, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
    const std::size_t a = pick(rng), b = pick(rng);
    return better(pop[a], a, pop[b], b) ? a : b;
}

}  // namespace

std::vector<std::size_t> select_elites(const std::vector<Individual>& pop, const GaConfig& cfg, const GaFlags& flags) {
    if (pop.empty()) throw std::invalid_argument("select_elites: empty population");
    std::vector<std::size_t> order(pop.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return better(pop[a], a, pop[b], b); });

    std::vector<std::size_t> elites;
    std::vector<char> taken(pop.size(), 0);
    auto take = [&](std::size_t i) {
        if (!taken[i]) {
            taken[i] = 1;
            elites.push_back(i);
        }
    };
    const std::size_t n_fit = std::max<std::size_t>(1, std::lround(cfg.fitness_elite_frac * static_cast<double>(pop.size())));
    for (std::size_t r = 0; r < std::min(n_fit, order.size()); ++r) take(order[r]);

    if (flags.topology_elitism && cfg.topology_elite > 0) {
        std::array<int, kTopologyCount> got{};
        for (std::size_t i : order) {
            const auto t = topology_index(pop[i].genome.topology);
            if (got[t] < cfg.topology_elite) {
                ++got[t];
                take(i);
            }
        }
    }

    // farthest-point against everything chosen so far
    std::vector<double> nearest(pop.size(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < pop.size(); ++i)
        for (std::size_t e : elites) nearest[i] = std::min(nearest[i], distance2(pop[i].genome, pop[e].genome));
    for (int d = 0; d < cfg.diversity_elite_count; ++d) {
        std::size_t pick = pop.size();
        for (std::size_t i = 0; i < pop.size(); ++i) {
            if (taken[i]) continue;
            if (pick == pop.size() || nearest[i] > nearest[pick]) pick = i;
        }
        if (pick == pop.size()) break;
        take(pick);
        for (std::size_t i = 0; i < pop.size(); ++i) nearest[i] = std::min(nearest[i], distance2(pop[i].genome, pop[pick].genome));
    }
    return elites;
}

GaState initialize(const MissionSpec& mission, const GaConfig& cfg, std::uint64_t seed, const Evaluator& eval) {
    cfg.validate();
    mission.validate();
    GaState s;
    s.rng.seed(seed);
    s.population.reserve(cfg.population);
    for (int i = 0; i < cfg.population; ++i) {
        Individual ind;
        ind.genome = seed_individual(topology_from_index(i), mission, s.rng);
        s.population.push_back(std::move(ind));
    }
    for (auto& ind : s.population) ind.eval = safe_eval(eval, ind.genome);
    s.best = s.population.front();
    s.best.eval.breakdown.fitness = -1.0;   // any real individual replaces it
    update_bests(s, cfg, false);
    s.sigma = mutation_sigma(0, 0, cfg);
    return s;
}

void step(GaState& s, const Evaluator& eval, const GaConfig& cfg, const GaFlags& flags, const MissionSpec& mission) {
    if (s.population.empty()) throw std::invalid_argument("step: empty population");
    const int g = std::min(s.generation, cfg.generations);
    const double sigma = mutation_sigma(g, s.stagnation, cfg);
    const auto elites = select_elites(s.population, cfg, flags);

    std::vector<Individual> next;
    next.reserve(cfg.population);
    for (std::size_t e : elites) next.push_back(s.population[e]);

    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> any_class(0, kTopologyCount - 1);
    const std::size_t first_child = next.size();
    while (static_cast<int>(next.size()) < cfg.population) {
        const auto& p1 = s.population[tournament(s.population, s.rng)].genome;
        const auto& p2 = s.population[tournament(s.population, s.rng)].genome;
        NormalizedGenome child = p1;
        if (u01(s.rng) < cfg.crossover_rate) {
            const bool from_second = u01(s.rng) < 0.5;
            const auto& lead = from_second ? p2 : p1;
            child.topology = lead.topology;
            for (std::size_t i = 0; i < kParamCount; ++i) {
                const bool tail_block = i >= kTailFirst && i <= kTailLast && p1.topology != p2.topology;
                if (tail_block) child.values[i] = lead.values[i];
                else child.values[i] = u01(s.rng) < 0.5 ? p1.values[i] : p2.values[i];
            }
        }
        if (sigma > 0.0)
            for (double& v : child.values) v = std::clamp(v + sigma * noise(s.rng), -1.0, 1.0);
        if (cfg.topology_mutation_rate > 0.0 && u01(s.rng) < cfg.topology_mutation_rate)
            child.topology = topology_from_index(any_class(s.rng));
        conform_to_topology(child);
        apply_pins(child, s.pinned);
        Individual ind;
        ind.genome = child;
        next.push_back(std::move(ind));
    }
    for (std::size_t i = first_child; i < next.size(); ++i) next[i].eval = safe_eval(eval, next[i].genome);

    s.population = std::move(next);
    s.generation += 1;
    update_bests(s, cfg, true);
    s.restarted = false;
    if (flags.restart && s.stagnation >= cfg.restart_threshold) {
        restart_population(s, eval, mission);
        update_bests(s, cfg, false);
        s.stagnation = 0;
        s.restarted = true;
    }
    s.sigma = mutation_sigma(std::min(s.generation, cfg.generations), s.stagnation, cfg);
}

void pin_axis(GaState& s, int axis, double value, const Evaluator& eval) {
    if (axis < 0 || axis >= static_cast<int>(kParamCount)) throw std::out_of_range("pin axis must be in [0, 25)");
    if (!(value >= -1.0 && value <= 1.0)) throw std::out_of_range("pin value must be in [-1, 1]");
    s.pinned[axis] = value;
    for (auto& ind : s.population) {
        if (ind.genome.values[axis] == value) continue;
        ind.genome.values[axis] = value;
        ind.eval = safe_eval(eval, ind.genome);
    }
    // the old best no longer satisfies the pin; best-so-far restarts from the pinned population
    s.best = s.population.front();
    s.best.eval.breakdown.fitness = -1.0;
    s.class_best = {};
    update_bests(s, GaConfig{}, false);
}

void unpin_axis(GaState& s, int axis) { s.pinned.erase(axis); }

void restart_population(GaState& s, const Evaluator& eval, const MissionSpec& mission) {
    std::vector<std::size_t> order(s.population.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return better(s.population[a], a, s.population[b], b); });
    const std::size_t keep = s.population.size() - s.population.size() / 2;
    // best-so-far may have left the population (e.g. after a pin); put it back first
    bool best_present = false;
    for (std::size_t r = 0; r < keep; ++r)
        if (s.population[order[r]].genome == s.best.genome) best_present = true;
    if (!best_present) s.population[order[keep - 1]] = s.best;
    std::size_t t = 0;
    for (std::size_t r = keep; r < order.size(); ++r, ++t) {
        Individual ind;
        ind.genome = seed_individual(topology_from_index(t), mission, s.rng);
        apply_pins(ind.genome, s.pinned);
        ind.eval = safe_eval(eval, ind.genome);
        s.population[order[r]] = std::move(ind);
    }
}

std::array<int, kTopologyCount> topology_histogram(const std::vector<Individual>& pop) {
    std::array<int, kTopologyCount> h{};
    for (const auto& ind : pop) ++h[topology_index(ind.genome.topology)];
    return h;
}

double mean_pairwise_distance(const std::vector<Individual>& pop) {
    if (pop.size() < 2) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < pop.size(); ++i)
        for (std::size_t j = i + 1; j < pop.size(); ++j) s += std::sqrt(distance2(pop[i].genome, pop[j].genome));
    return s / (0.5 * static_cast<double>(pop.size()) * static_cast<double>(pop.size() - 1));
}

RunResult run(const MissionSpec& mission, const GaConfig& cfg, const GaFlags& flags, std::uint64_t seed,
              const Evaluator& eval, const RunHooks& hooks) {
    RunResult res;
    GaState s = initialize(mission, cfg, seed, eval);
    auto record = [&] {
        res.best_fitness.push_back(s.best.fitness());
        if (!res.first_feasible && s.best.eval.breakdown.feasible) res.first_feasible = s.generation;
        if (hooks.on_generation) hooks.on_generation(s);
    };
    record();

    bool paused = false;
    while (s.generation < cfg.generations) {
        if (hooks.next_command) {
            bool stop = false;
            while (true) {
                const auto cmd = hooks.next_command(paused);
                if (!cmd) break;
                switch (cmd->kind) {
                case CommandKind::Pause: paused = true; break;
                case CommandKind::Resume: paused = false; break;
                case CommandKind::PinAxis: pin_axis(s, cmd->axis, cmd->value, eval); break;
                case CommandKind::UnpinAxis: unpin_axis(s, cmd->axis); break;
                case CommandKind::ForceRestart:
                    restart_population(s, eval, mission);
                    s.stagnation = 0;
                    break;
                case CommandKind::Stop: stop = true; break;
                }
                if (stop) break;
            }
            if (stop) {
                res.stopped = true;
                break;
            }
        }
        step(s, eval, cfg, flags, mission);
        record();
    }
    res.best = s.best;
    res.generations_run = s.generation;
    res.final_state = std::move(s);
    return res;
}

}  // namespace aerosynth
