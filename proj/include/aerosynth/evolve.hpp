#ifndef AEROSYNTH_EVOLVE_HPP
#define AEROSYNTH_EVOLVE_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "aerosynth/advae.hpp"
#include "aerosynth/physics.hpp"

namespace aerosynth {

struct GaConfig {
    int population = 120;
    int generations = 150;
    double sigma0 = 0.18;
    double sigma_min = 0.03;
    double inflation_factor = 2.5;
    int inflation_threshold = 15;   // inflate when s exceeds this
    int restart_threshold = 25;     // restart when s reaches this
    double fitness_elite_frac = 0.05;
    int topology_elite = 1;         // per class
    int diversity_elite_count = 4;
    double crossover_rate = 1.0;
    double topology_mutation_rate = 0.02;
    double improvement_epsilon = 1e-12;

    void validate() const;
};

struct GaFlags {
    bool topology_elitism = true;
    bool mount_score = true;   // off: plain overlap penalty
    bool prior = true;
    bool restart = true;
};

/// Decays linearly from sigma0 + sigma_min to sigma_min, inflated while stagnating.
double mutation_sigma(int generation, int stagnation, const GaConfig& cfg);

struct Evaluation {
    FitnessBreakdown breakdown;
    MountReport mounts;
    std::vector<double> prior_deviation;   // empty when the prior is off
};

struct Individual {
    NormalizedGenome genome;
    Evaluation eval;

    double fitness() const { return eval.breakdown.fitness; }
};

using Evaluator = std::function<Evaluation(const NormalizedGenome&)>;

/// prior -> envelope projection -> voxelize -> mounts -> physics -> aggregate.
class Pipeline {
public:
    Pipeline(MissionSpec mission, PhysicsConfig physics, int resolution, GaFlags flags,
             const AdVaeModel* prior = nullptr, MountThresholds thresholds = {});

    Evaluation operator()(const NormalizedGenome& g) const;
    VoxelGrid grid(const NormalizedGenome& g) const;

    const MissionSpec& mission() const { return mission_; }
    int resolution() const { return resolution_; }

private:
    MissionSpec mission_;
    PhysicsConfig physics_;
    int resolution_;
    GaFlags flags_;
    const AdVaeModel* prior_;
    MountThresholds thresholds_;
};

struct GaState {
    int generation = 0;
    int stagnation = 0;
    double sigma = 0;
    bool restarted = false;   // a restart happened in the step that produced this generation
    std::vector<Individual> population;
    Individual best;
    std::array<std::optional<Individual>, kTopologyCount> class_best;
    std::map<int, double> pinned;   // axis -> value
    std::mt19937_64 rng;
};

/// Indices into the population: fitness elites, then one per class, then
/// diversity elites by greedy farthest-point. Throws on an empty population.
std::vector<std::size_t> select_elites(const std::vector<Individual>& pop, const GaConfig& cfg, const GaFlags& flags);

/// Topology-balanced seeding, evaluated.
GaState initialize(const MissionSpec& mission, const GaConfig& cfg, std::uint64_t seed, const Evaluator& eval);

/// One generation. Independent of flags.prior / flags.mount_score, which live in the evaluator.
void step(GaState& state, const Evaluator& eval, const GaConfig& cfg, const GaFlags& flags, const MissionSpec& mission);

/// Applies a pin to every individual, re-evaluating the ones it changes.
void pin_axis(GaState& state, int axis, double value, const Evaluator& eval);
void unpin_axis(GaState& state, int axis);
/// Replaces the worst half with fresh seeds, keeping best-so-far.
void restart_population(GaState& state, const Evaluator& eval, const MissionSpec& mission);

std::array<int, kTopologyCount> topology_histogram(const std::vector<Individual>& pop);
/// Mean pairwise Euclidean distance between normalized genomes.
double mean_pairwise_distance(const std::vector<Individual>& pop);

// ---- control loop ----------------------------------------------------------

enum class CommandKind { Pause, Resume, PinAxis, UnpinAxis, ForceRestart, Stop };

struct Command {
    CommandKind kind = CommandKind::Pause;
    int axis = 0;
    double value = 0;
};

struct RunHooks {
    /// Called once per completed generation, generation 0 included.
    std::function<void(const GaState&)> on_generation;
    /// Next queued command; with wait set, blocks until one arrives. nullopt: queue empty.
    std::function<std::optional<Command>(bool wait)> next_command;
};

struct RunResult {
    Individual best;
    std::vector<double> best_fitness;     // per generation
    std::optional<int> first_feasible;    // generation the best first became feasible
    int generations_run = 0;
    bool stopped = false;
    GaState final_state;
};

RunResult run(const MissionSpec& mission, const GaConfig& cfg, const GaFlags& flags, std::uint64_t seed,
              const Evaluator& eval, const RunHooks& hooks = {});

}  // namespace aerosynth

#endif  // AEROSYNTH_EVOLVE_HPP
