#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "aerosynth/evolve.hpp"

using namespace aerosynth;

namespace {

// Cheap stand-in for the physics: a bowl centred on 0.2 on every axis.
Evaluation bowl(const NormalizedGenome& g) {
    double s = 0;
    for (double v : g.values) s += (v - 0.2) * (v - 0.2);
    Evaluation e;
    e.breakdown.fitness = std::exp(-s);
    e.breakdown.feasible = e.breakdown.fitness > 0.9;
    return e;
}

Individual with_fitness(double f, Topology t, double v = 0.0) {
    Individual i;
    i.genome.topology = t;
    i.genome.values.fill(v);
    i.eval.breakdown.fitness = f;
    return i;
}

GaConfig small() {
    GaConfig c;
    c.population = 40;
    c.generations = 30;
    return c;
}

}  // namespace

TEST_CASE("mutation schedule") {
    const GaConfig c;
    CHECK(mutation_sigma(0, 0, c) == doctest::Approx(0.21));
    CHECK(mutation_sigma(150, 0, c) == doctest::Approx(0.03));
    CHECK(mutation_sigma(75, 0, c) == doctest::Approx(0.12));
    CHECK(mutation_sigma(0, 15, c) == doctest::Approx(0.21));    // at the threshold: not yet
    CHECK(mutation_sigma(0, 16, c) == doctest::Approx(0.525));
    CHECK(mutation_sigma(150, 20, c) == doctest::Approx(0.075));
}

TEST_CASE("GA config validation") {
    GaConfig c;
    CHECK_NOTHROW(c.validate());
    c.population = 12;   // 1 + 5 + 4 elites still fit
    CHECK_NOTHROW(c.validate());
    c.population = 9;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = GaConfig{};
    c.restart_threshold = 15;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("elites: fitness, then one per class, then diversity") {
    GaConfig c;
    std::vector<Individual> pop;
    for (int i = 0; i < 120; ++i) pop.push_back(with_fitness(0.5 + 0.004 * i, Topology::Conventional, -0.5 + i / 240.0));
    pop[7] = with_fitness(0.01, Topology::FlyingWing, 0.9);   // last-ranked, only one of its class
    pop[8] = with_fitness(0.02, Topology::TTail);
    pop[9] = with_fitness(0.03, Topology::VTail);
    pop[10] = with_fitness(0.04, Topology::Cruciform);
    const auto e = select_elites(pop, c, GaFlags{});
    REQUIRE(e.size() == 6 + 4 + 4);   // conventional is already represented
    for (int r = 0; r < 6; ++r) CHECK(e[r] == static_cast<std::size_t>(119 - r));
    std::set<std::size_t> chosen(e.begin(), e.end());
    CHECK(chosen.size() == e.size());
    for (std::size_t k : {7u, 8u, 9u, 10u}) CHECK(chosen.count(k) == 1);

    GaFlags off;
    off.topology_elitism = false;
    const auto f = select_elites(pop, c, off);
    CHECK(f.size() == 6 + 4);
    CHECK(std::set<std::size_t>(f.begin(), f.end()).count(7) == 1);   // farthest point
}

TEST_CASE("identical fitness breaks ties by lower index") {
    GaConfig c;
    c.diversity_elite_count = 0;
    std::vector<Individual> pop(40, with_fitness(0.5, Topology::Conventional));
    const auto e = select_elites(pop, c, GaFlags{});
    REQUIRE(e.size() == 2);
    CHECK(e[0] == 0);
    CHECK(e[1] == 1);
}

TEST_CASE("initial population covers every topology") {
    const auto s = initialize(MissionSpec{}, small(), 5, bowl);
    CHECK(s.population.size() == 40);
    for (int n : topology_histogram(s.population)) CHECK(n == 8);
    CHECK(s.generation == 0);
    CHECK(s.sigma == doctest::Approx(0.21));
    CHECK(mean_pairwise_distance(s.population) > 0.0);
    for (const auto& cb : s.class_best) CHECK(cb.has_value());
}

TEST_CASE("best-so-far is monotone and elitism keeps all classes") {
    const auto c = small();
    const auto r = run(MissionSpec{}, c, GaFlags{}, 9, bowl);
    REQUIRE(r.best_fitness.size() == 31);
    for (std::size_t g = 1; g < r.best_fitness.size(); ++g) CHECK(r.best_fitness[g] >= r.best_fitness[g - 1]);
    for (int n : topology_histogram(r.final_state.population)) CHECK(n >= 1);
    CHECK(r.generations_run == 30);
    CHECK(r.best.fitness() == r.best_fitness.back());
    CHECK(r.best_fitness.back() > r.best_fitness.front());
}

TEST_CASE("runs are deterministic for a seed") {
    const auto c = small();
    const auto a = run(MissionSpec{}, c, GaFlags{}, 21, bowl);
    const auto b = run(MissionSpec{}, c, GaFlags{}, 21, bowl);
    CHECK(a.best_fitness == b.best_fitness);
    CHECK(a.best.genome == b.best.genome);
    const auto d = run(MissionSpec{}, c, GaFlags{}, 22, bowl);
    CHECK_FALSE(d.best.genome == a.best.genome);
}

TEST_CASE("without variation operators children are copies") {
    auto c = small();
    c.sigma0 = 0.0;
    c.sigma_min = 0.0;
    c.crossover_rate = 0.0;
    c.topology_mutation_rate = 0.0;
    auto s = initialize(MissionSpec{}, c, 3, bowl);
    std::set<std::array<double, kParamCount>> seen;
    for (const auto& i : s.population) seen.insert(i.genome.values);
    for (int g = 0; g < 5; ++g) step(s, bowl, c, GaFlags{}, MissionSpec{});
    for (const auto& i : s.population) CHECK(seen.count(i.genome.values) == 1);
}

TEST_CASE("pins hold in every individual until released") {
    const auto c = small();
    auto s = initialize(MissionSpec{}, c, 4, bowl);
    pin_axis(s, 3, -0.75, bowl);
    for (int g = 0; g < 4; ++g) {
        step(s, bowl, c, GaFlags{}, MissionSpec{});
        for (const auto& i : s.population) CHECK(i.genome.values[3] == -0.75);
        CHECK(s.best.genome.values[3] == -0.75);
    }
    CHECK_THROWS_AS(pin_axis(s, 25, 0.0, bowl), std::out_of_range);
    CHECK_THROWS_AS(pin_axis(s, 0, 1.5, bowl), std::out_of_range);
    unpin_axis(s, 3);
    CHECK(s.pinned.empty());
    bool moved = false;
    for (int g = 0; g < 4; ++g) {
        step(s, bowl, c, GaFlags{}, MissionSpec{});
        for (const auto& i : s.population) moved |= i.genome.values[3] != -0.75;
    }
    CHECK(moved);
}

TEST_CASE("restart keeps the best and refreshes the worst half") {
    const auto c = small();
    auto s = initialize(MissionSpec{}, c, 6, bowl);
    for (int g = 0; g < 3; ++g) step(s, bowl, c, GaFlags{}, MissionSpec{});
    const auto best = s.best;
    restart_population(s, bowl, MissionSpec{});
    CHECK(s.population.size() == 40);
    bool present = false;
    for (const auto& i : s.population) present |= i.genome == best.genome;
    CHECK(present);
}

TEST_CASE("stagnation triggers a restart at the threshold") {
    auto c = small();
    c.generations = 40;
    const Evaluator flat = [](const NormalizedGenome&) {
        Evaluation e;
        e.breakdown.fitness = 0.5;
        return e;
    };
    std::vector<int> restarts;
    RunHooks hooks;
    hooks.on_generation = [&](const GaState& s) {
        if (s.restarted) restarts.push_back(s.generation);
    };
    run(MissionSpec{}, c, GaFlags{}, 1, flat, hooks);
    CHECK(restarts == std::vector<int>{25});
    GaFlags no_restart;
    no_restart.restart = false;
    restarts.clear();
    run(MissionSpec{}, c, no_restart, 1, flat, hooks);
    CHECK(restarts.empty());
}

TEST_CASE("commands are applied between generations") {
    const auto c = small();
    std::vector<Command> script = {{CommandKind::PinAxis, 2, 0.5}, {CommandKind::Pause}, {CommandKind::Resume}};
    std::size_t next = 0;
    std::vector<int> gens;
    RunHooks hooks;
    hooks.on_generation = [&](const GaState& s) {
        gens.push_back(s.generation);
        if (s.generation >= 1) {
            for (const auto& i : s.population) CHECK(i.genome.values[2] == 0.5);
        }
        if (s.generation == 6) script.push_back({CommandKind::Stop});
    };
    hooks.next_command = [&](bool) -> std::optional<Command> {
        if (next < script.size()) return script[next++];
        return std::nullopt;
    };
    const auto r = run(MissionSpec{}, c, GaFlags{}, 2, bowl, hooks);
    CHECK(r.stopped);
    CHECK(r.generations_run == 6);
    for (std::size_t k = 0; k < gens.size(); ++k) CHECK(gens[k] == static_cast<int>(k));
}

TEST_CASE("pipeline without a prior reports no deviation") {
    MissionSpec m;
    const Pipeline p(m, PhysicsConfig{}, 48, GaFlags{}, nullptr);
    const auto s = initialize(m, small(), 1, p);
    for (const auto& i : s.population) {
        CHECK(i.eval.prior_deviation.empty());
        CHECK(i.eval.breakdown.prior_penalty == 0.0);
        CHECK(i.fitness() >= 0.0);
        CHECK(i.fitness() <= 1.0);
    }
    CHECK(p.grid(s.best.genome).resolution == 48);
}
