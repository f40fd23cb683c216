#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "aerosynth/server.hpp"

using namespace aerosynth;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

int train_prior(int corpus, const std::string& out, int epochs, std::uint64_t seed) {
    AdVaeConfig cfg;
    cfg.corpus_size = corpus;
    if (epochs >= 0) cfg.epochs = epochs;
    std::mt19937_64 rng(seed);
    const auto data = generate_corpus(cfg.corpus_size, cfg, EnvelopeSpec{}, rng);
    const auto res = train(data, cfg, rng);
    for (std::size_t e = 0; e < res.history.size(); ++e) {
        const auto& h = res.history[e];
        std::printf("epoch %2zu  total %.4f  recon %.4f  kl_anat %.3f  kl_free %.3f  align %.4f  beta %.3f\n", e, h.total,
                    h.recon_bce, h.kl_anat, h.kl_free, h.anat_alignment, h.beta_current);
    }
    res.model.save(out);
    std::printf("saved %s\n", out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"aerosynth: mission-driven aircraft synthesis"};
    app.require_subcommand(1);

    RunOptions ro;
    std::string mission_path;
    bool no_topo = false, no_mount = false, no_prior = false, no_restart = false;
    auto* run = app.add_subcommand("run", "evolve a design headless");
    run->add_option("mission", mission_path, "mission JSON file")->required()->check(CLI::ExistingFile);
    run->add_option("--seed", ro.seed, "base seed");
    run->add_option("--out", ro.out_dir, "output directory");
    run->add_option("--resolution", ro.resolution, "scoring grid resolution")->check(CLI::Range(kMinResolution, 1024));
    run->add_option("--replicates", ro.replicates, "independent seeded runs")->check(CLI::PositiveNumber);
    run->add_option("--population", ro.ga.population, "population size");
    run->add_option("--generations", ro.ga.generations, "generation budget");
    run->add_option("--prior", ro.prior_path, "model cache file");
    run->add_flag("--ablate-topology-elitism", no_topo);
    run->add_flag("--ablate-mount-score", no_mount);
    run->add_flag("--ablate-prior", no_prior);
    run->add_flag("--ablate-restart", no_restart);

    std::string bind = "127.0.0.1:8765";
    ServeOptions so;
    so.run.out_dir.clear();
    auto* srv = app.add_subcommand("serve", "stream runs over WebSocket");
    srv->add_option("--bind", bind, "ADDR:PORT");
    srv->add_option("--out", so.run.out_dir, "write final artifacts per run here");
    srv->add_option("--resolution", so.run.resolution, "scoring grid resolution")->check(CLI::Range(kMinResolution, 1024));
    srv->add_option("--prior", so.run.prior_path, "model cache file");

    int corpus = AdVaeConfig{}.corpus_size, epochs = -1;
    std::string model_out = default_prior_path();
    std::uint64_t prior_seed = kPriorSeed;
    auto* tp = app.add_subcommand("train-prior", "train and cache the shape prior");
    tp->add_option("--corpus", corpus, "synthetic corpus size")->check(CLI::PositiveNumber);
    tp->add_option("--out", model_out, "model file");
    tp->add_option("--epochs", epochs, "training epochs");
    tp->add_option("--seed", prior_seed, "corpus and initialization seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            ro.flags.topology_elitism = !no_topo;
            ro.flags.mount_score = !no_mount;
            ro.flags.prior = !no_prior;
            ro.flags.restart = !no_restart;
            const int code = run_headless(mission_path, ro);
            std::cout << (code == 0 ? "feasible design found" : "no feasible design") << " (" << ro.out_dir << ")\n";
            return code;
        }
        if (*srv) {
#ifndef AEROSYNTH_HAVE_SERVE
            throw std::runtime_error("built without the WebSocket server");
#else
            const auto colon = bind.rfind(':');
            if (colon == std::string::npos) throw std::invalid_argument("--bind must be ADDR:PORT");
            so.address = bind.substr(0, colon);
            so.port = static_cast<unsigned short>(std::stoi(bind.substr(colon + 1)));
            so.stop = &g_stop;
            so.on_listening = [](unsigned short port) { std::cout << "listening on port " << port << std::endl; };
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            serve(so);
            return 0;
#endif
        }
        if (*tp) {
            if (const auto parent = std::filesystem::path(model_out).parent_path(); !parent.empty())
                std::filesystem::create_directories(parent);
            return train_prior(corpus, model_out, epochs, prior_seed);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
