#ifndef AEROSYNTH_ADVAE_HPP
#define AEROSYNTH_ADVAE_HPP

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aerosynth/anatomy.hpp"

namespace aerosynth {

// Anatomically supervised variational autoencoder over coarse label grids.
// The first `anat_dims` latent means are trained to equal the normalized
// genome that produced the grid; the rest are free.

inline constexpr int kVaeChannels = 5;   // one per non-empty label

struct AdVaeConfig {
    int latent_dim = 48;
    int anat_dims = static_cast<int>(kParamCount);
    double alpha = 0.05;           // KL weight on the supervised axes
    double beta_max = 0.5;
    int beta_anneal_epochs = 10;
    double lambda_anat = 30.0;
    int grid_resolution = 32;      // divisible by 8
    int supersample = 2;           // fine samples per coarse voxel along each axis
    int corpus_size = 500;
    int epochs = 30;
    int batch_size = 16;
    double learning_rate = 1e-3;
    std::array<int, 3> channels{16, 32, 64};
    int hidden = 128;

    int free_dims() const { return latent_dim - anat_dims; }
    void validate() const;
    bool operator==(const AdVaeConfig&) const = default;
};

/// Linear warm-up from 0 to beta_max over beta_anneal_epochs, constant after.
double beta_at(int epoch, const AdVaeConfig& cfg);

/// One training pair. Occupancy holds per-label counts of fine samples
/// (0..supersample^3) per coarse voxel, channel-major, x fastest.
struct VaeSample {
    std::vector<std::uint8_t> occupancy;
    double log_pitch = 0;
    std::vector<double> target;   // first anat_dims of the normalized genome
    Topology topology = Topology::Conventional;
};

VaeSample make_sample(const AnatomyGenome& projected, const AdVaeConfig& cfg);

/// Round-robin over topologies, cycling the seeding mass class every five
/// samples. Pairs are exact: the target is the normalized genome the grid came from.
std::vector<VaeSample> generate_corpus(int n, const AdVaeConfig& cfg, const EnvelopeSpec& env, std::mt19937_64& rng);

struct VaeLossBreakdown {
    double recon_bce = 0;
    double kl_anat = 0;
    double kl_free = 0;
    double anat_alignment = 0;
    double beta_current = 0;
    double total = 0;
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class TrainingError : public std::runtime_error {
public:
    TrainingError(const std::string& what, int epoch) : std::runtime_error(what), epoch_(epoch) {}
    int epoch() const { return epoch_; }

private:
    int epoch_;
};

class ModelFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Posterior {
    std::vector<double> mean;
    std::vector<double> log_variance;
};

class AdVaeModel {
public:
    AdVaeModel() = default;
    /// Fresh weights drawn from rng.
    AdVaeModel(const AdVaeConfig& cfg, std::mt19937_64& rng);

    const AdVaeConfig& config() const { return cfg_; }

    /// Deterministic encoder pass.
    Posterior encode(const VaeSample& s) const;
    /// Per-voxel occupancy probabilities, same layout as VaeSample::occupancy.
    std::vector<double> decode(std::span<const double> z) const;

    /// Loss on a batch with explicit reparameterization noise (batch x latent_dim,
    /// row-major). Fills `grads` (same keys as params()) when non-null.
    /// Throws std::invalid_argument on shape mismatch.
    VaeLossBreakdown loss(std::span<const VaeSample* const> batch, int epoch, std::span<const double> noise,
                          std::map<std::string, RowMatrix>* grads) const;

    std::map<std::string, RowMatrix>& params() { return params_; }
    const std::map<std::string, RowMatrix>& params() const { return params_; }

    /// Shift and scale applied to log pitch before the dense layer.
    double pitch_shift = 0;
    double pitch_scale = 1;

    void save(const std::string& path) const;
    static AdVaeModel load(const std::string& path);

private:
    struct Activations;
    void forward(std::span<const VaeSample* const> batch, std::span<const double> noise, Activations& a) const;

    AdVaeConfig cfg_;
    std::map<std::string, RowMatrix> params_;
};

inline constexpr std::uint32_t kModelFileVersion = 1;

struct TrainResult {
    AdVaeModel model;
    std::vector<VaeLossBreakdown> history;   // mean loss per epoch
};

/// Adam on the full loss. Deterministic for a fixed rng state.
/// Throws TrainingError if the loss stops being finite.
TrainResult train(const std::vector<VaeSample>& corpus, const AdVaeConfig& cfg, std::mt19937_64& rng);

struct PriorReport {
    double penalty = 0;
    std::vector<double> deviation;   // p - projection, per supervised axis
};

/// Distance between a genome and its projection through the encoder mean.
PriorReport prior_report(const NormalizedGenome& g, const AdVaeModel& model, const EnvelopeSpec& env);
double prior_penalty(const NormalizedGenome& g, const AdVaeModel& model, const EnvelopeSpec& env);

/// Trains a fresh model unless `path` already holds one with a matching config.
AdVaeModel load_or_train(const std::string& path, const AdVaeConfig& cfg, const EnvelopeSpec& env, std::uint64_t seed);

}  // namespace aerosynth

#endif  // AEROSYNTH_ADVAE_HPP
