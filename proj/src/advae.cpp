#include "aerosynth/advae.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "aerosynth/mission.hpp"
#include "aerosynth/voxelizer.hpp"

namespace aerosynth {

void AdVaeConfig::validate() const {
    if (anat_dims < 1 || anat_dims > static_cast<int>(kParamCount))
        throw std::invalid_argument("anat_dims must be in [1, 25]");
    if (latent_dim <= anat_dims) throw std::invalid_argument("latent_dim must exceed anat_dims");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0, 1)");
    if (!(beta_max >= 0.0)) throw std::invalid_argument("beta_max must be >= 0");
    if (beta_anneal_epochs < 1) throw std::invalid_argument("beta_anneal_epochs must be >= 1");
    if (!(lambda_anat > 0.0)) throw std::invalid_argument("lambda_anat must be positive");
    if (grid_resolution < 8 || grid_resolution % 8 != 0)
        throw std::invalid_argument("grid_resolution must be a positive multiple of 8");
    if (supersample < 1 || supersample > 6) throw std::invalid_argument("supersample must be in [1, 6]");
    if (grid_resolution * supersample < kMinResolution)
        throw std::invalid_argument("grid_resolution * supersample below rasterizer minimum");
    if (corpus_size < 1 || epochs < 0 || batch_size < 1) throw std::invalid_argument("corpus, epochs, batch out of range");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
    for (int c : channels)
        if (c < 1) throw std::invalid_argument("channel counts must be positive");
    if (hidden < 1) throw std::invalid_argument("hidden must be positive");
}

double beta_at(int epoch, const AdVaeConfig& cfg) {
    if (epoch <= 0) return 0.0;
    return cfg.beta_max * std::min(1.0, static_cast<double>(epoch) / cfg.beta_anneal_epochs);
}

VaeSample make_sample(const AnatomyGenome& projected, const AdVaeConfig& cfg) {
    const int r = cfg.grid_resolution, ss = cfg.supersample, fine = r * ss;
    const VoxelGrid grid = rasterize(projected, fine, true);
    VaeSample s;
    s.occupancy.assign(static_cast<std::size_t>(kVaeChannels) * r * r * r, 0);
    const std::size_t n = static_cast<std::size_t>(r) * r * r;
    for (int k = 0; k < fine; ++k)
        for (int j = 0; j < fine; ++j)
            for (int i = 0; i < fine; ++i) {
                const int l = static_cast<int>(grid.at(i, j, k));
                if (l == 0) continue;
                const std::size_t v = static_cast<std::size_t>(i / ss) + r * (static_cast<std::size_t>(j / ss) + r * static_cast<std::size_t>(k / ss));
                ++s.occupancy[(l - 1) * n + v];
            }
    s.log_pitch = std::log(grid.pitch * ss);
    const auto ng = normalize(projected);
    s.target.assign(ng.values.begin(), ng.values.begin() + cfg.anat_dims);
    s.topology = projected.topology;
    return s;
}

std::vector<VaeSample> generate_corpus(int n, const AdVaeConfig& cfg, const EnvelopeSpec& env, std::mt19937_64& rng) {
    if (n < 1) throw std::invalid_argument("generate_corpus: n must be >= 1");
    constexpr double kMasses[3] = {600.0, 12000.0, 45000.0};
    constexpr int kCorpusEngineCap = 4;
    std::vector<VaeSample> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        const Topology t = topology_from_index(i);
        const double m = kMasses[(i / kTopologyCount) % 3];
        const auto seed = seed_individual(t, m, kCorpusEngineCap, rng);
        out.push_back(make_sample(project_envelope(denormalize(seed).genome, env), cfg));
    }
    return out;
}

// ---- network ---------------------------------------------------------------

namespace {

constexpr double kLeak = 0.1;

using Mat = RowMatrix;
using Map = Eigen::Map<Mat>;
using CMap = Eigen::Map<const Mat>;

void leaky_inplace(Mat& a) { a = a.cwiseMax(kLeak * a); }
Mat leaky(const Mat& a) { return a.cwiseMax(kLeak * a); }
// multiplies the upstream gradient by the slope at pre-activation a
void leaky_back(Mat& d, const Mat& a) {
    d.array() *= a.unaryExpr([](double v) { return v > 0.0 ? 1.0 : kLeak; }).array();
}

// Stride-2 size-2 kernels do not overlap, so "im2col" is a pure reshuffle:
// row per coarse voxel, 8 child feature blocks per row (child t = dx + 2dy + 4dz).
Mat gather(const Mat& fine_rows, int batch, int fine_res) {
    const int c = static_cast<int>(fine_rows.cols()), ro = fine_res / 2;
    const std::size_t nf = static_cast<std::size_t>(fine_res) * fine_res * fine_res;
    const std::size_t nc = static_cast<std::size_t>(ro) * ro * ro;
    Mat out(static_cast<Eigen::Index>(batch * nc), 8 * c);
    for (int b = 0; b < batch; ++b)
        for (int k = 0; k < ro; ++k)
            for (int j = 0; j < ro; ++j)
                for (int i = 0; i < ro; ++i) {
                    const std::size_t row = b * nc + (static_cast<std::size_t>(k) * ro + j) * ro + i;
                    double* dst = out.data() + row * 8 * c;
                    for (int t = 0; t < 8; ++t) {
                        const int fi = 2 * i + (t & 1), fj = 2 * j + ((t >> 1) & 1), fk = 2 * k + (t >> 2);
                        const std::size_t src = b * nf + (static_cast<std::size_t>(fk) * fine_res + fj) * fine_res + fi;
                        std::memcpy(dst + t * c, fine_rows.data() + src * c, sizeof(double) * c);
                    }
                }
    return out;
}

// inverse of gather
Mat scatter(const Mat& coarse_rows, int batch, int fine_res) {
    const int c = static_cast<int>(coarse_rows.cols()) / 8, ro = fine_res / 2;
    const std::size_t nf = static_cast<std::size_t>(fine_res) * fine_res * fine_res;
    const std::size_t nc = static_cast<std::size_t>(ro) * ro * ro;
    Mat out(static_cast<Eigen::Index>(batch * nf), c);
    for (int b = 0; b < batch; ++b)
        for (int k = 0; k < ro; ++k)
            for (int j = 0; j < ro; ++j)
                for (int i = 0; i < ro; ++i) {
                    const std::size_t row = b * nc + (static_cast<std::size_t>(k) * ro + j) * ro + i;
                    const double* src = coarse_rows.data() + row * 8 * c;
                    for (int t = 0; t < 8; ++t) {
                        const int fi = 2 * i + (t & 1), fj = 2 * j + ((t >> 1) & 1), fk = 2 * k + (t >> 2);
                        const std::size_t dst = b * nf + (static_cast<std::size_t>(fk) * fine_res + fj) * fine_res + fi;
                        std::memcpy(out.data() + dst * c, src + t * c, sizeof(double) * c);
                    }
                }
    return out;
}

Mat input_rows(std::span<const VaeSample* const> batch, const AdVaeConfig& cfg) {
    const int r = cfg.grid_resolution;
    const std::size_t n = static_cast<std::size_t>(r) * r * r;
    const double w = 1.0 / (cfg.supersample * cfg.supersample * cfg.supersample);
    Mat x(static_cast<Eigen::Index>(batch.size() * n), kVaeChannels);
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto& occ = batch[b]->occupancy;
        if (occ.size() != kVaeChannels * n) throw std::invalid_argument("sample occupancy does not match grid_resolution");
        for (int c = 0; c < kVaeChannels; ++c)
            for (std::size_t v = 0; v < n; ++v) x(static_cast<Eigen::Index>(b * n + v), c) = occ[c * n + v] * w;
    }
    return x;
}

int flat_width(const AdVaeConfig& cfg) {
    const int r3 = cfg.grid_resolution / 8;
    return r3 * r3 * r3 * cfg.channels[2];
}

void add_bias(Mat& a, const Mat& b) { a.rowwise() += b.row(0); }

double softplus(double l) { return std::max(l, 0.0) + std::log1p(std::exp(-std::abs(l))); }
double sigmoid(double l) { return l >= 0 ? 1.0 / (1.0 + std::exp(-l)) : std::exp(l) / (1.0 + std::exp(l)); }

}  // namespace

struct AdVaeModel::Activations {
    int batch = 0;
    Mat x0;
    std::array<Mat, 3> g;     // gathered conv inputs
    std::array<Mat, 3> a;     // conv pre-activations
    Mat f_in, a_fc, h_fc, head;
    Mat mu, lv, eps, z;
    Mat a_d1, h_d1, a_d2;
    std::array<Mat, 3> u;     // deconv inputs, coarse to fine
    std::array<Mat, 2> ap;    // deconv pre-activations (hidden levels)
    Mat logits;
};

AdVaeModel::AdVaeModel(const AdVaeConfig& cfg, std::mt19937_64& rng) : cfg_(cfg) {
    cfg_.validate();
    const int L = cfg.latent_dim, H = cfg.hidden, F = flat_width(cfg);
    const auto& ch = cfg.channels;
    auto init = [&](const std::string& name, int rows, int cols, double gain) {
        std::normal_distribution<double> nd(0.0, gain / std::sqrt(static_cast<double>(rows)));
        Mat w(rows, cols);
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = nd(rng);
        params_[name + ".w"] = w;
        params_[name + ".b"] = Mat::Zero(1, cols);
    };
    const double he = std::sqrt(2.0 / (1.0 + kLeak * kLeak));
    init("enc.conv1", 8 * kVaeChannels, ch[0], he);
    init("enc.conv2", 8 * ch[0], ch[1], he);
    init("enc.conv3", 8 * ch[1], ch[2], he);
    init("enc.fc", F + 1, H, he);
    init("enc.head", H, 2 * L, 0.1);
    init("dec.fc1", L, H, he);
    init("dec.fc2", H, F, he);
    // transposed conv weights map one coarse voxel to its 8 children
    init("dec.deconv3", ch[2], 8 * ch[1], he);
    init("dec.deconv2", ch[1], 8 * ch[0], he);
    init("dec.deconv1", ch[0], 8 * kVaeChannels, 1.0);
    params_["dec.deconv3.b"] = Mat::Zero(1, ch[1]);
    params_["dec.deconv2.b"] = Mat::Zero(1, ch[0]);
    params_["dec.deconv1.b"] = Mat::Constant(1, kVaeChannels, -3.0);   // mostly empty space
}

void AdVaeModel::forward(std::span<const VaeSample* const> batch, std::span<const double> noise, Activations& a) const {
    const int B = static_cast<int>(batch.size());
    const int L = cfg_.latent_dim, F = flat_width(cfg_), R = cfg_.grid_resolution;
    const auto& P = params_;
    a.batch = B;
    a.x0 = input_rows(batch, cfg_);

    static const char* conv[3] = {"enc.conv1", "enc.conv2", "enc.conv3"};
    const Mat* h = &a.x0;
    std::array<Mat, 3> hid;
    for (int l = 0; l < 3; ++l) {
        a.g[l] = gather(*h, B, R >> l);
        a.a[l] = a.g[l] * P.at(std::string(conv[l]) + ".w");
        add_bias(a.a[l], P.at(std::string(conv[l]) + ".b"));
        hid[l] = leaky(a.a[l]);
        h = &hid[l];
    }
    a.f_in.resize(B, F + 1);
    a.f_in.leftCols(F) = CMap(hid[2].data(), B, F);
    for (int b = 0; b < B; ++b) a.f_in(b, F) = (batch[b]->log_pitch - pitch_shift) / pitch_scale;
    a.a_fc = a.f_in * P.at("enc.fc.w");
    add_bias(a.a_fc, P.at("enc.fc.b"));
    a.h_fc = leaky(a.a_fc);
    a.head = a.h_fc * P.at("enc.head.w");
    add_bias(a.head, P.at("enc.head.b"));
    a.mu = a.head.leftCols(L);
    a.lv = a.head.rightCols(L);

    if (noise.empty()) return;   // encoder only
    if (noise.size() != static_cast<std::size_t>(B) * L) throw std::invalid_argument("noise must be batch x latent_dim");
    a.eps = CMap(noise.data(), B, L);
    a.z = a.mu.array() + (0.5 * a.lv.array()).exp() * a.eps.array();

    a.a_d1 = a.z * P.at("dec.fc1.w");
    add_bias(a.a_d1, P.at("dec.fc1.b"));
    a.h_d1 = leaky(a.a_d1);
    a.a_d2 = a.h_d1 * P.at("dec.fc2.w");
    add_bias(a.a_d2, P.at("dec.fc2.b"));
    a.u[0] = CMap(leaky(a.a_d2).eval().data(), static_cast<Eigen::Index>(B) * F / cfg_.channels[2], cfg_.channels[2]);

    static const char* dec[3] = {"dec.deconv3", "dec.deconv2", "dec.deconv1"};
    for (int l = 0; l < 3; ++l) {
        const int fine_res = R >> (2 - l);
        Mat out = scatter(a.u[l] * P.at(std::string(dec[l]) + ".w"), B, fine_res);
        add_bias(out, P.at(std::string(dec[l]) + ".b"));
        if (l < 2) {
            a.ap[l] = std::move(out);
            a.u[l + 1] = leaky(a.ap[l]);
        } else {
            a.logits = std::move(out);
        }
    }
}

Posterior AdVaeModel::encode(const VaeSample& s) const {
    Activations a;
    const VaeSample* p = &s;
    forward(std::span<const VaeSample* const>(&p, 1), {}, a);
    Posterior out;
    out.mean.assign(a.mu.data(), a.mu.data() + a.mu.size());
    out.log_variance.assign(a.lv.data(), a.lv.data() + a.lv.size());
    return out;
}

std::vector<double> AdVaeModel::decode(std::span<const double> z) const {
    if (z.size() != static_cast<std::size_t>(cfg_.latent_dim)) throw std::invalid_argument("decode: z must have latent_dim entries");
    const int R = cfg_.grid_resolution, F = flat_width(cfg_);
    const auto& P = params_;
    Mat h = CMap(z.data(), 1, cfg_.latent_dim) * P.at("dec.fc1.w");
    add_bias(h, P.at("dec.fc1.b"));
    leaky_inplace(h);
    Mat h2 = h * P.at("dec.fc2.w");
    add_bias(h2, P.at("dec.fc2.b"));
    leaky_inplace(h2);
    Mat u = CMap(h2.data(), F / cfg_.channels[2], cfg_.channels[2]);
    static const char* dec[3] = {"dec.deconv3", "dec.deconv2", "dec.deconv1"};
    for (int l = 0; l < 3; ++l) {
        Mat out = scatter(u * P.at(std::string(dec[l]) + ".w"), 1, R >> (2 - l));
        add_bias(out, P.at(std::string(dec[l]) + ".b"));
        if (l < 2) leaky_inplace(out);
        u = std::move(out);
    }
    const std::size_t n = static_cast<std::size_t>(R) * R * R;
    std::vector<double> prob(kVaeChannels * n);
    for (int c = 0; c < kVaeChannels; ++c)
        for (std::size_t v = 0; v < n; ++v) prob[c * n + v] = sigmoid(u(static_cast<Eigen::Index>(v), c));
    return prob;
}

VaeLossBreakdown AdVaeModel::loss(std::span<const VaeSample* const> batch, int epoch, std::span<const double> noise,
                                  std::map<std::string, RowMatrix>* grads) const {
    if (batch.empty()) throw std::invalid_argument("loss: empty batch");
    if (epoch < 0) throw std::invalid_argument("loss: negative epoch");
    for (const auto* s : batch)
        if (s->target.size() != static_cast<std::size_t>(cfg_.anat_dims))
            throw std::invalid_argument("loss: sample target does not match anat_dims");
    Activations a;
    forward(batch, noise, a);
    const int B = a.batch, L = cfg_.latent_dim, A = cfg_.anat_dims, F = flat_width(cfg_), R = cfg_.grid_resolution;
    const double beta = beta_at(epoch, cfg_);

    VaeLossBreakdown out;
    out.beta_current = beta;
    const double n_el = static_cast<double>(B);   // summed over voxels, mean over the batch
    double bce = 0.0;
    for (Eigen::Index i = 0; i < a.logits.size(); ++i) {
        const double l = a.logits.data()[i], x = a.x0.data()[i];
        bce += softplus(l) - x * l;
    }
    // the minimum of the soft-target BCE is the entropy of x, not zero; report the excess
    double entropy = 0.0;
    for (Eigen::Index i = 0; i < a.x0.size(); ++i) {
        const double x = a.x0.data()[i];
        if (x > 0.0 && x < 1.0) entropy -= x * std::log(x) + (1.0 - x) * std::log1p(-x);
    }
    out.recon_bce = std::max(0.0, (bce - entropy) / n_el);

    Mat target(B, A);
    for (int b = 0; b < B; ++b)
        for (int d = 0; d < A; ++d) target(b, d) = batch[b]->target[d];
    const Mat kl_el = 0.5 * (a.mu.array().square() + a.lv.array().exp() - 1.0 - a.lv.array());
    out.kl_anat = kl_el.leftCols(A).sum() / B;
    out.kl_free = kl_el.rightCols(L - A).sum() / B;
    out.anat_alignment = (a.mu.leftCols(A) - target).squaredNorm() / B;
    out.total = out.recon_bce + beta * (cfg_.alpha * out.kl_anat + out.kl_free) + cfg_.lambda_anat * out.anat_alignment;
    if (!grads) return out;

    const auto& P = params_;
    auto& G = *grads;
    G.clear();

    // reconstruction
    Mat d_logit(a.logits.rows(), a.logits.cols());
    for (Eigen::Index i = 0; i < d_logit.size(); ++i)
        d_logit.data()[i] = (sigmoid(a.logits.data()[i]) - a.x0.data()[i]) / n_el;

    static const char* dec[3] = {"dec.deconv3", "dec.deconv2", "dec.deconv1"};
    Mat d_fine = std::move(d_logit);
    for (int l = 2; l >= 0; --l) {
        const std::string name = dec[l];
        if (l < 2) leaky_back(d_fine, a.ap[l]);
        G[name + ".b"] = d_fine.colwise().sum();
        const Mat dg = gather(d_fine, B, R >> (2 - l));
        G[name + ".w"] = a.u[l].transpose() * dg;
        d_fine = dg * P.at(name + ".w").transpose();
    }
    Mat d_a2 = CMap(d_fine.data(), B, F);
    leaky_back(d_a2, a.a_d2);
    G["dec.fc2.b"] = d_a2.colwise().sum();
    G["dec.fc2.w"] = a.h_d1.transpose() * d_a2;
    Mat d_a1 = d_a2 * P.at("dec.fc2.w").transpose();
    leaky_back(d_a1, a.a_d1);
    G["dec.fc1.b"] = d_a1.colwise().sum();
    G["dec.fc1.w"] = a.z.transpose() * d_a1;
    const Mat d_z = d_a1 * P.at("dec.fc1.w").transpose();

    // latent: reparameterization, KL, alignment
    const Mat sd = (0.5 * a.lv.array()).exp();
    Mat d_mu = d_z;
    Mat d_lv = 0.5 * (d_z.array() * a.eps.array() * sd.array()).matrix();
    Eigen::RowVectorXd kl_w(L);
    for (int d = 0; d < L; ++d) kl_w(d) = beta * (d < A ? cfg_.alpha : 1.0) / B;
    d_mu.array() += a.mu.array().rowwise() * kl_w.array();
    d_lv.array() += (0.5 * (a.lv.array().exp() - 1.0)).rowwise() * kl_w.array();
    d_mu.leftCols(A) += (2.0 * cfg_.lambda_anat / B) * (a.mu.leftCols(A) - target);

    Mat d_head(B, 2 * L);
    d_head << d_mu, d_lv;
    G["enc.head.b"] = d_head.colwise().sum();
    G["enc.head.w"] = a.h_fc.transpose() * d_head;
    Mat d_fc = d_head * P.at("enc.head.w").transpose();
    leaky_back(d_fc, a.a_fc);
    G["enc.fc.b"] = d_fc.colwise().sum();
    G["enc.fc.w"] = a.f_in.transpose() * d_fc;
    const Mat d_fin = d_fc * P.at("enc.fc.w").transpose();
    Mat d_h = d_fin.leftCols(F);
    d_h = CMap(d_h.data(), static_cast<Eigen::Index>(B) * F / cfg_.channels[2], cfg_.channels[2]).eval();

    static const char* conv[3] = {"enc.conv1", "enc.conv2", "enc.conv3"};
    for (int l = 2; l >= 0; --l) {
        const std::string name = conv[l];
        leaky_back(d_h, a.a[l]);
        G[name + ".b"] = d_h.colwise().sum();
        G[name + ".w"] = a.g[l].transpose() * d_h;
        if (l > 0) d_h = scatter(d_h * P.at(name + ".w").transpose(), B, R >> l);
    }
    return out;
}

// ---- persistence -----------------------------------------------------------

namespace {

constexpr char kModelMagic[4] = {'A', 'V', 'A', 'E'};

template <class T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T take(std::istream& is) {
    T v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw ModelFormatError("model file truncated");
    return v;
}

}  // namespace

void AdVaeModel::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os.write(kModelMagic, 4);
    put<std::uint32_t>(os, kModelFileVersion);
    const AdVaeConfig& c = cfg_;
    for (int v : {c.latent_dim, c.anat_dims, c.beta_anneal_epochs, c.grid_resolution, c.supersample, c.corpus_size,
                  c.epochs, c.batch_size, c.channels[0], c.channels[1], c.channels[2], c.hidden})
        put<std::int32_t>(os, v);
    for (double v : {c.alpha, c.beta_max, c.lambda_anat, c.learning_rate, pitch_shift, pitch_scale}) put<double>(os, v);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(params_.size()));
    for (const auto& [name, m] : params_) {
        put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        put<std::uint32_t>(os, static_cast<std::uint32_t>(m.rows()));
        put<std::uint32_t>(os, static_cast<std::uint32_t>(m.cols()));
        os.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

AdVaeModel AdVaeModel::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ModelFormatError("cannot open " + path);
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kModelMagic, 4) != 0) throw ModelFormatError("not a model file: " + path);
    const auto version = take<std::uint32_t>(is);
    if (version != kModelFileVersion) throw ModelFormatError("unsupported model version " + std::to_string(version));
    AdVaeModel m;
    AdVaeConfig& c = m.cfg_;
    for (int* f : {&c.latent_dim, &c.anat_dims, &c.beta_anneal_epochs, &c.grid_resolution, &c.supersample,
                   &c.corpus_size, &c.epochs, &c.batch_size, &c.channels[0], &c.channels[1], &c.channels[2], &c.hidden})
        *f = take<std::int32_t>(is);
    for (double* f : {&c.alpha, &c.beta_max, &c.lambda_anat, &c.learning_rate, &m.pitch_shift, &m.pitch_scale})
        *f = take<double>(is);
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ModelFormatError(std::string("bad config in model file: ") + e.what());
    }
    std::mt19937_64 dummy(0);
    const AdVaeModel shape(c, dummy);
    const auto count = take<std::uint32_t>(is);
    if (count != shape.params_.size()) throw ModelFormatError("tensor count mismatch");
    for (std::uint32_t t = 0; t < count; ++t) {
        const auto len = take<std::uint32_t>(is);
        if (len > 256) throw ModelFormatError("tensor name too long");
        std::string name(len, '\0');
        if (!is.read(name.data(), len)) throw ModelFormatError("model file truncated");
        const auto rows = take<std::uint32_t>(is), cols = take<std::uint32_t>(is);
        const auto it = shape.params_.find(name);
        if (it == shape.params_.end() || it->second.rows() != rows || it->second.cols() != cols)
            throw ModelFormatError("unexpected tensor " + name);
        Mat w(rows, cols);
        if (!is.read(reinterpret_cast<char*>(w.data()), static_cast<std::streamsize>(sizeof(double) * w.size())))
            throw ModelFormatError("model file truncated");
        m.params_[name] = std::move(w);
    }
    return m;
}

// ---- training --------------------------------------------------------------

TrainResult train(const std::vector<VaeSample>& corpus, const AdVaeConfig& cfg, std::mt19937_64& rng) {
    if (corpus.empty()) throw std::invalid_argument("train: empty corpus");
    cfg.validate();
    TrainResult res{AdVaeModel(cfg, rng), {}};
    AdVaeModel& model = res.model;

    double mean = 0.0, sq = 0.0;
    for (const auto& s : corpus) mean += s.log_pitch;
    mean /= corpus.size();
    for (const auto& s : corpus) sq += (s.log_pitch - mean) * (s.log_pitch - mean);
    const double sd = std::sqrt(sq / corpus.size());
    model.pitch_shift = mean;
    model.pitch_scale = sd > 1e-9 ? sd : 1.0;

    constexpr double b1 = 0.9, b2 = 0.999, adam_eps = 1e-8;
    std::map<std::string, Mat> m1, m2, grads;
    for (const auto& [k, w] : model.params()) {
        m1[k] = Mat::Zero(w.rows(), w.cols());
        m2[k] = Mat::Zero(w.rows(), w.cols());
    }
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<double> noise;
    std::vector<const VaeSample*> batch;
    long step = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        VaeLossBreakdown acc;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(&corpus[order[i]]);
            noise.resize(batch.size() * cfg.latent_dim);
            for (double& e : noise) e = nd(rng);
            const auto lb = model.loss(batch, epoch, noise, &grads);
            if (!std::isfinite(lb.total))
                throw TrainingError("training diverged at epoch " + std::to_string(epoch), epoch);
            const double w = static_cast<double>(batch.size()) / corpus.size();
            acc.recon_bce += w * lb.recon_bce;
            acc.kl_anat += w * lb.kl_anat;
            acc.kl_free += w * lb.kl_free;
            acc.anat_alignment += w * lb.anat_alignment;
            acc.total += w * lb.total;
            acc.beta_current = lb.beta_current;

            ++step;
            const double c1 = 1.0 - std::pow(b1, step), c2 = 1.0 - std::pow(b2, step);
            for (auto& [k, w_k] : model.params()) {
                const Mat& g = grads.at(k);
                m1[k] = b1 * m1[k] + (1.0 - b1) * g;
                m2[k] = b2 * m2[k] + (1.0 - b2) * g.cwiseProduct(g);
                w_k.array() -= cfg.learning_rate * (m1[k].array() / c1) / ((m2[k].array() / c2).sqrt() + adam_eps);
            }
        }
        res.history.push_back(acc);
    }
    return res;
}

PriorReport prior_report(const NormalizedGenome& g, const AdVaeModel& model, const EnvelopeSpec& env) {
    const AdVaeConfig& cfg = model.config();
    const AnatomyGenome projected = project_envelope(denormalize(g).genome, env);
    const Posterior post = model.encode(make_sample(projected, cfg));
    PriorReport r;
    r.deviation.resize(cfg.anat_dims);
    double s = 0.0;
    for (int d = 0; d < cfg.anat_dims; ++d) {
        r.deviation[d] = std::clamp(g.values[d], -1.0, 1.0) - post.mean[d];
        s += r.deviation[d] * r.deviation[d];
    }
    r.penalty = std::sqrt(s);
    return r;
}

double prior_penalty(const NormalizedGenome& g, const AdVaeModel& model, const EnvelopeSpec& env) {
    return prior_report(g, model, env).penalty;
}

AdVaeModel load_or_train(const std::string& path, const AdVaeConfig& cfg, const EnvelopeSpec& env, std::uint64_t seed) {
    if (!path.empty() && std::filesystem::exists(path)) {
        try {
            AdVaeModel m = AdVaeModel::load(path);
            if (m.config() == cfg) return m;
        } catch (const ModelFormatError&) {
            // stale or foreign cache: retrain and overwrite
        }
    }
    std::mt19937_64 rng(seed);
    const auto corpus = generate_corpus(cfg.corpus_size, cfg, env, rng);
    AdVaeModel m = train(corpus, cfg, rng).model;
    if (!path.empty()) {
        const auto parent = std::filesystem::path(path).parent_path();
        if (!parent.empty()) std::filesystem::create_directories(parent);
        m.save(path);
    }
    return m;
}

}  // namespace aerosynth
