#include "aerosynth/voxel_grid.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace aerosynth {

namespace {

constexpr std::array<char, 4> kFlatMagic{'A', 'V', 'X', 'G'};
constexpr std::array<char, 4> kRleMagic{'A', 'V', 'X', 'R'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderSize = 4 + 4 + 4 + 8 + 3 * 8;

static_assert(std::endian::native == std::endian::little, "grid codecs assume a little-endian host");

class Writer {
public:
    explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}
    template <typename T>
    void put(T v) {
        std::array<std::uint8_t, sizeof(T)> b{};
        std::memcpy(b.data(), &v, sizeof(T));
        out_.insert(out_.end(), b.begin(), b.end());
    }
    void put_bytes(const void* p, std::size_t n) {
        const auto* c = static_cast<const std::uint8_t*>(p);
        out_.insert(out_.end(), c, c + n);
    }

private:
    std::vector<std::uint8_t>& out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
    template <typename T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, in_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::span<const std::uint8_t> take(std::size_t n) {
        need(n);
        auto s = in_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == in_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > in_.size()) throw GridFormatError("truncated grid payload");
    }
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

void write_header(Writer& w, const std::array<char, 4>& magic, const VoxelGrid& g) {
    w.put_bytes(magic.data(), magic.size());
    w.put<std::uint32_t>(kVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(g.resolution));
    w.put<double>(g.pitch);
    for (double o : g.origin) w.put<double>(o);
}

VoxelGrid read_header(Reader& r, const std::array<char, 4>& magic) {
    auto m = r.take(4);
    if (!std::equal(m.begin(), m.end(), magic.begin())) throw GridFormatError("bad grid magic");
    if (r.get<std::uint32_t>() != kVersion) throw GridFormatError("unsupported grid version");
    const auto res = r.get<std::uint32_t>();
    if (res == 0 || res > 2048) throw GridFormatError("implausible grid resolution");
    const double pitch = r.get<double>();
    std::array<double, 3> origin{};
    for (double& o : origin) o = r.get<double>();
    return VoxelGrid(static_cast<int>(res), pitch, origin);
}

void check_label(std::uint8_t v) {
    if (v >= kLabelCount) throw GridFormatError("label byte out of range");
}

}  // namespace

std::string_view label_name(Label l) {
    static constexpr std::array<std::string_view, kLabelCount> names{"empty", "fuselage", "wing", "vtail", "htail", "engine"};
    return names.at(static_cast<std::size_t>(l));
}

VoxelGrid::VoxelGrid(int res, double pitch_m, std::array<double, 3> origin_m)
    : resolution(res), pitch(pitch_m), origin(origin_m),
      labels(static_cast<std::size_t>(res) * static_cast<std::size_t>(res) * static_cast<std::size_t>(res), Label::Empty) {}

std::size_t VoxelGrid::count(Label l) const { return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), l)); }

std::size_t VoxelGrid::occupied() const { return labels.size() - count(Label::Empty); }

VoxelGrid mirrored(const VoxelGrid& g) {
    VoxelGrid m = g;
    const int r = g.resolution;
    for (int k = 0; k < r; ++k)
        for (int j = 0; j < r; ++j)
            for (int i = 0; i < r; ++i) m.at(i, r - 1 - j, k) = g.at(i, j, k);
    return m;
}

std::vector<std::uint8_t> encode_flat(const VoxelGrid& g) {
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderSize + g.labels.size());
    Writer w(out);
    write_header(w, kFlatMagic, g);
    w.put_bytes(g.labels.data(), g.labels.size());
    return out;
}

VoxelGrid decode_flat(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    VoxelGrid g = read_header(r, kFlatMagic);
    auto body = r.take(g.labels.size());
    for (std::size_t n = 0; n < body.size(); ++n) {
        check_label(body[n]);
        g.labels[n] = static_cast<Label>(body[n]);
    }
    if (!r.done()) throw GridFormatError("trailing bytes after grid body");
    return g;
}

std::vector<std::uint8_t> encode_rle(const VoxelGrid& g) {
    std::vector<std::pair<std::uint8_t, std::uint32_t>> runs;
    for (Label l : g.labels) {
        const auto v = static_cast<std::uint8_t>(l);
        if (!runs.empty() && runs.back().first == v) ++runs.back().second;
        else runs.emplace_back(v, 1u);
    }
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderSize + 4 + runs.size() * 5);
    Writer w(out);
    write_header(w, kRleMagic, g);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(runs.size()));
    for (const auto& [label, len] : runs) {
        w.put<std::uint8_t>(label);
        w.put<std::uint32_t>(len);
    }
    return out;
}

VoxelGrid decode_rle(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    VoxelGrid g = read_header(r, kRleMagic);
    const auto runs = r.get<std::uint32_t>();
    std::size_t pos = 0;
    for (std::uint32_t n = 0; n < runs; ++n) {
        const auto label = r.get<std::uint8_t>();
        const auto len = r.get<std::uint32_t>();
        check_label(label);
        if (pos + len > g.labels.size()) throw GridFormatError("RLE runs overflow the grid");
        std::fill_n(g.labels.begin() + static_cast<std::ptrdiff_t>(pos), len, static_cast<Label>(label));
        pos += len;
    }
    if (pos != g.labels.size()) throw GridFormatError("RLE runs do not cover the grid");
    if (!r.done()) throw GridFormatError("trailing bytes after RLE body");
    return g;
}

std::string label_checksum(const VoxelGrid& g) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (Label l : g.labels) {
        h ^= static_cast<std::uint8_t>(l);
        h *= 0x100000001b3ull;
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string s(16, '0');
    for (int n = 15; n >= 0; --n) {
        s[static_cast<std::size_t>(n)] = hex[h & 0xf];
        h >>= 4;
    }
    return s;
}

void write_grid_file(const std::string& path, const VoxelGrid& g) {
    const auto bytes = encode_flat(g);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

VoxelGrid read_grid_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_flat(bytes);
}

}  // namespace aerosynth
