#include "ibsgrasp/sibs_io.hpp"

#include "ibsgrasp/error.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

namespace ibsgrasp {

static_assert(std::endian::native == std::endian::little, "SIBS I/O assumes a little-endian host");

namespace {

const std::vector<std::string> kChannels{"ibs_surface", "thumb_contact", "other_contact"};

std::size_t channel_bytes(int resolution) {
    const auto n = static_cast<std::size_t>(resolution);
    return (n * n * n + 7) / 8;
}

template <typename T>
void put(std::vector<char>& buf, T v) {
    char raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    buf.insert(buf.end(), raw, raw + sizeof(T));
}

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    void read(char* dst, std::size_t n) {
        in_.read(dst, static_cast<std::streamsize>(n));
        const auto got = static_cast<std::size_t>(in_.gcount());
        if (got != n) throw FormatError(offset_ + got, "SIBS stream truncated");
        offset_ += n;
    }
    template <typename T>
    T get() {
        T v;
        char raw[sizeof(T)];
        read(raw, sizeof(T));
        std::memcpy(&v, raw, sizeof(T));
        return v;
    }
    std::size_t offset() const { return offset_; }

private:
    std::istream& in_;
    std::size_t offset_ = 0;
};

}  // namespace

std::size_t sibs_size(int resolution) { return kSibsHeaderBytes + 3 * channel_bytes(resolution); }

void write_sibs(std::ostream& out, const SparseIbsVolume& volume) {
    const VoxelGrid& grid = volume.grid();
    if (volume.resolution() > 0xFFFF) throw Error(ErrorCode::ValidationError, "resolution does not fit in u16");
    std::vector<char> buf;
    buf.reserve(sibs_size(volume.resolution()));
    buf.insert(buf.end(), {'S', 'I', 'B', 'S'});
    put<std::uint16_t>(buf, kSibsVersion);
    put<std::uint16_t>(buf, static_cast<std::uint16_t>(volume.resolution()));
    put<double>(buf, volume.voxel_size());
    for (int i = 0; i < 3; ++i) put<double>(buf, volume.frame().seed[i]);
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) put<double>(buf, volume.frame().rotation(r, c));
    }
    const std::size_t bytes = channel_bytes(volume.resolution());
    for (std::size_t ch = 0; ch < 3; ++ch) {
        std::vector<char> packed(bytes, 0);
        const auto bits = grid.channel(ch);
        for (std::size_t i = 0; i < bits.size(); ++i) {
            if (bits[i]) packed[i / 8] = static_cast<char>(packed[i / 8] | (1u << (i % 8)));
        }
        buf.insert(buf.end(), packed.begin(), packed.end());
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw Error(ErrorCode::IoError, "SIBS write failed");
}

void write_sibs(const std::filesystem::path& path, const SparseIbsVolume& volume) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    write_sibs(out, volume);
}

SparseIbsVolume read_sibs(std::istream& in) {
    Reader r(in);
    char magic[4];
    r.read(magic, 4);
    if (std::memcmp(magic, "SIBS", 4) != 0) throw FormatError(0, "bad SIBS magic");
    const auto version = r.get<std::uint16_t>();
    if (version != kSibsVersion) throw FormatError(4, "unsupported SIBS version " + std::to_string(version));
    const auto resolution = r.get<std::uint16_t>();
    if (resolution < 2) throw FormatError(6, "SIBS resolution must be at least 2");
    const auto voxel_size = r.get<double>();
    if (!std::isfinite(voxel_size) || voxel_size <= 0.0) throw FormatError(8, "SIBS voxel size must be positive");
    CanonicalFrame frame;
    for (int i = 0; i < 3; ++i) frame.seed[i] = r.get<double>();
    for (int row = 0; row < 3; ++row) {
        for (int c = 0; c < 3; ++c) frame.rotation(row, c) = r.get<double>();
    }
    if (!frame.is_valid()) throw FormatError(16, "SIBS frame is not a rigid transform");

    VoxelGrid grid = VoxelGrid::centered(voxel_size, resolution, kChannels);
    const std::size_t bytes = channel_bytes(resolution);
    const std::size_t voxels = grid.voxel_count();
    std::vector<char> packed(bytes);
    for (std::size_t ch = 0; ch < 3; ++ch) {
        const std::size_t start = r.offset();
        r.read(packed.data(), bytes);
        for (std::size_t i = 0; i < voxels; ++i) {
            if ((static_cast<unsigned char>(packed[i / 8]) >> (i % 8)) & 1u) grid.set(ch, i, true);
        }
        const auto tail = static_cast<unsigned char>(packed[bytes - 1]);
        if (voxels % 8 != 0 && (tail >> (voxels % 8)) != 0) {
            throw FormatError(start + bytes - 1, "SIBS padding bits are not zero");
        }
        if (ch == 0) continue;
        for (std::size_t i = 0; i < voxels; ++i) {
            if (grid.get(ch, i) && !grid.get(kIbsSurface, i)) {
                throw FormatError(start + i / 8, kChannels[ch] + " voxel outside ibs_surface");
            }
        }
    }
    return {std::move(grid), frame};
}

SparseIbsVolume read_sibs(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    SparseIbsVolume v = read_sibs(in);
    if (in.peek() != std::char_traits<char>::eof()) {
        throw FormatError(sibs_size(v.resolution()), "trailing bytes after SIBS payload");
    }
    return v;
}

}  // namespace ibsgrasp
