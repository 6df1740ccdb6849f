#pragma once

#include "ibsgrasp/ibs.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>

namespace ibsgrasp {

// Little-endian layout: "SIBS", u16 version, u16 resolution, f64 voxel size,
// 3 x f64 seed, 9 x f64 rotation (row-major), then the three channels
// bit-packed (LSB first, x-fastest), ceil(n^3 / 8) bytes each.
inline constexpr std::uint16_t kSibsVersion = 1;
inline constexpr std::size_t kSibsHeaderBytes = 112;

std::size_t sibs_size(int resolution);

void write_sibs(std::ostream& out, const SparseIbsVolume& volume);
void write_sibs(const std::filesystem::path& path, const SparseIbsVolume& volume);

// Throws FormatError with the byte offset of the first problem: bad magic
// (0), unsupported version (4), truncation (where data ran out), or a
// contact bit outside ibs_surface.
SparseIbsVolume read_sibs(std::istream& in);
SparseIbsVolume read_sibs(const std::filesystem::path& path);

}  // namespace ibsgrasp
