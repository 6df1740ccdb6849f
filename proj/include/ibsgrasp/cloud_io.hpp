#pragma once

#include "ibsgrasp/geometry.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace ibsgrasp {

using Rgb = std::array<std::uint8_t, 3>;

// Reads `element vertex` x/y/z (and nx/ny/nz when present) from ASCII or
// binary_little_endian PLY. Other properties and elements are skipped.
PointCloud read_ply(std::istream& in);
PointCloud read_ply(const std::filesystem::path& path);

// ASCII PLY; normals written when present, colours when non-empty.
void write_ply(std::ostream& out, const PointCloud& cloud, const std::vector<Rgb>& colors = {});
void write_ply(const std::filesystem::path& path, const PointCloud& cloud, const std::vector<Rgb>& colors = {});

// Whitespace separated "x y z" or "x y z nx ny nz" per line; '#' comments.
PointCloud read_xyz(std::istream& in);
void write_xyz(std::ostream& out, const PointCloud& cloud);

// Dispatch on extension: .ply, otherwise XYZ text.
PointCloud read_cloud(const std::filesystem::path& path);
void write_cloud(const std::filesystem::path& path, const PointCloud& cloud);

}  // namespace ibsgrasp
