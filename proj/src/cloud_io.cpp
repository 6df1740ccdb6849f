#include "ibsgrasp/cloud_io.hpp"

#include "ibsgrasp/error.hpp"

#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

namespace ibsgrasp {

namespace {

struct PlyProperty {
    std::string name;
    std::string type;
    bool is_list = false;
    std::string count_type;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> properties;
};

std::size_t type_size(const std::string& t) {
    if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
    if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
    if (t == "int" || t == "uint" || t == "float" || t == "int32" || t == "uint32" || t == "float32") return 4;
    if (t == "double" || t == "float64") return 8;
    throw Error(ErrorCode::FormatError, "unknown PLY property type '" + t + "'");
}

template <typename T>
T read_le(const char* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return v;
}

double binary_value(const std::string& t, const char* p) {
    if (t == "char" || t == "int8") return read_le<std::int8_t>(p);
    if (t == "uchar" || t == "uint8") return read_le<std::uint8_t>(p);
    if (t == "short" || t == "int16") return read_le<std::int16_t>(p);
    if (t == "ushort" || t == "uint16") return read_le<std::uint16_t>(p);
    if (t == "int" || t == "int32") return read_le<std::int32_t>(p);
    if (t == "uint" || t == "uint32") return read_le<std::uint32_t>(p);
    if (t == "float" || t == "float32") return read_le<float>(p);
    return read_le<double>(p);
}

int field_slot(const std::string& name) {
    static const char* names[] = {"x", "y", "z", "nx", "ny", "nz"};
    for (int i = 0; i < 6; ++i) {
        if (name == names[i]) return i;
    }
    return -1;
}

PointCloud assemble(const std::vector<std::array<double, 6>>& rows, bool has_normals) {
    PointCloud cloud;
    cloud.points.reserve(rows.size());
    for (const auto& r : rows) cloud.points.emplace_back(r[0], r[1], r[2]);
    if (has_normals) {
        cloud.normals.reserve(rows.size());
        for (const auto& r : rows) {
            Vec3 n(r[3], r[4], r[5]);
            const double len = n.norm();
            cloud.normals.push_back(len > 0.0 ? Vec3(n / len) : n);
        }
    }
    return cloud;
}

}  // namespace

PointCloud read_ply(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("ply", 0) != 0) {
        throw Error(ErrorCode::FormatError, "missing 'ply' magic");
    }
    std::string format;
    std::vector<PlyElement> elements;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "format") {
            ls >> format;
        } else if (key == "element") {
            PlyElement e;
            ls >> e.name >> e.count;
            elements.push_back(e);
        } else if (key == "property") {
            if (elements.empty()) throw Error(ErrorCode::FormatError, "PLY property before element");
            PlyProperty prop;
            std::string t;
            ls >> t;
            if (t == "list") {
                prop.is_list = true;
                ls >> prop.count_type >> prop.type >> prop.name;
            } else {
                prop.type = t;
                ls >> prop.name;
            }
            elements.back().properties.push_back(prop);
        } else if (key == "end_header") {
            break;
        }
    }
    const bool ascii = format == "ascii";
    if (!ascii && format != "binary_little_endian") {
        throw Error(ErrorCode::FormatError, "unsupported PLY format '" + format + "'");
    }

    std::vector<std::array<double, 6>> rows;
    bool has_normals = false;
    for (const auto& e : elements) {
        const bool is_vertex = e.name == "vertex";
        std::vector<int> slots;
        if (is_vertex) {
            int seen = 0;
            for (const auto& p : e.properties) {
                slots.push_back(p.is_list ? -1 : field_slot(p.name));
                if (slots.back() >= 0) seen |= 1 << slots.back();
            }
            if ((seen & 0b111) != 0b111) throw Error(ErrorCode::FormatError, "PLY vertex lacks x/y/z");
            has_normals = (seen & 0b111000) == 0b111000;
            rows.assign(e.count, {0, 0, 0, 0, 0, 0});
        }
        for (std::size_t r = 0; r < e.count; ++r) {
            for (std::size_t pi = 0; pi < e.properties.size(); ++pi) {
                const auto& p = e.properties[pi];
                if (ascii) {
                    if (p.is_list) {
                        double cnt = 0;
                        in >> cnt;
                        for (std::size_t k = 0; k < static_cast<std::size_t>(cnt); ++k) {
                            double skip;
                            in >> skip;
                        }
                        continue;
                    }
                    double v = 0;
                    if (!(in >> v)) throw Error(ErrorCode::FormatError, "truncated ASCII PLY body");
                    if (is_vertex && slots[pi] >= 0) rows[r][static_cast<std::size_t>(slots[pi])] = v;
                } else {
                    char buf[8];
                    if (p.is_list) {
                        const std::size_t cs = type_size(p.count_type);
                        if (!in.read(buf, static_cast<std::streamsize>(cs))) {
                            throw Error(ErrorCode::FormatError, "truncated binary PLY body");
                        }
                        const auto cnt = static_cast<std::size_t>(binary_value(p.count_type, buf));
                        in.ignore(static_cast<std::streamsize>(cnt * type_size(p.type)));
                        continue;
                    }
                    const std::size_t sz = type_size(p.type);
                    if (!in.read(buf, static_cast<std::streamsize>(sz))) {
                        throw Error(ErrorCode::FormatError, "truncated binary PLY body");
                    }
                    if (is_vertex && slots[pi] >= 0) {
                        rows[r][static_cast<std::size_t>(slots[pi])] = binary_value(p.type, buf);
                    }
                }
            }
        }
        if (is_vertex) break;
    }
    return assemble(rows, has_normals);
}

PointCloud read_ply(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    return read_ply(in);
}

void write_ply(std::ostream& out, const PointCloud& cloud, const std::vector<Rgb>& colors) {
    const bool normals = cloud.has_normals();
    const bool rgb = !colors.empty();
    if (rgb && colors.size() != cloud.size()) {
        throw Error(ErrorCode::ValidationError, "colour count does not match point count");
    }
    out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size() << "\n";
    out << "property double x\nproperty double y\nproperty double z\n";
    if (normals) out << "property double nx\nproperty double ny\nproperty double nz\n";
    if (rgb) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    out << "end_header\n";
    out << std::setprecision(17);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto& p = cloud.points[i];
        out << p.x() << ' ' << p.y() << ' ' << p.z();
        if (normals) {
            const auto& n = cloud.normals[i];
            out << ' ' << n.x() << ' ' << n.y() << ' ' << n.z();
        }
        if (rgb) {
            out << ' ' << int(colors[i][0]) << ' ' << int(colors[i][1]) << ' ' << int(colors[i][2]);
        }
        out << '\n';
    }
}

void write_ply(const std::filesystem::path& path, const PointCloud& cloud, const std::vector<Rgb>& colors) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    write_ply(out, cloud, colors);
}

PointCloud read_xyz(std::istream& in) {
    std::vector<std::array<double, 6>> rows;
    std::optional<bool> with_normals;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::vector<double> vals;
        double v;
        while (ls >> v) vals.push_back(v);
        if (!ls.eof()) throw ParseError(line_no, "non-numeric token in XYZ file");
        if (vals.empty()) continue;
        if (vals.size() != 3 && vals.size() != 6) throw ParseError(line_no, "expected 3 or 6 values");
        const bool n = vals.size() == 6;
        if (with_normals && *with_normals != n) throw ParseError(line_no, "inconsistent column count");
        with_normals = n;
        std::array<double, 6> row{0, 0, 0, 0, 0, 0};
        std::copy(vals.begin(), vals.end(), row.begin());
        rows.push_back(row);
    }
    return assemble(rows, with_normals.value_or(false));
}

void write_xyz(std::ostream& out, const PointCloud& cloud) {
    out << std::setprecision(17);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto& p = cloud.points[i];
        out << p.x() << ' ' << p.y() << ' ' << p.z();
        if (cloud.has_normals()) {
            const auto& n = cloud.normals[i];
            out << ' ' << n.x() << ' ' << n.y() << ' ' << n.z();
        }
        out << '\n';
    }
}

PointCloud read_cloud(const std::filesystem::path& path) {
    if (path.extension() == ".ply") return read_ply(path);
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    return read_xyz(in);
}

void write_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
    if (path.extension() == ".ply") {
        write_ply(path, cloud);
        return;
    }
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    write_xyz(out, cloud);
}

}  // namespace ibsgrasp
