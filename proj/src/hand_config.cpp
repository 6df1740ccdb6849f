#include "ibsgrasp/hand_config.hpp"

#include "ibsgrasp/error.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace ibsgrasp {

namespace {

struct Line {
    std::size_t number;
    std::vector<std::string> tokens;
};

std::vector<Line> tokenize(std::string_view text) {
    std::vector<Line> lines;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t number = 0;
    while (std::getline(in, raw)) {
        ++number;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        std::vector<std::string> tokens;
        std::string tok;
        for (char c : raw) {
            if (c == '{' || c == '}') {
                if (!tok.empty()) tokens.push_back(std::move(tok));
                tok.clear();
                tokens.emplace_back(1, c);
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                if (!tok.empty()) tokens.push_back(std::move(tok));
                tok.clear();
            } else {
                tok.push_back(c);
            }
        }
        if (!tok.empty()) tokens.push_back(std::move(tok));
        if (!tokens.empty()) lines.push_back({number, std::move(tokens)});
    }
    return lines;
}

double number_at(const Line& line, std::size_t i) {
    if (i >= line.tokens.size()) throw ParseError(line.number, "missing value for '" + line.tokens[0] + "'");
    const std::string& s = line.tokens[i];
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || !std::isfinite(v)) {
        throw ParseError(line.number, "field '" + line.tokens[0] + "': '" + s + "' is not a number");
    }
    return v;
}

void expect_count(const Line& line, std::size_t lo, std::size_t hi) {
    const std::size_t n = line.tokens.size() - 1;
    if (n < lo || n > hi) {
        throw ParseError(line.number, "field '" + line.tokens[0] + "' expects " + std::to_string(lo) +
                                          (lo == hi ? "" : "-" + std::to_string(hi)) + " values, got " +
                                          std::to_string(n));
    }
}

Vec3 vec_at(const Line& line, std::size_t i) { return {number_at(line, i), number_at(line, i + 1), number_at(line, i + 2)}; }

}  // namespace

HandModel load_hand(std::string_view config_text) {
    const auto lines = tokenize(config_text);
    std::string hand_name = "hand";
    std::vector<LinkSpec> links;
    std::vector<JointSpec> joints;

    enum class Section { None, Link, Joint };
    Section section = Section::None;
    bool open_pending = false;
    std::size_t section_line = 0;
    bool tag_seen = false;
    bool parent_seen = false, child_seen = false, axis_seen = false, limits_seen = false;

    auto open_section = [&](const Line& line, Section kind) {
        if (section != Section::None || open_pending) throw ParseError(line.number, "nested section");
        if (line.tokens.size() < 2) throw ParseError(line.number, "section '" + line.tokens[0] + "' needs a name");
        const std::size_t extra = line.tokens.size() - 2;
        if (extra > 1 || (extra == 1 && line.tokens[2] != "{")) {
            throw ParseError(line.number, "unexpected tokens after section name");
        }
        section = kind;
        open_pending = extra == 0;
        section_line = line.number;
        tag_seen = parent_seen = child_seen = axis_seen = limits_seen = false;
    };

    for (const auto& line : lines) {
        const std::string& key = line.tokens[0];
        if (open_pending) {
            if (key != "{" || line.tokens.size() != 1) throw ParseError(line.number, "expected '{'");
            open_pending = false;
            continue;
        }
        if (key == "}") {
            if (section == Section::None || line.tokens.size() != 1) throw ParseError(line.number, "unexpected '}'");
            if (section == Section::Link && !tag_seen) {
                throw ParseError(section_line, "link '" + links.back().name + "' has no tag");
            }
            if (section == Section::Joint) {
                const auto& j = joints.back();
                if (!parent_seen) throw ParseError(section_line, "joint '" + j.name + "' has no parent");
                if (!child_seen) throw ParseError(section_line, "joint '" + j.name + "' has no child");
                if (!axis_seen) throw ParseError(section_line, "joint '" + j.name + "' has no axis");
                if (!limits_seen) throw ParseError(section_line, "joint '" + j.name + "' has no limits");
            }
            section = Section::None;
            continue;
        }
        switch (section) {
            case Section::None:
                if (key == "hand") {
                    expect_count(line, 1, 1);
                    hand_name = line.tokens[1];
                } else if (key == "link") {
                    open_section(line, Section::Link);
                    links.push_back(LinkSpec{line.tokens[1], {}, {}, FingerTag::Palm});
                } else if (key == "joint") {
                    open_section(line, Section::Joint);
                    JointSpec j;
                    j.name = line.tokens[1];
                    joints.push_back(j);
                } else {
                    throw ParseError(line.number, "unknown top-level key '" + key + "'");
                }
                break;
            case Section::Link: {
                auto& link = links.back();
                if (key == "tag") {
                    expect_count(line, 1, 1);
                    const auto tag = finger_tag_from_string(line.tokens[1]);
                    if (!tag) throw ParseError(line.number, "field 'tag': unknown finger tag '" + line.tokens[1] + "'");
                    link.tag = *tag;
                    tag_seen = true;
                } else if (key == "sphere") {
                    expect_count(line, 4, 4);
                    link.primitives.push_back(Primitive::sphere(vec_at(line, 1), number_at(line, 4)));
                } else if (key == "capsule") {
                    expect_count(line, 7, 7);
                    link.primitives.push_back(Primitive::capsule(vec_at(line, 1), vec_at(line, 4), number_at(line, 7)));
                } else if (key == "sample") {
                    expect_count(line, 3, 3);
                    link.surface_samples.push_back(vec_at(line, 1));
                } else {
                    throw ParseError(line.number, "unknown link field '" + key + "'");
                }
                break;
            }
            case Section::Joint: {
                auto& j = joints.back();
                if (key == "parent") {
                    expect_count(line, 1, 1);
                    j.parent_link = line.tokens[1];
                    parent_seen = true;
                } else if (key == "child") {
                    expect_count(line, 1, 1);
                    j.child_link = line.tokens[1];
                    child_seen = true;
                } else if (key == "axis") {
                    expect_count(line, 3, 3);
                    j.axis = vec_at(line, 1);
                    axis_seen = true;
                } else if (key == "origin") {
                    expect_count(line, 3, 6);
                    if (line.tokens.size() != 4 && line.tokens.size() != 7) {
                        throw ParseError(line.number, "field 'origin' expects 3 or 6 values");
                    }
                    j.origin.translation = vec_at(line, 1);
                    if (line.tokens.size() == 7) j.origin.rotation = exp_so3(vec_at(line, 4));
                } else if (key == "limits") {
                    expect_count(line, 2, 2);
                    j.theta_min = number_at(line, 1);
                    j.theta_max = number_at(line, 2);
                    limits_seen = true;
                } else if (key == "synergy") {
                    expect_count(line, 1, 1);
                    j.synergy = number_at(line, 1);
                } else {
                    throw ParseError(line.number, "unknown joint field '" + key + "'");
                }
                break;
            }
        }
    }
    if (section != Section::None || open_pending) {
        throw ParseError(lines.empty() ? 0 : lines.back().number, "unterminated section");
    }
    return HandModel(hand_name, std::move(links), std::move(joints));
}

HandModel load_hand_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open hand config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return load_hand(buf.str());
}

std::string serialize_hand(const HandModel& hand) {
    std::ostringstream out;
    out << std::setprecision(17);
    auto v3 = [&](const Vec3& v) { out << v.x() << ' ' << v.y() << ' ' << v.z(); };
    out << "hand " << hand.name() << "\n";
    for (const auto& link : hand.links()) {
        out << "\nlink " << link.name << " {\n  tag " << to_string(link.tag) << "\n";
        for (const auto& p : link.primitives) {
            if (p.kind == Primitive::Kind::Sphere) {
                out << "  sphere ";
                v3(p.a);
            } else {
                out << "  capsule ";
                v3(p.a);
                out << ' ';
                v3(p.b);
            }
            out << ' ' << p.radius << "\n";
        }
        for (const auto& s : link.surface_samples) {
            out << "  sample ";
            v3(s);
            out << "\n";
        }
        out << "}\n";
    }
    for (const auto& j : hand.joints()) {
        out << "\njoint " << j.name << " {\n  parent " << j.parent_link << "\n  child " << j.child_link << "\n  axis ";
        v3(j.axis);
        out << "\n  origin ";
        v3(j.origin.translation);
        out << ' ';
        v3(log_so3(j.origin.rotation));
        out << "\n  limits " << j.theta_min << ' ' << j.theta_max << "\n";
        if (j.synergy != 0.0) out << "  synergy " << j.synergy << "\n";
        out << "}\n";
    }
    return out.str();
}

}  // namespace ibsgrasp
