#pragma once

#include <qdrt/error.hpp>
#include <qdrt/geometry.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace qdrt {

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) {
            ++i;
        }
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') {
            ++i;
        }
        if (i > start) {
            out.push_back(line.substr(start, i - start));
        }
    }
    return out;
}

template <typename T>
bool parse_number(std::string_view token, T& value) {
    const char* first = token.data();
    const char* last = token.data() + token.size();
    if (first != last && *first == '+') {
        ++first;
    }
    const auto [ptr, ec] = std::from_chars(first, last, value);
    return ec == std::errc{} && ptr == last;
}

} // namespace detail

/// Reads the text mesh format: per line nine reals (three vertices) and an integer material id.
/// Blank lines and lines starting with '#' are skipped. `material_known`, when set, rejects
/// ids that do not resolve in the material table.
inline TriangleMesh load_mesh(std::istream& in, const std::function<bool(MaterialId)>& material_known = {}) {
    std::vector<Triangle> tris;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto tokens = detail::split_ws(line);
        if (tokens.empty() || tokens.front().front() == '#') {
            continue;
        }
        if (tokens.size() != 10) {
            throw ParseError(lineno, "expected 9 coordinates and a material id, got " +
                                         std::to_string(tokens.size()) + " fields");
        }
        std::array<double, 9> c{};
        for (std::size_t k = 0; k < 9; ++k) {
            if (!detail::parse_number(tokens[k], c[k])) {
                throw ParseError(lineno, "malformed number '" + std::string(tokens[k]) + "'");
            }
            if (!std::isfinite(c[k])) {
                throw ParseError(lineno, "non-finite coordinate");
            }
        }
        MaterialId mat = 0;
        if (!detail::parse_number(tokens[9], mat)) {
            throw ParseError(lineno, "malformed material id '" + std::string(tokens[9]) + "'");
        }
        if (material_known && !material_known(mat)) {
            throw ParseError(lineno, "unknown material id " + std::to_string(mat));
        }
        Triangle t{{c[0], c[1], c[2]}, {c[3], c[4], c[5]}, {c[6], c[7], c[8]}, mat};
        if (!(t.area() > kMinTriangleArea)) {
            throw ParseError(lineno, "degenerate triangle");
        }
        tris.push_back(t);
    }
    return TriangleMesh(std::move(tris));
}

inline TriangleMesh load_mesh_file(const std::string& path, const std::function<bool(MaterialId)>& material_known = {}) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open mesh file '" + path + "'");
    }
    try {
        return load_mesh(in, material_known);
    } catch (const ParseError& e) {
        throw ParseError(e.line(), path + ": " + e.what());
    }
}

inline void write_mesh(std::ostream& out, const TriangleMesh& mesh) {
    out << "# v0x v0y v0z v1x v1y v1z v2x v2y v2z material\n";
    out.precision(17);
    for (const auto& t : mesh.triangles()) {
        out << t.v0.x << ' ' << t.v0.y << ' ' << t.v0.z << ' ' << t.v1.x << ' ' << t.v1.y << ' ' << t.v1.z << ' '
            << t.v2.x << ' ' << t.v2.y << ' ' << t.v2.z << ' ' << t.material_id << '\n';
    }
}

} // namespace qdrt
