// Copyright (c) 2026 the cbmar authors
// SPDX-License-Identifier: Apache-2.0
#include "cbmar/io.hpp"

#include <array>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "cbmar/geometry.hpp"

namespace cbmar {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

constexpr const char* kVolumeMagic = "cbmar volume 1";
constexpr const char* kSinogramMagic = "cbmar sinogram 1";

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << text;
    if (!out) throw IoError("write failed: " + path);
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_raw(const std::string& path, const void* data, std::size_t bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(static_cast<const char*>(data),
              static_cast<std::streamsize>(bytes));
    if (!out) throw IoError("write failed: " + path);
}

std::vector<char> read_raw(const std::string& path, std::size_t bytes) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::vector<char> buf(bytes);
    in.read(buf.data(), static_cast<std::streamsize>(bytes));
    if (in.gcount() != static_cast<std::streamsize>(bytes))
        throw IoError("truncated raw file: " + path);
    return buf;
}

// key -> rest-of-line map for the simple header files
std::map<std::string, std::string> parse_header(const std::string& text,
                                                const char* magic,
                                                const std::string& path) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != magic)
        throw IoError(path + ": not a " + std::string(magic) + " file");
    std::map<std::string, std::string> kv;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto sp = line.find(' ');
        if (sp == std::string::npos)
            kv[line] = "";
        else
            kv[line.substr(0, sp)] = line.substr(sp + 1);
    }
    return kv;
}

const std::string& header_field(const std::map<std::string, std::string>& kv,
                                const std::string& key,
                                const std::string& path) {
    auto it = kv.find(key);
    if (it == kv.end()) throw IoError(path + ": missing header field " + key);
    return it->second;
}

VoxelGrid grid_from_header(const std::map<std::string, std::string>& kv,
                           const std::string& path) {
    VoxelGrid g;
    g.nx = std::stoi(header_field(kv, "nx", path));
    g.ny = std::stoi(header_field(kv, "ny", path));
    g.nz = std::stoi(header_field(kv, "nz", path));
    g.pitch = std::stod(header_field(kv, "pitch", path));
    std::istringstream o(header_field(kv, "origin", path));
    if (!(o >> g.origin.x >> g.origin.y >> g.origin.z))
        throw IoError(path + ": malformed origin");
    if (g.nx <= 0 || g.ny <= 0 || g.nz <= 0 || g.pitch <= 0.0)
        throw IoError(path + ": invalid grid dimensions");
    return g;
}

std::string grid_header(const char* dtype, const VoxelGrid& g,
                        const std::string& geometry_hash) {
    std::ostringstream h;
    h << kVolumeMagic << "\n";
    h << "dtype " << dtype << "\n";
    h << "nx " << g.nx << "\nny " << g.ny << "\nnz " << g.nz << "\n";
    h << "pitch " << format_double(g.pitch) << "\n";
    h << "origin " << format_double(g.origin.x) << " "
      << format_double(g.origin.y) << " " << format_double(g.origin.z)
      << "\n";
    h << "geometry " << (geometry_hash.empty() ? "-" : geometry_hash) << "\n";
    return h.str();
}

}  // namespace

void write_volume(const Volume& volume, const std::string& path,
                  const std::string& geometry_hash) {
    write_text(path, grid_header("float32", volume.grid, geometry_hash));
    std::vector<float> raw(volume.data.size());
    for (std::size_t i = 0; i < raw.size(); ++i)
        raw[i] = static_cast<float>(volume.data[i]);
    write_raw(path + ".raw", raw.data(), raw.size() * sizeof(float));
}

Volume read_volume(const std::string& path, std::string* geometry_hash) {
    const auto kv = parse_header(read_text(path), kVolumeMagic, path);
    if (header_field(kv, "dtype", path) != "float32")
        throw IoError(path + ": expected float32 volume");
    Volume v(grid_from_header(kv, path));
    if (geometry_hash) *geometry_hash = header_field(kv, "geometry", path);
    const auto raw = read_raw(path + ".raw", v.data.size() * sizeof(float));
    const float* f = reinterpret_cast<const float*>(raw.data());
    for (std::size_t i = 0; i < v.data.size(); ++i) v.data[i] = f[i];
    return v;
}

void write_mask(const BinaryMask& mask, const std::string& path,
                const std::string& geometry_hash) {
    write_text(path, grid_header("uint8", mask.grid, geometry_hash));
    write_raw(path + ".raw", mask.data.data(), mask.data.size());
}

BinaryMask read_mask(const std::string& path, std::string* geometry_hash) {
    const auto kv = parse_header(read_text(path), kVolumeMagic, path);
    if (header_field(kv, "dtype", path) != "uint8")
        throw IoError(path + ": expected uint8 mask");
    BinaryMask m(grid_from_header(kv, path));
    if (geometry_hash) *geometry_hash = header_field(kv, "geometry", path);
    const auto raw = read_raw(path + ".raw", m.data.size());
    std::memcpy(m.data.data(), raw.data(), raw.size());
    for (auto& b : m.data) b = b ? 1 : 0;
    return m;
}

void write_labels(const LabelVolume& labels, const std::string& path) {
    write_text(path, grid_header("int32", labels.grid, "-"));
    std::vector<int32_t> raw(labels.data.begin(), labels.data.end());
    write_raw(path + ".raw", raw.data(), raw.size() * sizeof(int32_t));
}

LabelVolume read_labels(const std::string& path) {
    const auto kv = parse_header(read_text(path), kVolumeMagic, path);
    if (header_field(kv, "dtype", path) != "int32")
        throw IoError(path + ": expected int32 label volume");
    LabelVolume l(grid_from_header(kv, path));
    const auto raw = read_raw(path + ".raw", l.data.size() * sizeof(int32_t));
    const int32_t* p = reinterpret_cast<const int32_t*>(raw.data());
    for (std::size_t i = 0; i < l.data.size(); ++i) l.data[i] = p[i];
    return l;
}

void write_sinogram(const Sinogram& sino, const std::string& path) {
    const ScanGeometry& g = sino.geometry;
    std::ostringstream h;
    h << kSinogramMagic << "\n";
    h << "kind "
      << (sino.kind == SinogramKind::Mono
              ? "mono"
              : (sino.kind == SinogramKind::Poly ? "poly" : "noisy"))
      << "\n";
    h << "views " << g.n_views() << "\n";
    h << "rows " << g.detector_rows << "\ncols " << g.detector_cols << "\n";
    h << "source_radius " << format_double(g.source_radius) << "\n";
    h << "pixel_pitch_u " << format_double(g.pixel_pitch_u) << "\n";
    h << "pixel_pitch_v " << format_double(g.pixel_pitch_v) << "\n";
    h << "offset_u " << format_double(g.detector_offset_u) << "\n";
    h << "geometry " << g.hash() << "\n";
    h << "starved " << (sino.starved.empty() ? 0 : 1) << "\n";
    h << "angles";
    for (double a : g.angles) h << " " << format_double(a);
    h << "\n";
    write_text(path, h.str());

    std::vector<float> raw(sino.data.size());
    for (std::size_t i = 0; i < raw.size(); ++i)
        raw[i] = static_cast<float>(sino.data[i]);
    std::ofstream out(path + ".raw", std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path + ".raw");
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size() * sizeof(float)));
    if (!sino.starved.empty())
        out.write(reinterpret_cast<const char*>(sino.starved.data()),
                  static_cast<std::streamsize>(sino.starved.size()));
    if (!out) throw IoError("write failed: " + path + ".raw");
}

Sinogram read_sinogram(const std::string& path) {
    const auto kv = parse_header(read_text(path), kSinogramMagic, path);
    ScanGeometry g;
    const int views = std::stoi(header_field(kv, "views", path));
    g.detector_rows = std::stoi(header_field(kv, "rows", path));
    g.detector_cols = std::stoi(header_field(kv, "cols", path));
    g.source_radius = std::stod(header_field(kv, "source_radius", path));
    g.pixel_pitch_u = std::stod(header_field(kv, "pixel_pitch_u", path));
    g.pixel_pitch_v = std::stod(header_field(kv, "pixel_pitch_v", path));
    g.detector_offset_u = std::stod(header_field(kv, "offset_u", path));
    {
        std::istringstream a(header_field(kv, "angles", path));
        double v;
        while (a >> v) g.angles.push_back(v);
    }
    if (static_cast<int>(g.angles.size()) != views)
        throw IoError(path + ": angle count does not match views");
    g.validate();
    if (header_field(kv, "geometry", path) != g.hash())
        throw IoError(path + ": geometry hash mismatch");

    const std::string kind = header_field(kv, "kind", path);
    Sinogram s;
    s.geometry = g;
    s.kind = kind == "mono" ? SinogramKind::Mono
                            : (kind == "poly" ? SinogramKind::Poly
                                              : SinogramKind::Noisy);
    if (kind != "mono" && kind != "poly" && kind != "noisy")
        throw IoError(path + ": unknown sinogram kind " + kind);
    const std::size_t n =
        static_cast<std::size_t>(views) * g.detector_rows * g.detector_cols;
    const bool has_starved = header_field(kv, "starved", path) == "1";
    const auto raw =
        read_raw(path + ".raw", n * sizeof(float) + (has_starved ? n : 0));
    const float* f = reinterpret_cast<const float*>(raw.data());
    s.data.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.data[i] = f[i];
    if (has_starved) {
        s.starved.assign(raw.begin() + static_cast<std::ptrdiff_t>(
                                           n * sizeof(float)),
                         raw.end());
        for (auto& b : s.starved) b = b ? 1 : 0;
    }
    return s;
}

void write_stl(const std::vector<StlTriangle>& triangles,
               const std::string& path, const std::string& solid_name) {
    std::ostringstream out;
    out << "solid " << solid_name << "\n";
    for (const auto& t : triangles) {
        out << "  facet normal " << format_double(t.normal.x) << " "
            << format_double(t.normal.y) << " " << format_double(t.normal.z)
            << "\n    outer loop\n";
        for (const auto& v : t.v)
            out << "      vertex " << format_double(v.x) << " "
                << format_double(v.y) << " " << format_double(v.z) << "\n";
        out << "    endloop\n  endfacet\n";
    }
    out << "endsolid " << solid_name << "\n";
    write_text(path, out.str());
}

void write_stl_points(const std::vector<Vec3>& points,
                      const std::string& path,
                      const std::string& solid_name) {
    std::vector<StlTriangle> tris(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        tris[i] = {Vec3{}, {points[i], points[i], points[i]}};
    write_stl(tris, path, solid_name);
}

std::vector<StlTriangle> read_stl(const std::string& path) {
    std::istringstream in(read_text(path));
    std::vector<StlTriangle> tris;
    std::string tok;
    StlTriangle cur{};
    int vert = 0;
    int lineno = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        if (!(ls >> tok)) continue;
        if (tok == "facet") {
            std::string normal;
            cur = StlTriangle{};
            vert = 0;
            if (!(ls >> normal >> cur.normal.x >> cur.normal.y >>
                  cur.normal.z) ||
                normal != "normal")
                throw IoError(path + ":" + std::to_string(lineno) +
                              ": malformed facet line");
        } else if (tok == "vertex") {
            if (vert >= 3)
                throw IoError(path + ":" + std::to_string(lineno) +
                              ": more than 3 vertices in facet");
            Vec3& v = cur.v[vert];
            if (!(ls >> v.x >> v.y >> v.z))
                throw IoError(path + ":" + std::to_string(lineno) +
                              ": malformed vertex line");
            ++vert;
        } else if (tok == "endfacet") {
            if (vert != 3)
                throw IoError(path + ":" + std::to_string(lineno) +
                              ": facet with fewer than 3 vertices");
            tris.push_back(cur);
        }
    }
    return tris;
}

std::vector<Vec3> read_stl_points(const std::string& path) {
    const auto tris = read_stl(path);
    std::vector<Vec3> pts;
    pts.reserve(tris.size() * 3);
    // key on exact bit patterns, not a digest that could collide
    std::set<std::array<uint64_t, 3>> seen;
    auto key = [](const Vec3& p) {
        std::array<uint64_t, 3> k;
        std::memcpy(&k[0], &p.x, sizeof(double));
        std::memcpy(&k[1], &p.y, sizeof(double));
        std::memcpy(&k[2], &p.z, sizeof(double));
        return k;
    };
    for (const auto& t : tris)
        for (const auto& v : t.v)
            if (seen.insert(key(v)).second) pts.push_back(v);
    return pts;
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

}  // namespace

Config Config::load(const std::string& path) {
    Config c = parse(read_text(path), path);
    return c;
}

Config Config::parse(const std::string& text, const std::string& name) {
    Config c;
    c.name_ = name;
    std::istringstream in(text);
    std::string line, section = "global";
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(name + ":" + std::to_string(lineno) +
                                  ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError(name + ":" + std::to_string(lineno) +
                                  ": empty section name");
            c.sections_[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(name + ":" + std::to_string(lineno) +
                              ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(name + ":" + std::to_string(lineno) +
                              ": empty key");
        c.sections_[section][key] = value;
    }
    return c;
}

bool Config::has(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
}

std::string Config::get(const std::string& section,
                        const std::string& key) const {
    const auto s = sections_.find(section);
    if (s == sections_.end() || !s->second.count(key))
        throw ConfigError(name_ + ": missing [" + section + "] " + key);
    return s->second.at(key);
}

std::string Config::get(const std::string& section, const std::string& key,
                        const std::string& fallback) const {
    return has(section, key) ? get(section, key) : fallback;
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = get(section, key);
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (trim(v.substr(used)).empty()) return d;
    } catch (const std::exception&) {
    }
    throw ConfigError(name_ + ": [" + section + "] " + key +
                      " is not a number: " + v);
}

int Config::get_int(const std::string& section, const std::string& key,
                    int fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = get(section, key);
    try {
        std::size_t used = 0;
        const long d = std::stol(v, &used);
        if (trim(v.substr(used)).empty() && d >= INT32_MIN && d <= INT32_MAX)
            return static_cast<int>(d);
    } catch (const std::exception&) {
    }
    throw ConfigError(name_ + ": [" + section + "] " + key +
                      " is not an integer: " + v);
}

void Config::set(const std::string& section, const std::string& key,
                 const std::string& value) {
    sections_[section][key] = value;
}

void Config::set_double(const std::string& section, const std::string& key,
                        double value) {
    set(section, key, format_double(value));
}

void Config::set_int(const std::string& section, const std::string& key,
                     long long value) {
    set(section, key, std::to_string(value));
}

void Config::drop_section(const std::string& section) {
    sections_.erase(section);
}

std::string Config::serialize() const {
    std::ostringstream out;
    bool first = true;
    for (const auto& [section, kv] : sections_) {
        if (!first) out << "\n";
        first = false;
        out << "[" << section << "]\n";
        for (const auto& [key, value] : kv)
            out << key << " = " << value << "\n";
    }
    return out.str();
}

void Config::save(const std::string& path) const {
    write_text(path, serialize());
}

}  // namespace cbmar
