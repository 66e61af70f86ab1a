// Copyright (c) 2026 the cbmar authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "cbmar/projector.hpp"
#include "cbmar/voxels.hpp"

namespace cbmar {

// Volumes, masks and label maps are stored as a plain-text header at `path`
// plus a raw little-endian array at `path + ".raw"` (float32 for volumes,
// uint8 for masks, int32 for labels). Headers carry no timestamps so repeat
// runs are byte-identical. `geometry_hash` ties a file to the scan geometry
// that produced it; "-" means unbound.

void write_volume(const Volume& volume, const std::string& path,
                  const std::string& geometry_hash = "-");
Volume read_volume(const std::string& path,
                   std::string* geometry_hash = nullptr);

void write_mask(const BinaryMask& mask, const std::string& path,
                const std::string& geometry_hash = "-");
BinaryMask read_mask(const std::string& path,
                     std::string* geometry_hash = nullptr);

void write_labels(const LabelVolume& labels, const std::string& path);
LabelVolume read_labels(const std::string& path);

// Sinogram files persist the full geometry (angles included) so a reload
// reconstructs without the producing config.
void write_sinogram(const Sinogram& sino, const std::string& path);
Sinogram read_sinogram(const std::string& path);

struct StlTriangle {
    Vec3 normal;
    std::array<Vec3, 3> v;
};

// ASCII STL. Point clouds are written as degenerate facets (all three
// vertices equal); read_stl_points collects unique vertices of any STL.
void write_stl(const std::vector<StlTriangle>& triangles,
               const std::string& path, const std::string& solid_name);
void write_stl_points(const std::vector<Vec3>& points,
                      const std::string& path,
                      const std::string& solid_name);
std::vector<StlTriangle> read_stl(const std::string& path);
std::vector<Vec3> read_stl_points(const std::string& path);

// Plain-text configuration: `[section]` headers, `key = value` lines, `#`
// comments. Parse errors carry file and line number.
class Config {
  public:
    Config() = default;

    static Config load(const std::string& path);
    static Config parse(const std::string& text, const std::string& name);

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key,
                    const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key,
                      double fallback) const;
    int get_int(const std::string& section, const std::string& key,
                int fallback) const;
    void set(const std::string& section, const std::string& key,
             const std::string& value);
    void set_double(const std::string& section, const std::string& key,
                    double value);
    void set_int(const std::string& section, const std::string& key,
                 long long value);
    void drop_section(const std::string& section);

    // deterministic rendering (sections and keys sorted)
    std::string serialize() const;
    void save(const std::string& path) const;

    const std::map<std::string, std::map<std::string, std::string>>&
    sections() const {
        return sections_;
    }

  private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
    std::string name_ = "<config>";
};

std::string format_double(double v);

}  // namespace cbmar
