// Copyright (c) 2026 the cbmar authors
// SPDX-License-Identifier: Apache-2.0
#include "cbmar/materials.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace cbmar {

void AttenuationCurve::validate(const std::string& name) const {
    if (energy_kev.size() < 2 || energy_kev.size() != mu.size())
        throw DegenerateInput("attenuation curve for " + name +
                              " needs at least two knots");
    for (std::size_t i = 0; i < energy_kev.size(); ++i) {
        if (mu[i] < 0.0)
            throw DegenerateInput("negative attenuation for " + name);
        if (i > 0 && energy_kev[i] <= energy_kev[i - 1])
            throw DegenerateInput("energies not strictly increasing for " + name);
    }
}

double AttenuationCurve::at(double kev) const {
    if (kev <= energy_kev.front()) return mu.front();
    if (kev >= energy_kev.back()) return mu.back();
    std::size_t hi = 1;
    while (energy_kev[hi] < kev) ++hi;
    const double e0 = energy_kev[hi - 1], e1 = energy_kev[hi];
    const double t = (kev - e0) / (e1 - e0);
    return mu[hi - 1] * (1.0 - t) + mu[hi] * t;
}

MaterialTable MaterialTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open material table: " + path);
    MaterialTable table;
    std::string line, name;
    AttenuationCurve cur;
    int lineno = 0;
    auto flush = [&]() {
        if (name.empty()) return;
        cur.validate(name);
        table.curves_[name] = cur;
        cur = AttenuationCurve{};
    };
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string first;
        if (!(ss >> first)) continue;
        if (first == "material") {
            flush();
            if (!(ss >> name))
                throw IoError(path + ":" + std::to_string(lineno) +
                              ": material without a name");
        } else {
            if (name.empty())
                throw IoError(path + ":" + std::to_string(lineno) +
                              ": data before any material header");
            double e = 0.0, m = 0.0;
            std::istringstream row(line);
            if (!(row >> e >> m))
                throw IoError(path + ":" + std::to_string(lineno) +
                              ": expected 'energy_keV mu_per_mm'");
            cur.energy_kev.push_back(e);
            cur.mu.push_back(m);
        }
    }
    flush();
    if (table.curves_.empty()) throw IoError("empty material table: " + path);
    return table;
}

const AttenuationCurve& MaterialTable::curve(const std::string& name) const {
    auto it = curves_.find(name);
    if (it == curves_.end()) throw UnknownMaterial(name);
    return it->second;
}

std::vector<std::string> MaterialTable::names() const {
    std::vector<std::string> out;
    for (const auto& kv : curves_) out.push_back(kv.first);
    return out;
}

void MaterialTable::add(const std::string& name, AttenuationCurve c) {
    c.validate(name);
    curves_[name] = std::move(c);
}

Spectrum Spectrum::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open spectrum: " + path);
    Spectrum s;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string first;
        if (!(ss >> first)) continue;
        if (first == "tube_kv") {
            if (!(ss >> s.tube_kv))
                throw IoError(path + ":" + std::to_string(lineno) +
                              ": tube_kv needs a value");
        } else {
            double e = 0.0, w = 0.0;
            std::istringstream row(line);
            if (!(row >> e >> w))
                throw IoError(path + ":" + std::to_string(lineno) +
                              ": expected 'energy_keV weight'");
            s.energy_kev.push_back(e);
            s.weight.push_back(w);
        }
    }
    if (s.tube_kv == 0.0 && !s.energy_kev.empty())
        s.tube_kv = s.energy_kev.back();
    s.normalize();
    s.validate();
    return s;
}

Spectrum Spectrum::single_bin(double kev) {
    Spectrum s;
    s.energy_kev = {kev};
    s.weight = {1.0};
    s.tube_kv = kev;
    return s;
}

void Spectrum::normalize() {
    double sum = 0.0;
    for (double w : weight) sum += w;
    if (sum <= 0.0) throw NonNormalizedSpectrum("all-zero spectrum");
    for (double& w : weight) w /= sum;
}

void Spectrum::validate() const {
    if (energy_kev.empty() || energy_kev.size() != weight.size())
        throw DegenerateInput("spectrum without bins");
    double sum = 0.0;
    for (std::size_t i = 0; i < weight.size(); ++i) {
        if (weight[i] < 0.0) throw NonNormalizedSpectrum("negative weight");
        sum += weight[i];
        if (i > 0 && energy_kev[i] <= energy_kev[i - 1])
            throw DegenerateInput("spectrum energies not strictly increasing");
    }
    if (std::fabs(sum - 1.0) > 1e-6)
        throw NonNormalizedSpectrum("weights sum to " + std::to_string(sum));
    if (energy_kev.back() > tube_kv + 1e-9)
        throw DegenerateInput("spectrum extends beyond the tube voltage");
}

}  // namespace cbmar
