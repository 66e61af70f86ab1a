// Copyright (c) 2026 the cbmar authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "cbmar/core.hpp"

namespace cbmar {

// Linear attenuation vs photon energy, piecewise linear between knots.
struct AttenuationCurve {
    std::vector<double> energy_kev;  // strictly increasing
    std::vector<double> mu;          // mm^-1, >= 0

    void validate(const std::string& name) const;
    // Linear interpolation; clamps outside the tabulated range.
    double at(double kev) const;
};

class MaterialTable {
  public:
    static MaterialTable load(const std::string& path);

    bool has(const std::string& name) const { return curves_.count(name) > 0; }
    const AttenuationCurve& curve(const std::string& name) const;
    double mu(const std::string& name, double kev) const {
        return curve(name).at(kev);
    }
    std::vector<std::string> names() const;
    void add(const std::string& name, AttenuationCurve c);

  private:
    std::map<std::string, AttenuationCurve> curves_;
};

// Normalized emission spectrum on discrete energy bins.
struct Spectrum {
    std::vector<double> energy_kev;  // bin centres, strictly increasing
    std::vector<double> weight;      // >= 0; must sum to 1 within 1e-6
    double tube_kv = 0.0;            // max energy bound

    static Spectrum load(const std::string& path);
    static Spectrum single_bin(double kev);

    // Throws NonNormalizedSpectrum / DegenerateInput on contract violations.
    void validate() const;
    void normalize();
};

}  // namespace cbmar
