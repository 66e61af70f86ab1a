// Copyright (c) 2026 the cbmar authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "cbmar/materials.hpp"
#include "doctest.h"

using namespace cbmar;

namespace {
const char* kDataDir = CBMAR_SOURCE_DATA_DIR;
}

TEST_CASE("attenuation curves interpolate linearly and clamp") {
    AttenuationCurve c;
    c.energy_kev = {10.0, 20.0, 40.0};
    c.mu = {1.0, 3.0, 2.0};
    c.validate("test");
    CHECK(c.at(10.0) == doctest::Approx(1.0));
    CHECK(c.at(15.0) == doctest::Approx(2.0));
    CHECK(c.at(20.0) == doctest::Approx(3.0));
    CHECK(c.at(30.0) == doctest::Approx(2.5));
    // clamped, not extrapolated
    CHECK(c.at(5.0) == doctest::Approx(1.0));
    CHECK(c.at(100.0) == doctest::Approx(2.0));
}

TEST_CASE("curve validation catches bad knots") {
    AttenuationCurve c;
    c.energy_kev = {10.0, 10.0};
    c.mu = {1.0, 1.0};
    CHECK_THROWS_AS(c.validate("x"), DegenerateInput);
    c.energy_kev = {10.0, 20.0};
    c.mu = {1.0, -0.5};
    CHECK_THROWS_AS(c.validate("x"), DegenerateInput);
    c.mu = {1.0};
    CHECK_THROWS_AS(c.validate("x"), DegenerateInput);
}

TEST_CASE("shipped material table loads with the full set") {
    const MaterialTable t =
        MaterialTable::load(std::string(kDataDir) + "/materials.txt");
    for (const char* name : {"water", "soft_tissue", "bone", "enamel", "Al",
                             "Cr", "Ni", "Zr", "Pd", "Au", "air"})
        CHECK(t.has(name));
    CHECK_FALSE(t.has("adamantium"));
    CHECK_THROWS_AS(t.curve("adamantium"), UnknownMaterial);

    // first shipped water knots: 0.5329 at 10 keV, 0.1673 at 15 keV
    CHECK(t.mu("water", 10.0) == doctest::Approx(0.5329));
    CHECK(t.mu("water", 12.5) == doctest::Approx(0.5 * (0.5329 + 0.1673)));

    // attenuation ordering at 60 keV: air << water < bone << gold
    const double a = t.mu("air", 60.0), w = t.mu("water", 60.0);
    const double b = t.mu("bone", 60.0), g = t.mu("Au", 60.0);
    CHECK(a < 0.01 * w);
    CHECK(w < b);
    CHECK(b < g);

    // gold K-edge: attenuation jumps upward across 80.7 keV
    CHECK(t.mu("Au", 81.0) > t.mu("Au", 80.5));
}

TEST_CASE("spectra must be normalized and increasing") {
    Spectrum s;
    s.energy_kev = {30.0, 60.0};
    s.weight = {0.5, 0.5};
    s.tube_kv = 85.0;
    CHECK_NOTHROW(s.validate());

    SUBCASE("weights off unit sum") {
        s.weight = {0.5, 0.6};
        CHECK_THROWS_AS(s.validate(), NonNormalizedSpectrum);
    }
    SUBCASE("normalize repairs the sum") {
        s.weight = {1.0, 3.0};
        s.normalize();
        CHECK(s.weight[0] == doctest::Approx(0.25));
        CHECK(s.weight[1] == doctest::Approx(0.75));
        CHECK_NOTHROW(s.validate());
    }
    SUBCASE("non increasing energies") {
        s.energy_kev = {60.0, 30.0};
        CHECK_THROWS_AS(s.validate(), DegenerateInput);
    }
    SUBCASE("all-zero weights") {
        s.weight = {0.0, 0.0};
        CHECK_THROWS_AS(s.normalize(), NonNormalizedSpectrum);
    }
}

TEST_CASE("single_bin spectra carry one unit weight") {
    const Spectrum s = Spectrum::single_bin(60.0);
    REQUIRE(s.energy_kev.size() == 1);
    CHECK(s.energy_kev[0] == doctest::Approx(60.0));
    CHECK(s.weight[0] == doctest::Approx(1.0));
    CHECK_NOTHROW(s.validate());
}

TEST_CASE("shipped spectrum is normalized below the tube voltage") {
    const Spectrum s =
        Spectrum::load(std::string(kDataDir) + "/spectrum_85kv.txt");
    CHECK(s.tube_kv == doctest::Approx(85.0));
    CHECK_NOTHROW(s.validate());
    double sum = 0.0;
    for (std::size_t i = 0; i < s.energy_kev.size(); ++i) {
        CHECK(s.energy_kev[i] < s.tube_kv);
        sum += s.weight[i];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}
