// Copyright (c) 2026 the cbmar authors
// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cbmar/phantom.hpp"
#include "cbmar/pipeline.hpp"
#include "doctest.h"

using namespace cbmar;
namespace fs = std::filesystem;

namespace {

fs::path test_dir() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "cbmar_pipeline_tests";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(bool(in));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// compact setup good for a sub-second generate stage
Config micro_config() {
    Config c;
    c.set("paths", "materials",
          std::string(CBMAR_SOURCE_DATA_DIR) + "/materials.txt");
    c.set("paths", "spectrum",
          std::string(CBMAR_SOURCE_DATA_DIR) + "/spectrum_85kv.txt");
    c.set("run", "seed", "11");
    c.set("grid", "n", "20");
    c.set("grid", "pitch", "0.6");
    c.set("geometry", "views", "8");
    c.set("geometry", "cols", "24");
    c.set("geometry", "rows", "16");
    c.set("geometry", "pitch_u", "0.5");
    c.set("geometry", "pitch_v", "0.5");
    c.set("geometry", "offset_u", "0");
    c.set("phantom", "teeth", "4");
    c.set("inserts", "min", "1");
    c.set("inserts", "max", "2");
    return c;
}

PipelineOptions options_for(const Config& cfg, const std::string& name,
                            const std::string& out_name) {
    const fs::path cfg_path = test_dir() / name;
    cfg.save(cfg_path.string());
    PipelineOptions opts;
    opts.config_path = cfg_path.string();
    opts.out_dir = (test_dir() / out_name).string();
    return opts;
}

}  // namespace

TEST_CASE("resolve_config layers defaults, file and flags") {
    // defaults alone
    const Config base = resolve_config(PipelineOptions{});
    CHECK(base.get("paths", "out_dir") == "out");
    CHECK(base.get("run", "seed") == "1");
    CHECK(base.get_double("segment", "alpha", 0.0) == 2.5);
    CHECK(base.get_double("segment", "tau", 0.0) == 0.045);
    CHECK(base.get("mar", "enhancer") == "li");
    CHECK(base.get_int("geometry", "views", 0) == 180);
    CHECK(base.get_double("geometry", "offset_u", 0.0) == 7.2);

    // a config file overrides defaults but keeps the rest
    Config file;
    file.set("run", "seed", "9");
    file.set("segment", "alpha", "4.0");
    file.set("custom", "key", "kept");
    const fs::path cfg_path = test_dir() / "layered.cfg";
    file.save(cfg_path.string());
    PipelineOptions opts;
    opts.config_path = cfg_path.string();
    const Config merged = resolve_config(opts);
    CHECK(merged.get("run", "seed") == "9");
    CHECK(merged.get_double("segment", "alpha", 0.0) == 4.0);
    CHECK(merged.get_double("segment", "tau", 0.0) == 0.045);
    CHECK(merged.get("custom", "key") == "kept");

    // command-line flags beat the file
    opts.seed = 3;
    opts.seed_given = true;
    opts.tau = 0.06;
    opts.enhancer = "identity";
    opts.views = 24;
    opts.offset = 0.0;
    opts.out_dir = "elsewhere";
    const Config final_cfg = resolve_config(opts);
    CHECK(final_cfg.get("run", "seed") == "3");
    CHECK(final_cfg.get_double("segment", "alpha", 0.0) == 4.0);
    CHECK(final_cfg.get_double("segment", "tau", 0.0) == 0.06);
    CHECK(final_cfg.get("mar", "enhancer") == "identity");
    CHECK(final_cfg.get_int("geometry", "views", 0) == 24);
    CHECK(final_cfg.get_double("geometry", "offset_u", -1.0) == 0.0);
    CHECK(final_cfg.get("paths", "out_dir") == "elsewhere");
}

TEST_CASE("generate stage produces the full phantom file set") {
    const PipelineOptions opts = options_for(micro_config(), "gen.cfg",
                                             "gen_out");
    REQUIRE(cmd_generate(opts) == 0);
    const fs::path out(opts.out_dir);
    for (const char* name :
         {"labels_clean.vol", "labels_clean.vol.raw", "labels_metal.vol",
          "metal.mask", "mu_clean.vol", "mu_metal.vol", "oral_scan.mask",
          "oral_points.stl", "manifest.cfg"})
        CHECK(fs::exists(out / name));

    const Config manifest = Config::load((out / "manifest.cfg").string());
    const int count = manifest.get_int("inserts", "count", 0);
    CHECK(count >= 1);
    CHECK(count <= 2);
    for (int k = 0; k < count; ++k) {
        const std::string sec = "insert_" + std::to_string(k);
        CHECK(manifest.has(sec, "tooth"));
        CHECK(manifest.has(sec, "material"));
        const std::string kind = manifest.get(sec, "kind");
        CHECK((kind == "crown" || kind == "implant"));
        CHECK(fs::exists(out / ("metal_" + std::to_string(k) + ".mask")));
    }
    CHECK(manifest.get("geometry", "hash").size() == 16);

    // the labelled phantom actually contains metal and the clean one does not
    const LabelVolume metal = read_labels((out / "labels_metal.vol").string());
    const LabelVolume clean = read_labels((out / "labels_clean.vol").string());
    std::size_t metal_voxels = 0;
    for (int32_t v : metal.data) metal_voxels += labels::is_metal(v);
    CHECK(metal_voxels > 0);
    for (int32_t v : clean.data) CHECK_FALSE(labels::is_metal(v));

    // attenuation volumes are bound to nothing but hold positive tissue
    const Volume mu = read_volume((out / "mu_metal.vol").string());
    double peak = 0.0;
    for (double v : mu.data) peak = std::max(peak, v);
    CHECK(peak > 0.1);
}

TEST_CASE("generate reruns are byte-identical") {
    const PipelineOptions a = options_for(micro_config(), "rep.cfg", "rep_a");
    PipelineOptions b = a;
    b.out_dir = (test_dir() / "rep_b").string();
    REQUIRE(cmd_generate(a) == 0);
    REQUIRE(cmd_generate(b) == 0);
    for (const char* name :
         {"manifest.cfg", "labels_metal.vol.raw", "mu_metal.vol.raw",
          "metal.mask.raw", "oral_scan.mask.raw", "oral_points.stl"}) {
        CHECK(slurp(fs::path(a.out_dir) / name) ==
              slurp(fs::path(b.out_dir) / name));
    }

    // a different seed moves the inserts
    PipelineOptions c = a;
    c.out_dir = (test_dir() / "rep_c").string();
    c.seed = 12;
    c.seed_given = true;
    REQUIRE(cmd_generate(c) == 0);
    CHECK(slurp(fs::path(a.out_dir) / "manifest.cfg") !=
          slurp(fs::path(c.out_dir) / "manifest.cfg"));
}

TEST_CASE("generate rejects unusable insert configurations") {
    Config bad = micro_config();
    bad.set("inserts", "min", "0");
    CHECK_THROWS_AS(
        cmd_generate(options_for(bad, "bad_min.cfg", "bad_min_out")),
        ConfigError);

    bad = micro_config();
    bad.set("inserts", "min", "3");
    bad.set("inserts", "max", "2");
    CHECK_THROWS_AS(
        cmd_generate(options_for(bad, "bad_range.cfg", "bad_range_out")),
        ConfigError);

    bad = micro_config();
    bad.set("inserts", "materials", "   ");
    CHECK_THROWS_AS(
        cmd_generate(options_for(bad, "bad_mats.cfg", "bad_mats_out")),
        ConfigError);
}
