// Copyright (c) 2026 the cbmar authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>
#include <string>

#include "cbmar/io.hpp"

namespace cbmar {

// Command-line state shared by every verb. Flags override their config
// counterparts; sentinel values mean "not given on the command line".
struct PipelineOptions {
    std::string config_path;
    std::string out_dir;  // overrides [paths] out_dir when non-empty
    uint64_t seed = 0;
    bool seed_given = false;
    double alpha = -1.0;
    double tau = -1.0;
    std::string enhancer;  // identity | li | external:<path>
    int views = -1;
    double offset = std::numeric_limits<double>::quiet_NaN();
};

// Effective configuration: built-in defaults, then the config file, then
// command-line overrides.
Config resolve_config(const PipelineOptions& opts);

// Stage drivers. Each reads and writes the conventional files inside
// [paths] out_dir and returns 0 on success.
int cmd_generate(const PipelineOptions& opts);
int cmd_simulate(const PipelineOptions& opts);
int cmd_reconstruct(const PipelineOptions& opts);
int cmd_mar(const PipelineOptions& opts);
int cmd_segment(const PipelineOptions& opts);
int cmd_evaluate(const PipelineOptions& opts);
int cmd_pipeline(const PipelineOptions& opts);

}  // namespace cbmar
