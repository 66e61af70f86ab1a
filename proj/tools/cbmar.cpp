// Copyright (c) 2026 the cbmar authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: each subcommand runs one pipeline stage against a
// shared output directory, `pipeline` runs them all in order.
#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "cbmar/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"cone-beam CT simulation, reconstruction and metal artifact "
                 "reduction toolkit"};
    app.require_subcommand(1);

    cbmar::PipelineOptions opts;
    using Stage = int (*)(const cbmar::PipelineOptions&);
    Stage selected = nullptr;

    auto add_stage = [&](const char* name, const char* desc, Stage fn) {
        CLI::App* c = app.add_subcommand(name, desc);
        c->add_option("--config", opts.config_path, "configuration file")
            ->check(CLI::ExistingFile);
        c->add_option("--out", opts.out_dir,
                      "output directory (overrides [paths] out_dir)");
        c->add_option("--seed", opts.seed,
                      "base random seed (overrides [run] seed)")
            ->each([&](const std::string&) { opts.seed_given = true; });
        c->add_option("--alpha", opts.alpha,
                      "alpha-shape radius in mm (overrides [segment] alpha)");
        c->add_option("--tau", opts.tau,
                      "threshold in 1/mm (overrides [segment] tau)");
        c->add_option(
            "--enhancer", opts.enhancer,
            "identity, li or external:<cmd> (overrides [mar] enhancer)");
        c->add_option("--views", opts.views,
                      "projection count (overrides [geometry] views)");
        c->add_option("--offset", opts.offset,
                      "detector offset in mm (overrides [geometry] offset_u)");
        c->callback([&selected, fn] { selected = fn; });
        return c;
    };

    add_stage("generate", "build the jaw phantom, metal inserts and oral scan",
              cbmar::cmd_generate);
    add_stage("simulate", "project the phantom and add detector noise",
              cbmar::cmd_simulate);
    add_stage("reconstruct", "filtered backprojection of the sinograms",
              cbmar::cmd_reconstruct);
    add_stage("mar", "apply the configured artifact-reduction enhancer",
              cbmar::cmd_mar);
    add_stage("segment", "alpha-shape weighted hard-tissue segmentation",
              cbmar::cmd_segment);
    add_stage("evaluate", "score reconstructions and segmentations",
              cbmar::cmd_evaluate);
    add_stage("pipeline", "run every stage in order", cbmar::cmd_pipeline);

    CLI11_PARSE(app, argc, argv);
    try {
        return selected(opts);
    } catch (const std::exception& e) {
        std::cerr << "cbmar: error: " << e.what() << "\n";
        return 1;
    }
}
