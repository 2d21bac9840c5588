#ifndef MATCHNAV_EXPERIMENT_HPP
#define MATCHNAV_EXPERIMENT_HPP

#include <optional>
#include <string>

#include "matchnav/config.hpp"
#include "matchnav/evaluation.hpp"
#include "matchnav/presets.hpp"

namespace matchnav {

struct ExperimentOptions {
    std::string out_dir = "out";
    bool dry_run = false;    // validate the config and stop
    bool run_latent = true;
    bool run_scan = true;
    bool quiet = false;
    std::optional<uint64_t> seed_override;
};

struct ExperimentResult {
    std::optional<eval::Report> latent;
    std::optional<eval::Report> scan;
    eval::Report zigzag;
    eval::Report random;
    bool ordering_ok = false;      // scan <= latent < zigzag < random
    bool margin_ok = false;        // latent < 0.5 * random
    std::string report_path;
};

/// The full pipeline: record the demo, pretrain the encoder, train the
/// imitation policies, evaluate against the baselines and write the report
/// plus all artifacts under out_dir. Any stage failure aborts with an error
/// naming the stage.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const ExperimentOptions& opts);

} // namespace matchnav

#endif
