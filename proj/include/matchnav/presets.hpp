#ifndef MATCHNAV_PRESETS_HPP
#define MATCHNAV_PRESETS_HPP

#include "matchnav/config.hpp"

namespace matchnav::presets {

/// The reference task: a 12 m straight corridor, elevated demo camera
/// (1.2 m) versus low robot camera (0.25 m). Tuned so the whole experiment
/// runs on a small CPU.
ExperimentConfig reference_corridor();

/// A layout the reference policy never trained on (longer and wider, same
/// texture family): the generalization probe world.
ExperimentConfig transfer_corridor();

/// Look up a preset by name ("corridor", "transfer").
ExperimentConfig by_name(const std::string& name);

} // namespace matchnav::presets

#endif
