#ifndef MATCHNAV_DEMO_STORE_HPP
#define MATCHNAV_DEMO_STORE_HPP

#include <string>
#include <vector>

#include "matchnav/expert.hpp"
#include "matchnav/vision.hpp"
#include "matchnav/world.hpp"

namespace matchnav::demo {

/// Ordered expert frames with their precomputed feature buffer. Immutable
/// after ingest; retrieval is reentrant.
struct Demonstration {
    std::vector<Image> frames;
    std::vector<vision::KeypointSet> features; // parallel to frames
    world::CameraConfig source_camera;         // metadata only
    vision::VisionParams vision_params;        // parameters used at ingest

    int size() const { return static_cast<int>(frames.size()); }
};

struct RetrievalResult {
    int index = -1;       // closest expert frame
    double density = 0.0; // match density at that frame
    int match_count = 0;  // accepted one-to-one matches
};

/// Per-candidate detail of a windowed retrieval; the reward reuses these
/// densities instead of re-matching.
struct WindowDetail {
    struct Candidate {
        int index;
        double density;
        int match_count;
    };
    std::vector<Candidate> candidates;
    RetrievalResult best;
};

/// Build a demonstration from in-memory frames (e.g. straight from the
/// scripted expert). Throws "degenerate-demo-frame" if any frame has no
/// keypoints, and "demo-too-short" for fewer than two frames.
Demonstration from_frames(std::vector<Image> frames, const vision::VisionParams& params,
                          const world::CameraConfig& source_camera);

/// Load a demonstration from a manifest file (one frame path per line,
/// relative paths resolved against the manifest directory; 8-bit grayscale
/// PGM frames). Feature extraction results are cached in one ".kps" sidecar
/// per frame so a re-ingest only loads.
Demonstration ingest(const std::string& manifest_path, const vision::VisionParams& params = {},
                     const world::CameraConfig& source_camera = {});

/// Write frames + manifest (+ sidecars via a follow-up ingest) to a
/// directory. Returns the manifest path.
std::string write_demo_dir(const expert::DemoRecording& rec, const std::string& dir);

/// Full linear scan for the highest match density; ties break to the
/// earlier frame. Throws "no-keypoints" when obs has no keypoints.
RetrievalResult retrieve_initial(const Demonstration& demo, const vision::KeypointSet& obs);
RetrievalResult retrieve_initial(const Demonstration& demo, const Image& obs);

/// Linear scan keeping every frame's density (argmax in .best).
WindowDetail retrieve_initial_detailed(const Demonstration& demo, const vision::KeypointSet& obs);

/// Search restricted to {prev, prev+1, prev+2, prev+3} clamped to the demo
/// end (or wrapped modulo n for looping demos). Never returns an index
/// before prev_index in the non-wrapping mode.
RetrievalResult retrieve_windowed(const Demonstration& demo, const vision::KeypointSet& obs,
                                  int prev_index, bool wrap = false);
RetrievalResult retrieve_windowed(const Demonstration& demo, const Image& obs, int prev_index,
                                  bool wrap = false);
WindowDetail retrieve_windowed_detailed(const Demonstration& demo, const vision::KeypointSet& obs,
                                        int prev_index, bool wrap = false);

} // namespace matchnav::demo

#endif
