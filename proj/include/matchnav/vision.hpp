#ifndef MATCHNAV_VISION_HPP
#define MATCHNAV_VISION_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "matchnav/image.hpp"

namespace matchnav::vision {

struct Keypoint {
    double x = 0.0;        // subpixel column
    double y = 0.0;        // subpixel row
    double response = 0.0; // non-negative corner score
    double angle = 0.0;    // patch orientation from the intensity centroid
};

/// 256-bit binary descriptor from pairwise intensity comparisons.
struct Descriptor {
    std::array<uint64_t, 4> bits{};

    bool operator==(const Descriptor&) const = default;
};

int hamming(const Descriptor& a, const Descriptor& b);

/// Keypoints with parallel descriptors, sorted by descending response.
struct KeypointSet {
    std::vector<Keypoint> keypoints;
    std::vector<Descriptor> descriptors;

    size_t size() const { return keypoints.size(); }
    bool empty() const { return keypoints.empty(); }
};

struct MatchPair {
    int a = -1;       // index into the first set
    int b = -1;       // index into the second set
    int distance = 0; // Hamming distance of the accepted pair
};

/// Ratio-test matches, one-to-one on the b side, sorted by a-index.
struct MatchList {
    std::vector<MatchPair> pairs;
    double ratio_threshold = 0.0;

    size_t size() const { return pairs.size(); }
};

struct VisionParams {
    int max_keypoints = 120;      // per observation query
    int demo_max_keypoints = 64;  // per stored demo frame: the denominator
                                  // side of the density stays selective
    double ratio_threshold = 0.8;
    int nms_radius = 1;
    double detect_sigma = 0.6;        // smoothing before the corner response
    double descriptor_sigma = 2.0;    // smoothing for descriptor sampling
    double response_threshold = 1e-7; // absolute floor on the corner score
    int patch_radius = 10;            // descriptor/orientation support radius
    uint64_t pattern_seed = 0x5eedf00d1234ULL; // fixed sampling pattern seed
    // Upright patches: the cameras here are gravity-aligned, and canonical
    // rotation collapses descriptor diversity on repetitive texture. When
    // false, patches rotate to the intensity-centroid angle.
    bool upright = true;

    /// Border margin inside which no keypoint is produced. Descriptor
    /// sampling clamps at the image edge, so the margin only has to cover
    /// the suppression neighborhood, not the full patch.
    int border() const { return nms_radius + 2; }
    uint64_t detection_hash() const;
};

/// Separable Gaussian blur (clamp-to-edge), exposed for tests.
Image gaussian_blur(const Image& img, double sigma);

/// Min-eigenvalue (Shi-Tomasi) corner response map of the smoothed image.
/// Exposed so tests can run exhaustive local-maxima oracles against it.
std::vector<double> corner_response(const Image& img, const VisionParams& params);

/// Corner detection + non-maximum suppression + oriented binary
/// descriptors. Throws "image-too-small" when the image cannot hold the
/// descriptor support. A featureless (e.g. constant) image yields an empty
/// set, which is not an error here; downstream consumers decide policy.
KeypointSet detect_keypoints(const Image& img, const VisionParams& params = {});

/// Two-nearest-neighbor ratio matching on Hamming distance, then one-to-one
/// filtering on the b side (per b index keep the smallest distance,
/// ties to the lower a index). Throws "empty-keypoint-set" on empty input.
MatchList match(const KeypointSet& a, const KeypointSet& b, double ratio_threshold);

/// |match(o1, o2)| / |keypoints(o2)| in [0, 1]; asymmetric by construction.
/// Throws "no-keypoints" when either side has no keypoints.
double match_density(const KeypointSet& o1, const KeypointSet& o2, double ratio_threshold = 0.8);
double match_density(const Image& o1, const Image& o2, const VisionParams& params = {});

/// Raw serialization of one keypoint set (count, packed keypoints,
/// descriptor bits). Demo sidecar files wrap this with a versioned header.
void write_keypoint_set(std::ostream& out, const KeypointSet& set);
KeypointSet read_keypoint_set(std::istream& in);

} // namespace matchnav::vision

#endif
