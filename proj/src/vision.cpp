#include "matchnav/vision.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>

#include "matchnav/common.hpp"

namespace matchnav::vision {

int hamming(const Descriptor& a, const Descriptor& b) {
    int d = 0;
    for (int i = 0; i < 4; ++i) d += std::popcount(a.bits[i] ^ b.bits[i]);
    return d;
}

uint64_t VisionParams::detection_hash() const {
    uint64_t h = fnv1a64(&max_keypoints, sizeof(max_keypoints));
    h = fnv1a64(&demo_max_keypoints, sizeof(demo_max_keypoints), h);
    h = fnv1a64(&nms_radius, sizeof(nms_radius), h);
    h = fnv1a64(&detect_sigma, sizeof(detect_sigma), h);
    h = fnv1a64(&descriptor_sigma, sizeof(descriptor_sigma), h);
    h = fnv1a64(&response_threshold, sizeof(response_threshold), h);
    h = fnv1a64(&patch_radius, sizeof(patch_radius), h);
    h = fnv1a64(&pattern_seed, sizeof(pattern_seed), h);
    h = fnv1a64(&upright, sizeof(upright), h);
    return h;
}

Image gaussian_blur(const Image& img, double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(static_cast<size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[static_cast<size_t>(i + radius)] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += kernel[static_cast<size_t>(i + radius)];
    }
    for (double& k : kernel) k /= sum;

    const int W = img.width, H = img.height;
    Image tmp(W, H), out(W, H);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int xi = std::clamp(x + i, 0, W - 1);
                acc += kernel[static_cast<size_t>(i + radius)] * img.at(xi, y);
            }
            tmp.at(x, y) = static_cast<float>(acc);
        }
    }
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int yi = std::clamp(y + i, 0, H - 1);
                acc += kernel[static_cast<size_t>(i + radius)] * tmp.at(x, yi);
            }
            out.at(x, y) = static_cast<float>(acc);
        }
    }
    return out;
}

namespace {

struct PatternPoint {
    double x1, y1, x2, y2;
};

std::vector<PatternPoint> build_pattern(uint64_t seed, int radius) {
    std::vector<PatternPoint> pattern;
    Rng rng(seed);
    const double sigma = radius / 2.0;
    auto draw = [&](double& x, double& y) {
        do {
            x = rng.normal(0.0, sigma);
            y = rng.normal(0.0, sigma);
        } while (x * x + y * y > radius * radius);
    };
    pattern.reserve(256);
    while (pattern.size() < 256) {
        PatternPoint p{};
        draw(p.x1, p.y1);
        draw(p.x2, p.y2);
        // comparisons closer than the smoothing support carry no signal
        const double dx = p.x1 - p.x2, dy = p.y1 - p.y2;
        if (dx * dx + dy * dy < 4.0) continue;
        pattern.push_back(p);
    }
    return pattern;
}

// The comparison pattern is generated once per (seed, radius) and shared by
// every extraction in the run, so descriptors are comparable across frames
// and across processes. Memoized behind a mutex; extraction is reentrant.
const std::vector<PatternPoint>& sampling_pattern(uint64_t seed, int radius) {
    static std::mutex mu;
    static std::map<std::pair<uint64_t, int>, std::vector<PatternPoint>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto [it, inserted] = cache.try_emplace({seed, radius});
    if (inserted) it->second = build_pattern(seed, radius);
    return it->second;
}

double centroid_angle(const Image& img, double cx, double cy, int radius) {
    double m10 = 0.0, m01 = 0.0;
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            if (dx * dx + dy * dy > radius * radius) continue;
            const double v = img.sample(cx + dx, cy + dy);
            m10 += dx * v;
            m01 += dy * v;
        }
    }
    if (std::fabs(m10) < 1e-12 && std::fabs(m01) < 1e-12) return 0.0;
    return std::atan2(m01, m10);
}

Descriptor describe(const Image& smooth, const Keypoint& kp, uint64_t pattern_seed, int radius) {
    const auto& pattern = sampling_pattern(pattern_seed, radius);
    const double ca = std::cos(kp.angle);
    const double sa = std::sin(kp.angle);
    Descriptor d{};
    for (size_t i = 0; i < pattern.size(); ++i) {
        const PatternPoint& p = pattern[i];
        const double x1 = kp.x + ca * p.x1 - sa * p.y1;
        const double y1 = kp.y + sa * p.x1 + ca * p.y1;
        const double x2 = kp.x + ca * p.x2 - sa * p.y2;
        const double y2 = kp.y + sa * p.x2 + ca * p.y2;
        if (smooth.sample(x1, y1) < smooth.sample(x2, y2))
            d.bits[i >> 6] |= (1ULL << (i & 63));
    }
    return d;
}

} // namespace

std::vector<double> corner_response(const Image& img, const VisionParams& params) {
    const Image smooth = gaussian_blur(img, params.detect_sigma);
    const int W = img.width, H = img.height;

    std::vector<double> ix(static_cast<size_t>(W) * H, 0.0), iy(ix), response(ix);
    for (int y = 1; y < H - 1; ++y) {
        for (int x = 1; x < W - 1; ++x) {
            const size_t i = static_cast<size_t>(y) * W + x;
            ix[i] = 0.5 * (smooth.at(x + 1, y) - smooth.at(x - 1, y));
            iy[i] = 0.5 * (smooth.at(x, y + 1) - smooth.at(x, y - 1));
        }
    }

    // Structure tensor accumulated over a 3x3 window, then the smaller
    // eigenvalue as the corner score.
    const int wr = 1;
    for (int y = wr + 1; y < H - wr - 1; ++y) {
        for (int x = wr + 1; x < W - wr - 1; ++x) {
            double axx = 0.0, axy = 0.0, ayy = 0.0;
            for (int dy = -wr; dy <= wr; ++dy) {
                for (int dx = -wr; dx <= wr; ++dx) {
                    const size_t i = static_cast<size_t>(y + dy) * W + (x + dx);
                    axx += ix[i] * ix[i];
                    axy += ix[i] * iy[i];
                    ayy += iy[i] * iy[i];
                }
            }
            const double tr_half = 0.5 * (axx + ayy);
            const double det_part = std::sqrt(std::fmax(0.0, tr_half * tr_half - (axx * ayy - axy * axy)));
            response[static_cast<size_t>(y) * W + x] = std::fmax(0.0, tr_half - det_part);
        }
    }
    return response;
}

KeypointSet detect_keypoints(const Image& img, const VisionParams& params) {
    const int border = params.border();
    const int min_dim = 2 * params.patch_radius + 5;
    if (img.width < min_dim || img.height < min_dim)
        throw Error("image-too-small", "image " + std::to_string(img.width) + "x" +
                                           std::to_string(img.height) +
                                           " cannot hold the descriptor support");
    if (params.max_keypoints < 1) throw Error("bad-config", "max_keypoints must be >= 1");

    const int W = img.width, H = img.height;
    const std::vector<double> response = corner_response(img, params);
    auto r_at = [&](int x, int y) { return response[static_cast<size_t>(y) * W + x]; };

    // Two-stage suppression, both stages bounded-neighborhood rules so a
    // keypoint's presence depends only on pixels within a fixed radius:
    // that keeps detection exactly covariant under content shifts.
    //   1. strict 3x3 local maxima (plateaus keep their first pixel in
    //      scan order);
    //   2. a maximum survives unless a stronger maximum (or an equal one
    //      earlier in scan order) lies within nms_radius.
    struct Candidate {
        int xi, yi;
        double x, y, response;
    };
    const int nr = params.nms_radius;
    const int margin = std::max(border, nr + 2);
    std::vector<uint8_t> is_peak(static_cast<size_t>(W) * H, 0);
    std::vector<Candidate> peaks;
    for (int y = margin - nr - 1; y < H - margin + nr + 1; ++y) {
        if (y < 1 || y >= H - 1) continue;
        for (int x = std::max(1, margin - nr - 1); x < std::min(W - 1, W - margin + nr + 1); ++x) {
            const double r = r_at(x, y);
            if (r <= params.response_threshold) continue;
            bool is_max = true;
            for (int dy = -1; dy <= 1 && is_max; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const double rn = r_at(x + dx, y + dy);
                    const bool earlier = (dy < 0) || (dy == 0 && dx < 0);
                    if (earlier ? (rn >= r) : (rn > r)) {
                        is_max = false;
                        break;
                    }
                }
            }
            if (is_max) is_peak[static_cast<size_t>(y) * W + x] = 1;
        }
    }
    std::vector<Candidate> selected;
    for (int y = margin; y < H - margin; ++y) {
        for (int x = margin; x < W - margin; ++x) {
            if (!is_peak[static_cast<size_t>(y) * W + x]) continue;
            const double r = r_at(x, y);
            bool dominated = false;
            for (int dy = -nr; dy <= nr && !dominated; ++dy) {
                for (int dx = -nr; dx <= nr; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const int xx = x + dx, yy = y + dy;
                    if (!is_peak[static_cast<size_t>(yy) * W + xx]) continue;
                    const double rn = r_at(xx, yy);
                    const bool earlier = (dy < 0) || (dy == 0 && dx < 0);
                    if (earlier ? (rn >= r) : (rn > r)) {
                        dominated = true;
                        break;
                    }
                }
            }
            if (dominated) continue;

            Candidate c{x, y, static_cast<double>(x), static_cast<double>(y), r};
            // one-dimensional parabola refinement per axis
            const double denom_x = r_at(x - 1, y) - 2.0 * r + r_at(x + 1, y);
            if (std::fabs(denom_x) > 1e-18) {
                const double off = 0.5 * (r_at(x - 1, y) - r_at(x + 1, y)) / denom_x;
                if (std::fabs(off) <= 0.5) c.x += off;
            }
            const double denom_y = r_at(x, y - 1) - 2.0 * r + r_at(x, y + 1);
            if (std::fabs(denom_y) > 1e-18) {
                const double off = 0.5 * (r_at(x, y - 1) - r_at(x, y + 1)) / denom_y;
                if (std::fabs(off) <= 0.5) c.y += off;
            }
            selected.push_back(c);
        }
    }

    std::stable_sort(selected.begin(), selected.end(),
                     [](const Candidate& a, const Candidate& b) { return a.response > b.response; });
    if (selected.size() > static_cast<size_t>(params.max_keypoints))
        selected.resize(static_cast<size_t>(params.max_keypoints));

    const Image desc_smooth = gaussian_blur(img, params.descriptor_sigma);
    KeypointSet set;
    set.keypoints.reserve(selected.size());
    set.descriptors.reserve(selected.size());
    for (const Candidate& c : selected) {
        Keypoint kp;
        kp.x = c.x;
        kp.y = c.y;
        kp.response = c.response;
        kp.angle =
            params.upright ? 0.0 : centroid_angle(desc_smooth, c.x, c.y, params.patch_radius);
        set.keypoints.push_back(kp);
        set.descriptors.push_back(describe(desc_smooth, kp, params.pattern_seed, params.patch_radius));
    }
    return set;
}

MatchList match(const KeypointSet& a, const KeypointSet& b, double ratio_threshold) {
    if (a.empty() || b.empty())
        throw Error("empty-keypoint-set", "match requires non-empty keypoint sets");
    if (!(ratio_threshold > 0.0 && ratio_threshold <= 1.0))
        throw Error("bad-config", "ratio threshold must be in (0, 1]");

    struct Candidate {
        int a, b, d1;
    };
    std::vector<Candidate> accepted;
    accepted.reserve(a.size());
    const int sentinel = std::numeric_limits<int>::max();

    for (size_t i = 0; i < a.size(); ++i) {
        int d1 = sentinel, d2 = sentinel, best = -1;
        for (size_t j = 0; j < b.size(); ++j) {
            const int d = hamming(a.descriptors[i], b.descriptors[j]);
            if (d < d1) {
                d2 = d1;
                d1 = d;
                best = static_cast<int>(j);
            } else if (d < d2) {
                d2 = d;
            }
        }
        bool accept;
        if (d2 == sentinel) {
            accept = true; // single-element b side: nothing to ratio against
        } else if (d2 == 0) {
            accept = (d1 == 0); // duplicate descriptors still self-match
        } else {
            accept = static_cast<double>(d1) <= ratio_threshold * static_cast<double>(d2);
        }
        if (accept) accepted.push_back({static_cast<int>(i), best, d1});
    }

    // One-to-one on b: keep the smallest distance per b index, ties to the
    // lower a index.
    std::sort(accepted.begin(), accepted.end(), [](const Candidate& l, const Candidate& r) {
        if (l.b != r.b) return l.b < r.b;
        if (l.d1 != r.d1) return l.d1 < r.d1;
        return l.a < r.a;
    });
    MatchList out;
    out.ratio_threshold = ratio_threshold;
    for (size_t i = 0; i < accepted.size(); ++i) {
        if (i > 0 && accepted[i].b == accepted[i - 1].b) continue;
        out.pairs.push_back({accepted[i].a, accepted[i].b, accepted[i].d1});
    }
    std::sort(out.pairs.begin(), out.pairs.end(),
              [](const MatchPair& l, const MatchPair& r) { return l.a < r.a; });
    return out;
}

double match_density(const KeypointSet& o1, const KeypointSet& o2, double ratio_threshold) {
    if (o1.empty() || o2.empty())
        throw Error("no-keypoints", "match density needs keypoints on both sides");
    const MatchList m = match(o1, o2, ratio_threshold);
    return static_cast<double>(m.size()) / static_cast<double>(o2.size());
}

double match_density(const Image& o1, const Image& o2, const VisionParams& params) {
    return match_density(detect_keypoints(o1, params), detect_keypoints(o2, params),
                         params.ratio_threshold);
}

void write_keypoint_set(std::ostream& out, const KeypointSet& set) {
    const uint32_t count = static_cast<uint32_t>(set.size());
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    for (uint32_t i = 0; i < count; ++i) {
        const Keypoint& kp = set.keypoints[i];
        out.write(reinterpret_cast<const char*>(&kp.x), sizeof(double));
        out.write(reinterpret_cast<const char*>(&kp.y), sizeof(double));
        out.write(reinterpret_cast<const char*>(&kp.response), sizeof(double));
        out.write(reinterpret_cast<const char*>(&kp.angle), sizeof(double));
    }
    for (uint32_t i = 0; i < count; ++i)
        out.write(reinterpret_cast<const char*>(set.descriptors[i].bits.data()), 32);
}

KeypointSet read_keypoint_set(std::istream& in) {
    uint32_t count = 0;
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    if (!in) throw Error("io-error", "truncated keypoint set");
    KeypointSet set;
    set.keypoints.resize(count);
    set.descriptors.resize(count);
    for (uint32_t i = 0; i < count; ++i) {
        Keypoint& kp = set.keypoints[i];
        in.read(reinterpret_cast<char*>(&kp.x), sizeof(double));
        in.read(reinterpret_cast<char*>(&kp.y), sizeof(double));
        in.read(reinterpret_cast<char*>(&kp.response), sizeof(double));
        in.read(reinterpret_cast<char*>(&kp.angle), sizeof(double));
    }
    for (uint32_t i = 0; i < count; ++i)
        in.read(reinterpret_cast<char*>(set.descriptors[i].bits.data()), 32);
    if (!in) throw Error("io-error", "truncated keypoint set payload");
    return set;
}

} // namespace matchnav::vision
