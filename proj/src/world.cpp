#include "matchnav/world.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "matchnav/common.hpp"

namespace matchnav::world {

void CameraConfig::validate() const {
    if (height <= 0.0) throw Error("bad-config", "camera height must be > 0");
    if (!(hfov > 0.0 && hfov < 3.14159265358979)) throw Error("bad-config", "hfov out of (0, pi)");
    if (image_width < 16 || image_height < 16)
        throw Error("bad-config", "image dimensions must be >= 16");
}

namespace {

// Endpoints quantized so shared corners compare equal.
std::pair<long long, long long> quantize(const Vec2& p) {
    return {static_cast<long long>(std::llround(p.x * 1e6)),
            static_cast<long long>(std::llround(p.y * 1e6))};
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// Lattice value in [-1, 1] for integer cell (ix, iz).
double lattice(uint64_t seed, long long ix, long long iz) {
    const uint64_t h = hash_mix(seed, static_cast<uint64_t>(ix) * 0x9e3779b97f4a7c15ULL,
                                static_cast<uint64_t>(iz) * 0xc2b2ae3d27d4eb4fULL);
    return (static_cast<double>(h >> 11) * 0x1.0p-53) * 2.0 - 1.0;
}

// Band-limited value noise: smoothstep-interpolated lattices at a few
// octaves. Wavelengths are chosen so the texture has gradient structure at
// the scales a 64-px camera sees from 0.5-8 m; anything finer would alias
// between the two camera heights.
double value_noise(uint64_t seed, double u, double z) {
    // the 5 m octave varies brightness at room scale, so different corridor
    // sections stay distinguishable even when fine texture is sub-resolved
    static const double wavelength[4] = {5.0, 1.4, 0.7, 0.35};
    static const double weight[4] = {0.55, 0.3, 0.25, 0.15};
    double total = 0.0;
    for (int o = 0; o < 4; ++o) {
        const double su = u / wavelength[o];
        const double sz = z / wavelength[o];
        const long long ix = static_cast<long long>(std::floor(su));
        const long long iz = static_cast<long long>(std::floor(sz));
        const double fu = smoothstep(su - static_cast<double>(ix));
        const double fz = smoothstep(sz - static_cast<double>(iz));
        const uint64_t os = hash_mix(seed, 0x51ed2701u + static_cast<uint64_t>(o));
        const double v00 = lattice(os, ix, iz);
        const double v10 = lattice(os, ix + 1, iz);
        const double v01 = lattice(os, ix, iz + 1);
        const double v11 = lattice(os, ix + 1, iz + 1);
        const double v = (v00 * (1 - fu) + v10 * fu) * (1 - fz) + (v01 * (1 - fu) + v11 * fu) * fz;
        total += weight[o] * v;
    }
    return total;
}

double attenuation(double d) { return 1.0 / (1.0 + 0.012 * d * d); }

} // namespace

World::World(WorldConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.floor_plan.size() < 3) throw Error("bad-config", "floor plan needs >= 3 walls");
    std::map<std::pair<long long, long long>, int> endpoint_count;
    for (const Segment& s : cfg_.floor_plan) {
        if (s.length() < 1e-9) throw Error("bad-config", "degenerate wall segment");
        endpoint_count[quantize(s.a)]++;
        endpoint_count[quantize(s.b)]++;
    }
    for (const auto& [pt, count] : endpoint_count) {
        if (count != 2)
            throw Error("open-floor-plan",
                        "wall endpoint shared by " + std::to_string(count) +
                            " segments; the plan must be closed");
    }

    // Deterministic poster placement per wall run, stratified along the
    // wall so every section carries landmarks.
    posters_.resize(cfg_.floor_plan.size());
    for (size_t w = 0; w < cfg_.floor_plan.size(); ++w) {
        const double len = cfg_.floor_plan[w].length();
        const double stride = len / std::max(1, cfg_.poster_density);
        for (int k = 0; k < cfg_.poster_density; ++k) {
            Rng rng(hash_mix(cfg_.texture_seed, 0xdeca1ULL + w * 131ULL + static_cast<uint64_t>(k)));
            Poster p;
            p.width = rng.uniform(0.55, 1.0);
            p.height = rng.uniform(0.55, 0.95);
            if (stride < p.width + 0.2) {
                p.width = stride * 0.6;
                if (p.width < 0.25) continue; // wall too short for this decal
            }
            const double lo = k * stride + 0.1;
            const double hi = std::max(lo + 0.01, (k + 1) * stride - p.width - 0.1);
            p.u0 = rng.uniform(lo, hi);
            p.z0 = rng.uniform(0.85, std::max(0.86, cfg_.wall_height - p.height - 0.4));
            p.style = static_cast<int>(rng.below(3));
            p.border_value = rng.uniform(0.6, 0.97);
            p.tone_a = rng.uniform(0.55, 0.95);
            p.tone_b = rng.uniform(0.05, 0.4);
            p.cells = 2.0 + std::floor(rng.uniform(0.0, 3.0));
            posters_[w].push_back(p);
        }
    }
}

bool World::in_free_space(const Vec2& p) const {
    return point_in_free_space(cfg_.floor_plan, p);
}

std::optional<RayHit> World::cast_ray(const Vec2& origin, double angle) const {
    const Vec2 dir{std::cos(angle), std::sin(angle)};
    std::optional<RayHit> best;
    for (size_t i = 0; i < cfg_.floor_plan.size(); ++i) {
        auto hit = ray_segment(origin, dir, cfg_.floor_plan[i]);
        if (hit && (!best || hit->distance < best->distance)) {
            hit->segment_index = static_cast<int>(i);
            best = hit;
        }
    }
    return best;
}

double World::wall_shade(int wall_index, double u, double z) const {
    // Decals override the noise field; their crisp edges are what gives the
    // corner detector something to lock onto on otherwise bland walls.
    for (const Poster& p : posters_[static_cast<size_t>(wall_index)]) {
        if (u < p.u0 || u > p.u0 + p.width || z < p.z0 || z > p.z0 + p.height) continue;
        const double lu = (u - p.u0) / p.width;
        const double lz = (z - p.z0) / p.height;
        const double border_u = 0.07 / p.width;
        const double border_z = 0.07 / p.height;
        if (lu < border_u || lu > 1.0 - border_u || lz < border_z || lz > 1.0 - border_z)
            return p.border_value;
        switch (p.style) {
            case 0:
                return p.tone_b;
            case 1: // vertical bars
                return (std::fmod(lu * p.cells, 1.0) < 0.5) ? p.tone_a : p.tone_b;
            default: // checker
                return (std::fmod(lu * p.cells, 1.0) < 0.5) == (std::fmod(lz * p.cells, 1.0) < 0.5)
                           ? p.tone_a
                           : p.tone_b;
        }
    }
    const uint64_t wall_seed = hash_mix(cfg_.texture_seed, 0xA11 + static_cast<uint64_t>(wall_index));
    double v = 0.55 + cfg_.texture_amplitude * value_noise(wall_seed, u, z);

    // Speckle layers: one jittered high-contrast square per grid cell at
    // two scales (coarse carries corners at 2.5-6 m, fine at 1-2.5 m).
    // Each speckle stays near its own cell so a single lookup suffices.
    // These isolated features are what the corner detector anchors on at
    // 64-px resolution; the value noise is kept quiet under them.
    if (cfg_.texture_amplitude > 0.0) {
        auto speckle = [&](double cell, double half_base, double half_spread, uint64_t salt,
                           int keep_fraction_255) -> std::optional<double> {
            const long long ci = static_cast<long long>(std::floor(u / cell));
            const long long cj = static_cast<long long>(std::floor(z / cell));
            const uint64_t h =
                hash_mix(wall_seed, salt, static_cast<uint64_t>(ci) * 0x9e3779b97f4a7c15ULL,
                         static_cast<uint64_t>(cj) * 0xc2b2ae3d27d4eb4fULL);
            if ((h & 0xff) >= static_cast<uint64_t>(keep_fraction_255)) return std::nullopt;
            const double r1 = static_cast<double>((h >> 8) & 0x3ff) / 1023.0;
            const double r2 = static_cast<double>((h >> 18) & 0x3ff) / 1023.0;
            const double r3 = static_cast<double>((h >> 28) & 0x3ff) / 1023.0;
            const double r4 = static_cast<double>((h >> 38) & 0x3ff) / 1023.0;
            const double r5 = static_cast<double>((h >> 48) & 0x3ff) / 1023.0;
            const double cu = (ci + 0.3 + 0.4 * r1) * cell;
            const double cz = (cj + 0.3 + 0.4 * r2) * cell;
            // rectangular, with per-speckle gray drawn from a bright or a
            // dark band: uniform speckles would collide in descriptor space
            // and starve the two-NN ratio test
            const double half_u = half_base + half_spread * r3;
            const double half_z = half_base + half_spread * r4;
            if (std::fabs(u - cu) < half_u && std::fabs(z - cz) < half_z)
                return ((h >> 58) & 1) ? 0.66 + 0.29 * r5 : 0.05 + 0.28 * r5;
            return std::nullopt;
        };
        if (auto fine = speckle(0.12, 0.018, 0.016, 0xf11e, 178)) v = *fine;
        if (auto coarse = speckle(0.3, 0.04, 0.055, 0x5bec, 218)) v = *coarse;
    }
    return std::clamp(v, 0.04, 0.98);
}

Image World::render(const CameraConfig& camera, const Pose& pose) const {
    camera.validate();
    if (!in_free_space(pose.position()))
        throw Error("pose-out-of-bounds", "render pose is not in free space");

    const int W = camera.image_width;
    const int H = camera.image_height;
    Image img(W, H);
    const double tan_half = std::tan(camera.hfov / 2.0);
    const double f = (W / 2.0) / tan_half; // focal length in pixels
    const double cy = H / 2.0;
    const double tan_pitch = std::tan(camera.pitch);
    const double h = camera.height;
    const double ceil_h = cfg_.wall_height;

    for (int c = 0; c < W; ++c) {
        const double ndc = (2.0 * (c + 0.5) / W) - 1.0;
        const double alpha = std::atan(ndc * tan_half);
        const auto hit = cast_ray(pose.position(), pose.heading + alpha);
        const double d = hit ? hit->distance * std::cos(alpha) : 1e9; // perpendicular distance
        const double wall_att = attenuation(d);

        for (int r = 0; r < H; ++r) {
            // m is the tangent of the view ray's angle below horizontal.
            const double m = ((r + 0.5) - cy) / f - tan_pitch;
            const double z = h - d * m;
            double v;
            if (hit && z >= 0.0 && z <= ceil_h) {
                v = wall_shade(hit->segment_index, hit->along, z) * wall_att;
            } else if (m > 0.0 && (!hit || z < 0.0)) {
                const double d_floor = h / m;
                v = 0.45 * attenuation(d_floor) + 0.02;
            } else if (m < 0.0 && (!hit || z > ceil_h)) {
                const double d_ceil = (ceil_h - h) / (-m);
                v = 0.78 * attenuation(d_ceil) + 0.03;
            } else {
                v = 0.0; // horizon row with no wall in range
            }
            img.at(c, r) = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }
    return img;
}

RangeScan World::range_scan(const Pose& pose, int beams, double span, double max_range) const {
    if (beams < 2) throw Error("bad-config", "range scan needs >= 2 beams");
    if (!in_free_space(pose.position()))
        throw Error("pose-out-of-bounds", "scan pose is not in free space");
    RangeScan scan;
    scan.max_range = max_range;
    scan.ranges.resize(static_cast<size_t>(beams));
    for (int k = 0; k < beams; ++k) {
        const double angle = pose.heading - span / 2.0 + span * k / (beams - 1);
        const auto hit = cast_ray(pose.position(), angle);
        double range = hit ? hit->distance : max_range;
        scan.ranges[static_cast<size_t>(k)] = std::min(range, max_range);
    }
    return scan;
}

MoveOutcome World::move(const Pose& pose, const Action& action, const DynamicsConfig& dyn) const {
    const Action a = action.clamped();
    MoveOutcome out;
    out.next_pose = pose;
    out.next_pose.heading = normalize_angle(pose.heading + dyn.k_s * a.steer_delta * dyn.dt);

    const double dist = dyn.k_v * a.throttle * dyn.dt;
    if (dist <= 0.0) {
        out.collided = false;
        return out;
    }
    const Vec2 dir{std::cos(out.next_pose.heading), std::sin(out.next_pose.heading)};
    const Vec2 p0 = pose.position();
    const double r = dyn.vehicle_radius;

    // Contact predicate for the prefix [0, t]: the footprint touched a wall or
    // the center path crossed one. Monotone in t, so bisection finds the
    // earliest contact.
    auto contact_by = [&](double t) {
        const Vec2 p = p0 + dir * (dist * t);
        for (const Segment& w : cfg_.floor_plan) {
            if (point_segment_distance(p, w) <= r) return true;
            if (t > 0.0 && segments_intersect(p0, p, w)) return true;
        }
        return false;
    };

    if (contact_by(0.0)) { // already in contact before moving
        out.next_pose.x = p0.x;
        out.next_pose.y = p0.y;
        out.collided = true;
        return out;
    }
    if (!contact_by(1.0)) {
        // Coarse sweep so a mid-path graze is not missed between endpoints.
        const int substeps = std::max(2, static_cast<int>(std::ceil(dist / (r * 0.5))));
        bool grazed = false;
        for (int i = 1; i < substeps && !grazed; ++i)
            grazed = contact_by(static_cast<double>(i) / substeps);
        if (!grazed) {
            const Vec2 p1 = p0 + dir * dist;
            out.next_pose.x = p1.x;
            out.next_pose.y = p1.y;
            out.collided = false;
            return out;
        }
    }

    double lo = 0.0, hi = 1.0;
    // shrink hi to the first contacting sample for a tight bracket
    const int substeps = std::max(2, static_cast<int>(std::ceil(dist / (r * 0.5))));
    for (int i = 1; i <= substeps; ++i) {
        const double t = static_cast<double>(i) / substeps;
        if (contact_by(t)) {
            hi = t;
            lo = static_cast<double>(i - 1) / substeps;
            break;
        }
    }
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (contact_by(mid))
            hi = mid;
        else
            lo = mid;
    }
    const Vec2 pc = p0 + dir * (dist * lo); // last known contact-free point
    out.next_pose.x = pc.x;
    out.next_pose.y = pc.y;
    out.collided = true;
    return out;
}

StepOutcome World::step(const Pose& pose, const Action& action, const DynamicsConfig& dyn,
                        const CameraConfig& camera, const ScanConfig& scan) const {
    const MoveOutcome mv = move(pose, action, dyn);
    StepOutcome out;
    out.next_pose = mv.next_pose;
    out.collided = mv.collided;
    out.observation = render(camera, mv.next_pose);
    out.range_scan = range_scan(mv.next_pose, scan);
    return out;
}

WorldConfig straight_corridor_plan(double length, double width) {
    WorldConfig cfg;
    cfg.corridor_width = width;
    cfg.floor_plan = {
        {{0.0, 0.0}, {length, 0.0}},
        {{length, 0.0}, {length, width}},
        {{length, width}, {0.0, width}},
        {{0.0, width}, {0.0, 0.0}},
    };
    return cfg;
}

WorldConfig ring_corridor_plan(double outer_w, double outer_h, double corridor_width) {
    WorldConfig cfg;
    cfg.corridor_width = corridor_width;
    const double ix0 = corridor_width, iy0 = corridor_width;
    const double ix1 = outer_w - corridor_width, iy1 = outer_h - corridor_width;
    if (ix1 - ix0 < 0.5 || iy1 - iy0 < 0.5)
        throw Error("bad-config", "ring corridor inner box too small");
    cfg.floor_plan = {
        {{0.0, 0.0}, {outer_w, 0.0}},
        {{outer_w, 0.0}, {outer_w, outer_h}},
        {{outer_w, outer_h}, {0.0, outer_h}},
        {{0.0, outer_h}, {0.0, 0.0}},
        {{ix0, iy0}, {ix1, iy0}},
        {{ix1, iy0}, {ix1, iy1}},
        {{ix1, iy1}, {ix0, iy1}},
        {{ix0, iy1}, {ix0, iy0}},
    };
    return cfg;
}

} // namespace matchnav::world
