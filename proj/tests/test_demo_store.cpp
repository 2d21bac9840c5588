#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "fixtures.hpp"
#include "matchnav/common.hpp"
#include "matchnav/demo_store.hpp"

using namespace matchnav;
namespace fs = std::filesystem;

namespace {

// Independent linear argmax over match densities.
demo::RetrievalResult oracle_initial(const demo::Demonstration& d, const vision::KeypointSet& obs) {
    demo::RetrievalResult best;
    for (int i = 0; i < d.size(); ++i) {
        const auto m = vision::match(obs, d.features[static_cast<size_t>(i)],
                                     d.vision_params.ratio_threshold);
        const double density = static_cast<double>(m.size()) /
                               static_cast<double>(d.features[static_cast<size_t>(i)].size());
        if (best.index < 0 || density > best.density) {
            best.index = i;
            best.density = density;
            best.match_count = static_cast<int>(m.size());
        }
    }
    return best;
}

fs::path temp_dir(const char* name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("in-memory demonstrations validate their frames") {
    const demo::Demonstration& d = fixtures::demonstration();
    CHECK(d.size() == static_cast<int>(fixtures::demo_recording().frames.size()));
    for (const auto& f : d.features) CHECK(f.size() >= 1);

    std::vector<Image> single = {fixtures::demo_recording().frames.front()};
    CHECK_THROWS_WITH_AS(demo::from_frames(single, fixtures::config().vision, {}),
                         doctest::Contains("demo-too-short"), Error);

    std::vector<Image> with_blank = {fixtures::demo_recording().frames.front(), Image(64, 64, 0.5f)};
    CHECK_THROWS_WITH_AS(demo::from_frames(with_blank, fixtures::config().vision, {}),
                         doctest::Contains("degenerate-demo-frame"), Error);
}

TEST_CASE("manifest ingest, sidecar reuse and byte equality") {
    const fs::path dir = temp_dir("matchnav_demo_test");
    const std::string manifest = demo::write_demo_dir(fixtures::demo_recording(), dir.string());

    const demo::Demonstration fresh = demo::ingest(manifest, fixtures::config().vision);
    CHECK(fresh.size() >= 2);

    // sidecars appeared next to the frames
    size_t sidecars = 0;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".kps") ++sidecars;
    CHECK(sidecars == static_cast<size_t>(fresh.size()));

    // capture sidecar bytes, re-ingest, verify the buffer and bytes agree
    std::vector<std::string> before;
    for (int i = 0; i < fresh.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%05d.pgm.kps", i);
        before.push_back(read_file(dir / name));
    }
    const demo::Demonstration reloaded = demo::ingest(manifest, fixtures::config().vision);
    REQUIRE(reloaded.size() == fresh.size());
    for (int i = 0; i < fresh.size(); ++i) {
        const auto& a = fresh.features[static_cast<size_t>(i)];
        const auto& b = reloaded.features[static_cast<size_t>(i)];
        REQUIRE(a.size() == b.size());
        for (size_t k = 0; k < a.size(); ++k) {
            CHECK(a.keypoints[k].x == b.keypoints[k].x);
            CHECK(a.descriptors[k] == b.descriptors[k]);
        }
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%05d.pgm.kps", i);
        CHECK(read_file(dir / name) == before[static_cast<size_t>(i)]);
    }

    // single-frame manifest is rejected
    const fs::path short_manifest = dir / "short.txt";
    std::ofstream(short_manifest) << "frame_00000.pgm\n";
    CHECK_THROWS_WITH_AS(demo::ingest(short_manifest.string(), fixtures::config().vision),
                         doctest::Contains("demo-too-short"), Error);

    // unreadable frame names the frame
    const fs::path broken_manifest = dir / "broken.txt";
    std::ofstream(broken_manifest) << "frame_00000.pgm\nmissing_frame.pgm\n";
    CHECK_THROWS_WITH_AS(demo::ingest(broken_manifest.string(), fixtures::config().vision),
                         doctest::Contains("missing_frame.pgm"), Error);
}

TEST_CASE("initial retrieval equals the exhaustive oracle") {
    const demo::Demonstration& d = fixtures::demonstration();
    // self-retrieval on a few frames
    for (int k : {0, d.size() / 2, d.size() - 1}) {
        const demo::RetrievalResult r = demo::retrieve_initial(d, d.frames[static_cast<size_t>(k)]);
        CHECK(r.index == k);
        CHECK(r.density == doctest::Approx(1.0));
    }
    // oracle equality on offset renders
    for (const Pose& pose : fixtures::sample_corridor_poses(6, 88)) {
        const Image obs = fixtures::world().render(fixtures::robot_camera(), pose);
        const auto obs_kp = vision::detect_keypoints(obs, d.vision_params);
        if (obs_kp.empty()) continue;
        const demo::RetrievalResult fast = demo::retrieve_initial(d, obs_kp);
        const demo::RetrievalResult slow = oracle_initial(d, obs_kp);
        CHECK(fast.index == slow.index);
        CHECK(fast.density == doctest::Approx(slow.density));
        CHECK(fast.match_count == slow.match_count);
    }
}

TEST_CASE("observations slightly ahead retrieve a neighboring frame") {
    // Mid-corridor, where views are distinctive. Near the corridor start the
    // 64-px views are too self-similar for global retrieval to resolve
    // single frames; the windowed tracker is what disambiguates there.
    const demo::Demonstration& d = fixtures::demonstration();
    const auto& traj = fixtures::demo_recording().trajectory;
    const double period = fixtures::demo_recording().frame_period;
    const double dt = fixtures::dynamics().dt;
    const int k = d.size() / 2;
    // pose 0.2 m ahead of frame k's pose, same camera as the demo
    const size_t traj_idx = static_cast<size_t>(std::min<double>(
        static_cast<double>(traj.size() - 1), k * period / dt));
    Pose ahead = traj.points[traj_idx].pose;
    ahead.x += 0.2;
    const Image obs = fixtures::world().render(fixtures::demo_camera(), ahead);
    const demo::RetrievalResult r = demo::retrieve_initial(d, obs);
    CHECK(r.index >= k - 1);
    CHECK(r.index <= k + 1);
}

TEST_CASE("unrelated scenes score below the match threshold") {
    // A room from a different texture family: blank walls with a few
    // decals, square footprint, oblique view.
    const demo::Demonstration& d = fixtures::demonstration();
    world::WorldConfig other_cfg = world::straight_corridor_plan(8.0, 8.0);
    other_cfg.texture_seed = 999;
    other_cfg.poster_density = 6;
    other_cfg.texture_amplitude = 0.0;
    const world::World other(other_cfg);
    const Image obs = other.render(fixtures::robot_camera(), {4.0, 3.0, 2.2});
    const auto kp = vision::detect_keypoints(obs, d.vision_params);
    if (kp.empty()) return; // blank-wall view with no decals in sight
    const demo::RetrievalResult r = demo::retrieve_initial(d, kp);
    CHECK(r.match_count < fixtures::config().reward.min_matches);
}

TEST_CASE("windowed retrieval is confined, monotone and clamped") {
    const demo::Demonstration& d = fixtures::demonstration();
    const int n = d.size();

    // exact hit inside the window
    const int prev = std::max(0, n / 2 - 1);
    const demo::RetrievalResult hit =
        demo::retrieve_windowed(d, d.frames[static_cast<size_t>(prev + 2)], prev);
    CHECK(hit.index == prev + 2);
    CHECK(hit.density == doctest::Approx(1.0));

    // window clamps at the demo end
    const demo::RetrievalResult end =
        demo::retrieve_windowed(d, d.frames[static_cast<size_t>(n - 1)], n - 1);
    CHECK(end.index == n - 1);

    // candidates stay within {prev..prev+3} and never regress
    for (const Pose& pose : fixtures::sample_corridor_poses(8, 31)) {
        const Image obs = fixtures::world().render(fixtures::robot_camera(), pose);
        for (int p : {0, n / 3, 2 * n / 3, n - 2}) {
            const auto detail = demo::retrieve_windowed_detailed(
                d, vision::detect_keypoints(obs, d.vision_params), p);
            CHECK(detail.best.index >= p);
            CHECK(detail.best.index <= std::min(n - 1, p + 3));
            CHECK(detail.candidates.size() <= 4);
            for (const auto& c : detail.candidates) {
                CHECK(c.index >= p);
                CHECK(c.index <= std::min(n - 1, p + 3));
            }
        }
    }

    // wrap mode covers the start of the demo again
    const auto wrapped = demo::retrieve_windowed_detailed(
        d, vision::detect_keypoints(d.frames[0], d.vision_params), n - 1, true);
    bool saw_zero = false;
    for (const auto& c : wrapped.candidates) saw_zero |= c.index == 0;
    CHECK(saw_zero);
    CHECK(wrapped.best.index == 0);
}

TEST_CASE("tracking the demo's own frames never regresses the index") {
    const demo::Demonstration& d = fixtures::demonstration();
    int prev = 0;
    for (int k = 0; k < d.size(); ++k) {
        const demo::RetrievalResult r =
            demo::retrieve_windowed(d, d.frames[static_cast<size_t>(k)], prev);
        CHECK(r.index >= prev);
        prev = r.index;
    }
    CHECK(prev == d.size() - 1);
}

TEST_CASE("retrieval is idempotent") {
    const demo::Demonstration& d = fixtures::demonstration();
    const Image obs = fixtures::world().render(
        fixtures::robot_camera(), fixtures::sample_corridor_poses(1, 5150).front());
    const auto kp = vision::detect_keypoints(obs, d.vision_params);
    const demo::RetrievalResult a = demo::retrieve_windowed(d, kp, 3);
    const demo::RetrievalResult b = demo::retrieve_windowed(d, kp, 3);
    CHECK(a.index == b.index);
    CHECK(a.density == b.density);
    CHECK(a.match_count == b.match_count);
}
