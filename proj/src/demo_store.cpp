#include "matchnav/demo_store.hpp"

#include <filesystem>
#include <fstream>

#include "matchnav/common.hpp"

namespace fs = std::filesystem;

namespace matchnav::demo {

namespace {

constexpr uint32_t kSidecarMagic = 0x4d4e4b50; // "MNKP"
constexpr uint32_t kSidecarVersion = 1;

struct SidecarHeader {
    uint32_t magic = kSidecarMagic;
    uint32_t version = kSidecarVersion;
    uint32_t width = 0;
    uint32_t height = 0;
    uint64_t params_hash = 0;
    uint64_t pixels_hash = 0;
};

bool try_load_sidecar(const std::string& path, const SidecarHeader& expect,
                      vision::KeypointSet& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    SidecarHeader h;
    in.read(reinterpret_cast<char*>(&h), sizeof(h));
    if (!in) return false;
    if (h.magic != expect.magic || h.version != expect.version || h.width != expect.width ||
        h.height != expect.height || h.params_hash != expect.params_hash ||
        h.pixels_hash != expect.pixels_hash)
        return false;
    try {
        out = vision::read_keypoint_set(in);
    } catch (const Error&) {
        return false;
    }
    return true;
}

void write_sidecar(const std::string& path, const SidecarHeader& header,
                   const vision::KeypointSet& set) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io-error", "cannot write sidecar " + path);
    out.write(reinterpret_cast<const char*>(&header), sizeof(header));
    vision::write_keypoint_set(out, set);
    if (!out) throw Error("io-error", "short write to sidecar " + path);
}

void check_frame_features(const vision::KeypointSet& set, size_t index, const std::string& name) {
    if (set.empty())
        throw Error("degenerate-demo-frame",
                    "demo frame " + std::to_string(index) + " (" + name +
                        ") has no detectable keypoints; the reward is undefined on it");
}

RetrievalResult best_of(const Demonstration& demo, const vision::KeypointSet& obs,
                        const std::vector<int>& indices) {
    RetrievalResult best;
    for (int idx : indices) {
        const vision::MatchList m =
            vision::match(obs, demo.features[static_cast<size_t>(idx)],
                          demo.vision_params.ratio_threshold);
        const double density =
            static_cast<double>(m.size()) / static_cast<double>(demo.features[static_cast<size_t>(idx)].size());
        if (best.index < 0 || density > best.density) {
            best.index = idx;
            best.density = density;
            best.match_count = static_cast<int>(m.size());
        }
    }
    return best;
}

} // namespace

Demonstration from_frames(std::vector<Image> frames, const vision::VisionParams& params,
                          const world::CameraConfig& source_camera) {
    if (frames.size() < 2)
        throw Error("demo-too-short", "a demonstration needs at least two frames");
    Demonstration demo;
    demo.frames = std::move(frames);
    demo.source_camera = source_camera;
    demo.vision_params = params;
    vision::VisionParams frame_params = params;
    frame_params.max_keypoints = params.demo_max_keypoints;
    demo.features.reserve(demo.frames.size());
    for (size_t i = 0; i < demo.frames.size(); ++i) {
        demo.features.push_back(vision::detect_keypoints(demo.frames[i], frame_params));
        check_frame_features(demo.features.back(), i, "in-memory");
    }
    return demo;
}

Demonstration ingest(const std::string& manifest_path, const vision::VisionParams& params,
                     const world::CameraConfig& source_camera) {
    std::ifstream manifest(manifest_path);
    if (!manifest) throw Error("io-error", "cannot open manifest " + manifest_path);
    const fs::path base = fs::path(manifest_path).parent_path();

    std::vector<std::string> frame_paths;
    std::string line;
    while (std::getline(manifest, line)) {
        if (line.empty()) continue;
        fs::path p(line);
        if (p.is_relative()) p = base / p;
        frame_paths.push_back(p.string());
    }
    if (frame_paths.size() < 2)
        throw Error("demo-too-short", "manifest " + manifest_path + " lists fewer than two frames");

    Demonstration demo;
    demo.source_camera = source_camera;
    demo.vision_params = params;
    for (size_t i = 0; i < frame_paths.size(); ++i) {
        Image frame;
        try {
            frame = read_pgm(frame_paths[i]);
        } catch (const Error& e) {
            throw Error("io-error", "frame " + std::to_string(i) + " (" + frame_paths[i] +
                                        ") unreadable: " + e.what());
        }
        SidecarHeader header;
        header.width = static_cast<uint32_t>(frame.width);
        header.height = static_cast<uint32_t>(frame.height);
        header.params_hash = params.detection_hash();
        header.pixels_hash = frame.content_hash();

        const std::string sidecar = frame_paths[i] + ".kps";
        vision::VisionParams frame_params = params;
        frame_params.max_keypoints = params.demo_max_keypoints;
        vision::KeypointSet set;
        if (!try_load_sidecar(sidecar, header, set)) {
            set = vision::detect_keypoints(frame, frame_params);
            write_sidecar(sidecar, header, set);
        }
        check_frame_features(set, i, frame_paths[i]);
        demo.frames.push_back(std::move(frame));
        demo.features.push_back(std::move(set));
    }
    return demo;
}

std::string write_demo_dir(const expert::DemoRecording& rec, const std::string& dir) {
    fs::create_directories(dir);
    const fs::path base(dir);
    std::ofstream manifest(base / "manifest.txt");
    if (!manifest) throw Error("io-error", "cannot write manifest in " + dir);
    for (size_t i = 0; i < rec.frames.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%05zu.pgm", i);
        write_pgm(rec.frames[i], (base / name).string());
        manifest << name << "\n";
    }
    write_trajectory_csv(rec.trajectory, (base / "trajectory.csv").string());
    return (base / "manifest.txt").string();
}

RetrievalResult retrieve_initial(const Demonstration& demo, const vision::KeypointSet& obs) {
    if (obs.empty()) throw Error("no-keypoints", "observation has no keypoints");
    std::vector<int> all(static_cast<size_t>(demo.size()));
    for (int i = 0; i < demo.size(); ++i) all[static_cast<size_t>(i)] = i;
    return best_of(demo, obs, all);
}

WindowDetail retrieve_initial_detailed(const Demonstration& demo, const vision::KeypointSet& obs) {
    if (obs.empty()) throw Error("no-keypoints", "observation has no keypoints");
    WindowDetail detail;
    for (int idx = 0; idx < demo.size(); ++idx) {
        const vision::MatchList m = vision::match(obs, demo.features[static_cast<size_t>(idx)],
                                                  demo.vision_params.ratio_threshold);
        const double density = static_cast<double>(m.size()) /
                               static_cast<double>(demo.features[static_cast<size_t>(idx)].size());
        detail.candidates.push_back({idx, density, static_cast<int>(m.size())});
        if (detail.best.index < 0 || density > detail.best.density) {
            detail.best.index = idx;
            detail.best.density = density;
            detail.best.match_count = static_cast<int>(m.size());
        }
    }
    return detail;
}

RetrievalResult retrieve_initial(const Demonstration& demo, const Image& obs) {
    return retrieve_initial(demo, vision::detect_keypoints(obs, demo.vision_params));
}

WindowDetail retrieve_windowed_detailed(const Demonstration& demo, const vision::KeypointSet& obs,
                                        int prev_index, bool wrap) {
    if (obs.empty()) throw Error("no-keypoints", "observation has no keypoints");
    const int n = demo.size();
    if (prev_index < 0 || prev_index >= n)
        throw Error("bad-index", "prev_index " + std::to_string(prev_index) + " outside demo");

    std::vector<int> indices;
    for (int off = 0; off <= 3; ++off) {
        int idx = prev_index + off;
        if (wrap)
            idx %= n;
        else if (idx > n - 1)
            break;
        indices.push_back(idx);
    }

    WindowDetail detail;
    for (int idx : indices) {
        const vision::MatchList m =
            vision::match(obs, demo.features[static_cast<size_t>(idx)],
                          demo.vision_params.ratio_threshold);
        const double density =
            static_cast<double>(m.size()) / static_cast<double>(demo.features[static_cast<size_t>(idx)].size());
        detail.candidates.push_back({idx, density, static_cast<int>(m.size())});
        // ties keep the earliest candidate in window order
        if (detail.best.index < 0 || density > detail.best.density) {
            detail.best.index = idx;
            detail.best.density = density;
            detail.best.match_count = static_cast<int>(m.size());
        }
    }
    return detail;
}

RetrievalResult retrieve_windowed(const Demonstration& demo, const vision::KeypointSet& obs,
                                  int prev_index, bool wrap) {
    return retrieve_windowed_detailed(demo, obs, prev_index, wrap).best;
}

RetrievalResult retrieve_windowed(const Demonstration& demo, const Image& obs, int prev_index,
                                  bool wrap) {
    return retrieve_windowed(demo, vision::detect_keypoints(obs, demo.vision_params), prev_index,
                             wrap);
}

} // namespace matchnav::demo
