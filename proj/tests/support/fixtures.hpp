#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "turngrab/common.hpp"
#include "turngrab/dataio.hpp"
#include "turngrab/segmentation.hpp"

namespace fixtures {

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "turngrab_tests" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Track with frames on [start, end) at `rate`; asd_score is +1 inside any of
/// `speech` and -1 elsewhere. Channel c of frame j holds c + 0.001 * j.
inline turngrab::FaceTrack make_track(const std::string& video, const std::string& face, double start, double end,
                                      const std::vector<turngrab::Segment>& speech, double rate = 25.0) {
    turngrab::FaceTrack t;
    t.video_id = video;
    t.face_id = face;
    t.frame_rate = rate;
    const auto first = static_cast<long>(std::llround(start * rate));
    const auto last = static_cast<long>(std::llround(end * rate));
    for (long j = first; j < last; ++j) {
        turngrab::FeatureFrame f;
        f.time = static_cast<double>(j) / rate;
        f.face_id = face;
        f.bbox = {10.0, 10.0, 20.0, 20.0};
        for (int c = 0; c < turngrab::kNumChannels; ++c) {
            f.channel(c) = std::min(5.0, c * 0.1 + 0.001 * static_cast<double>(j - first));
        }
        bool speaking = false;
        for (const auto& s : speech) speaking = speaking || (f.time >= s.start - 1e-9 && f.time < s.end - 1e-9);
        f.asd_score = speaking ? 1.0 : -1.0;
        t.frames.push_back(f);
    }
    return t;
}

/// Same as make_track and then smoothed, so speaking_segments are filled.
inline turngrab::FaceTrack speaking_track(const std::string& video, const std::string& face, double start, double end,
                                          const std::vector<turngrab::Segment>& speech, double rate = 25.0) {
    return turngrab::smooth_asd(make_track(video, face, start, end, speech, rate), turngrab::SamplerConfig{});
}

}  // namespace fixtures
