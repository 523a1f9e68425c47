#include "turngrab/effect.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace turngrab {
namespace {

constexpr double kEps = 1e-9;

// Next whitespace-delimited PPM header token, skipping '#' comments.
std::string ppm_token(std::istream& in) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    return tok;
}

}  // namespace

nlohmann::ordered_json LeanTrajectory::to_json() const {
    nlohmann::ordered_json j;
    j["frame_rate"] = frame_rate;
    j["samples"] = nlohmann::ordered_json::array();
    for (const auto& s : samples) j["samples"].push_back({{"scale", s.scale}, {"shift_x", s.shift_x}, {"shift_y", s.shift_y}});
    return j;
}

LeanTrajectory LeanTrajectory::from_json(const nlohmann::json& j) {
    try {
        LeanTrajectory t;
        t.frame_rate = j.at("frame_rate").get<double>();
        if (!(t.frame_rate > 0.0)) throw Error(ErrorCode::FormatError, "trajectory frame_rate must be positive");
        for (const auto& s : j.at("samples")) {
            LeanSample ls{s.at("scale").get<double>(), s.at("shift_x").get<double>(), s.at("shift_y").get<double>()};
            if (!(ls.scale > 0.0)) throw Error(ErrorCode::FormatError, "trajectory scale must be positive");
            t.samples.push_back(ls);
        }
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("trajectory: ") + e.what());
    }
}

std::vector<LeanSample> event_lean_curve(const std::vector<FaceTrack>& tracks, const TurnEvent& event,
                                         const TrajectoryOptions& opts) {
    for (const auto& track : tracks) {
        if (track.video_id != event.video_id || track.face_id != event.new_speaker || track.frames.empty()) continue;
        const double begin = event.onset - opts.lead;
        const auto& fr = track.frames;
        auto it = std::lower_bound(fr.begin(), fr.end(), begin - kEps,
                                   [](const FeatureFrame& f, double t) { return f.time < t; });
        if (it == fr.end() || it->time - begin > track.period() + kEps) continue;
        const std::size_t r = static_cast<std::size_t>(it - fr.begin());
        const std::size_t n = static_cast<std::size_t>(std::lround(opts.lead * track.frame_rate)) + 1;
        if (r + n > fr.size()) continue;
        bool holes = false;
        for (std::size_t k = r + 1; k < r + n; ++k) holes |= fr[k].time - fr[k - 1].time > 1.5 * track.period();
        if (holes) continue;

        const auto& ref = fr[r].bbox;
        std::vector<LeanSample> curve(n);
        for (std::size_t k = 0; k < n; ++k) {
            const auto& box = fr[r + k].bbox;
            curve[k].scale = std::sqrt(box.area() / ref.area());
            curve[k].shift_x = (box.center_x() - ref.center_x()) / opts.frame_width;
            curve[k].shift_y = (box.center_y() - ref.center_y()) / opts.frame_height;
        }
        return curve;
    }
    return {};
}

LeanTrajectory trajectory_from_tracks(const std::vector<FaceTrack>& tracks, const std::vector<TurnEvent>& events,
                                      const TrajectoryOptions& opts) {
    if (!(opts.lead > 0.0 && opts.frame_width > 0.0 && opts.frame_height > 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "lead and frame size must be positive");
    }
    std::vector<LeanSample> sum;
    std::size_t used = 0;
    double rate = 0.0;
    for (const auto& ev : events) {
        auto curve = event_lean_curve(tracks, ev, opts);
        if (curve.empty()) continue;
        if (sum.empty()) {
            sum.assign(curve.size(), LeanSample{0.0, 0.0, 0.0});
            for (const auto& t : tracks) {
                if (t.video_id == ev.video_id && t.face_id == ev.new_speaker) {
                    rate = t.frame_rate;
                    break;
                }
            }
        }
        if (curve.size() != sum.size()) continue;  // different frame rate
        for (std::size_t k = 0; k < curve.size(); ++k) {
            sum[k].scale += curve[k].scale;
            sum[k].shift_x += curve[k].shift_x;
            sum[k].shift_y += curve[k].shift_y;
        }
        ++used;
    }
    if (used == 0) throw Error(ErrorCode::NoUsableEvents, "no event has full coverage of the lead window");

    LeanTrajectory traj;
    traj.frame_rate = rate;
    std::vector<LeanSample> lean(sum.size());
    for (std::size_t k = 0; k < sum.size(); ++k) {
        lean[k].scale = std::clamp(sum[k].scale / static_cast<double>(used), 1.0, kMaxLeanScale);
        lean[k].shift_x = sum[k].shift_x / static_cast<double>(used);
        lean[k].shift_y = sum[k].shift_y / static_cast<double>(used);
    }
    lean.front() = LeanSample{};
    traj.samples = lean;
    for (std::size_t k = lean.size() - 1; k-- > 0;) traj.samples.push_back(lean[k]);
    return traj;
}

AffineMatrix AffineMatrix::inverse() const {
    const double det = m[0] * m[4] - m[1] * m[3];
    if (det == 0.0) throw Error(ErrorCode::InvalidConfig, "singular affine matrix");
    const double a = m[4] / det, b = -m[1] / det, d = -m[3] / det, e = m[0] / det;
    AffineMatrix inv;
    inv.m = {a, b, -(a * m[2] + b * m[5]), d, e, -(d * m[2] + e * m[5])};
    return inv;
}

bool AffineMatrix::is_identity() const {
    return m[0] == 1.0 && m[1] == 0.0 && m[2] == 0.0 && m[3] == 0.0 && m[4] == 1.0 && m[5] == 0.0;
}

AffineMatrix make_affine(double scale, double shift_x, double shift_y, std::array<double, 2> center, double width,
                         double height) {
    if (!(scale > 0.0)) throw Error(ErrorCode::InvalidConfig, "scale must be positive");
    const double a = 1.0 / scale;
    AffineMatrix out;
    out.m = {a, 0.0, center[0] - a * center[0] - shift_x * width, 0.0, a, center[1] - a * center[1] - shift_y * height};
    return out;
}

void ImageBuffer::validate() const {
    if (width <= 0 || height <= 0 ||
        data.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3) {
        throw Error(ErrorCode::InvalidBuffer, "image buffer size does not match width * height * 3");
    }
}

ImageBuffer read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    if (ppm_token(in) != "P6") throw Error(ErrorCode::FormatError, path.string() + ": not a binary PPM (P6)");
    ImageBuffer img;
    try {
        img.width = std::stoi(ppm_token(in));
        img.height = std::stoi(ppm_token(in));
        if (std::stoi(ppm_token(in)) != 255) throw Error(ErrorCode::FormatError, path.string() + ": maxval must be 255");
    } catch (const std::logic_error&) {
        throw Error(ErrorCode::FormatError, path.string() + ": malformed PPM header");
    }
    if (img.width <= 0 || img.height <= 0) throw Error(ErrorCode::FormatError, path.string() + ": bad dimensions");
    img.data.resize(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height) * 3);
    in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
    if (!in) throw Error(ErrorCode::FormatError, path.string() + ": truncated pixel data");
    return img;
}

void write_ppm(const ImageBuffer& image, const std::filesystem::path& path) {
    image.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.data.data()), static_cast<std::streamsize>(image.data.size()));
}

ImageBuffer warp(const ImageBuffer& image, const AffineMatrix& matrix) {
    image.validate();
    ImageBuffer out{image.width, image.height, std::vector<std::uint8_t>(image.data.size())};
    const double max_x = image.width - 1;
    const double max_y = image.height - 1;
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            auto [sx, sy] = matrix.apply(x, y);
            sx = std::clamp(sx, 0.0, max_x);
            sy = std::clamp(sy, 0.0, max_y);
            const int x0 = static_cast<int>(std::floor(sx));
            const int y0 = static_cast<int>(std::floor(sy));
            const int x1 = std::min(x0 + 1, image.width - 1);
            const int y1 = std::min(y0 + 1, image.height - 1);
            const double fx = sx - x0;
            const double fy = sy - y0;
            for (int c = 0; c < 3; ++c) {
                const double top = (1.0 - fx) * image.at(x0, y0, c) + fx * image.at(x1, y0, c);
                const double bottom = (1.0 - fx) * image.at(x0, y1, c) + fx * image.at(x1, y1, c);
                const double v = (1.0 - fy) * top + fy * bottom;
                out.data[(static_cast<std::size_t>(y) * static_cast<std::size_t>(image.width) + static_cast<std::size_t>(x)) * 3 +
                         static_cast<std::size_t>(c)] = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
            }
        }
    }
    return out;
}

EffectResult apply_effect(const std::vector<ImageBuffer>& frames, const std::vector<double>& frame_times,
                          const LeanTrajectory& trajectory, std::vector<double> trigger_times,
                          const std::vector<std::array<double, 2>>& face_centers) {
    if (frames.size() != frame_times.size()) throw Error(ErrorCode::LengthMismatch, "frames and frame_times differ");
    if (!face_centers.empty() && face_centers.size() != frames.size()) {
        throw Error(ErrorCode::LengthMismatch, "face_centers must be empty or one per frame");
    }
    for (std::size_t i = 1; i < frame_times.size(); ++i) {
        if (!(frame_times[i] > frame_times[i - 1])) throw Error(ErrorCode::NonMonotonicTime, "frame times must increase");
    }

    EffectResult result;
    const double duration = trajectory.duration();
    std::sort(trigger_times.begin(), trigger_times.end());
    double active_end = -std::numeric_limits<double>::infinity();
    for (double t : trigger_times) {
        if (trajectory.samples.empty() || t < active_end) continue;
        result.accepted_triggers.push_back(t);
        active_end = t + duration;
    }

    result.frames.reserve(frames.size());
    std::size_t next = 0;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const double t = frame_times[i];
        while (next + 1 < result.accepted_triggers.size() && result.accepted_triggers[next + 1] <= t) ++next;
        const LeanSample* sample = nullptr;
        if (next < result.accepted_triggers.size()) {
            const double t0 = result.accepted_triggers[next];
            if (t >= t0 && t < t0 + duration) {
                const auto k = static_cast<std::size_t>(std::floor((t - t0) * trajectory.frame_rate + kEps));
                sample = &trajectory.samples[std::min(k, trajectory.samples.size() - 1)];
            }
        }
        if (sample == nullptr || (sample->scale == 1.0 && sample->shift_x == 0.0 && sample->shift_y == 0.0)) {
            result.frames.push_back(frames[i]);
            continue;
        }
        const auto& img = frames[i];
        img.validate();
        const std::array<double, 2> center =
            face_centers.empty() ? std::array<double, 2>{0.5 * (img.width - 1), 0.5 * (img.height - 1)} : face_centers[i];
        result.frames.push_back(
            warp(img, make_affine(sample->scale, sample->shift_x, sample->shift_y, center, img.width, img.height)));
    }
    return result;
}

}  // namespace turngrab
