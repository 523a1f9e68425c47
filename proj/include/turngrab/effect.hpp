#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "turngrab/segmentation.hpp"

namespace turngrab {

struct LeanSample {
    double scale = 1.0;
    double shift_x = 0.0;  // fraction of frame width
    double shift_y = 0.0;  // fraction of frame height
};

/// Per-frame zoom/shift curve. Always starts and ends at the identity sample.
struct LeanTrajectory {
    double frame_rate = 25.0;
    std::vector<LeanSample> samples;

    double duration() const { return static_cast<double>(samples.size()) / frame_rate; }

    nlohmann::ordered_json to_json() const;
    static LeanTrajectory from_json(const nlohmann::json& j);
};

inline constexpr double kMaxLeanScale = 1.5;

struct TrajectoryOptions {
    double lead = 2.0;  // seconds analysed before each onset
    double frame_width = 1.0;
    double frame_height = 1.0;
};

/// Averages, over events, how the new speaker's face box grows (sqrt of area
/// ratio) and moves during the `lead` seconds before onset. The averaged
/// lean-in is followed by its mirror image so playback returns to identity.
LeanTrajectory trajectory_from_tracks(const std::vector<FaceTrack>& tracks, const std::vector<TurnEvent>& events,
                                      const TrajectoryOptions& opts = {});

/// Lean-in half of a trajectory for a single event, before averaging and
/// clamping. Empty when the track does not cover [onset - lead, onset].
std::vector<LeanSample> event_lean_curve(const std::vector<FaceTrack>& tracks, const TurnEvent& event,
                                         const TrajectoryOptions& opts);

/// 2x3 matrix mapping output pixel coordinates to source coordinates.
struct AffineMatrix {
    std::array<double, 6> m{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};

    std::array<double, 2> apply(double x, double y) const {
        return {m[0] * x + m[1] * y + m[2], m[3] * x + m[4] * y + m[5]};
    }
    AffineMatrix inverse() const;
    bool is_identity() const;
};

/// source = center + (p - center) / scale - (shift_x * width, shift_y * height)
AffineMatrix make_affine(double scale, double shift_x, double shift_y, std::array<double, 2> center, double width,
                         double height);

struct ImageBuffer {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // row-major RGB

    void validate() const;
    std::uint8_t at(int x, int y, int c) const {
        return data[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3 +
                    static_cast<std::size_t>(c)];
    }
    bool operator==(const ImageBuffer&) const = default;
};

ImageBuffer read_ppm(const std::filesystem::path& path);
void write_ppm(const ImageBuffer& image, const std::filesystem::path& path);

/// Inverse-mapping warp, bilinear, edge-clamped. Same size as the input.
ImageBuffer warp(const ImageBuffer& image, const AffineMatrix& matrix);

struct EffectResult {
    std::vector<ImageBuffer> frames;
    std::vector<double> accepted_triggers;
};

/// Plays the trajectory once per accepted trigger. Triggers arriving while a
/// playback is active are ignored; frames outside playback are copied as is.
EffectResult apply_effect(const std::vector<ImageBuffer>& frames, const std::vector<double>& frame_times,
                          const LeanTrajectory& trajectory, std::vector<double> trigger_times,
                          const std::vector<std::array<double, 2>>& face_centers);

}  // namespace turngrab
