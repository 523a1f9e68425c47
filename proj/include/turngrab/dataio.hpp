#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "turngrab/common.hpp"

namespace turngrab {

struct BoundingBox {
    double x = 0.0;
    double y = 0.0;
    double w = 1.0;
    double h = 1.0;

    double area() const { return w * h; }
    double center_x() const { return x + 0.5 * w; }
    double center_y() const { return y + 0.5 * h; }
};

/// Area of the overlap of two boxes (0 when disjoint or touching).
double intersection_area(const BoundingBox& a, const BoundingBox& b);

/// Where a frame's facial features came from.
enum class FrameOrigin {
    measured,      // read from the feature stream
    pending,       // ASD frame without a matching feature record, not yet filled
    interpolated,  // filled from neighbouring measured frames
};

struct FeatureFrame {
    double time = 0.0;
    std::string face_id;
    BoundingBox bbox;
    std::array<double, kNumActionUnits> aus{};
    std::array<double, kNumGaze> gaze{};
    double asd_score = 0.0;
    FrameOrigin origin = FrameOrigin::measured;

    bool interpolated() const { return origin != FrameOrigin::measured; }

    /// Channel c of the 19-wide feature vector (AUs first, then gaze).
    double channel(int c) const { return c < kNumActionUnits ? aus[c] : gaze[c - kNumActionUnits]; }
    double& channel(int c) { return c < kNumActionUnits ? aus[c] : gaze[c - kNumActionUnits]; }
};

struct Segment {
    double start = 0.0;
    double end = 0.0;

    double duration() const { return end - start; }
};

struct FaceTrack {
    std::string video_id;
    std::string face_id;
    double frame_rate = 25.0;
    std::vector<FeatureFrame> frames;
    std::vector<Segment> speaking_segments;

    double period() const { return 1.0 / frame_rate; }
    double start_time() const { return frames.empty() ? 0.0 : frames.front().time; }
    double end_time() const { return frames.empty() ? 0.0 : frames.back().time + period(); }
};

enum class StreamFormat { feature_csv, asd_csv };

/// Column names of each stream, in canonical order.
std::vector<std::string> stream_columns(StreamFormat format);

/// Reads a feature or ASD CSV. Frames come back sorted by (face_id, time).
/// ASD frames carry origin=pending since they hold no facial features.
std::vector<FeatureFrame> parse_feature_stream(const std::filesystem::path& path, StreamFormat format);
std::vector<FeatureFrame> parse_feature_stream(std::istream& in, StreamFormat format);

/// Median inter-frame interval over all faces, converted to Hz. Every interval
/// must be within 1% of the median or span a hole of at least 1.5 periods.
double infer_frame_rate(const std::vector<FeatureFrame>& asd);

/// Joins ASD and feature records with a positive bounding-box overlap at the
/// same timestamp. One track per ASD face_id; unmatched ASD frames stay pending.
std::vector<FaceTrack> match_tracks(const std::vector<FeatureFrame>& features,
                                    const std::vector<FeatureFrame>& asd);

/// Linear fill of pending frames whose measured neighbours are at most max_gap
/// seconds apart. Longer holes are left pending for split_track.
FaceTrack interpolate_gaps(const FaceTrack& track, double max_gap = 1.0);

/// Splits a track at frames that are still pending and at time holes longer
/// than 1.5 frame periods. Pending frames are dropped.
std::vector<FaceTrack> split_track(const FaceTrack& track);

/// match -> interpolate -> split for one video. Tracks with fewer than two
/// measured frames are dropped.
std::vector<FaceTrack> build_tracks(const std::vector<FeatureFrame>& features,
                                    const std::vector<FeatureFrame>& asd, const std::string& video_id,
                                    double max_gap = 1.0);

/// JSON-lines track files, one frame per line.
void write_track_jsonl(const FaceTrack& track, const std::filesystem::path& path);
FaceTrack read_track_jsonl(const std::filesystem::path& path, const std::string& video_id, double frame_rate);

/// A directory of track files plus a tracks.json index carrying the video id
/// and frame rate.
void write_track_dir(const std::vector<FaceTrack>& tracks, const std::filesystem::path& dir);
std::vector<FaceTrack> read_track_dir(const std::filesystem::path& dir);

}  // namespace turngrab
