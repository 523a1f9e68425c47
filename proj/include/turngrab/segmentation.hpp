#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "turngrab/dataio.hpp"

namespace turngrab {

struct SamplerConfig {
    double window_len = 4.0;     // seconds
    double l_max = 10.0;         // earliest window start, seconds before onset
    double l_excl = 0.5;         // window must end this long before onset
    double min_duration = 1.0;   // smoothing threshold for runs and gaps
    double asd_threshold = 0.0;  // score > threshold means speaking
    double unlabeled_per_minute = 2.0;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

enum class PuRole { positive, unlabeled };

/// Four-class annotation schema for clips.
enum class Annotation { negative, possibly_positive, positive, outlier };

std::string to_string(PuRole role);
std::string to_string(Annotation label);
PuRole pu_role_from_string(const std::string& s);
Annotation annotation_from_string(const std::string& s);

struct Sample {
    std::string video_id;
    std::string face_id;
    double t_start = 0.0;
    double t_end = 0.0;
    int seq_len = 0;           // T
    int channels = kNumChannels;  // C
    std::vector<float> data;   // row-major T x C
    PuRole pu_role = PuRole::unlabeled;
    std::optional<Annotation> truth;
};

struct TurnEvent {
    std::string video_id;
    std::string new_speaker;
    double onset = 0.0;
    std::optional<std::string> previous_speaker;
    std::optional<double> previous_end;
};

/// Two-pass run smoothing over per-frame speaking flags: speaking runs shorter
/// than min_duration are cleared, then interior silent gaps shorter than
/// min_duration are filled. Each frame spans one period.
std::vector<bool> smooth_speaking(const std::vector<bool>& speaking, double period, double min_duration);

/// Converts per-frame flags to [start, end) segments, frame i covering
/// [t_i, t_i + period).
std::vector<Segment> segments_from_flags(const std::vector<FeatureFrame>& frames, const std::vector<bool>& flags,
                                         double period);

/// Thresholds asd_score, smooths, and fills speaking_segments.
FaceTrack smooth_asd(const FaceTrack& track, const SamplerConfig& cfg);

/// Handovers across all tracks of one video. An onset is an event when the
/// speaker of the most recent earlier onset is someone else and that
/// speaker's segment ended before this onset.
std::vector<TurnEvent> detect_turn_events(const std::vector<FaceTrack>& tracks);

struct SkipRecord {
    TurnEvent event;
    std::string reason;
};

struct PositiveResult {
    std::vector<Sample> samples;
    std::vector<SkipRecord> skipped;
};

PositiveResult extract_positive_samples(const std::vector<FaceTrack>& tracks, const std::vector<TurnEvent>& events,
                                        const SamplerConfig& cfg);

/// Start-frame indices of every window of `track` that is fully silent,
/// contiguous, and disjoint from all windows in `avoid`.
std::vector<std::size_t> eligible_unlabeled_starts(const FaceTrack& track, const std::vector<Segment>& avoid,
                                                   const SamplerConfig& cfg);

/// Number of unlabeled windows drawn from a track.
std::size_t unlabeled_quota(const FaceTrack& track, const SamplerConfig& cfg);

std::vector<Sample> extract_unlabeled_samples(const std::vector<FaceTrack>& tracks,
                                              const std::vector<Sample>& positives, const SamplerConfig& cfg);

/// Number of frames in a window for a given frame rate.
int window_frames(double window_len, double frame_rate);

/// Copies frames [first, first + T) of a track into a sample.
Sample make_sample(const FaceTrack& track, std::size_t first, int seq_len, PuRole role);

enum class MergeMode { train_binary, val_merge };

/// Binary label for a four-class annotation; empty means the sample is
/// dropped (outliers).
std::optional<bool> merge_annotation_labels(Annotation label, MergeMode mode);
std::optional<bool> merge_annotation_labels(const std::string& label, MergeMode mode);

/// Majority vote across annotators; empty when no label has a strict majority.
std::optional<Annotation> majority_vote(const std::vector<Annotation>& votes);

}  // namespace turngrab
