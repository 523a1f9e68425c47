#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "turngrab/segmentation.hpp"

namespace turngrab {

struct SynthConfig {
    int n_participants = 4;
    double session_len = 600.0;  // seconds
    double frame_rate = 25.0;
    double intention_lead = 3.0;  // mean; drawn uniformly within +-25%
    std::vector<int> signal_channels{0, 1, 2, 3, 17, 18};  // AU 1-4 and both gaze angles
    double signal_strength = 1.0;
    double noise_sigma = 0.5;
    std::uint64_t rng_seed = 0;
    std::string video_id = "synth";

    // Floor-passing process.
    double min_utterance = 4.0;
    double mean_utterance = 6.0;  // exponential part added to min_utterance
    double min_pause = 0.2;
    double max_pause = 0.8;
    double self_continue_prob = 0.1;
    double false_start_rate = 5.0;  // intentions per listener-minute that never lead to a turn
    double ramp_time = 1.0;         // seconds for the intention signal to reach full strength

    // Observation model.
    double feature_baseline = 1.0;
    double asd_level = 2.0;
    double asd_noise = 0.5;

    void validate() const;
    nlohmann::ordered_json to_json() const;
    static SynthConfig from_json(const nlohmann::json& j);
};

struct TruthInterval {
    std::string face_id;
    Segment interval;
    Annotation label;  // positive = intention state, outlier = speaking
};

struct Takeover {
    std::string new_speaker;
    std::string previous_speaker;
    double onset = 0.0;
};

struct Session {
    std::string video_id;
    std::vector<FaceTrack> tracks;  // frames only; speaking_segments left empty
    std::vector<TruthInterval> truth;
    std::vector<Takeover> takeovers;
};

inline constexpr double kSynthFrameWidth = 640.0;
inline constexpr double kSynthFrameHeight = 480.0;

/// One session of a floor-passing process: a single speaker at a time with
/// exponential utterance lengths. Before every takeover the next speaker is in
/// an intention state for about intention_lead seconds, during which the
/// signal channels ramp up by signal_strength.
Session generate_session(const SynthConfig& cfg);

/// `count` sessions with derived seeds and video ids "<video_id>_<k>".
std::vector<Session> generate_sessions(const SynthConfig& cfg, int count);

/// Label of a window of one face: outlier if the face speaks for at least
/// min_overlap seconds inside it, positive if it is in the intention state for
/// at least min_overlap seconds, negative otherwise.
Annotation window_truth(const Session& session, const std::string& face_id, double t_start, double t_end,
                        double min_overlap = 1.0);

/// Sets Sample::truth for every sample from its session's ground truth.
void attach_truth(const std::vector<Session>& sessions, std::vector<Sample>& samples, double min_overlap = 1.0);

/// smooth_asd over every track of every session.
std::vector<FaceTrack> smoothed_tracks(const std::vector<Session>& sessions, const SamplerConfig& cfg);

struct PuDataset {
    std::vector<Sample> positives;
    std::vector<Sample> unlabeled;
    std::vector<Sample> test;  // every sample carries truth
};

/// Runs the segmentation pipeline on the first sessions to build P and U and
/// samples a labelled test split from the last round(test_fraction * n)
/// sessions with the unlabeled sampler. Truth is attached to all samples.
PuDataset make_pu_dataset(const std::vector<Session>& sessions, const SamplerConfig& cfg, double test_fraction = 0.2);

/// Windows drawn the way unlabeled samples are (silent, uniformly placed) with
/// truth attached. Used for validation and test splits.
std::vector<Sample> labeled_windows(const std::vector<Session>& sessions, const SamplerConfig& cfg);

/// Expected fraction of positive-truth windows in extract_unlabeled_samples
/// output, from exhaustive enumeration of the candidate windows of each track.
double expected_unlabeled_positive_rate(const std::vector<Session>& sessions, const std::vector<FaceTrack>& smoothed,
                                        const std::vector<Sample>& positives, const SamplerConfig& cfg);

/// Writes one track directory per session plus truth.json; reads it back.
void write_session(const Session& session, const std::filesystem::path& dir);
Session read_session(const std::filesystem::path& dir);

}  // namespace turngrab
