#include "turngrab/segmentation.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <numeric>
#include <tuple>

#include "turngrab/log.hpp"

namespace turngrab {
namespace {

constexpr double kEps = 1e-9;

bool shorter_than(std::size_t frames, double period, double min_duration) {
    return static_cast<double>(frames) * period < min_duration - kEps;
}

struct Run {
    std::size_t begin;
    std::size_t end;  // exclusive
    bool value;
};

std::vector<Run> runs_of(const std::vector<bool>& flags) {
    std::vector<Run> runs;
    std::size_t i = 0;
    while (i < flags.size()) {
        std::size_t j = i;
        while (j < flags.size() && flags[j] == flags[i]) ++j;
        runs.push_back({i, j, flags[i]});
        i = j;
    }
    return runs;
}

std::vector<bool> speaking_flags(const FaceTrack& track) {
    std::vector<bool> flags(track.frames.size(), false);
    std::size_t s = 0;
    for (std::size_t i = 0; i < track.frames.size(); ++i) {
        const double t = track.frames[i].time;
        while (s < track.speaking_segments.size() && track.speaking_segments[s].end - kEps <= t) ++s;
        if (s < track.speaking_segments.size() && track.speaking_segments[s].start - kEps <= t) flags[i] = true;
    }
    return flags;
}

}  // namespace

void SamplerConfig::validate() const {
    if (!(window_len > 0.0 && l_max > 0.0 && l_excl > 0.0 && min_duration > 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "sampler durations must be positive");
    }
    if (window_len + l_excl > l_max + kEps) {
        throw Error(ErrorCode::InvalidConfig, "window_len + l_excl must not exceed l_max");
    }
    if (!(unlabeled_per_minute >= 0.0)) throw Error(ErrorCode::InvalidConfig, "unlabeled_per_minute must be >= 0");
}

std::string to_string(PuRole role) { return role == PuRole::positive ? "positive" : "unlabeled"; }

std::string to_string(Annotation label) {
    switch (label) {
        case Annotation::negative: return "negative";
        case Annotation::possibly_positive: return "possibly_positive";
        case Annotation::positive: return "positive";
        case Annotation::outlier: return "outlier";
    }
    return "negative";
}

PuRole pu_role_from_string(const std::string& s) {
    if (s == "positive") return PuRole::positive;
    if (s == "unlabeled") return PuRole::unlabeled;
    throw Error(ErrorCode::UnknownLabel, "pu_role '" + s + "'");
}

Annotation annotation_from_string(const std::string& s) {
    if (s == "negative") return Annotation::negative;
    if (s == "possibly_positive") return Annotation::possibly_positive;
    if (s == "positive") return Annotation::positive;
    if (s == "outlier") return Annotation::outlier;
    throw Error(ErrorCode::UnknownLabel, "annotation '" + s + "'");
}

std::vector<bool> smooth_speaking(const std::vector<bool>& speaking, double period, double min_duration) {
    std::vector<bool> out = speaking;
    for (const auto& r : runs_of(out)) {
        if (r.value && shorter_than(r.end - r.begin, period, min_duration)) {
            std::fill(out.begin() + static_cast<std::ptrdiff_t>(r.begin), out.begin() + static_cast<std::ptrdiff_t>(r.end),
                      false);
        }
    }
    const auto runs = runs_of(out);
    for (std::size_t k = 1; k + 1 < runs.size(); ++k) {
        const auto& r = runs[k];
        if (!r.value && shorter_than(r.end - r.begin, period, min_duration)) {
            std::fill(out.begin() + static_cast<std::ptrdiff_t>(r.begin), out.begin() + static_cast<std::ptrdiff_t>(r.end),
                      true);
        }
    }
    return out;
}

std::vector<Segment> segments_from_flags(const std::vector<FeatureFrame>& frames, const std::vector<bool>& flags,
                                         double period) {
    std::vector<Segment> segs;
    for (const auto& r : runs_of(flags)) {
        if (!r.value) continue;
        segs.push_back({frames[r.begin].time, frames[r.end - 1].time + period});
    }
    return segs;
}

FaceTrack smooth_asd(const FaceTrack& track, const SamplerConfig& cfg) {
    FaceTrack out = track;
    std::vector<bool> raw(track.frames.size());
    for (std::size_t i = 0; i < track.frames.size(); ++i) raw[i] = track.frames[i].asd_score > cfg.asd_threshold;
    const auto smoothed = smooth_speaking(raw, track.period(), cfg.min_duration);
    out.speaking_segments = segments_from_flags(track.frames, smoothed, track.period());
    return out;
}

std::vector<TurnEvent> detect_turn_events(const std::vector<FaceTrack>& tracks) {
    struct Seg {
        std::string face;
        double start;
        double end;
    };
    std::map<std::string, std::vector<Seg>> by_video;
    for (const auto& t : tracks) {
        for (const auto& s : t.speaking_segments) by_video[t.video_id].push_back({t.face_id, s.start, s.end});
    }

    std::vector<TurnEvent> events;
    for (auto& [video, segs] : by_video) {
        std::sort(segs.begin(), segs.end(),
                  [](const Seg& a, const Seg& b) { return std::tie(a.start, a.face) < std::tie(b.start, b.face); });
        // Ended segments ordered by (end, face); the back is the most recent.
        std::vector<const Seg*> by_end;
        by_end.reserve(segs.size());
        for (const auto& s : segs) by_end.push_back(&s);
        std::sort(by_end.begin(), by_end.end(),
                  [](const Seg* a, const Seg* b) { return std::tie(a->end, a->face) < std::tie(b->end, b->face); });

        std::size_t ended = 0;
        for (const auto& s : segs) {
            while (ended < by_end.size() && by_end[ended]->end < s.start) ++ended;
            if (ended == 0) continue;
            const Seg* last = by_end[ended - 1];
            if (last->face == s.face) continue;
            events.push_back({video, s.face, s.start, last->face, last->end});
        }
    }
    std::stable_sort(events.begin(), events.end(), [](const TurnEvent& a, const TurnEvent& b) {
        return std::tie(a.video_id, a.onset, a.new_speaker) < std::tie(b.video_id, b.onset, b.new_speaker);
    });
    return events;
}

int window_frames(double window_len, double frame_rate) {
    return static_cast<int>(std::lround(window_len * frame_rate));
}

Sample make_sample(const FaceTrack& track, std::size_t first, int seq_len, PuRole role) {
    Sample s;
    s.video_id = track.video_id;
    s.face_id = track.face_id;
    s.t_start = track.frames[first].time;
    s.t_end = s.t_start + seq_len * track.period();
    s.seq_len = seq_len;
    s.channels = kNumChannels;
    s.pu_role = role;
    s.data.resize(static_cast<std::size_t>(seq_len) * kNumChannels);
    for (int t = 0; t < seq_len; ++t) {
        const auto& f = track.frames[first + static_cast<std::size_t>(t)];
        for (int c = 0; c < kNumChannels; ++c) {
            s.data[static_cast<std::size_t>(t) * kNumChannels + static_cast<std::size_t>(c)] =
                static_cast<float>(f.channel(c));
        }
    }
    return s;
}

namespace {

bool contiguous(const FaceTrack& track, std::size_t first, std::size_t count) {
    if (first + count > track.frames.size()) return false;
    const double hole = 1.5 * track.period();
    for (std::size_t j = first + 1; j < first + count; ++j) {
        if (track.frames[j].time - track.frames[j - 1].time > hole) return false;
    }
    return true;
}

}  // namespace

PositiveResult extract_positive_samples(const std::vector<FaceTrack>& tracks, const std::vector<TurnEvent>& events,
                                        const SamplerConfig& cfg) {
    cfg.validate();
    PositiveResult result;
    Rng rng(derive_seed(cfg.rng_seed, 1));
    for (const auto& ev : events) {
        const double lo = ev.onset - cfg.l_max;
        const double hi = ev.onset - cfg.l_excl - cfg.window_len;
        const double draw = rng.uniform(lo, hi);

        std::string reason = "no track for speaker";
        bool done = false;
        for (const auto& track : tracks) {
            if (track.video_id != ev.video_id || track.face_id != ev.new_speaker || track.frames.empty()) continue;
            const auto& fr = track.frames;
            auto it = std::lower_bound(fr.begin(), fr.end(), draw - kEps,
                                       [](const FeatureFrame& f, double t) { return f.time < t; });
            if (it == fr.end()) {
                reason = "insufficient history";
                continue;
            }
            std::size_t i = static_cast<std::size_t>(it - fr.begin());
            if (fr[i].time > hi + kEps) {
                if (i > 0 && fr[i - 1].time >= lo - kEps && fr[i].time - fr[i - 1].time <= 1.5 * track.period()) {
                    --i;
                } else {
                    reason = "insufficient history";
                    continue;
                }
            }
            if (fr[i].time - draw > track.period() + kEps) {
                reason = "insufficient history";
                continue;
            }
            const int T = window_frames(cfg.window_len, track.frame_rate);
            if (!contiguous(track, i, static_cast<std::size_t>(T))) {
                reason = "window not covered by track";
                continue;
            }
            result.samples.push_back(make_sample(track, i, T, PuRole::positive));
            done = true;
            break;
        }
        if (!done) {
            log::debug("skip event " + ev.video_id + "/" + ev.new_speaker + " at " + std::to_string(ev.onset) + ": " +
                       reason);
            result.skipped.push_back({ev, reason});
        }
    }
    return result;
}

std::size_t unlabeled_quota(const FaceTrack& track, const SamplerConfig& cfg) {
    const double minutes = (track.end_time() - track.start_time()) / 60.0;
    return static_cast<std::size_t>(std::llround(cfg.unlabeled_per_minute * minutes));
}

std::vector<std::size_t> eligible_unlabeled_starts(const FaceTrack& track, const std::vector<Segment>& avoid,
                                                   const SamplerConfig& cfg) {
    const int T = window_frames(cfg.window_len, track.frame_rate);
    const std::size_t n = track.frames.size();
    std::vector<std::size_t> out;
    if (T <= 0 || n < static_cast<std::size_t>(T)) return out;

    const auto flags = speaking_flags(track);
    // Prefix counts of speaking frames and of holes following frame j.
    std::vector<std::size_t> speak(n + 1, 0), holes(n + 1, 0);
    const double hole = 1.5 * track.period();
    for (std::size_t j = 0; j < n; ++j) {
        speak[j + 1] = speak[j] + (flags[j] ? 1 : 0);
        const bool gap_after = j + 1 < n && track.frames[j + 1].time - track.frames[j].time > hole;
        holes[j + 1] = holes[j] + (gap_after ? 1 : 0);
    }
    const double w = T * track.period();
    for (std::size_t i = 0; i + static_cast<std::size_t>(T) <= n; ++i) {
        const std::size_t last = i + static_cast<std::size_t>(T);
        if (speak[last] - speak[i] != 0) continue;
        if (holes[last - 1] - holes[i] != 0) continue;
        const double a = track.frames[i].time;
        bool clash = false;
        for (const auto& p : avoid) {
            if (a < p.end - kEps && p.start < a + w - kEps) {
                clash = true;
                break;
            }
        }
        if (!clash) out.push_back(i);
    }
    return out;
}

std::vector<Sample> extract_unlabeled_samples(const std::vector<FaceTrack>& tracks,
                                              const std::vector<Sample>& positives, const SamplerConfig& cfg) {
    cfg.validate();
    std::vector<const FaceTrack*> order;
    for (const auto& t : tracks) order.push_back(&t);
    std::stable_sort(order.begin(), order.end(), [](const FaceTrack* a, const FaceTrack* b) {
        return std::make_tuple(a->video_id, a->face_id, a->start_time()) <
               std::make_tuple(b->video_id, b->face_id, b->start_time());
    });

    Rng rng(derive_seed(cfg.rng_seed, 2));
    std::vector<Sample> out;
    for (const FaceTrack* track : order) {
        std::vector<Segment> avoid;
        for (const auto& p : positives) {
            if (p.video_id == track->video_id && p.face_id == track->face_id) avoid.push_back({p.t_start, p.t_end});
        }
        auto candidates = eligible_unlabeled_starts(*track, avoid, cfg);
        const std::size_t want = std::min(unlabeled_quota(*track, cfg), candidates.size());
        for (std::size_t k = 0; k < want; ++k) {
            const std::size_t j = k + static_cast<std::size_t>(rng.below(candidates.size() - k));
            std::swap(candidates[k], candidates[j]);
        }
        candidates.resize(want);
        std::sort(candidates.begin(), candidates.end());
        const int T = window_frames(cfg.window_len, track->frame_rate);
        for (std::size_t i : candidates) out.push_back(make_sample(*track, i, T, PuRole::unlabeled));
    }
    return out;
}

std::optional<bool> merge_annotation_labels(Annotation label, MergeMode mode) {
    switch (label) {
        case Annotation::negative: return false;
        case Annotation::positive: return true;
        case Annotation::possibly_positive: return mode == MergeMode::val_merge;
        case Annotation::outlier: return std::nullopt;
    }
    throw Error(ErrorCode::UnknownLabel, "annotation value out of range");
}

std::optional<bool> merge_annotation_labels(const std::string& label, MergeMode mode) {
    return merge_annotation_labels(annotation_from_string(label), mode);
}

std::optional<Annotation> majority_vote(const std::vector<Annotation>& votes) {
    std::array<std::size_t, 4> counts{};
    for (auto v : votes) ++counts[static_cast<std::size_t>(v)];
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (2 * counts[k] > votes.size()) return static_cast<Annotation>(k);
    }
    return std::nullopt;
}

}  // namespace turngrab
