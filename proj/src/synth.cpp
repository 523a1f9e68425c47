#include "turngrab/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <tuple>

#include "turngrab/common.hpp"

namespace turngrab {

using nlohmann::ordered_json;

void SynthConfig::validate() const {
    auto bad = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, "synth: " + msg); };
    if (n_participants < 2) bad("n_participants must be at least 2");
    if (!(session_len > 0.0) || !std::isfinite(session_len)) bad("session_len must be positive");
    if (!(frame_rate > 0.0) || !std::isfinite(frame_rate)) bad("frame_rate must be positive");
    if (!(intention_lead > 0.0)) bad("intention_lead must be positive");
    if (signal_channels.empty()) bad("signal_channels is empty");
    for (int c : signal_channels) {
        if (c < 0 || c >= kNumChannels) bad("signal channel out of range: " + std::to_string(c));
    }
    if (!std::isfinite(signal_strength)) bad("signal_strength must be finite");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) bad("noise_sigma must be >= 0");
    if (!(min_utterance > 0.0)) bad("min_utterance must be positive");
    if (!(mean_utterance >= 0.0)) bad("mean_utterance must be >= 0");
    if (!(min_pause >= 0.0) || !(max_pause >= min_pause)) bad("pause range invalid");
    if (!(self_continue_prob >= 0.0 && self_continue_prob <= 1.0)) bad("self_continue_prob outside [0, 1]");
    if (!(false_start_rate >= 0.0)) bad("false_start_rate must be >= 0");
    if (!(ramp_time > 0.0)) bad("ramp_time must be positive");
    if (!(asd_noise >= 0.0)) bad("asd_noise must be >= 0");
}

ordered_json SynthConfig::to_json() const {
    return {{"n_participants", n_participants},
            {"session_len", session_len},
            {"frame_rate", frame_rate},
            {"intention_lead", intention_lead},
            {"signal_channels", signal_channels},
            {"signal_strength", signal_strength},
            {"noise_sigma", noise_sigma},
            {"rng_seed", rng_seed},
            {"video_id", video_id},
            {"min_utterance", min_utterance},
            {"mean_utterance", mean_utterance},
            {"min_pause", min_pause},
            {"max_pause", max_pause},
            {"self_continue_prob", self_continue_prob},
            {"false_start_rate", false_start_rate},
            {"ramp_time", ramp_time},
            {"feature_baseline", feature_baseline},
            {"asd_level", asd_level},
            {"asd_noise", asd_noise}};
}

SynthConfig SynthConfig::from_json(const nlohmann::json& j) {
    SynthConfig c;
    try {
        c.n_participants = j.value("n_participants", c.n_participants);
        c.session_len = j.value("session_len", c.session_len);
        c.frame_rate = j.value("frame_rate", c.frame_rate);
        c.intention_lead = j.value("intention_lead", c.intention_lead);
        c.signal_channels = j.value("signal_channels", c.signal_channels);
        c.signal_strength = j.value("signal_strength", c.signal_strength);
        c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
        c.rng_seed = j.value("rng_seed", c.rng_seed);
        c.video_id = j.value("video_id", c.video_id);
        c.min_utterance = j.value("min_utterance", c.min_utterance);
        c.mean_utterance = j.value("mean_utterance", c.mean_utterance);
        c.min_pause = j.value("min_pause", c.min_pause);
        c.max_pause = j.value("max_pause", c.max_pause);
        c.self_continue_prob = j.value("self_continue_prob", c.self_continue_prob);
        c.false_start_rate = j.value("false_start_rate", c.false_start_rate);
        c.ramp_time = j.value("ramp_time", c.ramp_time);
        c.feature_baseline = j.value("feature_baseline", c.feature_baseline);
        c.asd_level = j.value("asd_level", c.asd_level);
        c.asd_noise = j.value("asd_noise", c.asd_noise);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("synth config: ") + e.what());
    }
    c.validate();
    return c;
}

namespace {

std::string face_name(int p) { return "p" + std::to_string(p); }

bool overlaps(const Segment& a, const Segment& b) { return a.start < b.end && b.start < a.end; }

std::vector<Segment> merge_intervals(std::vector<Segment> v) {
    std::sort(v.begin(), v.end(), [](const Segment& a, const Segment& b) { return a.start < b.start; });
    std::vector<Segment> out;
    for (const auto& s : v) {
        if (!out.empty() && s.start <= out.back().end) {
            out.back().end = std::max(out.back().end, s.end);
        } else {
            out.push_back(s);
        }
    }
    return out;
}

double overlap_with(const std::vector<const Segment*>& intervals, double a, double b) {
    double sum = 0.0;
    for (const Segment* s : intervals) sum += std::max(0.0, std::min(b, s->end) - std::max(a, s->start));
    return sum;
}

// Floor schedule: speech per participant, intentions per participant, takeovers.
struct Schedule {
    std::vector<std::vector<Segment>> speech;
    std::vector<std::vector<Segment>> intention;
    std::vector<Takeover> takeovers;
};

Schedule make_schedule(const SynthConfig& cfg) {
    const int n = cfg.n_participants;
    Schedule s;
    s.speech.resize(static_cast<std::size_t>(n));
    s.intention.resize(static_cast<std::size_t>(n));
    Rng rng(derive_seed(cfg.rng_seed, 10));
    const double lead_lo = 0.75 * cfg.intention_lead;
    const double lead_hi = 1.25 * cfg.intention_lead;

    int cur = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    double t = rng.uniform(0.5, 1.5);
    while (t < cfg.session_len) {
        const double dur = cfg.min_utterance + (cfg.mean_utterance > 0.0 ? rng.exponential(cfg.mean_utterance) : 0.0);
        const double end = std::min(t + dur, cfg.session_len);
        s.speech[static_cast<std::size_t>(cur)].push_back({t, end});
        if (end >= cfg.session_len) break;

        int next = cur;
        double pause;
        if (rng.uniform() < cfg.self_continue_prob) {
            // Long enough not to be bridged by gap filling.
            pause = rng.uniform(1.5, 2.5);
        } else {
            pause = rng.uniform(cfg.min_pause, cfg.max_pause);
            const auto k = static_cast<int>(rng.below(static_cast<std::uint64_t>(n - 1)));
            next = k >= cur ? k + 1 : k;
        }
        const double onset = end + pause;
        // Leave room for a full utterance so the last turn survives smoothing.
        if (onset + cfg.min_utterance > cfg.session_len) break;
        const double lead = rng.uniform(lead_lo, lead_hi);
        if (next != cur) {
            s.takeovers.push_back({face_name(next), face_name(cur), onset});
            const auto& own = s.speech[static_cast<std::size_t>(next)];
            const double earliest = own.empty() ? 0.0 : own.back().end;
            const double start = std::max(onset - lead, earliest);
            if (start < onset) s.intention[static_cast<std::size_t>(next)].push_back({start, onset});
        }
        t = onset;
        cur = next;
    }

    // Intentions that never turn into a turn.
    if (cfg.false_start_rate > 0.0) {
        Rng fs(derive_seed(cfg.rng_seed, 11));
        const double mean_gap = 60.0 / cfg.false_start_rate;
        for (int p = 0; p < n; ++p) {
            auto& mine = s.intention[static_cast<std::size_t>(p)];
            const auto& speech = s.speech[static_cast<std::size_t>(p)];
            const std::vector<Segment> scripted = mine;
            double a = fs.exponential(mean_gap);
            while (a < cfg.session_len) {
                const Segment cand{a, std::min(a + fs.uniform(lead_lo, lead_hi), cfg.session_len)};
                const bool clash =
                    std::any_of(speech.begin(), speech.end(), [&](const Segment& q) { return overlaps(q, cand); }) ||
                    std::any_of(scripted.begin(), scripted.end(), [&](const Segment& q) { return overlaps(q, cand); });
                if (!clash) mine.push_back(cand);
                a += fs.exponential(mean_gap);
            }
            mine = merge_intervals(mine);
        }
    }
    return s;
}

bool inside(const std::vector<Segment>& v, double t) {
    return std::any_of(v.begin(), v.end(), [t](const Segment& s) { return t >= s.start && t < s.end; });
}

double ramp(const std::vector<Segment>& v, double t, double ramp_time) {
    double r = 0.0;
    for (const auto& s : v) {
        if (t >= s.start && t < s.end) r = std::max(r, std::min(1.0, (t - s.start) / ramp_time));
    }
    return r;
}

}  // namespace

Session generate_session(const SynthConfig& cfg) {
    cfg.validate();
    const Schedule sched = make_schedule(cfg);
    const int n = cfg.n_participants;
    const auto n_frames = static_cast<std::size_t>(std::floor(cfg.session_len * cfg.frame_rate + 1e-9));

    std::vector<bool> is_signal(kNumChannels, false);
    for (int c : cfg.signal_channels) is_signal[static_cast<std::size_t>(c)] = true;

    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
    const int rows = (n + cols - 1) / cols;
    const double tile_w = kSynthFrameWidth / cols;
    const double tile_h = kSynthFrameHeight / rows;

    Session session;
    session.video_id = cfg.video_id;
    session.takeovers = sched.takeovers;
    for (int p = 0; p < n; ++p) {
        const auto& speech = sched.speech[static_cast<std::size_t>(p)];
        const auto& intent = sched.intention[static_cast<std::size_t>(p)];
        Rng noise(derive_seed(cfg.rng_seed, 100 + static_cast<std::uint64_t>(p)));

        FaceTrack track;
        track.video_id = cfg.video_id;
        track.face_id = face_name(p);
        track.frame_rate = cfg.frame_rate;
        track.frames.resize(n_frames);
        const double cx = (p % cols + 0.5) * tile_w;
        const double cy = (p / cols + 0.5) * tile_h;
        for (std::size_t j = 0; j < n_frames; ++j) {
            auto& f = track.frames[j];
            f.time = static_cast<double>(j) / cfg.frame_rate;
            f.face_id = track.face_id;
            f.origin = FrameOrigin::measured;
            const double r = ramp(intent, f.time, cfg.ramp_time);
            for (int c = 0; c < kNumChannels; ++c) {
                const double base = c < kNumActionUnits ? cfg.feature_baseline : 0.0;
                double v = base + cfg.noise_sigma * noise.normal();
                if (is_signal[static_cast<std::size_t>(c)]) v += cfg.signal_strength * r;
                if (c < kNumActionUnits) v = std::clamp(v, 0.0, 5.0);
                f.channel(c) = v;
            }
            const bool speaking = inside(speech, f.time);
            f.asd_score = (speaking ? cfg.asd_level : -cfg.asd_level) + cfg.asd_noise * noise.normal();
            // Leaning in: the face box grows and drops a little.
            const double grow = 1.0 + 0.15 * r;
            f.bbox.w = 0.4 * tile_w * grow;
            f.bbox.h = 0.5 * tile_h * grow;
            f.bbox.x = cx - 0.5 * f.bbox.w;
            f.bbox.y = cy + 0.05 * tile_h * r - 0.5 * f.bbox.h;
        }
        session.tracks.push_back(std::move(track));

        for (const auto& s : speech) session.truth.push_back({face_name(p), s, Annotation::outlier});
        for (const auto& s : intent) session.truth.push_back({face_name(p), s, Annotation::positive});
    }
    return session;
}

std::vector<Session> generate_sessions(const SynthConfig& cfg, int count) {
    std::vector<Session> out;
    for (int k = 0; k < count; ++k) {
        SynthConfig c = cfg;
        c.rng_seed = derive_seed(cfg.rng_seed, 1000 + static_cast<std::uint64_t>(k));
        c.video_id = cfg.video_id + "_" + std::to_string(k);
        out.push_back(generate_session(c));
    }
    return out;
}

Annotation window_truth(const Session& session, const std::string& face_id, double t_start, double t_end,
                        double min_overlap) {
    std::vector<const Segment*> speech, intent;
    for (const auto& t : session.truth) {
        if (t.face_id != face_id) continue;
        (t.label == Annotation::outlier ? speech : intent).push_back(&t.interval);
    }
    const double tol = 1e-9;
    if (overlap_with(speech, t_start, t_end) >= min_overlap - tol) return Annotation::outlier;
    if (overlap_with(intent, t_start, t_end) >= min_overlap - tol) return Annotation::positive;
    return Annotation::negative;
}

void attach_truth(const std::vector<Session>& sessions, std::vector<Sample>& samples, double min_overlap) {
    std::map<std::string, const Session*> by_video;
    for (const auto& s : sessions) by_video[s.video_id] = &s;
    for (auto& sample : samples) {
        auto it = by_video.find(sample.video_id);
        if (it == by_video.end()) continue;
        sample.truth = window_truth(*it->second, sample.face_id, sample.t_start, sample.t_end, min_overlap);
    }
}

std::vector<FaceTrack> smoothed_tracks(const std::vector<Session>& sessions, const SamplerConfig& cfg) {
    std::vector<FaceTrack> out;
    for (const auto& s : sessions) {
        for (const auto& t : s.tracks) out.push_back(smooth_asd(t, cfg));
    }
    return out;
}

std::vector<Sample> labeled_windows(const std::vector<Session>& sessions, const SamplerConfig& cfg) {
    const auto tracks = smoothed_tracks(sessions, cfg);
    auto samples = extract_unlabeled_samples(tracks, {}, cfg);
    attach_truth(sessions, samples);
    return samples;
}

PuDataset make_pu_dataset(const std::vector<Session>& sessions, const SamplerConfig& cfg, double test_fraction) {
    cfg.validate();
    PuDataset out;
    if (sessions.empty()) return out;
    auto n_test = static_cast<std::size_t>(std::lround(test_fraction * static_cast<double>(sessions.size())));
    n_test = std::min(n_test, sessions.size() - 1);
    const std::vector<Session> train(sessions.begin(), sessions.end() - static_cast<std::ptrdiff_t>(n_test));
    const std::vector<Session> test(sessions.end() - static_cast<std::ptrdiff_t>(n_test), sessions.end());

    std::vector<FaceTrack> tracks = smoothed_tracks(train, cfg);
    std::vector<TurnEvent> events;
    for (const auto& s : train) {
        std::vector<FaceTrack> mine;
        for (const auto& t : tracks) {
            if (t.video_id == s.video_id) mine.push_back(t);
        }
        auto ev = detect_turn_events(mine);
        events.insert(events.end(), ev.begin(), ev.end());
    }
    out.positives = extract_positive_samples(tracks, events, cfg).samples;
    out.unlabeled = extract_unlabeled_samples(tracks, out.positives, cfg);
    attach_truth(train, out.positives);
    attach_truth(train, out.unlabeled);
    if (!test.empty()) out.test = labeled_windows(test, cfg);
    return out;
}

double expected_unlabeled_positive_rate(const std::vector<Session>& sessions, const std::vector<FaceTrack>& smoothed,
                                        const std::vector<Sample>& positives, const SamplerConfig& cfg) {
    std::map<std::string, const Session*> by_video;
    for (const auto& s : sessions) by_video[s.video_id] = &s;
    double weighted = 0.0, total = 0.0;
    for (const auto& track : smoothed) {
        auto it = by_video.find(track.video_id);
        if (it == by_video.end()) continue;
        std::vector<Segment> avoid;
        for (const auto& p : positives) {
            if (p.video_id == track.video_id && p.face_id == track.face_id) avoid.push_back({p.t_start, p.t_end});
        }
        const auto cand = eligible_unlabeled_starts(track, avoid, cfg);
        if (cand.empty()) continue;
        const auto want = static_cast<double>(std::min(unlabeled_quota(track, cfg), cand.size()));
        const int T = window_frames(cfg.window_len, track.frame_rate);
        std::size_t pos = 0;
        for (std::size_t i : cand) {
            const double a = track.frames[i].time;
            if (window_truth(*it->second, track.face_id, a, a + T * track.period()) == Annotation::positive) ++pos;
        }
        weighted += want * static_cast<double>(pos) / static_cast<double>(cand.size());
        total += want;
    }
    return total > 0.0 ? weighted / total : 0.0;
}

void write_session(const Session& session, const std::filesystem::path& dir) {
    write_track_dir(session.tracks, dir);
    ordered_json j;
    j["video_id"] = session.video_id;
    j["truth"] = ordered_json::array();
    for (const auto& t : session.truth) {
        j["truth"].push_back(
            {{"face_id", t.face_id}, {"start", t.interval.start}, {"end", t.interval.end}, {"label", to_string(t.label)}});
    }
    j["takeovers"] = ordered_json::array();
    for (const auto& t : session.takeovers) {
        j["takeovers"].push_back(
            {{"new_speaker", t.new_speaker}, {"previous_speaker", t.previous_speaker}, {"onset", t.onset}});
    }
    std::ofstream out(dir / "truth.json", std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + (dir / "truth.json").string());
    out << j.dump(2) << '\n';
}

Session read_session(const std::filesystem::path& dir) {
    Session s;
    s.tracks = read_track_dir(dir);
    std::ifstream in(dir / "truth.json");
    if (!in) throw Error(ErrorCode::Io, "cannot open " + (dir / "truth.json").string());
    try {
        nlohmann::json j;
        in >> j;
        s.video_id = j.at("video_id").get<std::string>();
        for (const auto& t : j.at("truth")) {
            s.truth.push_back({t.at("face_id").get<std::string>(),
                               {t.at("start").get<double>(), t.at("end").get<double>()},
                               annotation_from_string(t.at("label").get<std::string>())});
        }
        for (const auto& t : j.at("takeovers")) {
            s.takeovers.push_back({t.at("new_speaker").get<std::string>(), t.at("previous_speaker").get<std::string>(),
                                   t.at("onset").get<double>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, (dir / "truth.json").string() + ": " + e.what());
    }
    return s;
}

}  // namespace turngrab
