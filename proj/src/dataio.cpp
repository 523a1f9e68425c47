#include "turngrab/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace turngrab {
namespace {

using ordered_json = nlohmann::ordered_json;

// Timestamps from the two streams are matched on a microsecond grid.
std::int64_t time_key(double t) { return std::llround(t * 1e6); }

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        std::size_t comma = line.find(',', pos);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(pos));
            break;
        }
        out.push_back(line.substr(pos, comma - pos));
        pos = comma + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::string au_name(int i) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "au%02d", i + 1);
    return buf;
}

double parse_number(std::string_view field, std::size_t row, const std::string& col) {
    field = trim(field);
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    if (!field.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (field.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
        throw Error(ErrorCode::NonNumericField,
                    "row " + std::to_string(row) + ", column '" + col + "': '" + std::string(field) + "'");
    }
    return value;
}

double median_of(std::vector<double> v) {
    const std::size_t n = v.size();
    std::sort(v.begin(), v.end());
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

double intersection_area(const BoundingBox& a, const BoundingBox& b) {
    const double w = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
    const double h = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
    if (w <= 0.0 || h <= 0.0) return 0.0;
    return w * h;
}

std::vector<std::string> stream_columns(StreamFormat format) {
    std::vector<std::string> cols{"time", "face_id", "x", "y", "w", "h"};
    if (format == StreamFormat::feature_csv) {
        for (int i = 0; i < kNumActionUnits; ++i) cols.push_back(au_name(i));
        cols.emplace_back("gaze_x");
        cols.emplace_back("gaze_y");
    } else {
        cols.emplace_back("asd_score");
    }
    return cols;
}

std::vector<FeatureFrame> parse_feature_stream(std::istream& in, StreamFormat format) {
    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorCode::MissingColumn, "missing header row");
    }
    const auto header = split_csv(line);
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < header.size(); ++i) index.emplace(std::string(trim(header[i])), i);

    const auto columns = stream_columns(format);
    std::vector<std::size_t> pos;
    pos.reserve(columns.size());
    for (const auto& c : columns) {
        auto it = index.find(c);
        if (it == index.end()) throw Error(ErrorCode::MissingColumn, "column '" + c + "' not in header");
        pos.push_back(it->second);
    }

    std::vector<FeatureFrame> frames;
    std::unordered_map<std::string, double> last_time;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != header.size()) {
            throw Error(ErrorCode::NonNumericField, "row " + std::to_string(row) + ": expected " +
                                                        std::to_string(header.size()) + " fields, got " +
                                                        std::to_string(fields.size()));
        }
        FeatureFrame f;
        f.time = parse_number(fields[pos[0]], row, "time");
        if (f.time < 0.0) throw Error(ErrorCode::NonNumericField, "row " + std::to_string(row) + ": negative time");
        f.face_id = std::string(trim(fields[pos[1]]));
        if (f.face_id.empty()) throw Error(ErrorCode::NonNumericField, "row " + std::to_string(row) + ": empty face_id");
        f.bbox.x = parse_number(fields[pos[2]], row, "x");
        f.bbox.y = parse_number(fields[pos[3]], row, "y");
        f.bbox.w = parse_number(fields[pos[4]], row, "w");
        f.bbox.h = parse_number(fields[pos[5]], row, "h");
        if (f.bbox.w <= 0.0 || f.bbox.h <= 0.0) {
            throw Error(ErrorCode::NonNumericField, "row " + std::to_string(row) + ": invalid bbox (w, h must be > 0)");
        }
        if (format == StreamFormat::feature_csv) {
            for (int a = 0; a < kNumActionUnits; ++a) {
                const double v = parse_number(fields[pos[6 + a]], row, columns[6 + a]);
                if (v < 0.0 || v > 5.0) {
                    throw Error(ErrorCode::NonNumericField,
                                "row " + std::to_string(row) + ", column '" + columns[6 + a] + "' outside [0, 5]");
                }
                f.aus[a] = v;
            }
            f.gaze[0] = parse_number(fields[pos[6 + kNumActionUnits]], row, "gaze_x");
            f.gaze[1] = parse_number(fields[pos[7 + kNumActionUnits]], row, "gaze_y");
            f.origin = FrameOrigin::measured;
        } else {
            f.asd_score = parse_number(fields[pos[6]], row, "asd_score");
            f.origin = FrameOrigin::pending;
        }
        auto [it, inserted] = last_time.try_emplace(f.face_id, f.time);
        if (!inserted) {
            if (!(f.time > it->second)) {
                throw Error(ErrorCode::NonMonotonicTime, "face '" + f.face_id + "', row " + std::to_string(row));
            }
            it->second = f.time;
        }
        frames.push_back(std::move(f));
    }
    std::stable_sort(frames.begin(), frames.end(), [](const FeatureFrame& a, const FeatureFrame& b) {
        if (a.face_id != b.face_id) return a.face_id < b.face_id;
        return a.time < b.time;
    });
    return frames;
}

std::vector<FeatureFrame> parse_feature_stream(const std::filesystem::path& path, StreamFormat format) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    return parse_feature_stream(in, format);
}

double infer_frame_rate(const std::vector<FeatureFrame>& asd) {
    std::map<std::string, std::vector<double>> times;
    for (const auto& f : asd) times[f.face_id].push_back(f.time);
    std::vector<double> intervals;
    for (auto& [face, ts] : times) {
        std::sort(ts.begin(), ts.end());
        for (std::size_t i = 1; i < ts.size(); ++i) intervals.push_back(ts[i] - ts[i - 1]);
    }
    if (intervals.empty()) throw Error(ErrorCode::TooFewFrames, "cannot infer frame rate from fewer than two frames");
    const double med = median_of(intervals);
    if (!(med > 0.0)) throw Error(ErrorCode::NonConstantFrameRate, "zero median frame interval");
    for (double d : intervals) {
        if (std::abs(d - med) <= 0.01 * med || d >= 1.5 * med) continue;
        throw Error(ErrorCode::NonConstantFrameRate,
                    "interval " + std::to_string(d) + " s deviates from median " + std::to_string(med) + " s");
    }
    return 1.0 / med;
}

std::vector<FaceTrack> match_tracks(const std::vector<FeatureFrame>& features, const std::vector<FeatureFrame>& asd) {
    if (features.empty() || asd.empty()) throw Error(ErrorCode::EmptyInput, "feature and ASD streams must be non-empty");
    const double rate = infer_frame_rate(asd);

    std::unordered_map<std::int64_t, std::vector<std::size_t>> by_time;
    for (std::size_t i = 0; i < features.size(); ++i) by_time[time_key(features[i].time)].push_back(i);

    // Feature records already claimed, keyed by index, to catch one feature
    // box serving two ASD faces.
    std::unordered_map<std::size_t, std::size_t> claimed;
    std::map<std::string, FaceTrack> tracks;

    for (std::size_t a = 0; a < asd.size(); ++a) {
        const auto& rec = asd[a];
        FeatureFrame out;
        out.time = rec.time;
        out.face_id = rec.face_id;
        out.asd_score = rec.asd_score;
        out.bbox = rec.bbox;
        out.origin = FrameOrigin::pending;

        auto it = by_time.find(time_key(rec.time));
        if (it != by_time.end()) {
            std::size_t match = features.size();
            for (std::size_t fi : it->second) {
                if (intersection_area(rec.bbox, features[fi].bbox) > 0.0) {
                    if (match != features.size()) {
                        throw Error(ErrorCode::AmbiguousMatch, "two feature boxes intersect ASD face '" + rec.face_id +
                                                                   "' at t=" + std::to_string(rec.time));
                    }
                    match = fi;
                }
            }
            if (match != features.size()) {
                auto [cit, fresh] = claimed.emplace(match, a);
                if (!fresh) {
                    throw Error(ErrorCode::AmbiguousMatch, "feature box intersects two ASD faces at t=" +
                                                               std::to_string(rec.time));
                }
                const auto& feat = features[match];
                out.bbox = feat.bbox;
                out.aus = feat.aus;
                out.gaze = feat.gaze;
                out.origin = FrameOrigin::measured;
            }
        }
        auto& track = tracks[rec.face_id];
        track.face_id = rec.face_id;
        track.frame_rate = rate;
        track.frames.push_back(std::move(out));
    }

    std::vector<FaceTrack> result;
    result.reserve(tracks.size());
    for (auto& [id, t] : tracks) {
        std::sort(t.frames.begin(), t.frames.end(),
                  [](const FeatureFrame& x, const FeatureFrame& y) { return x.time < y.time; });
        result.push_back(std::move(t));
    }
    return result;
}

FaceTrack interpolate_gaps(const FaceTrack& track, double max_gap) {
    std::vector<std::size_t> measured;
    for (std::size_t i = 0; i < track.frames.size(); ++i) {
        if (track.frames[i].origin == FrameOrigin::measured) measured.push_back(i);
    }
    if (measured.size() < 2) {
        throw Error(ErrorCode::TooFewFrames, "track '" + track.face_id + "' has fewer than two measured frames");
    }
    FaceTrack out = track;
    constexpr double kTol = 1e-9;
    for (std::size_t m = 1; m < measured.size(); ++m) {
        const std::size_t i0 = measured[m - 1];
        const std::size_t i1 = measured[m];
        if (i1 == i0 + 1) continue;
        const auto& lo = track.frames[i0];
        const auto& hi = track.frames[i1];
        const double span = hi.time - lo.time;
        if (span > max_gap + kTol) continue;
        for (std::size_t j = i0 + 1; j < i1; ++j) {
            auto& f = out.frames[j];
            const double alpha = (f.time - lo.time) / span;
            for (int c = 0; c < kNumChannels; ++c) f.channel(c) = lo.channel(c) + alpha * (hi.channel(c) - lo.channel(c));
            f.bbox.x = lo.bbox.x + alpha * (hi.bbox.x - lo.bbox.x);
            f.bbox.y = lo.bbox.y + alpha * (hi.bbox.y - lo.bbox.y);
            f.bbox.w = lo.bbox.w + alpha * (hi.bbox.w - lo.bbox.w);
            f.bbox.h = lo.bbox.h + alpha * (hi.bbox.h - lo.bbox.h);
            f.origin = FrameOrigin::interpolated;
        }
    }
    return out;
}

std::vector<FaceTrack> split_track(const FaceTrack& track) {
    std::vector<FaceTrack> pieces;
    FaceTrack current;
    auto flush = [&] {
        if (current.frames.size() >= 2) pieces.push_back(std::move(current));
        current = FaceTrack{};
    };
    const double hole = 1.5 * track.period();
    for (const auto& f : track.frames) {
        if (f.origin == FrameOrigin::pending) {
            flush();
            continue;
        }
        if (!current.frames.empty() && f.time - current.frames.back().time > hole) flush();
        if (current.frames.empty()) {
            current.video_id = track.video_id;
            current.face_id = track.face_id;
            current.frame_rate = track.frame_rate;
        }
        current.frames.push_back(f);
    }
    flush();
    return pieces;
}

std::vector<FaceTrack> build_tracks(const std::vector<FeatureFrame>& features, const std::vector<FeatureFrame>& asd,
                                    const std::string& video_id, double max_gap) {
    std::vector<FaceTrack> out;
    for (auto& t : match_tracks(features, asd)) {
        t.video_id = video_id;
        FaceTrack filled;
        try {
            filled = interpolate_gaps(t, max_gap);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::TooFewFrames) throw;
            continue;
        }
        for (auto& piece : split_track(filled)) out.push_back(std::move(piece));
    }
    return out;
}

void write_track_jsonl(const FaceTrack& track, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    for (const auto& f : track.frames) {
        ordered_json j;
        j["time"] = f.time;
        j["face_id"] = f.face_id;
        j["x"] = f.bbox.x;
        j["y"] = f.bbox.y;
        j["w"] = f.bbox.w;
        j["h"] = f.bbox.h;
        for (int a = 0; a < kNumActionUnits; ++a) j[au_name(a)] = f.aus[a];
        j["gaze_x"] = f.gaze[0];
        j["gaze_y"] = f.gaze[1];
        j["asd_score"] = f.asd_score;
        j["interpolated"] = f.interpolated();
        out << j.dump() << '\n';
    }
}

FaceTrack read_track_jsonl(const std::filesystem::path& path, const std::string& video_id, double frame_rate) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    FaceTrack track;
    track.video_id = video_id;
    track.frame_rate = frame_rate;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            FeatureFrame f;
            f.time = j.at("time").get<double>();
            f.face_id = j.at("face_id").get<std::string>();
            f.bbox = {j.at("x").get<double>(), j.at("y").get<double>(), j.at("w").get<double>(), j.at("h").get<double>()};
            for (int a = 0; a < kNumActionUnits; ++a) f.aus[a] = j.at(au_name(a)).get<double>();
            f.gaze[0] = j.at("gaze_x").get<double>();
            f.gaze[1] = j.at("gaze_y").get<double>();
            f.asd_score = j.at("asd_score").get<double>();
            f.origin = j.at("interpolated").get<bool>() ? FrameOrigin::interpolated : FrameOrigin::measured;
            if (!track.frames.empty() && !(f.time > track.frames.back().time)) {
                throw Error(ErrorCode::NonMonotonicTime, path.string() + " line " + std::to_string(row));
            }
            if (track.face_id.empty()) track.face_id = f.face_id;
            track.frames.push_back(std::move(f));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::FormatError, path.string() + " line " + std::to_string(row) + ": " + e.what());
        }
    }
    return track;
}

void write_track_dir(const std::vector<FaceTrack>& tracks, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    ordered_json index;
    index["video_id"] = tracks.empty() ? std::string() : tracks.front().video_id;
    index["frame_rate"] = tracks.empty() ? 0.0 : tracks.front().frame_rate;
    index["tracks"] = ordered_json::array();
    for (std::size_t k = 0; k < tracks.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "track_%04zu.jsonl", k);
        write_track_jsonl(tracks[k], dir / name);
        index["tracks"].push_back({{"file", name}, {"face_id", tracks[k].face_id}});
    }
    std::ofstream out(dir / "tracks.json", std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + (dir / "tracks.json").string());
    out << index.dump(2) << '\n';
}

std::vector<FaceTrack> read_track_dir(const std::filesystem::path& dir) {
    std::ifstream in(dir / "tracks.json");
    if (!in) throw Error(ErrorCode::Io, "cannot open " + (dir / "tracks.json").string());
    nlohmann::json index;
    try {
        in >> index;
        const auto video = index.at("video_id").get<std::string>();
        const double rate = index.at("frame_rate").get<double>();
        std::vector<FaceTrack> tracks;
        for (const auto& t : index.at("tracks")) {
            tracks.push_back(read_track_jsonl(dir / t.at("file").get<std::string>(), video, rate));
        }
        return tracks;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, (dir / "tracks.json").string() + ": " + e.what());
    }
}

}  // namespace turngrab
