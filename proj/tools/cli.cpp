#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "turngrab/dataio.hpp"
#include "turngrab/dataset.hpp"
#include "turngrab/effect.hpp"
#include "turngrab/log.hpp"
#include "turngrab/metrics.hpp"
#include "turngrab/network.hpp"
#include "turngrab/pu_risk.hpp"
#include "turngrab/segmentation.hpp"
#include "turngrab/synth.hpp"
#include "turngrab/train.hpp"
#include "turngrab/tuner.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace turngrab::cli {
namespace {

const std::vector<std::string> kCommands{"ingest", "extract", "synth", "train", "eval", "tune", "effect", "trajectory"};

struct Globals {
    std::uint64_t seed = 0;
    int jobs = 1;
};

void write_json(const ordered_json& j, const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::FormatError, path.string() + ": " + e.what());
    }
}

// Sibling file next to an output: weights.bin -> weights.config.json.
fs::path sibling(const fs::path& out, const std::string& suffix) {
    return out.parent_path() / (out.stem().string() + suffix);
}

// A track directory, or a directory whose subdirectories are track directories.
std::vector<fs::path> expand_track_dirs(const std::vector<fs::path>& dirs) {
    std::vector<fs::path> out;
    for (const auto& d : dirs) {
        if (fs::exists(d / "tracks.json")) {
            out.push_back(d);
            continue;
        }
        if (!fs::is_directory(d)) throw Error(ErrorCode::Io, "not a directory: " + d.string());
        std::vector<fs::path> subs;
        for (const auto& e : fs::directory_iterator(d)) {
            if (e.is_directory() && fs::exists(e.path() / "tracks.json")) subs.push_back(e.path());
        }
        if (subs.empty()) throw Error(ErrorCode::Io, "no tracks.json under " + d.string());
        std::sort(subs.begin(), subs.end());
        out.insert(out.end(), subs.begin(), subs.end());
    }
    return out;
}

ordered_json sampler_json(const SamplerConfig& c) {
    return {{"window_len", c.window_len},         {"l_max", c.l_max},
            {"l_excl", c.l_excl},                 {"min_duration", c.min_duration},
            {"asd_threshold", c.asd_threshold},   {"unlabeled_per_minute", c.unlabeled_per_minute},
            {"rng_seed", c.rng_seed}};
}

void add_sampler_options(CLI::App* cmd, SamplerConfig& c) {
    cmd->add_option("--window", c.window_len, "Window length in seconds")->capture_default_str();
    cmd->add_option("--l-max", c.l_max, "Earliest positive window start before onset")->capture_default_str();
    cmd->add_option("--l-excl", c.l_excl, "Gap between positive window end and onset")->capture_default_str();
    cmd->add_option("--min-duration", c.min_duration, "Smoothing threshold in seconds")->capture_default_str();
    cmd->add_option("--asd-threshold", c.asd_threshold, "ASD score above which a frame is speech")
        ->capture_default_str();
    cmd->add_option("--unlabeled-per-minute", c.unlabeled_per_minute, "Unlabeled windows per track minute")
        ->capture_default_str();
}

void add_network_options(CLI::App* cmd, NetworkConfig& c) {
    cmd->add_option("--conv1", c.conv1_dim)->capture_default_str();
    cmd->add_option("--conv2", c.conv2_dim)->capture_default_str();
    cmd->add_option("--kernel", c.kernel_size)->capture_default_str();
    cmd->add_option("--layers", c.lstm_layers, "LSTM layers")->capture_default_str();
    cmd->add_option("--lstm-dim", c.lstm_dim)->capture_default_str();
    cmd->add_option("--lr", c.learning_rate)->capture_default_str();
    cmd->add_option("--batch-size", c.batch_size)->capture_default_str();
    cmd->add_option("--epochs", c.epochs)->capture_default_str();
}

// ---- ingest ---------------------------------------------------------------

struct IngestArgs {
    fs::path features, asd, out;
    std::string video_id;
    double max_gap = 1.0;
};

int do_ingest(const IngestArgs& a) {
    const auto features = parse_feature_stream(a.features, StreamFormat::feature_csv);
    const auto asd = parse_feature_stream(a.asd, StreamFormat::asd_csv);
    const auto tracks = build_tracks(features, asd, a.video_id, a.max_gap);
    write_track_dir(tracks, a.out);
    write_json({{"command", "ingest"}, {"video_id", a.video_id}, {"max_gap", a.max_gap}, {"tracks", tracks.size()}},
               a.out / "config.json");
    log::info("ingest: " + std::to_string(tracks.size()) + " tracks written to " + a.out.string());
    return kExitOk;
}

// ---- extract --------------------------------------------------------------

struct ExtractArgs {
    std::vector<fs::path> tracks;
    fs::path out;
    SamplerConfig sampler;
    std::string mode = "pu";
};

int do_extract(ExtractArgs a, const Globals& g) {
    a.sampler.rng_seed = g.seed;
    a.sampler.validate();
    std::vector<Session> sessions;
    for (const auto& dir : expand_track_dirs(a.tracks)) {
        if (fs::exists(dir / "truth.json")) {
            sessions.push_back(read_session(dir));
        } else {
            Session s;
            s.tracks = read_track_dir(dir);
            s.video_id = s.tracks.empty() ? std::string() : s.tracks.front().video_id;
            sessions.push_back(std::move(s));
        }
    }
    SampleSet set;
    set.seq_len = 0;
    set.seed = g.seed;
    std::size_t n_events = 0, n_skipped = 0;
    if (a.mode == "labeled") {
        set.samples = labeled_windows(sessions, a.sampler);
    } else {
        const auto tracks = smoothed_tracks(sessions, a.sampler);
        std::vector<TurnEvent> events;
        for (const auto& s : sessions) {
            std::vector<FaceTrack> mine;
            for (const auto& t : tracks) {
                if (t.video_id == s.video_id) mine.push_back(t);
            }
            auto ev = detect_turn_events(mine);
            events.insert(events.end(), ev.begin(), ev.end());
        }
        auto pos = extract_positive_samples(tracks, events, a.sampler);
        for (const auto& skip : pos.skipped) {
            log::debug("skipped event " + skip.event.video_id + "/" + skip.event.new_speaker + " at " +
                       std::to_string(skip.event.onset) + ": " + skip.reason);
        }
        n_events = events.size();
        n_skipped = pos.skipped.size();
        auto unl = extract_unlabeled_samples(tracks, pos.samples, a.sampler);
        attach_truth(sessions, pos.samples);
        attach_truth(sessions, unl);
        set.samples = std::move(pos.samples);
        set.samples.insert(set.samples.end(), std::make_move_iterator(unl.begin()), std::make_move_iterator(unl.end()));
    }
    double rate = 0.0;
    for (const auto& s : sessions) {
        if (!s.tracks.empty()) rate = s.tracks.front().frame_rate;
    }
    set.seq_len = rate > 0.0 ? window_frames(a.sampler.window_len, rate) : 0;
    set.config = {{"command", "extract"}, {"mode", a.mode}, {"sampler", sampler_json(a.sampler)}};
    write_sample_set(set, a.out);
    log::info("extract: " + std::to_string(set.samples.size()) + " samples, " + std::to_string(n_events) +
              " events, " + std::to_string(n_skipped) + " skipped");
    return kExitOk;
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
    fs::path out;
    int sessions = 1;
    SynthConfig cfg;
};

int do_synth(SynthArgs a, const Globals& g) {
    a.cfg.rng_seed = g.seed;
    a.cfg.validate();
    if (a.sessions < 1) throw Error(ErrorCode::InvalidConfig, "--sessions must be at least 1");
    const auto sessions = generate_sessions(a.cfg, a.sessions);
    for (const auto& s : sessions) write_session(s, a.out / s.video_id);
    ordered_json echo{{"command", "synth"}, {"sessions", a.sessions}, {"synth", a.cfg.to_json()}};
    write_json(echo, a.out / "synth_config.json");
    log::info("synth: " + std::to_string(sessions.size()) + " sessions written to " + a.out.string());
    return kExitOk;
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
    fs::path data, val, out;
    NetworkConfig net;
    std::string estimator = "nnpu";
    std::string loss = "sigmoid";
    std::optional<double> prior;
};

struct TrainInputs {
    SampleSet data, val;
    std::vector<const Sample*> first, second;
    LabeledView val_view;
    RiskConfig risk;
};

// PN trains on truth labels; uPU/nnPU on the P and U roles.
void prepare_training(TrainInputs& in, const std::string& estimator, const std::string& loss,
                      std::optional<double> prior) {
    in.risk.estimator = estimator_from_string(estimator);
    in.risk.loss_kind = loss_kind_from_string(loss);
    in.val_view = labeled_view(in.val.samples, MergeMode::val_merge);
    if (in.risk.estimator == Estimator::pn) {
        const auto view = labeled_view(in.data.samples, MergeMode::train_binary);
        for (std::size_t i = 0; i < view.samples.size(); ++i) {
            (view.labels[i] ? in.first : in.second).push_back(view.samples[i]);
        }
        in.risk.prior = prior ? *prior : estimate_prior(view.labels);
    } else {
        for (const auto& s : in.data.samples) {
            (s.pu_role == PuRole::positive ? in.first : in.second).push_back(&s);
        }
        in.risk.prior = prior ? *prior : estimate_prior(in.val_view.labels);
    }
    in.risk.validate();
}

int do_train(TrainArgs a, const Globals& g) {
    TrainInputs in;
    in.data = read_sample_set(a.data);
    in.val = read_sample_set(a.val);
    prepare_training(in, a.estimator, a.loss, a.prior);
    a.net.init_seed = g.seed;
    a.net.seq_len = in.data.seq_len;
    a.net.validate();

    TrainCallbacks cb;
    cb.on_epoch = [](const EpochRecord& r) {
        log::info("epoch " + std::to_string(r.epoch) + " risk " + std::to_string(r.train_risk) + " val_mcc " +
                  std::to_string(r.val_mcc));
        return true;
    };
    const auto result = train(in.first, in.second, in.val_view, a.net, in.risk, cb, g.jobs);
    result.params.save(a.out);
    write_json(history_to_json(result.history), sibling(a.out, ".history.json"));
    ordered_json echo{{"command", "train"},
                      {"seed", g.seed},
                      {"network", a.net.to_json()},
                      {"risk", {{"estimator", to_string(in.risk.estimator)},
                                {"loss", to_string(in.risk.loss_kind)},
                                {"prior", in.risk.prior},
                                {"prior_source", a.prior ? "flag" : (in.risk.estimator == Estimator::pn ? "train labels"
                                                                                                        : "val labels")}}},
                      {"optimizer", {{"name", "adam"}, {"beta1", 0.9}, {"beta2", 0.999}, {"eps", 1e-8}}},
                      {"unreported_defaults", {"batch_size", "optimizer", "padding=same", "activation=relu"}},
                      {"n_first", in.first.size()},
                      {"n_second", in.second.size()},
                      {"n_val", in.val_view.samples.size()},
                      {"best_epoch", result.best_epoch}};
    write_json(echo, sibling(a.out, ".config.json"));
    return kExitOk;
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
    fs::path model, data, out;
    double threshold = 0.0;
    std::string mode = "val_merge";
};

int do_eval(const EvalArgs& a, const Globals& g) {
    const auto params = ModelParams::load(a.model);
    const auto set = read_sample_set(a.data);
    const auto view =
        labeled_view(set.samples, a.mode == "train_binary" ? MergeMode::train_binary : MergeMode::val_merge);
    if (view.samples.empty()) throw Error(ErrorCode::EmptyInput, "no labelled samples in " + a.data.string());
    const auto scores = score_all(params, view.samples, g.jobs);
    auto report = evaluation_report(scores, view.labels, a.threshold);
    report["label_mode"] = a.mode;
    write_json(report, a.out);
    std::cout << report.dump() << '\n';
    return kExitOk;
}

// ---- tune -----------------------------------------------------------------

struct TuneArgs {
    std::optional<fs::path> space;
    fs::path data, val, out;
    std::optional<fs::path> resume;
    NetworkConfig net;
    std::string estimator = "nnpu";
    std::optional<double> prior;
};

int do_tune(TuneArgs a, const Globals& g) {
    const SearchSpace space = a.space ? SearchSpace::from_json(read_json(*a.space)) : SearchSpace{};
    TrainInputs in;
    in.data = read_sample_set(a.data);
    in.val = read_sample_set(a.val);
    prepare_training(in, a.estimator, "sigmoid", a.prior);
    a.net.seq_len = in.data.seq_len;

    TrialFn fn = [&](const NetworkConfig& cfg, std::uint64_t seed, const EpochReporter& report) {
        NetworkConfig c = cfg;
        c.init_seed = seed;
        TrainCallbacks cb;
        cb.on_epoch = [&](const EpochRecord& r) { return report(r.epoch, r.val_mcc); };
        train(in.first, in.second, in.val_view, c, in.risk, cb, g.jobs);
    };
    const auto report = run_study(space, fn, g.seed, a.net, a.resume);
    write_json(report.to_json(), a.out);
    log::info("tune: " + std::to_string(report.trials.size()) + " trials, best mcc " + std::to_string(report.best_mcc));
    return kExitOk;
}

// ---- effect / trajectory ----------------------------------------------------

struct EffectArgs {
    fs::path frames, trajectory, triggers, out;
    std::optional<double> fps;
};

int do_effect(const EffectArgs& a) {
    const auto traj = LeanTrajectory::from_json(read_json(a.trajectory));
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(a.frames)) {
        if (e.path().extension() == ".ppm") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<ImageBuffer> frames;
    for (const auto& f : files) frames.push_back(read_ppm(f));

    const json trig = read_json(a.triggers);
    std::vector<double> times;
    std::vector<std::array<double, 2>> centers;
    try {
        if (trig.is_array()) {
            times = trig.get<std::vector<double>>();
        } else {
            times = trig.at("times").get<std::vector<double>>();
            if (trig.contains("face_centers")) {
                for (const auto& c : trig.at("face_centers")) centers.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::FormatError, a.triggers.string() + ": " + e.what());
    }
    const double fps = a.fps ? *a.fps : traj.frame_rate;
    std::vector<double> frame_times(frames.size());
    for (std::size_t k = 0; k < frames.size(); ++k) frame_times[k] = static_cast<double>(k) / fps;

    const auto result = apply_effect(frames, frame_times, traj, times, centers);
    fs::create_directories(a.out);
    for (std::size_t k = 0; k < files.size(); ++k) write_ppm(result.frames[k], a.out / files[k].filename());
    write_json({{"command", "effect"}, {"fps", fps}, {"frames", frames.size()}, {"accepted_triggers", result.accepted_triggers}},
               a.out / "effect.json");
    return kExitOk;
}

struct TrajectoryArgs {
    std::vector<fs::path> tracks;
    fs::path out;
    TrajectoryOptions opts{2.0, kSynthFrameWidth, kSynthFrameHeight};
    SamplerConfig sampler;
};

int do_trajectory(const TrajectoryArgs& a) {
    std::vector<FaceTrack> all;
    std::vector<TurnEvent> events;
    for (const auto& dir : expand_track_dirs(a.tracks)) {
        std::vector<FaceTrack> mine;
        for (const auto& t : read_track_dir(dir)) mine.push_back(smooth_asd(t, a.sampler));
        auto ev = detect_turn_events(mine);
        events.insert(events.end(), ev.begin(), ev.end());
        all.insert(all.end(), mine.begin(), mine.end());
    }
    const auto traj = trajectory_from_tracks(all, events, a.opts);
    write_json(traj.to_json(), a.out);
    return kExitOk;
}

// Turns a flat JSON object into flags placed right after the subcommand.
std::vector<std::string> config_flags(const json& j) {
    if (!j.is_object()) throw CLI::ValidationError("--config", "config file must hold a JSON object");
    std::vector<std::string> out;
    for (const auto& [key, value] : j.items()) {
        const std::string flag = "--" + key;
        if (value.is_boolean()) {
            if (value.get<bool>()) out.push_back(flag);
        } else if (value.is_array()) {
            for (const auto& v : value) {
                out.push_back(flag);
                out.push_back(v.is_string() ? v.get<std::string>() : v.dump());
            }
        } else {
            out.push_back(flag);
            out.push_back(value.is_string() ? value.get<std::string>() : value.dump());
        }
    }
    return out;
}

std::vector<std::string> apply_config(std::vector<std::string> args) {
    std::optional<std::string> file;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw CLI::ArgumentMismatch("--config needs a file");
            file = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            file = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            break;
        }
    }
    if (!file) return args;
    json j;
    {
        std::ifstream in(*file);
        if (!in) throw CLI::ValidationError("--config", "cannot open " + *file);
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw CLI::ValidationError("--config", e.what());
        }
    }
    const auto flags = config_flags(j);
    auto pos = std::find_if(args.begin(), args.end(), [](const std::string& a) {
        return std::find(kCommands.begin(), kCommands.end(), a) != kCommands.end();
    });
    if (pos == args.end()) {
        args.insert(args.begin(), flags.begin(), flags.end());
    } else {
        args.insert(pos + 1, flags.begin(), flags.end());
    }
    return args;
}

}  // namespace

int run(std::vector<std::string> args) {
    CLI::App app{"Turn-grabbing intention detection: data pipeline, PU training, evaluation, tuning, effect"};
    app.name("turngrab");
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str();
    app.add_option("--jobs", g.jobs, "Worker threads for scoring")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--config", "JSON file with flag values (flags override)");

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Build face tracks from feature and ASD CSV streams");
    c_ingest->add_option("--features", ingest.features)->required();
    c_ingest->add_option("--asd", ingest.asd)->required();
    c_ingest->add_option("--video-id", ingest.video_id)->required();
    c_ingest->add_option("--out", ingest.out, "Output track directory")->required();
    c_ingest->add_option("--max-gap", ingest.max_gap)->capture_default_str();

    ExtractArgs extract;
    auto* c_extract = app.add_subcommand("extract", "Cut positive and unlabeled windows from track directories");
    c_extract->add_option("--tracks", extract.tracks, "Track directories (or parents of them)")->required();
    c_extract->add_option("--out", extract.out, "Output manifest JSON")->required();
    c_extract->add_option("--mode", extract.mode, "pu: P and U sets; labeled: U-style windows with truth")
        ->check(CLI::IsMember({"pu", "labeled"}))
        ->capture_default_str();
    add_sampler_options(c_extract, extract.sampler);

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "Generate synthetic sessions with ground truth");
    c_synth->add_option("--out", synth.out)->required();
    c_synth->add_option("--sessions", synth.sessions)->capture_default_str();
    c_synth->add_option("--participants", synth.cfg.n_participants)->capture_default_str();
    c_synth->add_option("--length", synth.cfg.session_len, "Session length in seconds")->capture_default_str();
    c_synth->add_option("--frame-rate", synth.cfg.frame_rate)->capture_default_str();
    c_synth->add_option("--intention-lead", synth.cfg.intention_lead)->capture_default_str();
    c_synth->add_option("--signal-strength", synth.cfg.signal_strength)->capture_default_str();
    c_synth->add_option("--noise-sigma", synth.cfg.noise_sigma)->capture_default_str();
    c_synth->add_option("--signal-channels", synth.cfg.signal_channels)->capture_default_str();
    c_synth->add_option("--false-start-rate", synth.cfg.false_start_rate)->capture_default_str();
    c_synth->add_option("--video-id", synth.cfg.video_id)->capture_default_str();

    TrainArgs tr;
    auto* c_train = app.add_subcommand("train", "Train the network with a PN, uPU or nnPU risk");
    c_train->add_option("--data", tr.data, "Training manifest")->required();
    c_train->add_option("--val", tr.val, "Validation manifest with truth labels")->required();
    c_train->add_option("--out", tr.out, "Weights file")->required();
    c_train->add_option("--estimator", tr.estimator)->check(CLI::IsMember({"pn", "upu", "nnpu"}))->capture_default_str();
    c_train->add_option("--loss", tr.loss)->check(CLI::IsMember({"sigmoid", "logistic"}))->capture_default_str();
    c_train->add_option("--prior", tr.prior, "Class prior; estimated from labels when omitted");
    add_network_options(c_train, tr.net);

    EvalArgs ev;
    auto* c_eval = app.add_subcommand("eval", "Score a labelled sample set and write a metrics report");
    c_eval->add_option("--model", ev.model)->required();
    c_eval->add_option("--data", ev.data)->required();
    c_eval->add_option("--out", ev.out, "Metrics JSON")->required();
    c_eval->add_option("--threshold", ev.threshold)->capture_default_str();
    c_eval->add_option("--mode", ev.mode)->check(CLI::IsMember({"val_merge", "train_binary"}))->capture_default_str();

    TuneArgs tu;
    auto* c_tune = app.add_subcommand("tune", "Grid search with median pruning");
    c_tune->add_option("--space", tu.space, "Search space JSON (default: full grid)");
    c_tune->add_option("--data", tu.data)->required();
    c_tune->add_option("--val", tu.val)->required();
    c_tune->add_option("--out", tu.out, "Report JSON")->required();
    c_tune->add_option("--resume", tu.resume, "Checkpoint file, created or resumed");
    c_tune->add_option("--estimator", tu.estimator)->check(CLI::IsMember({"pn", "upu", "nnpu"}))->capture_default_str();
    c_tune->add_option("--prior", tu.prior);
    c_tune->add_option("--batch-size", tu.net.batch_size)->capture_default_str();

    EffectArgs ef;
    auto* c_effect = app.add_subcommand("effect", "Apply the lean-in effect to a directory of PPM frames");
    c_effect->add_option("--frames", ef.frames)->required();
    c_effect->add_option("--trajectory", ef.trajectory)->required();
    c_effect->add_option("--triggers", ef.triggers, "JSON list of onset times, or {times, face_centers}")->required();
    c_effect->add_option("--out", ef.out)->required();
    c_effect->add_option("--fps", ef.fps, "Frame rate of the input frames (default: trajectory rate)");

    TrajectoryArgs tj;
    auto* c_traj = app.add_subcommand("trajectory", "Average lean-in trajectory from turn events in tracks");
    c_traj->add_option("--tracks", tj.tracks)->required();
    c_traj->add_option("--out", tj.out)->required();
    c_traj->add_option("--lead", tj.opts.lead)->capture_default_str();
    c_traj->add_option("--frame-width", tj.opts.frame_width)->capture_default_str();
    c_traj->add_option("--frame-height", tj.opts.frame_height)->capture_default_str();
    add_sampler_options(c_traj, tj.sampler);

    try {
        args = apply_config(std::move(args));
        std::reverse(args.begin(), args.end());
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (c_ingest->parsed()) return do_ingest(ingest);
        if (c_extract->parsed()) return do_extract(extract, g);
        if (c_synth->parsed()) return do_synth(synth, g);
        if (c_train->parsed()) return do_train(tr, g);
        if (c_eval->parsed()) return do_eval(ev, g);
        if (c_tune->parsed()) return do_tune(tu, g);
        if (c_effect->parsed()) return do_effect(ef);
        if (c_traj->parsed()) return do_trajectory(tj);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}

}  // namespace turngrab::cli
