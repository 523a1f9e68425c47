// Acceptance suite: one PASS/FAIL/SKIP line per criterion. Pass criterion
// numbers as arguments to run a subset. Exit 1 on any failure, 77 when every
// selected criterion was skipped.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "fixtures.hpp"
#include "turngrab/effect.hpp"
#include "turngrab/log.hpp"
#include "turngrab/metrics.hpp"
#include "turngrab/pu_risk.hpp"
#include "turngrab/synth.hpp"
#include "turngrab/train.hpp"
#include "turngrab/tuner.hpp"

using namespace turngrab;
namespace fs = std::filesystem;

namespace {

enum class Outcome { pass, fail, skip };

struct Result {
    Outcome outcome = Outcome::fail;
    std::string detail;
};

Result verdict(bool ok, std::string detail) { return {ok ? Outcome::pass : Outcome::fail, std::move(detail)}; }

std::string fmt(double v, int digits = 4) {
    std::ostringstream s;
    s << std::setprecision(digits) << v;
    return s.str();
}

// Tuned hyperparameters: conv1 8, conv2 128, 2 LSTM layers of 16, lr 1e-2.
NetworkConfig tuned_network() {
    NetworkConfig c;
    c.conv1_dim = 8;
    c.conv2_dim = 128;
    c.lstm_layers = 2;
    c.lstm_dim = 16;
    c.learning_rate = 1e-2;
    c.epochs = 50;
    return c;
}

// ---- 1: gradients -----------------------------------------------------------

bool relu_pattern_equal(const ForwardCache& a, const ForwardCache& b) {
    auto same = [](const std::vector<double>& x, const std::vector<double>& y) {
        for (std::size_t i = 0; i < x.size(); ++i)
            if ((x[i] > 0.0) != (y[i] > 0.0)) return false;
        return true;
    };
    return same(a.conv1_pre, b.conv1_pre) && same(a.conv2_pre, b.conv2_pre);
}

Result gradient_check() {
    Rng rng(101);
    const double h = 1e-5;
    double worst = 0.0;
    std::size_t checked = 0, kinks = 0, bad = 0, one_sided = 0;
    const Estimator estimators[] = {Estimator::pn, Estimator::upu, Estimator::nnpu};
    for (int trial = 0; trial < 12; ++trial) {
        NetworkConfig cfg;
        cfg.seq_len = 100;
        cfg.input_channels = kNumChannels;
        cfg.conv1_dim = 2 + static_cast<int>(rng.below(7));
        cfg.conv2_dim = 2 + static_cast<int>(rng.below(11));
        cfg.kernel_size = rng.uniform() < 0.5 ? 3 : 5;
        cfg.lstm_layers = 1 + static_cast<int>(rng.below(2));
        cfg.lstm_dim = 2 + static_cast<int>(rng.below(7));
        cfg.init_seed = static_cast<std::uint64_t>(trial);
        cfg.input_mean.assign(kNumChannels, 0.0);
        cfg.input_scale.assign(kNumChannels, 1.0);
        for (int c = 0; c < kNumChannels; ++c) {
            cfg.input_mean[static_cast<std::size_t>(c)] = rng.uniform(0.0, 2.0);
            cfg.input_scale[static_cast<std::size_t>(c)] = rng.uniform(0.5, 2.0);
        }
        RiskConfig risk_cfg;
        risk_cfg.prior = rng.uniform(0.1, 0.9);
        risk_cfg.estimator = estimators[trial % 3];
        risk_cfg.loss_kind = (trial / 3) % 2 == 0 ? LossKind::sigmoid : LossKind::logistic;

        auto params = ModelParams::initialize(cfg);
        // Batch: two samples in each list.
        std::vector<std::vector<double>> xs(4);
        for (auto& x : xs) {
            x.resize(static_cast<std::size_t>(cfg.seq_len * cfg.input_channels));
            for (auto& v : x) v = rng.uniform(0.0, 4.0);
        }
        auto evaluate = [&](std::vector<ForwardCache>* caches) {
            std::vector<double> first(2), second(2);
            for (std::size_t i = 0; i < 4; ++i) {
                const double z = forward(params, xs[i], caches ? &(*caches)[i] : nullptr);
                (i < 2 ? first[i] : second[i - 2]) = z;
            }
            return risk(first, second, risk_cfg);
        };
        std::vector<ForwardCache> base(4);
        const auto r = evaluate(&base);
        std::vector<double> grads(params.values().size(), 0.0);
        for (std::size_t i = 0; i < 4; ++i) {
            backward(params, base[i], i < 2 ? r.grad_first[i] : r.grad_second[i - 2], grads);
        }

        // Fourth-order central stencil: truncation O(h^4) with far less
        // roundoff than the two-point rule at the same accuracy.
        std::vector<ForwardCache> probe(4);
        for (std::size_t k = 0; k < grads.size(); ++k) {
            const double keep = params.values()[k];
            double f[4];
            bool kinked[4];
            const double offsets[4] = {2 * h, h, -h, -2 * h};
            for (int o = 0; o < 4; ++o) {
                params.values()[k] = keep + offsets[o];
                const auto rv = evaluate(&probe);
                f[o] = rv.value;
                kinked[o] = rv.clip_active != r.clip_active;
                for (std::size_t i = 0; i < 4 && !kinked[o]; ++i) kinked[o] = !relu_pattern_equal(base[i], probe[i]);
            }
            params.values()[k] = keep;
            // The analytic gradient belongs to the smooth piece holding the base
            // point; a ReLU or clip switch inside the stencil is stepped around
            // with a one-sided second-order rule on the side that stays put.
            double fd = 0.0;
            if (!kinked[0] && !kinked[1] && !kinked[2] && !kinked[3]) {
                fd = (8.0 * (f[1] - f[2]) - (f[0] - f[3])) / (12.0 * h);
            } else if (!kinked[0] && !kinked[1]) {
                fd = (-3.0 * r.value + 4.0 * f[1] - f[0]) / (2.0 * h);
                ++one_sided;
            } else if (!kinked[2] && !kinked[3]) {
                fd = (3.0 * r.value - 4.0 * f[2] + f[3]) / (2.0 * h);
                ++one_sided;
            } else {
                ++kinks;
                continue;
            }
            const double scale = std::max({std::abs(fd), std::abs(grads[k]), 1e-6});
            const double rel = std::abs(fd - grads[k]) / scale;
            worst = std::max(worst, rel);
            ++checked;
            if (rel > 1e-4) ++bad;
        }
    }
    const bool ok = bad == 0 && checked > 0 && kinks * 100 < checked;
    return verdict(ok, "12 configs, " + std::to_string(checked) + " parameter gradients (" + std::to_string(one_sided) +
                           " one-sided next to a ReLU/clip switch), worst rel err " + fmt(worst, 3) + ", " +
                           std::to_string(kinks) + " skipped with switches on both sides (tol 1e-4)");
}

// ---- 2: risk algebra --------------------------------------------------------

Result risk_algebra() {
    Rng rng(202);
    std::size_t fail_a = 0, fail_b = 0, fail_c = 0, clipped = 0;
    for (int i = 0; i < 10000; ++i) {
        const std::size_t np = 1 + rng.below(32), nu = 1 + rng.below(32);
        std::vector<double> p(np), u(nu);
        const double spread = rng.uniform(0.1, 20.0);
        for (auto& v : p) v = rng.normal() * spread;
        for (auto& v : u) v = rng.normal() * spread;
        RiskConfig cfg;
        cfg.prior = rng.uniform(0.001, 0.999);
        cfg.loss_kind = i % 2 == 0 ? LossKind::sigmoid : LossKind::logistic;
        const auto n = risk_nnpu(p, u, cfg);
        const auto up = risk_upu(p, u, cfg);
        double rp = 0.0;
        for (double t : p) rp += loss(t, +1, cfg.loss_kind).value;
        rp /= static_cast<double>(np);
        if (!(n.value >= 0.0 && n.value >= cfg.prior * rp)) ++fail_a;
        if (n.clip_active) ++clipped;
        else if (n.value != up.value || n.grad_first != up.grad_first || n.grad_second != up.grad_second) ++fail_b;
        for (double t : p) {
            const double s = loss(t, +1, LossKind::sigmoid).value + loss(t, -1, LossKind::sigmoid).value;
            if (std::abs(s - 1.0) > 1e-12) ++fail_c;
        }
    }
    return verdict(fail_a + fail_b + fail_c == 0,
                   "1e4 batches (" + std::to_string(clipped) + " clipped): violations a=" + std::to_string(fail_a) +
                       " b=" + std::to_string(fail_b) + " c=" + std::to_string(fail_c));
}

// ---- 3: PU vs PN ------------------------------------------------------------

double test_mcc(const ModelParams& params, const LabeledView& test) {
    const auto scores = score_all(params, test.samples);
    std::vector<bool> preds(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) preds[i] = scores[i] > 0.0;
    return mcc(confusion(preds, test.labels));
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Result pu_vs_pn() {
    std::vector<double> pn_mcc, nnpu_mcc;
    std::ostringstream per_seed;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        // 4 participants, 6 x 10 min: 4 sessions train, 1 validation, 1 test.
        SynthConfig sc;
        sc.rng_seed = seed;
        sc.signal_strength = 1.0;
        sc.noise_sigma = 0.5;
        sc.n_participants = 4;
        sc.session_len = 600.0;
        const auto sessions = generate_sessions(sc, 6);
        const std::vector<Session> train_s(sessions.begin(), sessions.begin() + 4);

        SamplerConfig sampler;
        sampler.rng_seed = seed;
        sampler.l_max = 5.0;
        const auto ds = make_pu_dataset(train_s, sampler, 0.0);
        SamplerConfig dense = sampler;
        dense.unlabeled_per_minute = 10.0;
        const auto val = labeled_windows({sessions[4]}, dense);
        const auto test = labeled_windows({sessions[5]}, dense);
        const auto val_view = labeled_view(val, MergeMode::val_merge);
        const auto test_view = labeled_view(test, MergeMode::val_merge);

        auto net = tuned_network();
        net.init_seed = seed;

        // PN on the same windows with their true labels.
        std::vector<const Sample*> pos, neg;
        std::vector<bool> train_labels;
        for (const auto* list : {&ds.positives, &ds.unlabeled}) {
            for (const auto& s : *list) {
                const auto lab = merge_annotation_labels(*s.truth, MergeMode::train_binary);
                if (!lab) continue;
                (*lab ? pos : neg).push_back(&s);
                train_labels.push_back(*lab);
            }
        }
        RiskConfig pn_cfg;
        pn_cfg.estimator = Estimator::pn;
        pn_cfg.prior = estimate_prior(train_labels);
        const auto pn_res = train(pos, neg, val_view, net, pn_cfg);

        std::vector<const Sample*> p, u;
        for (const auto& s : ds.positives) p.push_back(&s);
        for (const auto& s : ds.unlabeled) u.push_back(&s);
        RiskConfig pu_cfg;
        pu_cfg.estimator = Estimator::nnpu;
        pu_cfg.prior = estimate_prior(val_view.labels);
        const auto pu_res = train(p, u, val_view, net, pu_cfg);

        pn_mcc.push_back(test_mcc(pn_res.params, test_view));
        nnpu_mcc.push_back(test_mcc(pu_res.params, test_view));
        per_seed << (seed ? " " : "") << fmt(pn_mcc.back(), 3) << "/" << fmt(nnpu_mcc.back(), 3);
        std::cerr << "  seed " << seed << ": |P|=" << p.size() << " |U|=" << u.size() << " |test|=" << test_view.labels.size()
                  << " prior(val)=" << fmt(pu_cfg.prior, 3) << " PN mcc " << fmt(pn_mcc.back()) << " nnPU mcc "
                  << fmt(nnpu_mcc.back()) << '\n';
    }
    const double mp = median(pn_mcc), mu = median(nnpu_mcc);
    return verdict(mu >= 0.7 * mp && mu >= 0.5, "median test MCC PN " + fmt(mp) + ", nnPU " + fmt(mu) +
                                                   " (need nnPU >= 0.7*PN and >= 0.5); per seed PN/nnPU " +
                                                   per_seed.str());
}

// ---- 4: metrics -------------------------------------------------------------

// Pearson correlation of two 0/1 vectors, 0 when either is constant.
double pearson(const std::vector<bool>& a, const std::vector<bool>& b) {
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return saa == 0.0 || sbb == 0.0 ? 0.0 : sab / std::sqrt(saa * sbb);
}

Result metric_oracles() {
    Rng rng(404);
    double worst = 0.0;
    std::size_t count_errors = 0;
    for (int i = 0; i < 1000; ++i) {
        const Confusion c{rng.below(40), rng.below(40), rng.below(40), rng.below(40) + 1};
        std::vector<bool> preds, labels;
        auto push = [&](std::size_t n, bool p, bool y) {
            for (std::size_t k = 0; k < n; ++k) {
                preds.push_back(p);
                labels.push_back(y);
            }
        };
        push(c.tp, true, true);
        push(c.fp, true, false);
        push(c.tn, false, false);
        push(c.fn, false, true);
        const auto got = confusion(preds, labels);
        if (got.tp != c.tp || got.fp != c.fp || got.tn != c.tn || got.fn != c.fn) ++count_errors;
        worst = std::max(worst, std::abs(mcc(c) - pearson(preds, labels)));

        // Counting oracle for precision, recall, F, accuracy.
        std::size_t pp = 0, ap = 0, hit = 0, agree = 0;
        for (std::size_t k = 0; k < preds.size(); ++k) {
            pp += preds[k];
            ap += labels[k];
            hit += preds[k] && labels[k];
            agree += preds[k] == labels[k];
        }
        const double prec = pp ? static_cast<double>(hit) / static_cast<double>(pp) : 0.0;
        const double rec = ap ? static_cast<double>(hit) / static_cast<double>(ap) : 0.0;
        const double f = prec + rec > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
        const double acc = static_cast<double>(agree) / static_cast<double>(preds.size());
        const auto r = prf_accuracy(c);
        worst = std::max({worst, std::abs(r.precision - prec), std::abs(r.recall - rec), std::abs(r.f_score - f),
                          std::abs(r.accuracy - acc)});

        const std::size_t n = 2 + rng.below(200);
        std::vector<double> scores(n);
        std::vector<bool> y(n);
        for (std::size_t k = 0; k < n; ++k) {
            scores[k] = std::floor(rng.uniform(0.0, 30.0));  // ties on purpose
            y[k] = rng.uniform() < 0.4;
        }
        y[0] = true;
        y[1] = false;
        double wins = 0.0, pairs = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
            if (!y[a]) continue;
            for (std::size_t b = 0; b < n; ++b) {
                if (y[b]) continue;
                pairs += 1.0;
                wins += scores[a] > scores[b] ? 1.0 : scores[a] == scores[b] ? 0.5 : 0.0;
            }
        }
        worst = std::max(worst, std::abs(auc(scores, y) - wins / pairs));
    }
    const double tie = auc(std::vector<double>(50, 0.3), [] {
        std::vector<bool> v(50, false);
        for (std::size_t i = 0; i < 50; i += 3) v[i] = true;
        return v;
    }());
    return verdict(worst <= 1e-12 && count_errors == 0 && tie == 0.5,
                   "1e3 cases, worst deviation " + fmt(worst, 3) + " (tol 1e-12), all-equal AUC " + fmt(tie, 17));
}

// ---- 5: pipeline properties -------------------------------------------------

std::vector<FaceTrack> random_layout(Rng& rng, const std::string& video, int faces, double length) {
    std::vector<FaceTrack> tracks;
    for (int f = 0; f < faces; ++f) {
        std::vector<Segment> speech;
        double t = rng.uniform(0.0, 5.0);
        while (t < length - 1.0) {
            const double d = 0.04 * static_cast<double>(5 + rng.below(200));
            speech.push_back({t, std::min(length, t + d)});
            t += d + 0.04 * static_cast<double>(5 + rng.below(400));
        }
        tracks.push_back(fixtures::make_track(video, "f" + std::to_string(f), 0.0, length, speech));
    }
    return tracks;
}

Result pipeline_properties() {
    Rng rng(505);
    std::size_t not_idempotent = 0, bound_violations = 0, overlaps = 0, positives = 0, unlabeled = 0;
    for (int layout = 0; layout < 1000; ++layout) {
        SamplerConfig cfg;
        cfg.rng_seed = static_cast<std::uint64_t>(layout);
        cfg.l_excl = rng.uniform(0.0, 1.0);
        cfg.l_max = cfg.window_len + cfg.l_excl + rng.uniform(0.0, 8.0);
        cfg.min_duration = rng.uniform(0.3, 1.5);
        cfg.unlabeled_per_minute = rng.uniform(1.0, 8.0);
        auto raw = random_layout(rng, "v" + std::to_string(layout), 2 + static_cast<int>(rng.below(3)), 90.0);

        std::vector<FaceTrack> tracks;
        for (const auto& t : raw) {
            std::vector<bool> flags(t.frames.size());
            for (std::size_t i = 0; i < flags.size(); ++i) flags[i] = t.frames[i].asd_score > cfg.asd_threshold;
            const auto once = smooth_speaking(flags, t.period(), cfg.min_duration);
            if (smooth_speaking(once, t.period(), cfg.min_duration) != once) ++not_idempotent;
            tracks.push_back(smooth_asd(t, cfg));
        }
        const auto events = detect_turn_events(tracks);
        const auto pr = extract_positive_samples(tracks, events, cfg);
        const double frame = 1.0 / 25.0;

        // Pair samples with the events that were not skipped, in order.
        std::size_t next = 0;
        for (const auto& ev : events) {
            const bool skipped = std::any_of(pr.skipped.begin(), pr.skipped.end(), [&](const SkipRecord& s) {
                return s.event.onset == ev.onset && s.event.new_speaker == ev.new_speaker;
            });
            if (skipped) continue;
            if (next >= pr.samples.size()) {
                ++bound_violations;
                break;
            }
            const auto& s = pr.samples[next++];
            const bool ok = s.face_id == ev.new_speaker && s.t_end <= ev.onset - cfg.l_excl + 1e-9 &&
                            s.t_start >= ev.onset - cfg.l_max - 1e-9 &&
                            std::abs((s.t_end - s.t_start) - cfg.window_len) <= frame + 1e-9;
            if (!ok) ++bound_violations;
        }
        if (next != pr.samples.size()) ++bound_violations;
        positives += pr.samples.size();

        const auto unl = extract_unlabeled_samples(tracks, pr.samples, cfg);
        unlabeled += unl.size();
        for (const auto& u : unl) {
            for (const auto& p : pr.samples) {
                if (p.video_id == u.video_id && p.face_id == u.face_id && u.t_start < p.t_end - 1e-9 &&
                    p.t_start < u.t_end - 1e-9)
                    ++overlaps;
            }
        }
    }
    return verdict(not_idempotent + bound_violations + overlaps == 0 && positives > 0 && unlabeled > 0,
                   "1e3 layouts, " + std::to_string(positives) + " P / " + std::to_string(unlabeled) +
                       " U windows: non-idempotent " + std::to_string(not_idempotent) + ", bound violations " +
                       std::to_string(bound_violations) + ", P/U overlaps " + std::to_string(overlaps));
}

// ---- 6: tuner ---------------------------------------------------------------

Result tuner_properties() {
    const auto grid = grid_trials(SearchSpace{});
    std::set<std::string> distinct;
    for (const auto& c : grid) distinct.insert(c.to_json().dump());

    Rng rng(606);
    std::size_t early = 0, mismatches = 0, prunes = 0;
    for (int study = 0; study < 200; ++study) {
        SearchSpace space;
        space.conv1_dims = {8, 16};
        space.conv2_dims = {8};
        space.lstm_layers = {1, 2};
        space.lstm_dims = {16};
        space.learning_rates = {1e-2, 1e-3, 1e-4};
        space.epochs = 12;
        const auto configs = grid_trials(space);
        std::map<std::string, std::vector<double>> scripts;
        std::vector<std::vector<double>> ordered;
        for (const auto& c : configs) {
            std::vector<double> h(12);
            double v = rng.uniform(-0.2, 0.4);
            const double slope = rng.uniform(-0.01, 0.04);
            for (auto& x : h) x = (v += slope + 0.02 * rng.normal());
            scripts[c.to_json().dump()] = h;
            ordered.push_back(h);
        }
        const TrialFn fn = [&](const NetworkConfig& cfg, std::uint64_t, const EpochReporter& report) {
            const auto& h = scripts.at(cfg.to_json().dump());
            for (int e = 1; e <= cfg.epochs; ++e)
                if (!report(e, h[static_cast<std::size_t>(e - 1)])) return;
        };
        const auto report = run_study(space, fn, 9);

        // Oracle replay of the median rule.
        std::vector<std::vector<double>> done;
        for (std::size_t i = 0; i < ordered.size(); ++i) {
            std::vector<double> seen;
            int stop = 0;
            for (int e = 1; e <= 12; ++e) {
                const double v = ordered[i][static_cast<std::size_t>(e - 1)];
                seen.push_back(v);
                std::vector<double> pool;
                for (const auto& d : done)
                    if (static_cast<int>(d.size()) >= e) pool.push_back(d[static_cast<std::size_t>(e - 1)]);
                if (e > 5 && !pool.empty() && v < median(pool)) {
                    stop = e;
                    break;
                }
            }
            const auto& t = report.trials[i];
            const bool pruned = t.status == TrialStatus::pruned;
            if (pruned != (stop != 0) || t.history != seen) ++mismatches;
            if (pruned) {
                ++prunes;
                if (t.history.size() <= 5) ++early;
            }
            done.push_back(seen);
        }
    }
    const bool ok = grid.size() == 1920 && distinct.size() == 1920 && early == 0 && mismatches == 0 && prunes > 0;
    return verdict(ok, std::to_string(grid.size()) + " configs (" + std::to_string(distinct.size()) + " distinct), " +
                           "200 scripted studies: " + std::to_string(prunes) + " prunes, " + std::to_string(early) +
                           " before epoch 6, " + std::to_string(mismatches) + " disagreements with the median oracle");
}

// ---- 7: effect --------------------------------------------------------------

ImageBuffer random_image(Rng& rng, int w, int h) {
    ImageBuffer img{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w * h * 3))};
    for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.below(256));
    return img;
}

Result effect_properties() {
    Rng rng(707);
    std::size_t passthrough_errors = 0, center_errors = 0;
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const int w = 3 + 2 * static_cast<int>(rng.below(20)), h = 3 + 2 * static_cast<int>(rng.below(20));
        std::vector<ImageBuffer> frames;
        std::vector<double> times;
        for (int k = 0; k < 10; ++k) {
            frames.push_back(random_image(rng, w, h));
            times.push_back(k / 25.0);
        }
        LeanTrajectory identity;
        identity.samples.assign(6, LeanSample{});
        if (apply_effect(frames, times, identity, {0.0, 0.2}, {}).frames != frames) ++passthrough_errors;
        if (warp(frames[0], AffineMatrix{}) != frames[0]) ++passthrough_errors;

        const std::array<double, 2> c{static_cast<double>(rng.below(static_cast<std::uint64_t>(w))),
                                      static_cast<double>(rng.below(static_cast<std::uint64_t>(h)))};
        const auto zoomed = warp(frames[0], make_affine(2.0, 0.0, 0.0, c, w, h));
        for (int ch = 0; ch < 3; ++ch) {
            if (zoomed.at(static_cast<int>(c[0]), static_cast<int>(c[1]), ch) !=
                frames[0].at(static_cast<int>(c[0]), static_cast<int>(c[1]), ch))
                ++center_errors;
        }
    }
    for (int i = 0; i < 1000; ++i) {
        const auto m = make_affine(rng.uniform(1.0, kMaxLeanScale), rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2),
                                   {rng.uniform(0, 640), rng.uniform(0, 480)}, 640, 480);
        const auto inv = m.inverse();
        const double x = rng.uniform(-100, 740), y = rng.uniform(-100, 580);
        const auto p = m.apply(x, y);
        const auto q = inv.apply(p[0], p[1]);
        worst = std::max({worst, std::abs(q[0] - x), std::abs(q[1] - y)});
    }
    return verdict(passthrough_errors + center_errors == 0 && worst <= 1e-9,
                   "identity pass-through errors " + std::to_string(passthrough_errors) + ", 2x zoom center errors " +
                       std::to_string(center_errors) + ", inverse round trip worst " + fmt(worst, 3) + " px (tol 1e-9)");
}

// ---- 8: determinism ---------------------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int quiet_run(const std::vector<std::string>& args) {
    std::ostringstream sink;
    auto* out = std::cout.rdbuf(sink.rdbuf());
    const int code = cli::run(args);
    std::cout.rdbuf(out);
    return code;
}

std::string full_run(const fs::path& dir) {
    const auto d = dir.string();
    const std::string seed = "11";
    int rc = quiet_run({"--seed", seed, "synth", "--out", d + "/sessions", "--sessions", "2", "--length", "300"});
    rc |= quiet_run({"--seed", seed, "extract", "--tracks", d + "/sessions", "--out", d + "/pu.json"});
    rc |= quiet_run({"--seed", seed, "extract", "--tracks", d + "/sessions", "--out", d + "/labeled.json", "--mode",
                     "labeled", "--unlabeled-per-minute", "10"});
    rc |= quiet_run({"--seed", seed, "train", "--data", d + "/pu.json", "--val", d + "/labeled.json", "--out",
                     d + "/model.bin", "--epochs", "4"});
    rc |= quiet_run({"--seed", seed, "eval", "--model", d + "/model.bin", "--data", d + "/labeled.json", "--out",
                     d + "/metrics.json"});
    if (rc != 0) return {};
    return slurp(dir / "metrics.json");
}

Result determinism() {
    const auto a = full_run(fixtures::temp_dir("acceptance_det_a"));
    const auto b = full_run(fixtures::temp_dir("acceptance_det_b"));
    if (a.empty() || b.empty()) return verdict(false, "a pipeline step failed");
    const auto j = nlohmann::json::parse(a);
    return verdict(a == b, "metrics JSON " + std::string(a == b ? "byte-identical" : "differs") + " across two runs (" +
                               std::to_string(a.size()) + " bytes, mcc " + fmt(j["mcc"].get<double>()) + ")");
}

// ---- 9: published dataset ---------------------------------------------------

Result published_dataset() {
    const char* root = std::getenv("TURNGRAB_REFERENCE_DATA");
    if (root == nullptr || !fs::exists(fs::path(root) / "train.json")) {
        return {Outcome::skip, "set TURNGRAB_REFERENCE_DATA to a directory with train.json, val.json, test.json sample sets"};
    }
    const fs::path dir(root);
    const auto tr = read_sample_set(dir / "train.json");
    const auto va = read_sample_set(dir / "val.json");
    const auto te = read_sample_set(dir / "test.json");
    std::vector<const Sample*> p, u;
    for (const auto& s : tr.samples) (s.pu_role == PuRole::positive ? p : u).push_back(&s);
    const auto val_view = labeled_view(va.samples, MergeMode::val_merge);
    const auto test_view = labeled_view(te.samples, MergeMode::val_merge);
    RiskConfig rc;
    rc.estimator = Estimator::nnpu;
    rc.prior = estimate_prior(val_view.labels);
    auto net = tuned_network();
    net.seq_len = tr.seq_len;
    const auto res = train(p, u, val_view, net, rc);
    const auto scores = score_all(res.params, test_view.samples);
    const auto report = evaluation_report(scores, test_view.labels, 0.0);
    const double m = report["mcc"].get<double>(), a = report["auc"].get<double>();
    return verdict(std::abs(m - 0.175) <= 0.08 && std::abs(a - 0.602) <= 0.05,
                   "test MCC " + fmt(m) + " (0.175 +- 0.08), AUC " + fmt(a) + " (0.602 +- 0.05)");
}

struct Criterion {
    int id;
    std::string name;
    std::function<Result()> run;
};

}  // namespace

int main(int argc, char** argv) {
    log::set_level(log::Level::error);
    const std::vector<Criterion> criteria{
        {1, "gradient correctness", gradient_check},
        {2, "risk estimator algebra", risk_algebra},
        {3, "PU vs PN oracle", pu_vs_pn},
        {4, "metric oracles", metric_oracles},
        {5, "pipeline properties", pipeline_properties},
        {6, "tuner", tuner_properties},
        {7, "effect", effect_properties},
        {8, "determinism", determinism},
        {9, "published dataset (optional)", published_dataset},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    int failures = 0, skips = 0, ran = 0;
    for (const auto& c : criteria) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Result r;
        try {
            r = c.run();
        } catch (const std::exception& e) {
            r = verdict(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const char* tag = r.outcome == Outcome::pass ? "PASS" : r.outcome == Outcome::fail ? "FAIL" : "SKIP";
        if (r.outcome == Outcome::fail) ++failures;
        if (r.outcome == Outcome::skip) ++skips;
        ++ran;
        std::cout << tag << " [" << c.id << "] " << c.name << ": " << r.detail << " (" << fmt(secs, 3) << " s)"
                  << std::endl;
    }
    if (failures > 0) return 1;
    return ran > 0 && skips == ran ? 77 : 0;
}
