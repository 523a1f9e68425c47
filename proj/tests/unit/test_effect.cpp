#include <doctest.h>

#include <cmath>
#include <fstream>

#include "fixtures.hpp"
#include "turngrab/effect.hpp"

using namespace turngrab;

namespace {

ImageBuffer gradient(int w, int h) {
    ImageBuffer img{w, h, {}};
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            img.data.push_back(static_cast<std::uint8_t>(x * 10));
            img.data.push_back(static_cast<std::uint8_t>(y * 10));
            img.data.push_back(static_cast<std::uint8_t>((x + y) * 5));
        }
    return img;
}

ImageBuffer checkerboard(int w, int h) {
    ImageBuffer img{w, h, {}};
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::uint8_t v = ((x + y) % 2) ? 255 : 0;
            img.data.insert(img.data.end(), {v, v, v});
        }
    return img;
}

// Track whose box grows so its area rises linearly from a0 to 2 a0 over
// [onset - lead, onset], with a fixed center.
FaceTrack growing_track(double onset, double lead, double dx_per_s = 0.0) {
    auto t = fixtures::make_track("v", "A", 0.0, onset + 1.0, {});
    const double base = 100.0;
    for (auto& f : t.frames) {
        const double u = std::clamp((f.time - (onset - lead)) / lead, 0.0, 1.0);
        const double side = base * std::sqrt(1.0 + u);
        const double cx = 300.0 + dx_per_s * std::max(0.0, f.time - (onset - lead));
        f.bbox = {cx - side / 2, 200.0 - side / 2, side, side};
    }
    return t;
}

LeanTrajectory ramp(int n, double peak) {
    LeanTrajectory t;
    t.frame_rate = 25.0;
    for (int k = 0; k < n; ++k) t.samples.push_back({1.0 + peak * std::sin(M_PI * k / (n - 1)), 0.0, 0.0});
    t.samples.back() = LeanSample{};
    return t;
}

}  // namespace

TEST_CASE("constant face gives the identity trajectory") {
    const auto t = fixtures::make_track("v", "A", 0.0, 10.0, {});
    TurnEvent ev{"v", "A", 5.0, std::nullopt, std::nullopt};
    const auto traj = trajectory_from_tracks({t}, {ev});
    CHECK(traj.samples.size() == 2u * 51u - 1u);
    for (const auto& s : traj.samples) {
        CHECK(s.scale == 1.0);
        CHECK(s.shift_x == 0.0);
        CHECK(s.shift_y == 0.0);
    }
}

TEST_CASE("area doubling ramps the scale up to sqrt 2") {
    const auto t = growing_track(6.0, 2.0);
    TurnEvent ev{"v", "A", 6.0, std::nullopt, std::nullopt};
    const auto traj = trajectory_from_tracks({t}, {ev});
    const std::size_t n = 51;
    REQUIRE(traj.samples.size() == 2 * n - 1);
    CHECK(traj.samples[n - 1].scale == doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
    for (std::size_t k = 1; k < n; ++k) {
        const double u = static_cast<double>(k) / 50.0;
        CHECK(traj.samples[k].scale == doctest::Approx(std::sqrt(1.0 + u)).epsilon(1e-9));
    }
    // Mirror back to identity.
    CHECK(traj.samples.front().scale == 1.0);
    CHECK(traj.samples.back().scale == 1.0);
    for (std::size_t k = 0; k < n; ++k) CHECK(traj.samples[k].scale == traj.samples[2 * n - 2 - k].scale);
}

TEST_CASE("single event trajectory equals its own curve") {
    auto t = growing_track(6.0, 2.0, 10.0);
    TrajectoryOptions opts;
    opts.frame_width = 640;
    opts.frame_height = 480;
    TurnEvent ev{"v", "A", 6.0, std::nullopt, std::nullopt};
    const auto curve = event_lean_curve({t}, ev, opts);
    const auto traj = trajectory_from_tracks({t}, {ev}, opts);
    REQUIRE(curve.size() == 51);
    for (std::size_t k = 1; k < curve.size(); ++k) {
        CHECK(traj.samples[k].scale == curve[k].scale);
        CHECK(traj.samples[k].shift_x == curve[k].shift_x);
    }
    CHECK(curve.back().shift_x == doctest::Approx(20.0 / 640.0));
}

TEST_CASE("trajectory clamps and averages") {
    auto big = growing_track(6.0, 2.0);
    // Second face growing 4x in area: scale 2 clamps to 1.5.
    auto huge = fixtures::make_track("v", "B", 0.0, 7.0, {});
    for (auto& f : huge.frames) {
        const double u = std::clamp((f.time - 4.0) / 2.0, 0.0, 1.0);
        const double side = 50.0 * (1.0 + u);
        f.bbox = {100, 100, side, side};
    }
    TurnEvent eb{"v", "B", 6.0, std::nullopt, std::nullopt};
    const auto alone = trajectory_from_tracks({huge}, {eb});
    CHECK(alone.samples[50].scale == kMaxLeanScale);
    TurnEvent ea{"v", "A", 6.0, std::nullopt, std::nullopt};
    const auto both = trajectory_from_tracks({big, huge}, {ea, eb});
    CHECK(both.samples[50].scale == doctest::Approx(std::clamp(0.5 * (std::sqrt(2.0) + 2.0), 1.0, 1.5)));
    CHECK(both.samples[25].scale == doctest::Approx(0.5 * (std::sqrt(1.5) + 1.5)));
    TurnEvent early{"v", "A", 1.0, std::nullopt, std::nullopt};
    CHECK_THROWS_AS(trajectory_from_tracks({big}, {early}), Error);
}

TEST_CASE("trajectory json round trip") {
    const auto t = ramp(9, 0.3);
    const auto back = LeanTrajectory::from_json(t.to_json());
    CHECK(back.samples.size() == 9);
    CHECK(back.samples[4].scale == t.samples[4].scale);
    CHECK(back.duration() == doctest::Approx(9.0 / 25.0));
}

TEST_CASE("affine matrix properties") {
    const auto id = make_affine(1.0, 0.0, 0.0, {50, 40}, 100, 80);
    CHECK(id.is_identity());
    Rng rng(51);
    for (int i = 0; i < 1000; ++i) {
        const double s = rng.uniform(1.0, 1.5);
        const std::array<double, 2> c{rng.uniform(0, 640), rng.uniform(0, 480)};
        const auto m = make_affine(s, rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), c, 640, 480);
        const auto inv = m.inverse();
        const double x = rng.uniform(0, 640), y = rng.uniform(0, 480);
        const auto p = m.apply(x, y);
        const auto q = inv.apply(p[0], p[1]);
        CHECK(std::abs(q[0] - x) <= 1e-9);
        CHECK(std::abs(q[1] - y) <= 1e-9);
        const auto fixed = make_affine(s, 0.0, 0.0, c, 640, 480).apply(c[0], c[1]);
        CHECK(fixed[0] == c[0]);
        CHECK(fixed[1] == c[1]);
    }
}

TEST_CASE("warp identity, translation and zoom") {
    const auto img = gradient(12, 9);
    CHECK(warp(img, AffineMatrix{}) == img);

    // Output (x, y) reads source (x + 1, y): shift left by one with edge clamp.
    AffineMatrix shift;
    shift.m = {1, 0, 1, 0, 1, 0};
    const auto out = warp(img, shift);
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 12; ++x)
            for (int c = 0; c < 3; ++c) CHECK(out.at(x, y, c) == img.at(std::min(x + 1, 11), y, c));

    const auto board = checkerboard(9, 9);
    const auto zoom = warp(board, make_affine(2.0, 0, 0, {4, 4}, 9, 9));
    for (int c = 0; c < 3; ++c) CHECK(zoom.at(4, 4, c) == board.at(4, 4, c));

    ImageBuffer broken{2, 2, std::vector<std::uint8_t>(5)};
    CHECK_THROWS_AS(warp(broken, AffineMatrix{}), Error);
}

TEST_CASE("apply effect scheduling") {
    std::vector<ImageBuffer> frames;
    std::vector<double> times;
    for (int i = 0; i < 100; ++i) {
        frames.push_back(gradient(12, 9));
        frames.back().data[0] = static_cast<std::uint8_t>(i);
        times.push_back(i / 25.0);
    }
    const auto traj = ramp(50, 0.4);  // 2 s

    const auto none = apply_effect(frames, times, traj, {}, {});
    CHECK(none.frames == frames);

    LeanTrajectory identity;
    identity.samples.assign(50, LeanSample{});
    const auto idr = apply_effect(frames, times, identity, {0.0}, {});
    CHECK(idr.frames == frames);

    const auto two = apply_effect(frames, times, traj, {0.4, 0.9}, {});
    CHECK(two.accepted_triggers == std::vector<double>{0.4});
    // Scheduler trace oracle: playback covers [0.4, 2.4), frame i shows
    // trajectory sample i - 10, and only non-identity samples alter a frame.
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const long k = static_cast<long>(i) - 10;
        const bool warped = k > 0 && k < 49;
        if (warped) CHECK(two.frames[i] != frames[i]);
        else CHECK(two.frames[i] == frames[i]);
    }
    // A trigger after playback ends is accepted.
    const auto later = apply_effect(frames, times, traj, {3.0, 0.0}, {});
    CHECK(later.accepted_triggers == std::vector<double>{0.0, 3.0});

    CHECK_THROWS_AS(apply_effect(frames, std::vector<double>(3, 0.0), traj, {}, {}), Error);
}

TEST_CASE("ppm round trip and errors") {
    const auto dir = fixtures::temp_dir("effect_ppm");
    const auto img = gradient(7, 5);
    write_ppm(img, dir / "a.ppm");
    CHECK(read_ppm(dir / "a.ppm") == img);
    std::ofstream(dir / "bad.ppm") << "P3\n1 1\n255\n0 0 0\n";
    CHECK_THROWS_AS(read_ppm(dir / "bad.ppm"), Error);
    std::ofstream(dir / "short.ppm", std::ios::binary) << "P6\n4 4\n255\nabc";
    CHECK_THROWS_AS(read_ppm(dir / "short.ppm"), Error);
    CHECK_THROWS_AS(read_ppm(dir / "none.ppm"), Error);
}
