#include <doctest.h>

#include <cmath>
#include <map>

#include "evanon/errors.hpp"
#include "evanon/roi.hpp"
#include "helpers.hpp"

using namespace evanon;
using namespace evanon::testing;

namespace {

BoxKeyframe kf(int index, std::uint64_t t, double x1, double y1, double x2,
               double y2) {
  return BoxKeyframe{index, t, x1, y1, x2, y2};
}

BoxTrajectory static_box(double x1, double y1, double x2, double y2) {
  return make_trajectory({kf(0, 0, x1, y1, x2, y2)});
}

}  // namespace

TEST_CASE("box_at interpolates linearly and hits keyframes exactly") {
  const BoxTrajectory traj = make_trajectory(
      {kf(0, 0, 10, 5, 50, 45), kf(1, 1000, 20, 15, 70, 65)});
  const Box mid = box_at(traj, 500);
  CHECK(mid.x1 == 15.0);
  CHECK(mid.y1 == 10.0);
  CHECK(mid.x2 == 60.0);
  CHECK(mid.y2 == 55.0);

  const Box at0 = box_at(traj, 0);
  CHECK(at0.x1 == 10.0);
  CHECK(at0.x2 == 50.0);
  const Box at1 = box_at(traj, 1000);
  CHECK(at1.x1 == 20.0);
  CHECK(at1.y2 == 65.0);
}

TEST_CASE("box_at clamps outside the keyframe range") {
  const BoxTrajectory traj = make_trajectory(
      {kf(0, 1000, 10, 10, 20, 20), kf(1, 2000, 30, 30, 40, 40)});
  const Box before = box_at(traj, 0);
  CHECK(before.x1 == 10.0);
  const Box after = box_at(traj, 99999);
  CHECK(after.x1 == 30.0);
  CHECK(after.y2 == 40.0);
}

TEST_CASE("box_at is continuous along the trajectory") {
  const BoxTrajectory traj = make_trajectory(
      {kf(0, 0, 10, 10, 60, 60), kf(1, 100000, 110, 40, 200, 140)});
  // Steepest per-axis slope is 1e-3 px/us.
  for (std::uint64_t t = 0; t < 100000; t += 997) {
    const Box a = box_at(traj, t);
    const Box b = box_at(traj, t + 1);
    CHECK(std::fabs(b.x1 - a.x1) <= 1e-3 + 1e-9);
    CHECK(std::fabs(b.y2 - a.y2) <= 1e-3 + 1e-9);
  }
}

TEST_CASE("make_trajectory validates shape and ordering") {
  CHECK_THROWS_AS(make_trajectory({kf(0, 0, 10, 10, 5, 20)}), ValidationError);
  CHECK_THROWS_AS(
      make_trajectory({kf(0, 5, 0, 0, 1, 1), kf(1, 5, 0, 0, 1, 1)}),
      ValidationError);
}

TEST_CASE("filter_roi keeps edge events inclusively") {
  const BoxTrajectory traj = static_box(10, 10, 20, 20);
  const EventStream s = make_stream(
      64, 64,
      {ev(10, 15, 0, 1), ev(20, 15, 1, 1), ev(9, 15, 2, 1), ev(21, 15, 3, 1),
       ev(15, 10, 4, 1), ev(15, 20, 5, 1), ev(15, 9, 6, 1), ev(15, 21, 7, 1)});
  const EventStream roi = filter_roi(s, traj);
  REQUIRE(roi.size() == 4);  // the four on-edge events
  for (const Event& e : roi.events) {
    CHECK((e.x == 10 || e.x == 20 || e.y == 10 || e.y == 20));
  }
}

TEST_CASE("filter_roi with a sensor-wide box is the identity") {
  const EventStream s = random_stream(41, 500, 64, 64, 10000);
  const BoxTrajectory traj = static_box(0, 0, 63, 63);
  CHECK(filter_roi(s, traj).events == s.events);
}

TEST_CASE("roi and strict complement partition the stream") {
  const EventStream s = random_stream(42, 2000, 128, 128, 50000);
  const BoxTrajectory traj = make_trajectory(
      {kf(0, 0, 20, 30, 70, 90), kf(1, 50000, 40, 10, 100, 70)});
  const EventStream inside = filter_roi(s, traj);
  const EventStream outside = filter_outside_roi(s, traj);
  REQUIRE(inside.size() + outside.size() == s.size());

  std::map<std::tuple<int, int, std::uint64_t, int>, int> counts;
  for (const Event& e : s.events) ++counts[{e.x, e.y, e.t, e.p}];
  for (const Event& e : inside.events) --counts[{e.x, e.y, e.t, e.p}];
  for (const Event& e : outside.events) --counts[{e.x, e.y, e.t, e.p}];
  for (const auto& [key, n] : counts) CHECK(n == 0);
}

TEST_CASE("feather retention probability follows the half-Gaussian") {
  CHECK(feather_retention_probability(0.0, 5.0) == 1.0);
  CHECK(feather_retention_probability(5.0, 5.0) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  // Non-increasing in distance.
  for (double d = 0.0; d < 20.0; d += 0.5) {
    CHECK(feather_retention_probability(d + 0.5, 5.0) <=
          feather_retention_probability(d, 5.0));
  }
}

TEST_CASE("perimeter events always survive feathering") {
  const BoxTrajectory traj = static_box(10, 10, 30, 30);
  std::vector<Event> events;
  for (int i = 0; i < 200; ++i) {
    events.push_back(ev(10, static_cast<std::uint16_t>(10 + (i % 21)),
                        static_cast<std::uint64_t>(i), 1));
  }
  const EventStream s = make_stream(64, 64, std::move(events));
  FeatherConfig cfg;
  cfg.seed = 7;
  CHECK(filter_background(s, traj, cfg).size() == s.size());
}

TEST_CASE("feathering keeps exterior events and is seed-deterministic") {
  const EventStream s = random_stream(43, 5000, 128, 128, 20000);
  const BoxTrajectory traj = static_box(30, 30, 90, 90);
  FeatherConfig cfg;
  cfg.sigma = 5.0;
  cfg.seed = 11;
  const EventStream a = filter_background(s, traj, cfg);
  const EventStream b = filter_background(s, traj, cfg);
  CHECK(a.events == b.events);

  const EventStream outside = filter_outside_roi(s, traj);
  // Every exterior event must be present in the feathered stream.
  std::size_t found = 0, idx = 0;
  for (const Event& e : a.events) {
    if (idx < outside.size() && outside.events[idx] == e) {
      ++idx;
      ++found;
    }
  }
  CHECK(found == outside.size());
}

TEST_CASE("feathering at one sigma retains the expected fraction") {
  // 1e5 interior events at exactly d = sigma from the perimeter.
  const double sigma = 5.0;
  const BoxTrajectory traj = static_box(10, 10, 200, 200);
  std::vector<Event> events;
  events.reserve(100000);
  for (int i = 0; i < 100000; ++i) {
    events.push_back(ev(15, 100, static_cast<std::uint64_t>(i), 1));  // d = 5
  }
  const EventStream s = make_stream(256, 256, std::move(events));
  FeatherConfig cfg;
  cfg.sigma = sigma;
  cfg.seed = 3;
  const double retained =
      static_cast<double>(filter_background(s, traj, cfg).size()) / 100000.0;
  CHECK(retained == doctest::Approx(std::exp(-0.5)).epsilon(0.0165));
}

TEST_CASE("feathering converges to the identity for huge sigma") {
  const EventStream s = random_stream(44, 3000, 128, 128, 20000);
  const BoxTrajectory traj = static_box(10, 10, 100, 100);
  FeatherConfig cfg;
  cfg.sigma = 1e9;
  cfg.seed = 1;
  CHECK(filter_background(s, traj, cfg).events == s.events);
}

TEST_CASE("warp is the identity for identical trajectories and spans") {
  const EventStream anon = random_stream(45, 2000, 128, 128, 30000);
  EventStream bg;
  bg.width = 128;
  bg.height = 128;
  bg.events = {ev(0, 0, anon.events.front().t, 1),
               ev(1, 1, anon.events.back().t, 1)};
  const BoxTrajectory traj = make_trajectory(
      {kf(0, 0, 20.5, 10.5, 111.5, 91.5), kf(1, 30000, 25.5, 15.5, 116.5, 96.5)});
  WarpStats stats;
  const EventStream out = warp_and_composite(anon, bg, traj, traj, &stats);
  CHECK(stats.dropped_oob == 0);
  CHECK(stats.injected == anon.size());

  std::map<std::tuple<int, int, std::uint64_t, int>, int> counts;
  for (const Event& e : anon.events) ++counts[{e.x, e.y, e.t, e.p}];
  for (const Event& e : bg.events) ++counts[{e.x, e.y, e.t, e.p}];
  for (const Event& e : out.events) --counts[{e.x, e.y, e.t, e.p}];
  for (const auto& [key, n] : counts) CHECK(n == 0);
}

TEST_CASE("warp maps box center to box center and edges to edges") {
  // Anon box [0,100]x[0,50], target box [200,360]x[40,120], both static.
  const BoxTrajectory traj_anon = static_box(0, 0, 100, 50);
  const BoxTrajectory traj_tgt = static_box(200, 40, 360, 120);
  EventStream anon;
  anon.width = 128;
  anon.height = 64;
  anon.events = {ev(50, 25, 0, 1),    // center
                 ev(100, 25, 10, 1),  // right edge midline
                 ev(0, 0, 20, -1)};   // top-left corner
  anon = sort_canonical(std::move(anon));
  EventStream bg;
  bg.width = 512;
  bg.height = 512;
  bg.events = {ev(0, 0, 0, 1), ev(0, 1, 20, 1)};

  const EventStream out = warp_and_composite(anon, bg, traj_anon, traj_tgt);
  REQUIRE(out.size() == 5);
  std::vector<Event> warped;
  for (const Event& e : out.events) {
    if (!(e.x == 0 && e.y <= 1)) warped.push_back(e);
  }
  REQUIRE(warped.size() == 3);
  CHECK(warped[0].x == 280);  // c_tgt,x
  CHECK(warped[0].y == 80);   // c_tgt,y
  CHECK(warped[1].x == 360);  // c_tgt,x + w_tgt / 2
  CHECK(warped[1].y == 80);
  CHECK(warped[2].x == 200);
  CHECK(warped[2].y == 40);
}

TEST_CASE("warp drops and counts out-of-bounds results") {
  const BoxTrajectory traj_anon = static_box(0, 0, 10, 10);
  const BoxTrajectory traj_tgt = static_box(50, 50, 90, 90);
  EventStream anon;
  anon.width = 16;
  anon.height = 16;
  anon.events = {ev(0, 0, 0, 1), ev(10, 10, 10, 1)};
  EventStream bg;
  bg.width = 64;  // target box right edge (90) exceeds the sensor
  bg.height = 64;
  bg.events = {ev(0, 0, 0, 1), ev(0, 1, 10, 1)};

  WarpStats stats;
  const EventStream out = warp_and_composite(anon, bg, traj_anon, traj_tgt, &stats);
  CHECK(stats.injected == 1);
  CHECK(stats.dropped_oob == 1);
  CHECK(stats.injected + stats.dropped_oob == anon.size());
  CHECK(out.size() == bg.size() + stats.injected);
  CHECK_NOTHROW(validate_stream(out));  // sorted and within sensor bounds
}

TEST_CASE("warp requires non-empty trajectories") {
  EventStream anon = make_stream(8, 8, {ev(1, 1, 0, 1)});
  EventStream bg = make_stream(8, 8, {ev(2, 2, 0, 1)});
  CHECK_THROWS_AS(
      warp_and_composite(anon, bg, BoxTrajectory{}, static_box(0, 0, 4, 4)),
      ValidationError);
  CHECK_THROWS_AS(
      warp_and_composite(anon, bg, static_box(0, 0, 4, 4), BoxTrajectory{}),
      ValidationError);
}

TEST_CASE("anonymize_pipeline with constant frames returns the feathered background") {
  const EventStream src = random_stream(46, 5000, 64, 64, 40000);
  const BoxTrajectory traj = static_box(16, 16, 48, 48);
  FrameSequence frames;
  frames.width = 64;
  frames.height = 64;
  frames.frames.push_back({0, std::vector<std::uint8_t>(64 * 64, 100)});
  frames.frames.push_back({40000, std::vector<std::uint8_t>(64 * 64, 100)});

  FeatherConfig feather;
  feather.seed = 5;
  const AnonymizeResult result =
      anonymize_pipeline(src, frames, traj, feather, {});
  CHECK(result.report.injected == 0);
  CHECK(result.report.dropped_oob == 0);
  const EventStream expected = filter_background(src, traj, feather);
  CHECK(result.stream.events == expected.events);
  CHECK(result.report.kept_bg == expected.size());
  CHECK(result.report.kept_bg + result.report.feathered_out == src.size());
}

TEST_CASE("vanishing sigma empties the face region") {
  // All source events strictly inside the ROI; with sigma -> 0+ and nothing
  // to inject, only the injected events could remain - here none.
  std::vector<Event> events;
  for (int i = 0; i < 400; ++i) {
    events.push_back(ev(static_cast<std::uint16_t>(20 + (i % 20)),
                        static_cast<std::uint16_t>(20 + (i / 20) % 20),
                        static_cast<std::uint64_t>(i * 100), 1));
  }
  const EventStream src = make_stream(64, 64, std::move(events));
  const BoxTrajectory traj = static_box(10, 10, 50, 50);  // all d > 0
  FrameSequence frames;
  frames.width = 64;
  frames.height = 64;
  frames.frames.push_back({0, std::vector<std::uint8_t>(64 * 64, 100)});
  frames.frames.push_back({39900, std::vector<std::uint8_t>(64 * 64, 100)});

  FeatherConfig feather;
  feather.sigma = 1e-9;
  feather.seed = 2;
  const AnonymizeResult result = anonymize_pipeline(src, frames, traj, feather, {});
  CHECK(result.stream.empty());
  CHECK(result.report.feathered_out == src.size());
}

TEST_CASE("anonymize_pipeline passes a background-only stream through") {
  // No source events inside the ROI: the probability-1 branch only.
  std::vector<Event> events;
  for (int i = 0; i < 500; ++i) {
    events.push_back(ev(static_cast<std::uint16_t>(i % 10),
                        static_cast<std::uint16_t>(i % 8),
                        static_cast<std::uint64_t>(i * 10), 1));
  }
  const EventStream src = make_stream(64, 64, std::move(events));
  const BoxTrajectory traj = static_box(32, 32, 60, 60);
  FrameSequence frames;
  frames.width = 64;
  frames.height = 64;
  frames.frames.push_back({0, std::vector<std::uint8_t>(64 * 64, 100)});
  frames.frames.push_back({4990, std::vector<std::uint8_t>(64 * 64, 100)});

  const AnonymizeResult result = anonymize_pipeline(src, frames, traj, {}, {});
  CHECK(result.stream.events == src.events);
  CHECK(result.report.feathered_out == 0);
}

TEST_CASE("anonymize_pipeline injects simulated face events") {
  // A bright square appearing inside the ROI in otherwise dark frames.
  const std::uint16_t side = 64;
  FrameSequence frames;
  frames.width = side;
  frames.height = side;
  for (int k = 0; k < 5; ++k) {
    Frame f;
    f.t_us = static_cast<std::uint64_t>(k) * 10000;
    f.pixels.assign(side * side, 30);
    if (k >= 2) {
      for (int y = 24; y < 40; ++y) {
        for (int x = 24; x < 40; ++x) {
          f.pixels[y * side + x] = 200;
        }
      }
    }
    frames.frames.push_back(std::move(f));
  }
  const EventStream src = random_stream(47, 3000, side, side, 40000);
  const BoxTrajectory traj = static_box(20, 20, 44, 44);

  FeatherConfig feather;
  feather.sigma = 3.0;
  feather.seed = 9;
  const AnonymizeResult result = anonymize_pipeline(src, frames, traj, feather, {});
  CHECK(result.report.injected > 0);
  CHECK(is_canonical(result.stream));
  CHECK(result.stream.size() ==
        result.report.kept_bg + result.report.injected);
}
