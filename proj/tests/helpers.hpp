#pragma once

// Synthetic stream generators shared by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "evanon/event.hpp"
#include "evanon/io.hpp"
#include "evanon/random.hpp"
#include "evanon/roi.hpp"

namespace evanon::testing {

inline Event ev(std::uint16_t x, std::uint16_t y, std::uint64_t t, int p) {
  return Event{x, y, t, static_cast<std::int8_t>(p)};
}

inline EventStream make_stream(std::uint16_t width, std::uint16_t height,
                               std::vector<Event> events) {
  EventStream s;
  s.width = width;
  s.height = height;
  s.events = std::move(events);
  return sort_canonical(std::move(s));
}

// Uniform random events over the sensor and time span.
inline EventStream random_stream(std::uint64_t seed, std::size_t count,
                                 std::uint16_t width = 320,
                                 std::uint16_t height = 240,
                                 std::uint64_t span_us = 500000) {
  Rng rng(seed);
  EventStream s;
  s.width = width;
  s.height = height;
  s.events.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Event e;
    e.x = static_cast<std::uint16_t>(rng() % width);
    e.y = static_cast<std::uint16_t>(rng() % height);
    e.t = rng() % (span_us + 1);
    e.p = (rng() & 1) ? 1 : -1;
    s.events.push_back(e);
  }
  return sort_canonical(std::move(s));
}

// Face proxy: a ring of events around a center gliding across the sensor,
// plus sparse uniform background noise. The structured content stays inside
// the box returned by face_proxy_trajectory.
struct FaceProxyParams {
  std::uint16_t width = 240;
  std::uint16_t height = 180;
  std::uint64_t span_us = 400000;
  std::size_t ring_events = 40000;
  std::size_t noise_events = 4000;
  double ring_radius = 24.0;
  double cx0 = 40.0, cy0 = 50.0;   // center start
  double cx1 = 200.0, cy1 = 130.0; // center end
};

inline double face_proxy_cx(const FaceProxyParams& p, double f) {
  return p.cx0 + (p.cx1 - p.cx0) * f;
}
inline double face_proxy_cy(const FaceProxyParams& p, double f) {
  return p.cy0 + (p.cy1 - p.cy0) * f;
}

inline EventStream face_proxy_stream(std::uint64_t seed,
                                     const FaceProxyParams& p = {}) {
  Rng rng(seed);
  EventStream s;
  s.width = p.width;
  s.height = p.height;
  s.events.reserve(p.ring_events + p.noise_events);
  constexpr double kTwoPi = 6.28318530717958647692;
  for (std::size_t i = 0; i < p.ring_events; ++i) {
    const double f = uniform53(rng);
    const std::uint64_t t =
        static_cast<std::uint64_t>(f * static_cast<double>(p.span_us));
    const double angle = kTwoPi * uniform53(rng);
    const double r = p.ring_radius * (0.9 + 0.1 * uniform53(rng));
    const double x = face_proxy_cx(p, f) + r * std::cos(angle);
    const double y = face_proxy_cy(p, f) + r * std::sin(angle);
    if (x < 0 || y < 0 || x >= p.width || y >= p.height) continue;
    s.events.push_back(ev(static_cast<std::uint16_t>(x),
                          static_cast<std::uint16_t>(y), t,
                          (rng() & 1) ? 1 : -1));
  }
  for (std::size_t i = 0; i < p.noise_events; ++i) {
    s.events.push_back(ev(static_cast<std::uint16_t>(rng() % p.width),
                          static_cast<std::uint16_t>(rng() % p.height),
                          rng() % (p.span_us + 1), (rng() & 1) ? 1 : -1));
  }
  return sort_canonical(std::move(s));
}

// Box that tracks the proxy's ring with margin, sampled at 25 ms keyframes.
inline BoxTrajectory face_proxy_trajectory(const FaceProxyParams& p = {}) {
  std::vector<BoxKeyframe> kfs;
  const double margin = p.ring_radius + 8.0;
  const std::uint64_t step = 25000;
  int index = 0;
  for (std::uint64_t t = 0; t <= p.span_us; t += step) {
    const double f = static_cast<double>(t) / static_cast<double>(p.span_us);
    BoxKeyframe kf;
    kf.frame_index = index++;
    kf.t_us = t;
    kf.x1 = face_proxy_cx(p, f) - margin;
    kf.x2 = face_proxy_cx(p, f) + margin;
    kf.y1 = face_proxy_cy(p, f) - margin;
    kf.y2 = face_proxy_cy(p, f) + margin;
    kfs.push_back(kf);
  }
  return make_trajectory(std::move(kfs));
}

// Re-capture noise: small Gaussian jitter on coordinates and timestamps.
inline EventStream jitter_recapture(const EventStream& src, std::uint64_t seed,
                                    double jitter_px = 0.3,
                                    double jitter_us = 100.0) {
  Rng rng(seed);
  EventStream out;
  out.width = src.width;
  out.height = src.height;
  out.events.reserve(src.size());
  for (const Event& e : src.events) {
    const double x = e.x + jitter_px * standard_normal(rng);
    const double y = e.y + jitter_px * standard_normal(rng);
    const double t = static_cast<double>(e.t) + jitter_us * standard_normal(rng);
    Event j = e;
    j.x = static_cast<std::uint16_t>(std::clamp<std::int64_t>(
        round_half_up(x), 0, src.width - 1));
    j.y = static_cast<std::uint16_t>(std::clamp<std::int64_t>(
        round_half_up(y), 0, src.height - 1));
    j.t = static_cast<std::uint64_t>(std::max<std::int64_t>(round_half_up(t), 0));
    out.events.push_back(j);
  }
  return sort_canonical(std::move(out));
}

// Content replacement: spatial coordinates of ROI events are permuted among
// each other, destroying the spatiotemporal structure while keeping the
// spatial marginals.
inline EventStream permute_roi_content(const EventStream& src,
                                       const BoxTrajectory& traj,
                                       std::uint64_t seed) {
  Rng rng(seed);
  EventStream out = src;
  std::vector<std::size_t> roi_indices;
  for (std::size_t i = 0; i < out.events.size(); ++i) {
    const Event& e = out.events[i];
    if (box_at(traj, e.t).contains(e.x, e.y)) roi_indices.push_back(i);
  }
  std::vector<std::pair<std::uint16_t, std::uint16_t>> coords;
  coords.reserve(roi_indices.size());
  for (std::size_t i : roi_indices) {
    coords.emplace_back(out.events[i].x, out.events[i].y);
  }
  for (std::size_t i = coords.size(); i > 1; --i) {
    std::swap(coords[i - 1], coords[rng() % i]);
  }
  for (std::size_t k = 0; k < roi_indices.size(); ++k) {
    out.events[roi_indices[k]].x = coords[k].first;
    out.events[roi_indices[k]].y = coords[k].second;
  }
  return sort_canonical(std::move(out));
}

}  // namespace evanon::testing
