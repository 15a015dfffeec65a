#pragma once

// Deterministic modality bridges: an exponential-decay integrator that
// renders intensity frames from events, and a DVS-style simulator that emits
// events at log-intensity threshold crossings between frames.

#include <cstdint>

#include "evanon/event.hpp"
#include "evanon/io.hpp"

namespace evanon {

struct E2VConfig {
  std::uint64_t frame_period_us = 10000;
  std::uint64_t decay_half_life_us = 50000;
  double contrast_gain = 0.2;  // log-intensity step applied per event
  double mid_gray = 128.0;     // zero-information intensity
};

struct V2EConfig {
  double threshold = 0.2;  // contrast threshold C in log-intensity units
  double log_eps = 1e-3;
  std::uint64_t refractory_us = 0;
  std::uint64_t max_events_per_pixel_per_frame_pair = 0;  // 0 = unbounded
  std::uint64_t seed = 0;  // reserved for noise extensions; unused today
};

inline double log_intensity(double intensity, double log_eps) {
  return std::log(intensity / 255.0 + log_eps);
}

/// Integrates per-pixel log-intensity state (decaying with the configured
/// half-life, stepping by contrast_gain * polarity per event) and renders
/// frames at frame_period intervals from the first event on:
/// clamp(mid_gray * exp(state), 0, 255). An empty stream yields a single
/// mid-gray frame at t = 0.
FrameSequence reconstruct_frames(const EventStream& stream, const E2VConfig& cfg);

/// Per pixel, linearly interpolates log intensity between consecutive frames
/// and emits an event each time the signal crosses the running reference
/// level by +-threshold, advancing the reference by one threshold per event.
/// Crossing times round half-up to integer microseconds; output is
/// canonically sorted. Requires at least two frames.
EventStream simulate_events(const FrameSequence& seq, const V2EConfig& cfg,
                            unsigned threads = 1);

}  // namespace evanon
