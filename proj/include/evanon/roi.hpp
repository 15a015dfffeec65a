#pragma once

// Continuous bounding-box interpolation, dynamic ROI filtering, stochastic
// feathering of the background cutout, center-relative warping of the
// replacement stream and final compositing.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "evanon/event.hpp"
#include "evanon/frame_bridge.hpp"
#include "evanon/io.hpp"

namespace evanon {

struct Box {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double cx() const { return 0.5 * (x1 + x2); }
  double cy() const { return 0.5 * (y1 + y2); }

  // Inclusive on all four edges.
  bool contains(double x, double y) const {
    return x >= x1 && x <= x2 && y >= y1 && y <= y2;
  }
};

// Per-frame keyframes plus the piecewise-linear interpolant between them.
struct BoxTrajectory {
  std::vector<BoxKeyframe> keyframes;  // strictly increasing t_us

  bool empty() const { return keyframes.empty(); }
};

/// Validates box shape and strictly increasing timestamps.
BoxTrajectory make_trajectory(std::vector<BoxKeyframe> keyframes);

/// Piecewise-linear interpolation of the four coordinates; queries before
/// the first or after the last keyframe clamp to the nearest keyframe box.
Box box_at(const BoxTrajectory& traj, std::uint64_t t_us);

struct FeatherConfig {
  double sigma = 5.0;  // pixels
  std::uint64_t seed = 0;
};

/// Half-Gaussian retention probability exp(-d^2 / (2 sigma^2)).
double feather_retention_probability(double d, double sigma);

/// Shortest distance from an interior point to the box perimeter,
/// min(x - x1, x2 - x, y - y1, y2 - y).
double perimeter_distance(const Box& box, double x, double y);

/// Events inside the interpolated box at their own timestamps (inclusive
/// edges). Input must be sorted; output is sorted.
EventStream filter_roi(const EventStream& stream, const BoxTrajectory& traj);

/// Strict complement of filter_roi: events outside the box.
EventStream filter_outside_roi(const EventStream& stream, const BoxTrajectory& traj);

/// Background cutout with stochastic feathering: exterior events are always
/// kept, interior events survive with probability
/// feather_retention_probability(d, sigma) where d is the perimeter distance
/// at the event time. One uniform draw per interior event, consumed in
/// canonical event order from mt19937_64(cfg.seed).
EventStream filter_background(const EventStream& stream, const BoxTrajectory& traj,
                              const FeatherConfig& cfg);

struct WarpStats {
  std::uint64_t injected = 0;     // warped events inside sensor bounds
  std::uint64_t dropped_oob = 0;  // warped events outside sensor bounds
};

/// Aligns the anon stream's time span onto the background span with one
/// affine map, warps each event center-relative from the anon box to the
/// target box evaluated at the mapped time, rounds half-up to integer
/// pixels, drops out-of-bounds results and merges with the background into
/// one canonically sorted stream.
EventStream warp_and_composite(const EventStream& anon, const EventStream& bg,
                               const BoxTrajectory& traj_anon,
                               const BoxTrajectory& traj_tgt,
                               WarpStats* stats = nullptr);

struct CompositionReport {
  std::uint64_t kept_bg = 0;
  std::uint64_t feathered_out = 0;
  std::uint64_t injected = 0;
  std::uint64_t dropped_oob = 0;
};

struct AnonymizeResult {
  EventStream stream;
  CompositionReport report;
};

/// Full compositing pipeline: feather the source background, simulate events
/// from the anonymized frames, crop them to the ROI, warp them into the
/// source trajectory and merge.
AnonymizeResult anonymize_pipeline(const EventStream& src,
                                   const FrameSequence& anon_frames,
                                   const BoxTrajectory& traj,
                                   const FeatherConfig& feather,
                                   const V2EConfig& v2e,
                                   unsigned threads = 1);

/// Text summary with fixed field names (kept_bg, feathered_out, injected,
/// dropped_oob) followed by the resolved configuration.
void write_composition_report(
    const std::filesystem::path& path, const CompositionReport& report,
    const std::vector<std::pair<std::string, std::string>>& config);

}  // namespace evanon
