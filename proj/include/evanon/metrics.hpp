#pragma once

// Event-space structural metrics (spatiotemporal Chamfer distance, sliced
// Wasserstein approximation of the event mover's distance) and frame-space
// anonymization/utility metrics computed from external-model tracks.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "evanon/event.hpp"
#include "evanon/io.hpp"

namespace evanon {

enum class WindowPairing { kAlignedWindows };

struct StcdConfig {
  std::uint64_t window_len_us = 50000;
  double overlap_fraction = 0.5;
  bool per_polarity = false;
  WindowPairing pairing = WindowPairing::kAlignedWindows;
};

struct EmdConfig {
  std::uint64_t window_len_us = 50000;
  double overlap_fraction = 0.5;
  std::size_t num_slices = 128;
  std::uint64_t seed = 0;
  bool per_polarity = false;
};

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
  std::size_t used = 0;
  std::size_t skipped = 0;
};

Aggregate aggregate_values(std::span<const double> values, std::size_t skipped);

struct WindowScore {
  TimeWindow window;
  std::size_t count_a = 0;
  std::size_t count_b = 0;
  double value = 0.0;
  bool skipped = false;  // one side empty (or no polarity class comparable)
};

struct WindowedMetric {
  std::vector<WindowScore> windows;
  Aggregate aggregate;
  std::uint64_t window_len_us = 0;
};

/// Symmetric Chamfer distance between two normalized clouds with exact
/// nearest-neighbor search.
double chamfer_distance(const NormalizedCloud& a, const NormalizedCloud& b);

/// Exact 1D Wasserstein-1 between two empirical distributions of possibly
/// different sizes (quantile-function integral over the merged breakpoints).
double wasserstein1(std::vector<double> a, std::vector<double> b);

/// Directions drawn uniformly on the unit sphere from the given seed.
std::vector<std::array<double, 3>> sphere_directions(std::size_t count,
                                                     std::uint64_t seed);

/// One exact W1 value per projection direction.
std::vector<double> sliced_w1_per_direction(
    const NormalizedCloud& a, const NormalizedCloud& b,
    std::span<const std::array<double, 3>> directions);

/// Windowed spatiotemporal Chamfer distance. Windows cover the union span
/// of both streams with identical boundaries on both sides; each side is
/// normalized independently per window. Windows with an empty side are
/// skipped and counted. Throws when no window is comparable.
WindowedMetric stcd(const EventStream& a, const EventStream& b,
                    const StcdConfig& cfg, unsigned threads = 1);

/// Windowed sliced-Wasserstein distance over the same normalized clouds,
/// averaging exact 1D W1 over num_slices random directions.
WindowedMetric emd_sliced(const EventStream& a, const EventStream& b,
                          const EmdConfig& cfg, unsigned threads = 1);

// ---------------------------------------------------------------------------
// Frame-space metrics

struct TrackAggregate {
  Aggregate agg;
  std::vector<std::pair<int, double>> per_frame;
};

/// Cosine similarity between matched source/generated embeddings.
/// Zero-norm vectors skip the frame and are counted.
TrackAggregate identity_similarity(const EmbeddingTrack& src,
                                   const EmbeddingTrack& gen);

/// Mean cosine similarity of consecutive embeddings (frame-to-frame
/// identity coherence). Requires at least two frames.
TrackAggregate temporal_stability(const EmbeddingTrack& track);

/// Mean absolute error over (yaw, pitch, roll) per matched frame, degrees.
TrackAggregate pose_error(const PoseTrack& orig, const PoseTrack& gen);

/// Mean landmark distance normalized by the original track's inter-ocular
/// distance per matched frame. Frames with IOD <= 0 are skipped.
TrackAggregate mimicry_error(const LandmarkTrack& orig, const LandmarkTrack& gen);

double box_iou(double ax1, double ay1, double ax2, double ay2, double bx1,
               double by1, double bx2, double by2);

struct DetectionUtility {
  Aggregate conf_ref;   // over reference frames with a detection
  Aggregate conf_anon;  // over anonymized frames with a detection
  Aggregate iou;        // over matched frames where both detect
  double rate_ref = 0.0;
  double rate_anon = 0.0;
  double det_rate_error = 0.0;  // |rate_anon - rate_ref| / rate_ref
};

/// Detection-consistency metrics; throws when the reference track has no
/// detections.
DetectionUtility detection_utility(const DetectionTrack& ref,
                                   const DetectionTrack& anon);

// ---------------------------------------------------------------------------
// Report

struct MetricReport {
  std::vector<std::pair<std::string, std::string>> config;  // audit trail

  std::optional<WindowedMetric> stcd_result;
  std::optional<WindowedMetric> emd_result;
  std::optional<TrackAggregate> identity;
  std::optional<TrackAggregate> stability_src;
  std::optional<TrackAggregate> stability_gen;
  std::optional<TrackAggregate> pose;
  std::optional<TrackAggregate> mimicry;
  std::optional<DetectionUtility> detection;        // intensity-domain
  std::optional<DetectionUtility> event_detection;  // event-domain
};

/// Flat key=value report; only sections with computed metrics appear.
void write_report_text(const std::filesystem::path& path,
                       const MetricReport& report);

/// One row per window: boundaries, counts, densities and per-window values.
void write_report_csv(const std::filesystem::path& path,
                      const MetricReport& report);

/// Human-readable mean/std table.
void print_summary(std::ostream& os, const MetricReport& report);

}  // namespace evanon
