#include "evanon/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>

#include "evanon/errors.hpp"
#include "evanon/kdtree.hpp"
#include "evanon/parallel.hpp"
#include "evanon/random.hpp"

namespace evanon {

Aggregate aggregate_values(std::span<const double> values, std::size_t skipped) {
  Aggregate agg;
  agg.used = values.size();
  agg.skipped = skipped;
  if (values.empty()) return agg;
  double sum = 0.0;
  for (double v : values) sum += v;
  agg.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - agg.mean) * (v - agg.mean);
  agg.stddev = std::sqrt(sq / static_cast<double>(values.size()));
  return agg;
}

double chamfer_distance(const NormalizedCloud& a, const NormalizedCloud& b) {
  if (a.empty() || b.empty()) {
    throw ValidationError("chamfer distance requires non-empty clouds");
  }
  const KdTree3 tree_a(a.points);
  const KdTree3 tree_b(b.points);
  double sum_a = 0.0;
  for (const auto& p : a.points) sum_a += std::sqrt(tree_b.nearest(p).second);
  double sum_b = 0.0;
  for (const auto& p : b.points) sum_b += std::sqrt(tree_a.nearest(p).second);
  return sum_a / static_cast<double>(a.size()) +
         sum_b / static_cast<double>(b.size());
}

double wasserstein1(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) {
    throw ValidationError("wasserstein1 requires non-empty samples");
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::uint64_t n = a.size();
  const std::uint64_t m = b.size();
  // Quantile positions compared on the exact common grid k / (n * m).
  std::uint64_t i = 0, j = 0, pos = 0;
  double total = 0.0;
  while (i < n && j < m) {
    const std::uint64_t pa = (i + 1) * m;
    const std::uint64_t pb = (j + 1) * n;
    const std::uint64_t next = std::min(pa, pb);
    total += static_cast<double>(next - pos) * std::fabs(a[i] - b[j]);
    pos = next;
    if (pa == next) ++i;
    if (pb == next) ++j;
  }
  return total / (static_cast<double>(n) * static_cast<double>(m));
}

std::vector<std::array<double, 3>> sphere_directions(std::size_t count,
                                                     std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::array<double, 3>> dirs;
  dirs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    dirs.push_back(unit_sphere_direction(rng));
  }
  return dirs;
}

std::vector<double> sliced_w1_per_direction(
    const NormalizedCloud& a, const NormalizedCloud& b,
    std::span<const std::array<double, 3>> directions) {
  std::vector<double> values;
  values.reserve(directions.size());
  std::vector<double> proj_a(a.size()), proj_b(b.size());
  for (const auto& dir : directions) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto& p = a.points[i];
      proj_a[i] = p[0] * dir[0] + p[1] * dir[1] + p[2] * dir[2];
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
      const auto& p = b.points[i];
      proj_b[i] = p[0] * dir[0] + p[1] * dir[1] + p[2] * dir[2];
    }
    values.push_back(wasserstein1(proj_a, proj_b));
  }
  return values;
}

namespace {

// Shared windowed-metric driver: identical window boundaries over the union
// span of both streams, per-side normalization, optional per-polarity split.
template <class CloudMetric>
WindowedMetric windowed_metric(const EventStream& a, const EventStream& b,
                               std::uint64_t window_len_us, double overlap,
                               bool per_polarity, unsigned threads,
                               CloudMetric&& metric) {
  if (a.empty() && b.empty()) {
    throw ComputationError("no comparable windows: both streams are empty");
  }
  std::uint64_t t_first = UINT64_MAX, t_last = 0;
  for (const EventStream* s : {&a, &b}) {
    if (!s->empty()) {
      t_first = std::min(t_first, s->events.front().t);
      t_last = std::max(t_last, s->events.back().t);
    }
  }
  const auto windows = make_windows(t_first, t_last, window_len_us, overlap);

  WindowedMetric result;
  result.window_len_us = window_len_us;
  result.windows.resize(windows.size());

  parallel_for(windows.size(), threads, [&](std::size_t i) {
    WindowScore& score = result.windows[i];
    score.window = windows[i];
    const auto [a0, a1] = window_range(a, windows[i]);
    const auto [b0, b1] = window_range(b, windows[i]);
    score.count_a = a1 - a0;
    score.count_b = b1 - b0;

    const std::span<const Event> ea(a.events.data() + a0, a1 - a0);
    const std::span<const Event> eb(b.events.data() + b0, b1 - b0);

    if (!per_polarity) {
      if (ea.empty() || eb.empty()) {
        score.skipped = true;
        return;
      }
      score.value = metric(normalize_points(ea), normalize_points(eb));
      return;
    }

    double sum = 0.0;
    int classes = 0;
    for (const std::int8_t pol : {std::int8_t{-1}, std::int8_t{1}}) {
      std::vector<Event> ca, cb;
      for (const Event& e : ea) {
        if (e.p == pol) ca.push_back(e);
      }
      for (const Event& e : eb) {
        if (e.p == pol) cb.push_back(e);
      }
      if (ca.empty() || cb.empty()) continue;
      sum += metric(normalize_points(ca), normalize_points(cb));
      ++classes;
    }
    if (classes == 0) {
      score.skipped = true;
    } else {
      score.value = sum / classes;
    }
  });

  std::vector<double> used;
  std::size_t skipped = 0;
  for (const WindowScore& s : result.windows) {
    if (s.skipped) {
      ++skipped;
    } else {
      used.push_back(s.value);
    }
  }
  if (used.empty()) {
    throw ComputationError("no comparable windows");
  }
  result.aggregate = aggregate_values(used, skipped);
  return result;
}

}  // namespace

WindowedMetric stcd(const EventStream& a, const EventStream& b,
                    const StcdConfig& cfg, unsigned threads) {
  return windowed_metric(a, b, cfg.window_len_us, cfg.overlap_fraction,
                         cfg.per_polarity, threads,
                         [](const NormalizedCloud& ca, const NormalizedCloud& cb) {
                           return chamfer_distance(ca, cb);
                         });
}

WindowedMetric emd_sliced(const EventStream& a, const EventStream& b,
                          const EmdConfig& cfg, unsigned threads) {
  if (cfg.num_slices == 0) {
    throw ValidationError("slice count must be at least 1");
  }
  const auto directions = sphere_directions(cfg.num_slices, cfg.seed);
  return windowed_metric(
      a, b, cfg.window_len_us, cfg.overlap_fraction, cfg.per_polarity, threads,
      [&directions](const NormalizedCloud& ca, const NormalizedCloud& cb) {
        const auto values = sliced_w1_per_direction(ca, cb, directions);
        double sum = 0.0;
        for (double v : values) sum += v;
        return sum / static_cast<double>(values.size());
      });
}

// ---------------------------------------------------------------------------
// Frame-space metrics

namespace {

template <class A, class B, class Fn>
std::size_t for_matched(const std::vector<A>& xs, const std::vector<B>& ys,
                        Fn&& fn) {
  std::size_t i = 0, j = 0, matched = 0;
  while (i < xs.size() && j < ys.size()) {
    if (xs[i].frame_index < ys[j].frame_index) {
      ++i;
    } else if (ys[j].frame_index < xs[i].frame_index) {
      ++j;
    } else {
      fn(xs[i], ys[j]);
      ++matched;
      ++i;
      ++j;
    }
  }
  return matched;
}

double vector_norm(std::span<const double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  return std::sqrt(sq);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return dot / (vector_norm(a) * vector_norm(b));
}

TrackAggregate finish(std::vector<std::pair<int, double>> per_frame,
                      std::size_t skipped) {
  TrackAggregate out;
  std::vector<double> values;
  values.reserve(per_frame.size());
  for (const auto& [index, v] : per_frame) values.push_back(v);
  out.agg = aggregate_values(values, skipped);
  out.per_frame = std::move(per_frame);
  return out;
}

}  // namespace

TrackAggregate identity_similarity(const EmbeddingTrack& src,
                                   const EmbeddingTrack& gen) {
  std::vector<std::pair<int, double>> per_frame;
  std::size_t skipped = 0;
  for_matched(src.frames, gen.frames,
              [&](const EmbeddingFrame& s, const EmbeddingFrame& g) {
                if (vector_norm(s.v) == 0.0 || vector_norm(g.v) == 0.0) {
                  ++skipped;
                  return;
                }
                per_frame.emplace_back(s.frame_index,
                                       cosine_similarity(s.v, g.v));
              });
  return finish(std::move(per_frame), skipped);
}

TrackAggregate temporal_stability(const EmbeddingTrack& track) {
  if (track.frames.size() < 2) {
    throw ValidationError("temporal stability needs at least 2 frames");
  }
  std::vector<std::pair<int, double>> per_pair;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i + 1 < track.frames.size(); ++i) {
    const EmbeddingFrame& cur = track.frames[i];
    const EmbeddingFrame& next = track.frames[i + 1];
    if (vector_norm(cur.v) == 0.0 || vector_norm(next.v) == 0.0) {
      ++skipped;
      continue;
    }
    per_pair.emplace_back(cur.frame_index, cosine_similarity(cur.v, next.v));
  }
  if (per_pair.empty()) {
    throw ComputationError("no comparable consecutive embedding pairs");
  }
  return finish(std::move(per_pair), skipped);
}

TrackAggregate pose_error(const PoseTrack& orig, const PoseTrack& gen) {
  std::vector<std::pair<int, double>> per_frame;
  const std::size_t matched = for_matched(
      orig.frames, gen.frames, [&](const PoseFrame& o, const PoseFrame& g) {
        const double mae = (std::fabs(o.yaw_deg - g.yaw_deg) +
                            std::fabs(o.pitch_deg - g.pitch_deg) +
                            std::fabs(o.roll_deg - g.roll_deg)) /
                           3.0;
        per_frame.emplace_back(o.frame_index, mae);
      });
  const std::size_t unmatched =
      orig.frames.size() + gen.frames.size() - 2 * matched;
  return finish(std::move(per_frame), unmatched);
}

TrackAggregate mimicry_error(const LandmarkTrack& orig, const LandmarkTrack& gen) {
  std::vector<std::pair<int, double>> per_frame;
  std::size_t skipped = 0;
  for_matched(orig.frames, gen.frames,
              [&](const LandmarkFrame& o, const LandmarkFrame& g) {
                if (o.points.size() != kNumLandmarks ||
                    g.points.size() != kNumLandmarks) {
                  throw ValidationError("landmark frame must carry 106 points");
                }
                if (!(o.iod > 0.0)) {
                  ++skipped;
                  return;
                }
                double sum = 0.0;
                for (std::size_t i = 0; i < kNumLandmarks; ++i) {
                  const double dx = o.points[i][0] - g.points[i][0];
                  const double dy = o.points[i][1] - g.points[i][1];
                  sum += std::sqrt(dx * dx + dy * dy) / o.iod;
                }
                per_frame.emplace_back(o.frame_index,
                                       sum / static_cast<double>(kNumLandmarks));
              });
  return finish(std::move(per_frame), skipped);
}

double box_iou(double ax1, double ay1, double ax2, double ay2, double bx1,
               double by1, double bx2, double by2) {
  const double ix = std::max(0.0, std::min(ax2, bx2) - std::max(ax1, bx1));
  const double iy = std::max(0.0, std::min(ay2, by2) - std::max(ay1, by1));
  const double inter = ix * iy;
  const double area_a = (ax2 - ax1) * (ay2 - ay1);
  const double area_b = (bx2 - bx1) * (by2 - by1);
  const double uni = area_a + area_b - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

DetectionUtility detection_utility(const DetectionTrack& ref,
                                   const DetectionTrack& anon) {
  if (ref.frames.empty() || anon.frames.empty()) {
    throw ValidationError("detection tracks must be non-empty");
  }
  DetectionUtility out;

  auto confidences = [](const DetectionTrack& track) {
    std::vector<double> values;
    for (const DetectionFrame& f : track.frames) {
      if (f.det) values.push_back(f.det->confidence);
    }
    return values;
  };
  const auto conf_ref = confidences(ref);
  const auto conf_anon = confidences(anon);
  if (conf_ref.empty()) {
    throw ComputationError("reference has no detections");
  }
  out.conf_ref = aggregate_values(conf_ref, ref.frames.size() - conf_ref.size());
  out.conf_anon =
      aggregate_values(conf_anon, anon.frames.size() - conf_anon.size());

  std::vector<double> ious;
  for_matched(ref.frames, anon.frames,
              [&](const DetectionFrame& r, const DetectionFrame& a) {
                if (r.det && a.det) {
                  ious.push_back(box_iou(r.det->x1, r.det->y1, r.det->x2,
                                         r.det->y2, a.det->x1, a.det->y1,
                                         a.det->x2, a.det->y2));
                }
              });
  out.iou = aggregate_values(ious, 0);

  out.rate_ref = static_cast<double>(conf_ref.size()) /
                 static_cast<double>(ref.frames.size());
  out.rate_anon = static_cast<double>(conf_anon.size()) /
                  static_cast<double>(anon.frames.size());
  out.det_rate_error = std::fabs(out.rate_anon - out.rate_ref) / out.rate_ref;
  return out;
}

// ---------------------------------------------------------------------------
// Report

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void emit_aggregate(std::ostream& os, const std::string& key,
                    const Aggregate& agg, const char* item_name) {
  os << key << "_mean=" << fmt(agg.mean) << "\n";
  os << key << "_std=" << fmt(agg.stddev) << "\n";
  os << key << "_" << item_name << "=" << agg.used << "\n";
  os << key << "_skipped=" << agg.skipped << "\n";
}

}  // namespace

void write_report_text(const std::filesystem::path& path,
                       const MetricReport& report) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  for (const auto& [key, value] : report.config) {
    os << key << "=" << value << "\n";
  }
  if (report.stcd_result) {
    emit_aggregate(os, "stcd", report.stcd_result->aggregate, "windows");
  }
  if (report.emd_result) {
    emit_aggregate(os, "emd", report.emd_result->aggregate, "windows");
  }
  if (report.identity) {
    emit_aggregate(os, "identity_similarity", report.identity->agg, "frames");
  }
  if (report.stability_src) {
    emit_aggregate(os, "temporal_stability_src", report.stability_src->agg,
                   "pairs");
  }
  if (report.stability_gen) {
    emit_aggregate(os, "temporal_stability_gen", report.stability_gen->agg,
                   "pairs");
  }
  if (report.pose) {
    emit_aggregate(os, "pose_error_deg", report.pose->agg, "frames");
  }
  if (report.mimicry) {
    emit_aggregate(os, "mimicry_error", report.mimicry->agg, "frames");
  }
  if (report.detection) {
    const DetectionUtility& d = *report.detection;
    emit_aggregate(os, "det_confidence_ref", d.conf_ref, "frames");
    emit_aggregate(os, "det_confidence_anon", d.conf_anon, "frames");
    emit_aggregate(os, "det_iou", d.iou, "frames");
    os << "det_rate_ref=" << fmt(d.rate_ref) << "\n";
    os << "det_rate_anon=" << fmt(d.rate_anon) << "\n";
    os << "det_rate_error=" << fmt(d.det_rate_error) << "\n";
  }
  if (report.event_detection) {
    const DetectionUtility& d = *report.event_detection;
    emit_aggregate(os, "event_iou", d.iou, "frames");
    os << "event_det_rate_error=" << fmt(d.det_rate_error) << "\n";
  }
  os.flush();
  if (!os) {
    throw IoError("write failure on " + path.string());
  }
}

void write_report_csv(const std::filesystem::path& path,
                      const MetricReport& report) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  os << "window_index,t_start_us,t_end_us,count_a,count_b,"
        "density_a_per_ms,density_b_per_ms,stcd,emd,skipped\n";

  const WindowedMetric* base = report.stcd_result ? &*report.stcd_result
                               : report.emd_result ? &*report.emd_result
                                                   : nullptr;
  if (!base) {
    return;
  }
  const double len_ms = static_cast<double>(base->window_len_us) / 1000.0;
  for (std::size_t i = 0; i < base->windows.size(); ++i) {
    const WindowScore& w = base->windows[i];
    os << i << "," << w.window.t_start << "," << w.window.t_end << ","
       << w.count_a << "," << w.count_b << ","
       << fmt(static_cast<double>(w.count_a) / len_ms) << ","
       << fmt(static_cast<double>(w.count_b) / len_ms) << ",";
    if (report.stcd_result && !report.stcd_result->windows[i].skipped) {
      os << fmt(report.stcd_result->windows[i].value);
    }
    os << ",";
    if (report.emd_result && i < report.emd_result->windows.size() &&
        !report.emd_result->windows[i].skipped) {
      os << fmt(report.emd_result->windows[i].value);
    }
    os << "," << (w.skipped ? 1 : 0) << "\n";
  }
  os.flush();
  if (!os) {
    throw IoError("write failure on " + path.string());
  }
}

void print_summary(std::ostream& os, const MetricReport& report) {
  char line[160];
  std::snprintf(line, sizeof(line), "%-28s %12s %12s %8s %8s\n", "metric",
                "mean", "std", "n", "skipped");
  os << line;
  auto row = [&](const char* name, const Aggregate& agg) {
    std::snprintf(line, sizeof(line), "%-28s %12.6f %12.6f %8zu %8zu\n", name,
                  agg.mean, agg.stddev, agg.used, agg.skipped);
    os << line;
  };
  if (report.stcd_result) row("stcd", report.stcd_result->aggregate);
  if (report.emd_result) row("emd", report.emd_result->aggregate);
  if (report.identity) row("identity_similarity", report.identity->agg);
  if (report.stability_src)
    row("temporal_stability_src", report.stability_src->agg);
  if (report.stability_gen)
    row("temporal_stability_gen", report.stability_gen->agg);
  if (report.pose) row("pose_error_deg", report.pose->agg);
  if (report.mimicry) row("mimicry_error", report.mimicry->agg);
  if (report.detection) {
    row("det_confidence_ref", report.detection->conf_ref);
    row("det_confidence_anon", report.detection->conf_anon);
    row("det_iou", report.detection->iou);
    std::snprintf(line, sizeof(line), "%-28s %12.6f\n", "det_rate_error",
                  report.detection->det_rate_error);
    os << line;
  }
  if (report.event_detection) {
    row("event_iou", report.event_detection->iou);
  }
}

}  // namespace evanon
