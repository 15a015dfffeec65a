#include "evanon/roi.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "evanon/errors.hpp"
#include "evanon/random.hpp"

namespace evanon {

BoxTrajectory make_trajectory(std::vector<BoxKeyframe> keyframes) {
  for (std::size_t i = 0; i < keyframes.size(); ++i) {
    const BoxKeyframe& kf = keyframes[i];
    if (!(kf.x1 < kf.x2) || !(kf.y1 < kf.y2)) {
      throw ValidationError("keyframe " + std::to_string(i) +
                            ": degenerate box");
    }
    if (i > 0 && kf.t_us <= keyframes[i - 1].t_us) {
      throw ValidationError("keyframe " + std::to_string(i) +
                            ": timestamps not strictly increasing");
    }
  }
  return BoxTrajectory{std::move(keyframes)};
}

Box box_at(const BoxTrajectory& traj, std::uint64_t t_us) {
  if (traj.empty()) {
    throw ValidationError("trajectory has no keyframes");
  }
  const auto& kfs = traj.keyframes;
  if (t_us <= kfs.front().t_us) {
    const auto& kf = kfs.front();
    return {kf.x1, kf.y1, kf.x2, kf.y2};
  }
  if (t_us >= kfs.back().t_us) {
    const auto& kf = kfs.back();
    return {kf.x1, kf.y1, kf.x2, kf.y2};
  }
  const auto upper = std::upper_bound(
      kfs.begin(), kfs.end(), t_us,
      [](std::uint64_t t, const BoxKeyframe& kf) { return t < kf.t_us; });
  const BoxKeyframe& b = *upper;
  const BoxKeyframe& a = *(upper - 1);
  const double alpha = static_cast<double>(t_us - a.t_us) /
                       static_cast<double>(b.t_us - a.t_us);
  return {a.x1 + (b.x1 - a.x1) * alpha, a.y1 + (b.y1 - a.y1) * alpha,
          a.x2 + (b.x2 - a.x2) * alpha, a.y2 + (b.y2 - a.y2) * alpha};
}

double feather_retention_probability(double d, double sigma) {
  return std::exp(-(d * d) / (2.0 * sigma * sigma));
}

double perimeter_distance(const Box& box, double x, double y) {
  return std::min(std::min(x - box.x1, box.x2 - x),
                  std::min(y - box.y1, box.y2 - y));
}

namespace {

template <class Keep>
EventStream filter_events(const EventStream& stream, Keep&& keep) {
  EventStream out;
  out.width = stream.width;
  out.height = stream.height;
  for (const Event& e : stream.events) {
    if (keep(e)) out.events.push_back(e);
  }
  return out;
}

}  // namespace

EventStream filter_roi(const EventStream& stream, const BoxTrajectory& traj) {
  if (traj.empty()) throw ValidationError("trajectory has no keyframes");
  return filter_events(stream, [&](const Event& e) {
    return box_at(traj, e.t).contains(e.x, e.y);
  });
}

EventStream filter_outside_roi(const EventStream& stream,
                               const BoxTrajectory& traj) {
  if (traj.empty()) throw ValidationError("trajectory has no keyframes");
  return filter_events(stream, [&](const Event& e) {
    return !box_at(traj, e.t).contains(e.x, e.y);
  });
}

EventStream filter_background(const EventStream& stream,
                              const BoxTrajectory& traj,
                              const FeatherConfig& cfg) {
  if (traj.empty()) throw ValidationError("trajectory has no keyframes");
  if (!(cfg.sigma > 0.0)) throw ValidationError("sigma must be positive");
  Rng rng(cfg.seed);
  return filter_events(stream, [&](const Event& e) {
    const Box box = box_at(traj, e.t);
    if (!box.contains(e.x, e.y)) return true;
    const double d = perimeter_distance(box, e.x, e.y);
    return uniform53(rng) < feather_retention_probability(d, cfg.sigma);
  });
}

EventStream warp_and_composite(const EventStream& anon, const EventStream& bg,
                               const BoxTrajectory& traj_anon,
                               const BoxTrajectory& traj_tgt, WarpStats* stats) {
  if (traj_anon.empty() || traj_tgt.empty()) {
    throw ValidationError("trajectory has no keyframes");
  }
  EventStream out;
  out.width = bg.width;
  out.height = bg.height;
  out.events = bg.events;

  WarpStats local;
  if (!anon.empty()) {
    const std::uint64_t a_min = anon.events.front().t;
    const std::uint64_t a_max = anon.events.back().t;
    // One affine map of [a_min, a_max] onto the background span; with no
    // background the anon timeline is kept as is.
    std::uint64_t b_min = a_min, b_max = a_max;
    if (!bg.empty()) {
      b_min = bg.events.front().t;
      b_max = bg.events.back().t;
    }
    const double scale = a_max > a_min
                             ? static_cast<double>(b_max - b_min) /
                                   static_cast<double>(a_max - a_min)
                             : 0.0;
    for (const Event& e : anon.events) {
      std::uint64_t t_mapped;
      if (a_max > a_min) {
        t_mapped = b_min + static_cast<std::uint64_t>(round_half_up(
                               static_cast<double>(e.t - a_min) * scale));
      } else {
        // Instantaneous anon stream: place it mid-span.
        t_mapped = b_min + (b_max - b_min) / 2;
      }
      const Box src_box = box_at(traj_anon, t_mapped);
      const Box tgt_box = box_at(traj_tgt, t_mapped);
      const double x_warped =
          tgt_box.cx() + (e.x - src_box.cx()) / src_box.width() * tgt_box.width();
      const double y_warped =
          tgt_box.cy() + (e.y - src_box.cy()) / src_box.height() * tgt_box.height();
      const std::int64_t xi = round_half_up(x_warped);
      const std::int64_t yi = round_half_up(y_warped);
      if (xi < 0 || yi < 0 || xi >= static_cast<std::int64_t>(out.width) ||
          yi >= static_cast<std::int64_t>(out.height)) {
        ++local.dropped_oob;
        continue;
      }
      ++local.injected;
      out.events.push_back({static_cast<std::uint16_t>(xi),
                            static_cast<std::uint16_t>(yi), t_mapped, e.p});
    }
  }
  if (stats) *stats = local;
  return sort_canonical(std::move(out));
}

AnonymizeResult anonymize_pipeline(const EventStream& src,
                                   const FrameSequence& anon_frames,
                                   const BoxTrajectory& traj,
                                   const FeatherConfig& feather,
                                   const V2EConfig& v2e, unsigned threads) {
  AnonymizeResult result;

  EventStream background = filter_background(src, traj, feather);
  result.report.kept_bg = background.size();
  result.report.feathered_out = src.size() - background.size();

  const EventStream simulated = simulate_events(anon_frames, v2e, threads);
  const EventStream face = filter_roi(simulated, traj);

  WarpStats warp_stats;
  result.stream = warp_and_composite(face, background, traj, traj, &warp_stats);
  result.report.injected = warp_stats.injected;
  result.report.dropped_oob = warp_stats.dropped_oob;
  return result;
}

void write_composition_report(
    const std::filesystem::path& path, const CompositionReport& report,
    const std::vector<std::pair<std::string, std::string>>& config) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  out << "kept_bg=" << report.kept_bg << "\n";
  out << "feathered_out=" << report.feathered_out << "\n";
  out << "injected=" << report.injected << "\n";
  out << "dropped_oob=" << report.dropped_oob << "\n";
  for (const auto& [key, value] : config) {
    out << key << "=" << value << "\n";
  }
  out.flush();
  if (!out) {
    throw IoError("write failure on " + path.string());
  }
}

}  // namespace evanon
