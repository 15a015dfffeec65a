#include "evanon/frame_bridge.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "evanon/errors.hpp"
#include "evanon/parallel.hpp"

namespace evanon {

namespace {

std::uint8_t render_intensity(double state, double mid_gray) {
  const double value = mid_gray * std::exp(state);
  const double clamped = std::min(255.0, std::max(0.0, value));
  return static_cast<std::uint8_t>(round_half_up(clamped));
}

void validate_e2v(const E2VConfig& cfg) {
  if (cfg.frame_period_us == 0) throw ValidationError("frame period must be positive");
  if (cfg.decay_half_life_us == 0) throw ValidationError("decay half-life must be positive");
  if (!(cfg.contrast_gain > 0.0)) throw ValidationError("contrast gain must be positive");
  if (!(cfg.mid_gray > 0.0)) throw ValidationError("mid-gray must be positive");
}

}  // namespace

FrameSequence reconstruct_frames(const EventStream& stream, const E2VConfig& cfg) {
  validate_e2v(cfg);

  FrameSequence seq;
  seq.width = stream.width;
  seq.height = stream.height;

  if (stream.empty()) {
    if (seq.width == 0 || seq.height == 0) {
      seq.width = std::max<std::uint16_t>(seq.width, 1);
      seq.height = std::max<std::uint16_t>(seq.height, 1);
    }
    Frame frame;
    frame.t_us = 0;
    frame.pixels.assign(static_cast<std::size_t>(seq.width) * seq.height,
                        render_intensity(0.0, cfg.mid_gray));
    seq.frames.push_back(std::move(frame));
    return seq;
  }

  const std::size_t num_pixels = static_cast<std::size_t>(seq.width) * seq.height;
  std::vector<double> state(num_pixels, 0.0);
  std::vector<std::uint64_t> last_update(num_pixels, stream.events.front().t);
  const double half_life = static_cast<double>(cfg.decay_half_life_us);

  const std::uint64_t t_first = stream.events.front().t;
  const std::uint64_t span = stream.events.back().t - t_first;
  const std::uint64_t frame_count = span / cfg.frame_period_us + 1;

  std::size_t next_event = 0;
  for (std::uint64_t k = 0; k < frame_count; ++k) {
    const std::uint64_t frame_t = t_first + k * cfg.frame_period_us;
    // Fold in every event up to and including the frame instant.
    while (next_event < stream.events.size() &&
           stream.events[next_event].t <= frame_t) {
      const Event& e = stream.events[next_event++];
      const std::size_t idx = static_cast<std::size_t>(e.y) * seq.width + e.x;
      const double dt = static_cast<double>(e.t - last_update[idx]);
      state[idx] = state[idx] * std::exp2(-dt / half_life) +
                   cfg.contrast_gain * static_cast<double>(e.p);
      last_update[idx] = e.t;
    }
    Frame frame;
    frame.t_us = frame_t;
    frame.pixels.resize(num_pixels);
    for (std::size_t i = 0; i < num_pixels; ++i) {
      const double dt = static_cast<double>(frame_t - last_update[i]);
      frame.pixels[i] =
          render_intensity(state[i] * std::exp2(-dt / half_life), cfg.mid_gray);
    }
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

EventStream simulate_events(const FrameSequence& seq, const V2EConfig& cfg,
                            unsigned threads) {
  if (seq.frames.size() < 2) {
    throw ValidationError("simulation needs at least 2 frames, got " +
                          std::to_string(seq.frames.size()));
  }
  if (!(cfg.threshold > 0.0)) throw ValidationError("threshold must be positive");
  if (!(cfg.log_eps > 0.0)) throw ValidationError("log-eps must be positive");

  const std::size_t num_pixels = static_cast<std::size_t>(seq.width) * seq.height;
  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    if (seq.frames[k].pixels.size() != num_pixels) {
      throw ValidationError("frame " + std::to_string(k) +
                            ": dimension mismatch");
    }
    if (k > 0 && seq.frames[k].t_us <= seq.frames[k - 1].t_us) {
      throw ValidationError("frame " + std::to_string(k) +
                            ": non-monotone timestamps");
    }
  }

  std::array<double, 256> log_lut;
  for (int v = 0; v < 256; ++v) {
    log_lut[static_cast<std::size_t>(v)] = log_intensity(v, cfg.log_eps);
  }

  // The signal side of a crossing comparison is inclusive within a small
  // epsilon, so a step of exactly k thresholds emits exactly k events.
  constexpr double kCrossEps = 1e-9;

  std::vector<std::vector<Event>> per_row(seq.height);
  parallel_for(seq.height, threads, [&](std::size_t row) {
    std::vector<Event>& out = per_row[row];
    for (std::uint16_t x = 0; x < seq.width; ++x) {
      const std::size_t idx = row * seq.width + x;
      double ref = log_lut[seq.frames.front().pixels[idx]];
      bool has_last_emit = false;
      std::uint64_t last_emit_t = 0;

      for (std::size_t k = 0; k + 1 < seq.frames.size(); ++k) {
        const double it = log_lut[seq.frames[k].pixels[idx]];
        const double itdt = log_lut[seq.frames[k + 1].pixels[idx]];
        if (it == itdt) continue;
        const double pol = itdt > it ? 1.0 : -1.0;
        const std::uint64_t t0 = seq.frames[k].t_us;
        const std::uint64_t t1 = seq.frames[k + 1].t_us;
        std::uint64_t emitted_this_pair = 0;

        for (;;) {
          const double cross = ref + pol * cfg.threshold;
          const bool crossed =
              pol > 0 ? (cross > it && cross <= itdt + kCrossEps)
                      : (cross < it && cross >= itdt - kCrossEps);
          if (!crossed) break;

          double frac = (cross - it) / (itdt - it);
          frac = std::min(1.0, std::max(0.0, frac));
          const std::uint64_t t_event = t0 + static_cast<std::uint64_t>(
              round_half_up(frac * static_cast<double>(t1 - t0)));

          ref = cross;
          const bool capped =
              cfg.max_events_per_pixel_per_frame_pair != 0 &&
              emitted_this_pair >= cfg.max_events_per_pixel_per_frame_pair;
          const bool refractory_blocked =
              has_last_emit && cfg.refractory_us != 0 &&
              t_event - last_emit_t < cfg.refractory_us;
          if (!capped && !refractory_blocked) {
            out.push_back({x, static_cast<std::uint16_t>(row), t_event,
                           static_cast<std::int8_t>(pol > 0 ? 1 : -1)});
            last_emit_t = t_event;
            has_last_emit = true;
            ++emitted_this_pair;
          }
        }
      }
    }
  });

  EventStream stream;
  stream.width = seq.width;
  stream.height = seq.height;
  std::size_t total = 0;
  for (const auto& row : per_row) total += row.size();
  stream.events.reserve(total);
  for (const auto& row : per_row) {
    stream.events.insert(stream.events.end(), row.begin(), row.end());
  }
  return sort_canonical(std::move(stream));
}

}  // namespace evanon
