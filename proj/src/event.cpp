#include "evanon/event.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "evanon/errors.hpp"

namespace evanon {

EventStream sort_canonical(EventStream stream) {
  std::sort(stream.events.begin(), stream.events.end(), canonical_less);
  return stream;
}

bool is_canonical(const EventStream& stream) {
  return std::is_sorted(stream.events.begin(), stream.events.end(),
                        canonical_less);
}

void validate_stream(const EventStream& stream) {
  if (!is_canonical(stream)) {
    throw ValidationError("event stream is not canonically sorted");
  }
  for (std::size_t i = 0; i < stream.events.size(); ++i) {
    const Event& e = stream.events[i];
    if (e.p != -1 && e.p != 1) {
      throw ValidationError("event " + std::to_string(i) +
                            ": polarity must be -1 or +1");
    }
    if (e.x >= stream.width || e.y >= stream.height) {
      throw ValidationError("event " + std::to_string(i) + ": coordinate (" +
                            std::to_string(e.x) + ", " + std::to_string(e.y) +
                            ") outside sensor " + std::to_string(stream.width) +
                            "x" + std::to_string(stream.height));
    }
  }
}

std::vector<TimeWindow> make_windows(std::uint64_t t_first,
                                     std::uint64_t t_last,
                                     std::uint64_t window_len_us,
                                     double overlap_fraction) {
  if (window_len_us == 0) {
    throw ValidationError("window length must be positive");
  }
  if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) {
    throw ValidationError("overlap fraction must lie in [0, 1)");
  }
  if (t_last < t_first) {
    throw ValidationError("window span end precedes start");
  }
  const double stride =
      std::max(1.0, static_cast<double>(window_len_us) * (1.0 - overlap_fraction));

  std::vector<TimeWindow> windows;
  for (std::uint64_t k = 0;; ++k) {
    const std::uint64_t start =
        t_first +
        static_cast<std::uint64_t>(round_half_up(static_cast<double>(k) * stride));
    windows.push_back({start, start + window_len_us});
    if (start + window_len_us > t_last) break;
  }
  return windows;
}

std::vector<WindowSlice> slice_windows(const EventStream& stream,
                                       std::uint64_t window_len_us,
                                       double overlap_fraction) {
  if (stream.empty()) {
    if (window_len_us == 0) {
      throw ValidationError("window length must be positive");
    }
    return {};
  }
  const std::uint64_t t_first = stream.events.front().t;
  const std::uint64_t t_last = stream.events.back().t;
  std::vector<WindowSlice> slices;
  for (const TimeWindow& w :
       make_windows(t_first, t_last, window_len_us, overlap_fraction)) {
    auto [begin, end] = window_range(stream, w);
    slices.push_back({w, begin, end});
  }
  return slices;
}

std::pair<std::size_t, std::size_t> window_range(const EventStream& stream,
                                                 const TimeWindow& window) {
  const auto& ev = stream.events;
  auto lo = std::lower_bound(ev.begin(), ev.end(), window.t_start,
                             [](const Event& e, std::uint64_t t) { return e.t < t; });
  auto hi = std::lower_bound(lo, ev.end(), window.t_end,
                             [](const Event& e, std::uint64_t t) { return e.t < t; });
  return {static_cast<std::size_t>(lo - ev.begin()),
          static_cast<std::size_t>(hi - ev.begin())};
}

NormalizedCloud normalize_points(std::span<const Event> events) {
  if (events.empty()) {
    throw ValidationError("empty window");
  }
  std::uint16_t x_min = std::numeric_limits<std::uint16_t>::max(), x_max = 0;
  std::uint16_t y_min = std::numeric_limits<std::uint16_t>::max(), y_max = 0;
  std::uint64_t t_min = std::numeric_limits<std::uint64_t>::max(), t_max = 0;
  for (const Event& e : events) {
    x_min = std::min(x_min, e.x);
    x_max = std::max(x_max, e.x);
    y_min = std::min(y_min, e.y);
    y_max = std::max(y_max, e.y);
    t_min = std::min(t_min, e.t);
    t_max = std::max(t_max, e.t);
  }
  const double x_ext = static_cast<double>(x_max) - static_cast<double>(x_min);
  const double y_ext = static_cast<double>(y_max) - static_cast<double>(y_min);
  const double t_ext = static_cast<double>(t_max) - static_cast<double>(t_min);

  NormalizedCloud cloud;
  cloud.points.reserve(events.size());
  for (const Event& e : events) {
    const double u = x_ext > 0.0 ? (e.x - x_min) / x_ext : 0.5;
    const double v = y_ext > 0.0 ? (e.y - y_min) / y_ext : 0.5;
    const double w = t_ext > 0.0 ? static_cast<double>(e.t - t_min) / t_ext : 0.5;
    cloud.points.push_back({u, v, w});
  }
  return cloud;
}

NormalizedCloud normalize_window(const EventStream& stream,
                                 const TimeWindow& window) {
  auto [begin, end] = window_range(stream, window);
  return normalize_points(
      std::span<const Event>(stream.events.data() + begin, end - begin));
}

}  // namespace evanon
