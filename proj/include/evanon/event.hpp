#pragma once

// Event data model, canonical ordering, time windowing and per-window
// normalization. Everything else in the toolkit is built on these types.

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace evanon {

// One asynchronous brightness-change sample.
struct Event {
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::uint64_t t = 0;  // microseconds
  std::int8_t p = 1;    // polarity, -1 or +1

  friend bool operator==(const Event& a, const Event& b) {
    return a.t == b.t && a.x == b.x && a.y == b.y && a.p == b.p;
  }
};

// Canonical order: (t, y, x, p) ascending. The tie-break beyond t exists
// only to make sorting deterministic for simultaneous events.
inline bool canonical_less(const Event& a, const Event& b) {
  if (a.t != b.t) return a.t < b.t;
  if (a.y != b.y) return a.y < b.y;
  if (a.x != b.x) return a.x < b.x;
  return a.p < b.p;
}

// Time-sorted event collection with sensor geometry.
struct EventStream {
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::vector<Event> events;

  bool empty() const { return events.empty(); }
  std::size_t size() const { return events.size(); }
};

// Half-open interval [t_start, t_end) in microseconds.
struct TimeWindow {
  std::uint64_t t_start = 0;
  std::uint64_t t_end = 0;

  bool contains(std::uint64_t t) const { return t >= t_start && t < t_end; }
  std::uint64_t length() const { return t_end - t_start; }

  friend bool operator==(const TimeWindow& a, const TimeWindow& b) {
    return a.t_start == b.t_start && a.t_end == b.t_end;
  }
};

// Events of one window mapped to the unit cube, spatial and temporal axes
// normalized independently by the window's own extrema.
struct NormalizedCloud {
  std::vector<std::array<double, 3>> points;  // (u, v, w), each in [0, 1]

  bool empty() const { return points.empty(); }
  std::size_t size() const { return points.size(); }
};

struct WindowSlice {
  TimeWindow window;
  std::size_t begin = 0;  // index range into the sorted stream
  std::size_t end = 0;
};

// Shared quantization rule for continuous-time math: round half-up.
inline std::int64_t round_half_up(double x) {
  return static_cast<std::int64_t>(std::floor(x + 0.5));
}

/// Returns the stream sorted into canonical (t, y, x, p) order.
/// The event multiset is unchanged; idempotent.
EventStream sort_canonical(EventStream stream);

bool is_canonical(const EventStream& stream);

/// Checks ordering and sensor bounds; throws ValidationError on violation.
void validate_stream(const EventStream& stream);

/// Window start times advance by window_len * (1 - overlap_fraction),
/// clamped to at least 1 us. Generation stops with the first window whose
/// end passes t_last, so every instant of [t_first, t_last] is covered.
std::vector<TimeWindow> make_windows(std::uint64_t t_first,
                                     std::uint64_t t_last,
                                     std::uint64_t window_len_us,
                                     double overlap_fraction);

/// Overlapping windows over the stream's own span, each with the index
/// range of its events. Empty stream yields an empty sequence.
std::vector<WindowSlice> slice_windows(const EventStream& stream,
                                       std::uint64_t window_len_us,
                                       double overlap_fraction);

/// Index range [first, last) of events with t inside the window.
/// Requires a canonically sorted stream.
std::pair<std::size_t, std::size_t> window_range(const EventStream& stream,
                                                 const TimeWindow& window);

/// Maps events to the unit cube using their own per-axis extrema. An axis
/// with zero extent maps to 0.5. Throws on an empty input.
NormalizedCloud normalize_points(std::span<const Event> events);

/// normalize_points over the events of one window.
NormalizedCloud normalize_window(const EventStream& stream,
                                 const TimeWindow& window);

}  // namespace evanon
