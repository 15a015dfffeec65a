#include "evanon/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "evanon/errors.hpp"

namespace evanon {
namespace {

constexpr char kEventMagic[4] = {'E', 'V', 'S', '1'};
constexpr std::size_t kEventHeaderSize = 16;
constexpr std::size_t kEventRecordSize = 13;

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) {
    throw IoError("read failure on " + path.string());
  }
  return std::move(buf).str();
}

void write_file_bytes(const std::filesystem::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  out.flush();
  if (!out) {
    throw IoError("write failure on " + path.string());
  }
}

void put_u16(std::string& buf, std::uint16_t v) {
  buf.push_back(static_cast<char>(v & 0xff));
  buf.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

bool has_text_extension(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return ext == ".csv" || ext == ".txt";
}

// --- CSV helpers ----------------------------------------------------------

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      fields.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return fields;
}

template <class T>
T parse_number(std::string_view field, const std::string& context) {
  T value{};
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw IoError(context + ": cannot parse '" + std::string(field) + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) {
      throw IoError(context + ": non-finite value");
    }
  }
  return value;
}

// Iterates the lines of a CSV file, enforcing the given header on line 1.
class CsvReader {
 public:
  CsvReader(const std::filesystem::path& path, std::string_view header)
      : path_(path.string()), content_(read_file_bytes(path)) {
    std::string first = next_raw_line();
    if (first != header) {
      throw IoError(path_ + ": expected header '" + std::string(header) +
                    "', got '" + first + "'");
    }
  }

  // Returns false at end of input. Skips nothing: blank lines are errors
  // except a single trailing newline.
  bool next_row(std::vector<std::string_view>& fields) {
    if (pos_ >= content_.size()) return false;
    std::string_view line = next_line_view();
    ++line_number_;
    if (line.empty() && pos_ >= content_.size()) return false;
    if (line.empty()) {
      throw IoError(path_ + " line " + std::to_string(line_number_) +
                    ": blank line");
    }
    fields = split_fields(line);
    return true;
  }

  std::string context() const {
    return path_ + " line " + std::to_string(line_number_);
  }

 private:
  std::string next_raw_line() {
    std::string_view v = next_line_view();
    ++line_number_;
    return std::string(v);
  }

  std::string_view next_line_view() {
    const std::size_t start = pos_;
    std::size_t end = content_.find('\n', start);
    if (end == std::string::npos) {
      pos_ = content_.size();
      return std::string_view(content_).substr(start);
    }
    pos_ = end + 1;
    return std::string_view(content_).substr(start, end - start);
  }

  std::string path_;
  std::string content_;
  std::size_t pos_ = 0;
  std::size_t line_number_ = 0;
};

}  // namespace

// ---------------------------------------------------------------------------
// Event streams

namespace {

EventStream read_events_binary(const std::filesystem::path& path,
                               const std::string& bytes) {
  if (bytes.size() < kEventHeaderSize) {
    throw IoError(path.string() + ": truncated header (" +
                  std::to_string(bytes.size()) + " bytes, need 16)");
  }
  if (std::memcmp(bytes.data(), kEventMagic, 4) != 0) {
    throw IoError(path.string() + ": bad magic, expected 'EVS1'");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  EventStream stream;
  stream.width = get_u16(p + 4);
  stream.height = get_u16(p + 6);
  const std::uint64_t count = get_u64(p + 8);

  const std::uint64_t available = bytes.size() - kEventHeaderSize;
  if (count > available / kEventRecordSize ||
      count * kEventRecordSize != available) {
    throw IoError(path.string() + ": expected " + std::to_string(count) +
                  " records (" + std::to_string(count * kEventRecordSize) +
                  " bytes after header), found " + std::to_string(available) +
                  " bytes");
  }

  stream.events.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::size_t off = kEventHeaderSize + i * kEventRecordSize;
    const unsigned char* r = p + off;
    Event e;
    e.t = get_u64(r);
    e.x = get_u16(r + 8);
    e.y = get_u16(r + 10);
    const auto pol = static_cast<std::int8_t>(r[12]);
    const std::string where =
        path.string() + ": event " + std::to_string(i) + " at byte offset " +
        std::to_string(off);
    if (pol != -1 && pol != 1) {
      throw IoError(where + ": polarity must be -1 or +1, got " +
                    std::to_string(static_cast<int>(pol)));
    }
    e.p = pol;
    if (e.x >= stream.width || e.y >= stream.height) {
      throw IoError(where + ": coordinate (" + std::to_string(e.x) + ", " +
                    std::to_string(e.y) + ") outside sensor " +
                    std::to_string(stream.width) + "x" +
                    std::to_string(stream.height));
    }
    stream.events.push_back(e);
  }
  return sort_canonical(std::move(stream));
}

EventStream read_events_text(const std::filesystem::path& path) {
  CsvReader csv(path, "t,x,y,p");
  EventStream stream;
  std::uint32_t max_x = 0, max_y = 0;
  std::vector<std::string_view> fields;
  while (csv.next_row(fields)) {
    if (fields.size() != 4) {
      throw IoError(csv.context() + ": expected 4 fields, got " +
                    std::to_string(fields.size()));
    }
    Event e;
    e.t = parse_number<std::uint64_t>(fields[0], csv.context() + " field t");
    e.x = parse_number<std::uint16_t>(fields[1], csv.context() + " field x");
    e.y = parse_number<std::uint16_t>(fields[2], csv.context() + " field y");
    if (e.x > 65534 || e.y > 65534) {
      // Geometry is inferred as max + 1, which must itself fit in u16.
      throw IoError(csv.context() + ": coordinate 65535 leaves no room for " +
                    "the inferred sensor size");
    }
    const int pol = parse_number<int>(fields[3], csv.context() + " field p");
    if (pol != -1 && pol != 1) {
      throw IoError(csv.context() + ": polarity must be -1 or +1, got " +
                    std::to_string(pol));
    }
    e.p = static_cast<std::int8_t>(pol);
    max_x = std::max<std::uint32_t>(max_x, e.x);
    max_y = std::max<std::uint32_t>(max_y, e.y);
    stream.events.push_back(e);
  }
  // The text format carries no geometry; infer the tightest sensor.
  if (!stream.events.empty()) {
    stream.width = static_cast<std::uint16_t>(max_x + 1);
    stream.height = static_cast<std::uint16_t>(max_y + 1);
  }
  return sort_canonical(std::move(stream));
}

}  // namespace

EventStream read_events(const std::filesystem::path& path) {
  if (has_text_extension(path)) {
    return read_events_text(path);
  }
  std::string bytes = read_file_bytes(path);
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kEventMagic, 4) == 0) {
    return read_events_binary(path, bytes);
  }
  throw IoError(path.string() + ": bad magic, expected 'EVS1'");
}

void write_events(const std::filesystem::path& path, const EventStream& stream) {
  if (has_text_extension(path)) {
    std::string out = "t,x,y,p\n";
    for (const Event& e : stream.events) {
      out += std::to_string(e.t);
      out += ',';
      out += std::to_string(e.x);
      out += ',';
      out += std::to_string(e.y);
      out += ',';
      out += std::to_string(static_cast<int>(e.p));
      out += '\n';
    }
    write_file_bytes(path, out);
    return;
  }
  std::string buf;
  buf.reserve(kEventHeaderSize + kEventRecordSize * stream.events.size());
  buf.append(kEventMagic, 4);
  put_u16(buf, stream.width);
  put_u16(buf, stream.height);
  put_u64(buf, stream.events.size());
  for (const Event& e : stream.events) {
    put_u64(buf, e.t);
    put_u16(buf, e.x);
    put_u16(buf, e.y);
    buf.push_back(static_cast<char>(e.p));
  }
  write_file_bytes(path, buf);
}

// ---------------------------------------------------------------------------
// Frame sequences

namespace {

std::string frame_file_name(int index) {
  char name[32];
  std::snprintf(name, sizeof(name), "frame_%06d.pgm", index);
  return name;
}

void write_pgm(const std::filesystem::path& path, std::uint16_t width,
               std::uint16_t height, const std::vector<std::uint8_t>& pixels) {
  std::string buf = "P5\n" + std::to_string(width) + " " +
                    std::to_string(height) + "\n255\n";
  buf.append(reinterpret_cast<const char*>(pixels.data()), pixels.size());
  write_file_bytes(path, buf);
}

// Strict profile: exactly "P5\n<w> <h>\n255\n" followed by w*h bytes.
std::pair<std::uint16_t, std::uint16_t> read_pgm(
    const std::filesystem::path& path, std::vector<std::uint8_t>& pixels) {
  const std::string bytes = read_file_bytes(path);
  std::size_t pos = 0;
  auto expect = [&](std::string_view token) {
    if (bytes.compare(pos, token.size(), token) != 0) {
      throw IoError(path.string() + ": malformed PGM header");
    }
    pos += token.size();
  };
  auto parse_dim = [&](char terminator) {
    std::size_t end = bytes.find(terminator, pos);
    if (end == std::string::npos || end == pos) {
      throw IoError(path.string() + ": malformed PGM header");
    }
    const std::uint32_t v = parse_number<std::uint32_t>(
        std::string_view(bytes).substr(pos, end - pos),
        path.string() + " PGM dimension");
    if (v == 0 || v > 65535) {
      throw IoError(path.string() + ": PGM dimension out of range");
    }
    pos = end + 1;
    return static_cast<std::uint16_t>(v);
  };
  expect("P5\n");
  const std::uint16_t width = parse_dim(' ');
  const std::uint16_t height = parse_dim('\n');
  expect("255\n");
  const std::size_t need = static_cast<std::size_t>(width) * height;
  if (bytes.size() - pos != need) {
    throw IoError(path.string() + ": expected " + std::to_string(need) +
                  " pixel bytes, found " + std::to_string(bytes.size() - pos));
  }
  pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return {width, height};
}

}  // namespace

FrameSequence read_frames(const std::filesystem::path& dir) {
  const auto index_path = dir / "index.csv";
  CsvReader csv(index_path, "frame_index,t_us");
  std::vector<std::pair<int, std::uint64_t>> rows;
  std::vector<std::string_view> fields;
  while (csv.next_row(fields)) {
    if (fields.size() != 2) {
      throw IoError(csv.context() + ": expected 2 fields, got " +
                    std::to_string(fields.size()));
    }
    rows.emplace_back(
        parse_number<int>(fields[0], csv.context() + " field frame_index"),
        parse_number<std::uint64_t>(fields[1], csv.context() + " field t_us"));
  }
  std::sort(rows.begin(), rows.end());

  FrameSequence seq;
  std::uint64_t prev_t = 0;
  bool first = true;
  for (const auto& [index, t] : rows) {
    if (!first && t <= prev_t) {
      throw IoError(index_path.string() + ": non-monotone timestamps at frame " +
                    std::to_string(index));
    }
    prev_t = t;
    first = false;

    const auto frame_path = dir / frame_file_name(index);
    if (!std::filesystem::exists(frame_path)) {
      throw IoError(index_path.string() + ": frame " + std::to_string(index) +
                    " listed in index but " + frame_path.string() +
                    " is missing");
    }
    Frame frame;
    frame.t_us = t;
    auto [w, h] = read_pgm(frame_path, frame.pixels);
    if (seq.frames.empty()) {
      seq.width = w;
      seq.height = h;
    } else if (w != seq.width || h != seq.height) {
      throw IoError(frame_path.string() + ": frame size " + std::to_string(w) +
                    "x" + std::to_string(h) + " differs from sequence " +
                    std::to_string(seq.width) + "x" + std::to_string(seq.height));
    }
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

void write_frames(const std::filesystem::path& dir, const FrameSequence& seq) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  }
  std::string index = "frame_index,t_us\n";
  std::uint64_t prev_t = 0;
  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    const Frame& frame = seq.frames[k];
    if (k > 0 && frame.t_us <= prev_t) {
      throw ValidationError("frame " + std::to_string(k) +
                            ": non-monotone timestamps");
    }
    prev_t = frame.t_us;
    if (frame.pixels.size() !=
        static_cast<std::size_t>(seq.width) * seq.height) {
      throw ValidationError("frame " + std::to_string(k) +
                            ": pixel buffer does not match sequence size");
    }
    write_pgm(dir / frame_file_name(static_cast<int>(k)), seq.width, seq.height,
              frame.pixels);
    index += std::to_string(k) + "," + std::to_string(frame.t_us) + "\n";
  }
  write_file_bytes(dir / "index.csv", index);
}

// ---------------------------------------------------------------------------
// Track files

std::vector<BoxKeyframe> read_boxes(const std::filesystem::path& path) {
  CsvReader csv(path, "frame_index,t_us,x1,y1,x2,y2");
  std::vector<BoxKeyframe> boxes;
  std::vector<std::string_view> fields;
  while (csv.next_row(fields)) {
    if (fields.size() != 6) {
      throw IoError(csv.context() + ": expected 6 fields, got " +
                    std::to_string(fields.size()));
    }
    BoxKeyframe kf;
    kf.frame_index = parse_number<int>(fields[0], csv.context());
    kf.t_us = parse_number<std::uint64_t>(fields[1], csv.context());
    kf.x1 = parse_number<double>(fields[2], csv.context());
    kf.y1 = parse_number<double>(fields[3], csv.context());
    kf.x2 = parse_number<double>(fields[4], csv.context());
    kf.y2 = parse_number<double>(fields[5], csv.context());
    if (kf.x1 >= kf.x2) {
      throw IoError(csv.context() + ": x1 >= x2");
    }
    if (kf.y1 >= kf.y2) {
      throw IoError(csv.context() + ": y1 >= y2");
    }
    boxes.push_back(kf);
  }
  std::sort(boxes.begin(), boxes.end(),
            [](const BoxKeyframe& a, const BoxKeyframe& b) {
              return a.frame_index < b.frame_index;
            });
  for (std::size_t i = 1; i < boxes.size(); ++i) {
    if (boxes[i].t_us <= boxes[i - 1].t_us) {
      throw IoError(path.string() + ": keyframe timestamps not strictly " +
                    "increasing at frame " + std::to_string(boxes[i].frame_index));
    }
  }
  return boxes;
}

namespace {

template <class FrameT>
void reject_duplicate_frames(const std::filesystem::path& path,
                             const std::vector<FrameT>& frames) {
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i].frame_index == frames[i - 1].frame_index) {
      throw IoError(path.string() + ": duplicate frame_index " +
                    std::to_string(frames[i].frame_index));
    }
  }
}

}  // namespace

EmbeddingTrack read_embeddings(const std::filesystem::path& path) {
  std::string header = "frame_index";
  for (std::size_t i = 0; i < kEmbeddingDim; ++i) {
    header += ",v" + std::to_string(i);
  }
  CsvReader csv(path, header);
  EmbeddingTrack track;
  std::vector<std::string_view> fields;
  while (csv.next_row(fields)) {
    if (fields.size() != kEmbeddingDim + 1) {
      throw IoError(csv.context() + ": expected 512 components, got " +
                    std::to_string(fields.size() - 1));
    }
    EmbeddingFrame frame;
    frame.frame_index = parse_number<int>(fields[0], csv.context());
    frame.v.reserve(kEmbeddingDim);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      frame.v.push_back(parse_number<double>(fields[i], csv.context()));
    }
    track.frames.push_back(std::move(frame));
  }
  std::sort(track.frames.begin(), track.frames.end(),
            [](const auto& a, const auto& b) {
              return a.frame_index < b.frame_index;
            });
  reject_duplicate_frames(path, track.frames);
  return track;
}

PoseTrack read_poses(const std::filesystem::path& path) {
  CsvReader csv(path, "frame_index,yaw_deg,pitch_deg,roll_deg");
  PoseTrack track;
  std::vector<std::string_view> fields;
  while (csv.next_row(fields)) {
    if (fields.size() != 4) {
      throw IoError(csv.context() + ": expected 4 fields, got " +
                    std::to_string(fields.size()));
    }
    PoseFrame frame;
    frame.frame_index = parse_number<int>(fields[0], csv.context());
    frame.yaw_deg = parse_number<double>(fields[1], csv.context());
    frame.pitch_deg = parse_number<double>(fields[2], csv.context());
    frame.roll_deg = parse_number<double>(fields[3], csv.context());
    track.frames.push_back(frame);
  }
  std::sort(track.frames.begin(), track.frames.end(),
            [](const auto& a, const auto& b) {
              return a.frame_index < b.frame_index;
            });
  reject_duplicate_frames(path, track.frames);
  return track;
}

LandmarkTrack read_landmarks(const std::filesystem::path& path) {
  std::string header = "frame_index";
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    header += ",x" + std::to_string(i) + ",y" + std::to_string(i);
  }
  header += ",iod";
  CsvReader csv(path, header);
  LandmarkTrack track;
  std::vector<std::string_view> fields;
  while (csv.next_row(fields)) {
    if (fields.size() != 2 * kNumLandmarks + 2) {
      throw IoError(csv.context() + ": expected " +
                    std::to_string(2 * kNumLandmarks + 2) + " fields, got " +
                    std::to_string(fields.size()));
    }
    LandmarkFrame frame;
    frame.frame_index = parse_number<int>(fields[0], csv.context());
    frame.points.reserve(kNumLandmarks);
    for (std::size_t i = 0; i < kNumLandmarks; ++i) {
      frame.points.push_back(
          {parse_number<double>(fields[1 + 2 * i], csv.context()),
           parse_number<double>(fields[2 + 2 * i], csv.context())});
    }
    frame.iod = parse_number<double>(fields[2 * kNumLandmarks + 1], csv.context());
    track.frames.push_back(std::move(frame));
  }
  std::sort(track.frames.begin(), track.frames.end(),
            [](const auto& a, const auto& b) {
              return a.frame_index < b.frame_index;
            });
  reject_duplicate_frames(path, track.frames);
  return track;
}

DetectionTrack read_detections(const std::filesystem::path& path) {
  CsvReader csv(path, "frame_index,confidence,x1,y1,x2,y2");
  // Highest confidence wins when a frame appears more than once.
  std::map<int, std::optional<DetectionBox>> by_frame;
  std::vector<std::string_view> fields;
  while (csv.next_row(fields)) {
    if (fields.size() != 6) {
      throw IoError(csv.context() + ": expected 6 fields, got " +
                    std::to_string(fields.size()));
    }
    const int frame_index = parse_number<int>(fields[0], csv.context());
    const bool all_empty = fields[1].empty() && fields[2].empty() &&
                           fields[3].empty() && fields[4].empty() &&
                           fields[5].empty();
    if (all_empty) {
      by_frame.try_emplace(frame_index, std::nullopt);
      continue;
    }
    DetectionBox det;
    det.confidence = parse_number<double>(fields[1], csv.context());
    det.x1 = parse_number<double>(fields[2], csv.context());
    det.y1 = parse_number<double>(fields[3], csv.context());
    det.x2 = parse_number<double>(fields[4], csv.context());
    det.y2 = parse_number<double>(fields[5], csv.context());
    if (det.confidence < 0.0 || det.confidence > 1.0) {
      throw IoError(csv.context() + ": confidence must lie in [0, 1]");
    }
    if (det.x1 >= det.x2 || det.y1 >= det.y2) {
      throw IoError(csv.context() + ": degenerate detection box");
    }
    auto [it, inserted] = by_frame.try_emplace(frame_index, det);
    if (!inserted && (!it->second || it->second->confidence < det.confidence)) {
      it->second = det;
    }
  }
  DetectionTrack track;
  track.frames.reserve(by_frame.size());
  for (const auto& [frame_index, det] : by_frame) {
    track.frames.push_back({frame_index, det});
  }
  return track;
}

}  // namespace evanon
