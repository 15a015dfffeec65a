#pragma once

// Serialization of event streams, frame sequences and external-model tracks
// (boxes, embeddings, poses, landmarks, detections). Formats are documented
// in the README; readers reject anything the corresponding writer could not
// have produced and report byte or line offsets on failure.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "evanon/event.hpp"

namespace evanon {

// ---------------------------------------------------------------------------
// Domain types carried by files

struct BoxKeyframe {
  int frame_index = 0;
  std::uint64_t t_us = 0;
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;  // top-left, bottom-right
};

struct Frame {
  std::uint64_t t_us = 0;
  std::vector<std::uint8_t> pixels;  // row-major, width * height
};

// Timestamped grayscale frames bridging event and image space.
struct FrameSequence {
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::vector<Frame> frames;

  std::uint8_t at(std::size_t k, std::size_t x, std::size_t y) const {
    return frames[k].pixels[y * width + x];
  }
};

inline constexpr std::size_t kEmbeddingDim = 512;

struct EmbeddingFrame {
  int frame_index = 0;
  std::vector<double> v;  // kEmbeddingDim components
};
struct EmbeddingTrack {
  std::vector<EmbeddingFrame> frames;  // sorted by frame_index
};

struct PoseFrame {
  int frame_index = 0;
  double yaw_deg = 0, pitch_deg = 0, roll_deg = 0;
};
struct PoseTrack {
  std::vector<PoseFrame> frames;
};

inline constexpr std::size_t kNumLandmarks = 106;

struct LandmarkFrame {
  int frame_index = 0;
  std::vector<std::array<double, 2>> points;  // kNumLandmarks 2D keypoints
  double iod = 0;                             // inter-ocular distance, pixels
};
struct LandmarkTrack {
  std::vector<LandmarkFrame> frames;
};

struct DetectionBox {
  double confidence = 0;  // in [0, 1]
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
};
struct DetectionFrame {
  int frame_index = 0;
  std::optional<DetectionBox> det;  // at most one detection per frame
};
struct DetectionTrack {
  std::vector<DetectionFrame> frames;
};

// ---------------------------------------------------------------------------
// Event streams
//
// Binary ("EVS1"): magic, u16 LE width, u16 LE height, u64 LE count, then
// 13-byte records (u64 t_us, u16 x, u16 y, i8 p) with no padding.
// Text (.csv/.txt): header "t,x,y,p", one event per line; sensor geometry is
// inferred from the coordinate maxima.

/// Reads a stream and returns it canonically sorted; format detected from
/// the content (binary magic) or the .csv/.txt extension.
EventStream read_events(const std::filesystem::path& path);

/// Writes binary EVS1, or text when the extension is .csv/.txt.
void write_events(const std::filesystem::path& path, const EventStream& stream);

// ---------------------------------------------------------------------------
// Frame sequences: a directory of frame_%06d.pgm (binary 8-bit PGM) plus an
// index.csv sidecar with header "frame_index,t_us".

FrameSequence read_frames(const std::filesystem::path& dir);
void write_frames(const std::filesystem::path& dir, const FrameSequence& seq);

// ---------------------------------------------------------------------------
// Track files (comma-separated text, headers fixed; see README)

std::vector<BoxKeyframe> read_boxes(const std::filesystem::path& path);
EmbeddingTrack read_embeddings(const std::filesystem::path& path);
PoseTrack read_poses(const std::filesystem::path& path);
LandmarkTrack read_landmarks(const std::filesystem::path& path);
DetectionTrack read_detections(const std::filesystem::path& path);

}  // namespace evanon
