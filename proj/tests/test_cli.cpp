#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "evanon/io.hpp"
#include "helpers.hpp"

using namespace evanon;
using namespace evanon::testing;
namespace fs = std::filesystem;

namespace {

struct CliWorkspace {
  fs::path dir;
  CliWorkspace() {
    dir = fs::temp_directory_path() / "evanon_test_cli";
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~CliWorkspace() { fs::remove_all(dir); }

  fs::path operator/(const std::string& name) const { return dir / name; }
};

int cli(const std::string& args) {
  const std::string command = std::string(EVANON_CLI_PATH) + " " + args +
                              " > /dev/null 2> /dev/null";
  const int status = std::system(command.c_str());
  return WEXITSTATUS(status);
}

void write_text(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("cli reconstruct handles an empty stream") {
  CliWorkspace ws;
  EventStream empty;
  empty.width = 8;
  empty.height = 8;
  write_events(ws / "empty.evs", empty);
  REQUIRE(cli("reconstruct --events " + (ws / "empty.evs").string() +
              " --frames-out " + (ws / "frames").string()) == 0);
  const FrameSequence seq = read_frames(ws / "frames");
  REQUIRE(seq.frames.size() == 1);
  for (std::uint8_t v : seq.frames[0].pixels) CHECK(v == 128);
}

TEST_CASE("cli simulate on constant frames writes a header-only file") {
  CliWorkspace ws;
  FrameSequence seq;
  seq.width = 4;
  seq.height = 4;
  seq.frames.push_back({0, std::vector<std::uint8_t>(16, 90)});
  seq.frames.push_back({10000, std::vector<std::uint8_t>(16, 90)});
  write_frames(ws / "frames", seq);
  REQUIRE(cli("simulate --frames-in " + (ws / "frames").string() +
              " --events-out " + (ws / "out.evs").string()) == 0);
  CHECK(fs::file_size(ws / "out.evs") == 16);
}

TEST_CASE("cli simulate rejects mismatched frame sizes") {
  CliWorkspace ws;
  fs::create_directories(ws / "frames");
  write_text(ws / "frames" / "index.csv", "frame_index,t_us\n0,0\n1,1000\n");
  write_text(ws / "frames" / "frame_000000.pgm",
             std::string("P5\n1 1\n255\n") + 'a');
  write_text(ws / "frames" / "frame_000001.pgm",
             std::string("P5\n2 1\n255\n") + "ab");
  CHECK(cli("simulate --frames-in " + (ws / "frames").string() +
            " --events-out " + (ws / "out.evs").string()) == 2);
}

TEST_CASE("cli anonymize rejects bad sigma and bad boxes") {
  CliWorkspace ws;
  write_events(ws / "src.evs", random_stream(71, 200, 32, 32, 10000));
  FrameSequence seq;
  seq.width = 32;
  seq.height = 32;
  seq.frames.push_back({0, std::vector<std::uint8_t>(1024, 90)});
  seq.frames.push_back({10000, std::vector<std::uint8_t>(1024, 90)});
  write_frames(ws / "frames", seq);
  write_text(ws / "boxes.csv", "frame_index,t_us,x1,y1,x2,y2\n0,0,4,4,20,20\n");

  const std::string base = "anonymize --events " + (ws / "src.evs").string() +
                           " --anon-frames " + (ws / "frames").string() +
                           " --boxes " + (ws / "boxes.csv").string() +
                           " --out " + (ws / "out.evs").string();
  CHECK(cli(base + " --sigma 0") == 1);
  CHECK(cli(base) == 0);
  CHECK(fs::exists(ws / "out.evs.report.txt"));

  write_text(ws / "boxes.csv", "frame_index,t_us,x1,y1,x2,y2\n0,0,20,4,4,20\n");
  CHECK(cli(base) == 2);
}

TEST_CASE("cli metrics with embeddings only omits event-space rows") {
  CliWorkspace ws;
  std::string header = "frame_index";
  for (int i = 0; i < 512; ++i) header += ",v" + std::to_string(i);
  std::string rows;
  for (int f = 0; f < 3; ++f) {
    rows += std::to_string(f);
    for (int i = 0; i < 512; ++i) rows += (i == f) ? ",1" : ",0";
    rows += "\n";
  }
  write_text(ws / "src.csv", header + "\n" + rows);
  write_text(ws / "gen.csv", header + "\n" + rows);

  const fs::path report = ws / "report.txt";
  REQUIRE(cli("metrics --embeddings-src " + (ws / "src.csv").string() +
              " --embeddings-gen " + (ws / "gen.csv").string() +
              " --report-out " + report.string()) == 0);
  const std::string text = read_bytes(report);
  CHECK(text.find("identity_similarity_mean=") != std::string::npos);
  CHECK(text.find("temporal_stability_src_mean=") != std::string::npos);
  CHECK(text.find("temporal_stability_gen_mean=") != std::string::npos);
  CHECK(text.find("stcd_mean=") == std::string::npos);
  CHECK(text.find("emd_mean=") == std::string::npos);
}

TEST_CASE("cli metrics validates the window flag") {
  CliWorkspace ws;
  write_events(ws / "a.evs", random_stream(72, 100, 16, 16, 5000));
  CHECK(cli("metrics --events-a " + (ws / "a.evs").string() + " --events-b " +
            (ws / "a.evs").string() + " --window-us 0") == 1);
}

TEST_CASE("cli metrics reports zero distances for identical files") {
  CliWorkspace ws;
  write_events(ws / "a.evs", random_stream(73, 5000, 64, 64, 100000));
  const fs::path report = ws / "report.txt";
  REQUIRE(cli("metrics --events-a " + (ws / "a.evs").string() + " --events-b " +
              (ws / "a.evs").string() + " --slices 8 --report-out " +
              report.string()) == 0);
  const std::string text = read_bytes(report);
  CHECK(text.find("stcd_mean=0\n") != std::string::npos);
  CHECK(text.find("emd_mean=0\n") != std::string::npos);
}

TEST_CASE("cli render accumulates polarity counts") {
  CliWorkspace ws;
  EventStream one;
  one.width = 3;
  one.height = 3;
  one.events = {ev(1, 1, 0, 1)};
  write_events(ws / "one.evs", one);
  REQUIRE(cli("render --events " + (ws / "one.evs").string() +
              " --frames-out " + (ws / "raster").string()) == 0);
  const FrameSequence seq = read_frames(ws / "raster");
  REQUIRE(seq.frames.size() == 1);
  CHECK(seq.at(0, 1, 1) == 160);  // 128 + default gain 32
  CHECK(seq.at(0, 0, 0) == 128);

  // Empty stream: one mid-gray raster.
  EventStream empty;
  empty.width = 2;
  empty.height = 2;
  write_events(ws / "empty.evs", empty);
  REQUIRE(cli("render --events " + (ws / "empty.evs").string() +
              " --frames-out " + (ws / "raster2").string()) == 0);
  const FrameSequence blank = read_frames(ws / "raster2");
  REQUIRE(blank.frames.size() == 1);
  for (std::uint8_t v : blank.frames[0].pixels) CHECK(v == 128);
}

TEST_CASE("cli render window count matches the windower") {
  CliWorkspace ws;
  const EventStream s = random_stream(74, 2000, 16, 16, 100000);
  write_events(ws / "s.evs", s);
  REQUIRE(cli("render --events " + (ws / "s.evs").string() + " --frames-out " +
              (ws / "raster").string() + " --window-us 20000 --overlap 0.5") ==
          0);
  const FrameSequence seq = read_frames(ws / "raster");
  CHECK(seq.frames.size() == slice_windows(s, 20000, 0.5).size());
}
