// Command-line front end for the event-stream anonymization toolkit.
//
// Subcommands: reconstruct, simulate, anonymize, metrics, render. Every
// command reads and writes the toolkit's file formats only, records its
// resolved configuration in the reports it emits, and is bit-reproducible
// for fixed seeds. Exit codes: 0 success, 1 validation, 2 I/O,
// 3 computation.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "evanon/errors.hpp"
#include "evanon/event.hpp"
#include "evanon/frame_bridge.hpp"
#include "evanon/io.hpp"
#include "evanon/metrics.hpp"
#include "evanon/roi.hpp"

namespace {

using namespace evanon;

using ConfigList = std::vector<std::pair<std::string, std::string>>;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

unsigned default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Applies a flat key=value configuration file to every option the command
// line did not set, so precedence is defaults < config file < flags. Keys
// are the long option names without the leading dashes.
void apply_config_file(CLI::App* cmd, const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open config file " + path);
  }
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(path + " line " + std::to_string(line_no) +
                            ": expected key=value");
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "config") {
      throw ValidationError(path + " line " + std::to_string(line_no) +
                            ": config files cannot nest");
    }
    CLI::Option* op = cmd->get_option_no_throw("--" + key);
    if (op == nullptr) {
      throw ValidationError(path + " line " + std::to_string(line_no) +
                            ": unknown option '" + key + "'");
    }
    if (op->count() > 0) continue;  // command line wins
    op->add_result(value);
    op->run_callback();
  }
}

void require_set(const std::string& value, const char* flag) {
  if (value.empty()) {
    throw ValidationError(std::string(flag) + " is required");
  }
}

// ---------------------------------------------------------------------------
// reconstruct

struct ReconstructOptions {
  std::string events_in;
  std::string frames_out;
  E2VConfig cfg;
};

void run_reconstruct(const ReconstructOptions& opt) {
  require_set(opt.events_in, "--events");
  require_set(opt.frames_out, "--frames-out");
  const EventStream stream = read_events(opt.events_in);
  const FrameSequence seq = reconstruct_frames(stream, opt.cfg);
  write_frames(opt.frames_out, seq);
  std::cout << "wrote " << seq.frames.size() << " frames (" << seq.width << "x"
            << seq.height << ") to " << opt.frames_out << "\n";
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
  std::string frames_in;
  std::string events_out;
  V2EConfig cfg;
  unsigned threads = 1;
};

void run_simulate(const SimulateOptions& opt) {
  require_set(opt.frames_in, "--frames-in");
  require_set(opt.events_out, "--events-out");
  const FrameSequence seq = read_frames(opt.frames_in);
  const EventStream stream = simulate_events(seq, opt.cfg, opt.threads);
  write_events(opt.events_out, stream);
  std::cout << "wrote " << stream.size() << " events to " << opt.events_out
            << "\n";
}

// ---------------------------------------------------------------------------
// anonymize

struct AnonymizeOptions {
  std::string events_in;
  std::string anon_frames;
  std::string boxes;
  std::string events_out;
  std::string report_out;
  FeatherConfig feather;
  V2EConfig v2e;
  unsigned threads = 1;
};

void run_anonymize(const AnonymizeOptions& opt) {
  require_set(opt.events_in, "--events");
  require_set(opt.anon_frames, "--anon-frames");
  require_set(opt.boxes, "--boxes");
  require_set(opt.events_out, "--out");
  if (!(opt.feather.sigma > 0.0)) {
    throw ValidationError("sigma must be positive");
  }
  const EventStream src = read_events(opt.events_in);
  const FrameSequence anon_frames = read_frames(opt.anon_frames);
  const BoxTrajectory traj = make_trajectory(read_boxes(opt.boxes));

  const AnonymizeResult result =
      anonymize_pipeline(src, anon_frames, traj, opt.feather, opt.v2e, opt.threads);
  write_events(opt.events_out, result.stream);

  const ConfigList config = {
      {"config_events", opt.events_in},
      {"config_anon_frames", opt.anon_frames},
      {"config_boxes", opt.boxes},
      {"config_out", opt.events_out},
      {"config_sigma", fmt_double(opt.feather.sigma)},
      {"config_seed", std::to_string(opt.feather.seed)},
      {"config_threshold", fmt_double(opt.v2e.threshold)},
      {"config_log_eps", fmt_double(opt.v2e.log_eps)},
      {"config_refractory_us", std::to_string(opt.v2e.refractory_us)},
      {"config_max_per_pixel",
       std::to_string(opt.v2e.max_events_per_pixel_per_frame_pair)},
  };
  const std::string report_path =
      opt.report_out.empty() ? opt.events_out + ".report.txt" : opt.report_out;
  write_composition_report(report_path, result.report, config);

  std::cout << "wrote " << result.stream.size() << " events to "
            << opt.events_out << "\n"
            << "kept_bg=" << result.report.kept_bg
            << " feathered_out=" << result.report.feathered_out
            << " injected=" << result.report.injected
            << " dropped_oob=" << result.report.dropped_oob << "\n";
}

// ---------------------------------------------------------------------------
// metrics

struct MetricsOptions {
  std::string events_a, events_b;
  std::string embeddings_src, embeddings_gen;
  std::string poses_orig, poses_gen;
  std::string landmarks_orig, landmarks_gen;
  std::string detections_ref, detections_anon;
  std::string event_detections_ref, event_detections_anon;
  std::string report_out = "metrics_report.txt";
  std::string csv_out;
  std::uint64_t window_us = 50000;
  double overlap = 0.5;
  std::size_t slices = 128;
  std::uint64_t seed = 0;
  bool per_polarity = false;
  unsigned threads = 1;
};

void run_metrics(const MetricsOptions& opt) {
  if (opt.window_us == 0) {
    throw ValidationError("window length must be positive");
  }
  auto require_pair = [](const std::string& a, const char* fa,
                         const std::string& b, const char* fb) {
    if (a.empty() != b.empty()) {
      throw ValidationError(std::string(fa) + " and " + fb +
                            " must be supplied together");
    }
  };
  require_pair(opt.events_a, "--events-a", opt.events_b, "--events-b");
  require_pair(opt.embeddings_src, "--embeddings-src", opt.embeddings_gen,
               "--embeddings-gen");
  require_pair(opt.poses_orig, "--poses-orig", opt.poses_gen, "--poses-gen");
  require_pair(opt.landmarks_orig, "--landmarks-orig", opt.landmarks_gen,
               "--landmarks-gen");
  require_pair(opt.detections_ref, "--detections-ref", opt.detections_anon,
               "--detections-anon");
  require_pair(opt.event_detections_ref, "--event-detections-ref",
               opt.event_detections_anon, "--event-detections-anon");
  const bool have_events = !opt.events_a.empty();
  const bool have_embeddings = !opt.embeddings_src.empty();
  const bool have_poses = !opt.poses_orig.empty();
  const bool have_landmarks = !opt.landmarks_orig.empty();
  const bool have_detections = !opt.detections_ref.empty();
  const bool have_event_detections = !opt.event_detections_ref.empty();
  if (!have_events && !have_embeddings && !have_poses && !have_landmarks &&
      !have_detections && !have_event_detections) {
    throw ValidationError("no metric inputs supplied");
  }

  MetricReport report;
  report.config = {
      {"config_window_us", std::to_string(opt.window_us)},
      {"config_overlap", fmt_double(opt.overlap)},
      {"config_slices", std::to_string(opt.slices)},
      {"config_seed", std::to_string(opt.seed)},
      {"config_per_polarity", opt.per_polarity ? "1" : "0"},
  };
  auto record_input = [&report](const char* key, const std::string& value) {
    if (!value.empty()) report.config.emplace_back(key, value);
  };
  record_input("config_events_a", opt.events_a);
  record_input("config_events_b", opt.events_b);
  record_input("config_embeddings_src", opt.embeddings_src);
  record_input("config_embeddings_gen", opt.embeddings_gen);
  record_input("config_poses_orig", opt.poses_orig);
  record_input("config_poses_gen", opt.poses_gen);
  record_input("config_landmarks_orig", opt.landmarks_orig);
  record_input("config_landmarks_gen", opt.landmarks_gen);
  record_input("config_detections_ref", opt.detections_ref);
  record_input("config_detections_anon", opt.detections_anon);
  record_input("config_event_detections_ref", opt.event_detections_ref);
  record_input("config_event_detections_anon", opt.event_detections_anon);

  if (have_events) {
    const EventStream a = read_events(opt.events_a);
    const EventStream b = read_events(opt.events_b);
    StcdConfig stcd_cfg;
    stcd_cfg.window_len_us = opt.window_us;
    stcd_cfg.overlap_fraction = opt.overlap;
    stcd_cfg.per_polarity = opt.per_polarity;
    report.stcd_result = stcd(a, b, stcd_cfg, opt.threads);

    EmdConfig emd_cfg;
    emd_cfg.window_len_us = opt.window_us;
    emd_cfg.overlap_fraction = opt.overlap;
    emd_cfg.num_slices = opt.slices;
    emd_cfg.seed = opt.seed;
    emd_cfg.per_polarity = opt.per_polarity;
    report.emd_result = emd_sliced(a, b, emd_cfg, opt.threads);
  }
  if (have_embeddings) {
    const EmbeddingTrack src = read_embeddings(opt.embeddings_src);
    const EmbeddingTrack gen = read_embeddings(opt.embeddings_gen);
    report.identity = identity_similarity(src, gen);
    if (src.frames.size() >= 2) report.stability_src = temporal_stability(src);
    if (gen.frames.size() >= 2) report.stability_gen = temporal_stability(gen);
  }
  if (have_poses) {
    report.pose = pose_error(read_poses(opt.poses_orig), read_poses(opt.poses_gen));
  }
  if (have_landmarks) {
    report.mimicry = mimicry_error(read_landmarks(opt.landmarks_orig),
                                   read_landmarks(opt.landmarks_gen));
  }
  if (have_detections) {
    report.detection = detection_utility(read_detections(opt.detections_ref),
                                         read_detections(opt.detections_anon));
  }
  if (have_event_detections) {
    report.event_detection =
        detection_utility(read_detections(opt.event_detections_ref),
                          read_detections(opt.event_detections_anon));
  }

  print_summary(std::cout, report);
  write_report_text(opt.report_out, report);
  if (!opt.csv_out.empty()) {
    write_report_csv(opt.csv_out, report);
  }
}

// ---------------------------------------------------------------------------
// render

struct RenderOptions {
  std::string events_in;
  std::string frames_out;
  std::uint64_t window_us = 50000;
  double overlap = 0.0;
  double accum_gain = 32.0;
};

void run_render(const RenderOptions& opt) {
  require_set(opt.events_in, "--events");
  require_set(opt.frames_out, "--frames-out");
  if (opt.window_us == 0) {
    throw ValidationError("window length must be positive");
  }
  const EventStream stream = read_events(opt.events_in);

  FrameSequence seq;
  seq.width = stream.width == 0 ? 1 : stream.width;
  seq.height = stream.height == 0 ? 1 : stream.height;
  const std::size_t num_pixels = static_cast<std::size_t>(seq.width) * seq.height;

  if (stream.empty()) {
    Frame frame;
    frame.t_us = 0;
    frame.pixels.assign(num_pixels, 128);
    seq.frames.push_back(std::move(frame));
  } else {
    std::vector<std::int32_t> sums(num_pixels);
    for (const WindowSlice& slice :
         slice_windows(stream, opt.window_us, opt.overlap)) {
      std::fill(sums.begin(), sums.end(), 0);
      for (std::size_t i = slice.begin; i < slice.end; ++i) {
        const Event& e = stream.events[i];
        sums[static_cast<std::size_t>(e.y) * seq.width + e.x] += e.p;
      }
      Frame frame;
      frame.t_us = slice.window.t_start;
      frame.pixels.resize(num_pixels);
      for (std::size_t i = 0; i < num_pixels; ++i) {
        const double v = 128.0 + opt.accum_gain * sums[i];
        frame.pixels[i] = static_cast<std::uint8_t>(
            round_half_up(std::min(255.0, std::max(0.0, v))));
      }
      seq.frames.push_back(std::move(frame));
    }
  }
  write_frames(opt.frames_out, seq);
  std::cout << "wrote " << seq.frames.size() << " rasters to " << opt.frames_out
            << "\n";
}

// ---------------------------------------------------------------------------

void add_v2e_options(CLI::App* cmd, V2EConfig& cfg) {
  cmd->add_option("--threshold", cfg.threshold,
                  "log-intensity contrast threshold")
      ->capture_default_str();
  cmd->add_option("--log-eps", cfg.log_eps, "epsilon inside the log")
      ->capture_default_str();
  cmd->add_option("--refractory-us", cfg.refractory_us,
                  "per-pixel refractory period, us")
      ->capture_default_str();
  cmd->add_option("--max-per-pixel", cfg.max_events_per_pixel_per_frame_pair,
                  "cap on events per pixel per frame pair (0 = unbounded)")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"event-stream anonymization toolkit"};
  app.require_subcommand(1);

  ReconstructOptions rec;
  std::string rec_config;
  CLI::App* cmd_rec =
      app.add_subcommand("reconstruct", "render intensity frames from events");
  cmd_rec->add_option("--config", rec_config, "flat key=value configuration file");
  cmd_rec->add_option("--events", rec.events_in, "input event file")
      ->check(CLI::ExistingFile);
  cmd_rec->add_option("--frames-out", rec.frames_out, "output frame directory");
  cmd_rec->add_option("--frame-period-us", rec.cfg.frame_period_us,
                      "frame spacing, us")
      ->capture_default_str();
  cmd_rec->add_option("--half-life-us", rec.cfg.decay_half_life_us,
                      "state decay half-life, us")
      ->capture_default_str();
  cmd_rec->add_option("--gain", rec.cfg.contrast_gain,
                      "log-intensity step per event")
      ->capture_default_str();
  cmd_rec->add_option("--mid-gray", rec.cfg.mid_gray, "zero-state intensity")
      ->capture_default_str();
  cmd_rec->callback([&] {
    apply_config_file(cmd_rec, rec_config);
    run_reconstruct(rec);
  });

  SimulateOptions sim;
  sim.threads = default_threads();
  std::string sim_config;
  CLI::App* cmd_sim =
      app.add_subcommand("simulate", "simulate events from intensity frames");
  cmd_sim->add_option("--config", sim_config, "flat key=value configuration file");
  cmd_sim->add_option("--frames-in", sim.frames_in, "input frame directory")
      ->check(CLI::ExistingDirectory);
  cmd_sim->add_option("--events-out", sim.events_out, "output event file");
  add_v2e_options(cmd_sim, sim.cfg);
  cmd_sim->add_option("--seed", sim.cfg.seed, "seed (reserved)")
      ->capture_default_str();
  cmd_sim->add_option("--threads", sim.threads, "worker thread cap")
      ->capture_default_str();
  cmd_sim->callback([&] {
    apply_config_file(cmd_sim, sim_config);
    run_simulate(sim);
  });

  AnonymizeOptions anon;
  anon.threads = default_threads();
  std::string anon_config;
  CLI::App* cmd_anon = app.add_subcommand(
      "anonymize", "composite an anonymized face stream into the source");
  cmd_anon->add_option("--config", anon_config,
                       "flat key=value configuration file");
  cmd_anon->add_option("--events", anon.events_in, "source event file")
      ->check(CLI::ExistingFile);
  cmd_anon
      ->add_option("--anon-frames", anon.anon_frames,
                   "anonymized frame directory")
      ->check(CLI::ExistingDirectory);
  cmd_anon->add_option("--boxes", anon.boxes, "face box trajectory file")
      ->check(CLI::ExistingFile);
  cmd_anon->add_option("--out", anon.events_out, "output event file");
  cmd_anon->add_option("--report", anon.report_out,
                       "composition report path (default <out>.report.txt)");
  cmd_anon->add_option("--sigma", anon.feather.sigma,
                       "feathering width, pixels")
      ->capture_default_str();
  cmd_anon->add_option("--seed", anon.feather.seed, "feathering seed")
      ->capture_default_str();
  add_v2e_options(cmd_anon, anon.v2e);
  cmd_anon->add_option("--threads", anon.threads, "worker thread cap")
      ->capture_default_str();
  cmd_anon->callback([&] {
    apply_config_file(cmd_anon, anon_config);
    run_anonymize(anon);
  });

  MetricsOptions met;
  met.threads = default_threads();
  std::string met_config;
  CLI::App* cmd_met =
      app.add_subcommand("metrics", "evaluate event-space and track metrics");
  cmd_met->add_option("--config", met_config,
                      "flat key=value configuration file");
  cmd_met->add_option("--events-a", met.events_a, "first event file")
      ->check(CLI::ExistingFile);
  cmd_met->add_option("--events-b", met.events_b, "second event file")
      ->check(CLI::ExistingFile);
  auto pair_option = [&](const std::string& first, std::string& first_var,
                         const std::string& second, std::string& second_var) {
    cmd_met->add_option(first, first_var)->check(CLI::ExistingFile);
    cmd_met->add_option(second, second_var)->check(CLI::ExistingFile);
  };
  pair_option("--embeddings-src", met.embeddings_src, "--embeddings-gen",
              met.embeddings_gen);
  pair_option("--poses-orig", met.poses_orig, "--poses-gen", met.poses_gen);
  pair_option("--landmarks-orig", met.landmarks_orig, "--landmarks-gen",
              met.landmarks_gen);
  pair_option("--detections-ref", met.detections_ref, "--detections-anon",
              met.detections_anon);
  pair_option("--event-detections-ref", met.event_detections_ref,
              "--event-detections-anon", met.event_detections_anon);
  cmd_met->add_option("--window-us", met.window_us, "window length, us")
      ->capture_default_str();
  cmd_met->add_option("--overlap", met.overlap, "window overlap fraction")
      ->capture_default_str();
  cmd_met->add_option("--slices", met.slices, "projection count for EMD")
      ->capture_default_str();
  cmd_met->add_option("--seed", met.seed, "slice sampling seed")
      ->capture_default_str();
  cmd_met->add_flag("--per-polarity", met.per_polarity,
                    "compute event metrics per polarity class and average");
  cmd_met->add_option("--report-out", met.report_out, "key=value report path")
      ->capture_default_str();
  cmd_met->add_option("--csv-out", met.csv_out, "per-window CSV path");
  cmd_met->add_option("--threads", met.threads, "worker thread cap")
      ->capture_default_str();
  cmd_met->callback([&] {
    apply_config_file(cmd_met, met_config);
    run_metrics(met);
  });

  RenderOptions ren;
  std::string ren_config;
  CLI::App* cmd_ren =
      app.add_subcommand("render", "accumulate events into raster frames");
  cmd_ren->add_option("--config", ren_config,
                      "flat key=value configuration file");
  cmd_ren->add_option("--events", ren.events_in, "input event file")
      ->check(CLI::ExistingFile);
  cmd_ren->add_option("--frames-out", ren.frames_out, "output raster directory");
  cmd_ren->add_option("--window-us", ren.window_us, "window length, us")
      ->capture_default_str();
  cmd_ren->add_option("--overlap", ren.overlap, "window overlap fraction")
      ->capture_default_str();
  cmd_ren->add_option("--accum-gain", ren.accum_gain,
                      "intensity step per polarity count")
      ->capture_default_str();
  cmd_ren->callback([&] {
    apply_config_file(cmd_ren, ren_config);
    run_render(ren);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ComputationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
