#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "treenet/builders.hpp"

namespace treenet {

// Worker pool size when the caller does not pin one.
int default_threads();

// Bad inputs (flags, config, malformed run directories). The process
// exit code separates these (2) from runtime failures (3).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shared network-construction knobs for the estimator experiments.
struct NetSpec {
  Model model = Model::mst;
  double side = 0.0;
  double intensity = 1.0;
  double margin_frac = 0.1;
  double comb_spacing = 1.0;
};

struct RhoSpec {
  NetSpec net;
  double r_max = 0.0;
  int bins = 40;
  std::uint64_t cap = 100000;
};

struct TailSpec {
  NetSpec net;
  double r = 0.0;
  double d_lo = 0.0;   // 0 = pick 2r
  double d_hi = 0.0;   // 0 = pick side/4
  std::uint64_t cap = 100000;
};

struct ScalingSpec {
  Model model = Model::mst;
  std::vector<double> sides;
  int replicates = 3;
  double r = 0.0;
  double margin_frac = 0.1;
  std::uint64_t cap = 100000;
  double comb_spacing = 1.0;
};

struct RedSpec {
  double m = 15.0;
  int trials = 200;
};

struct GreenSpec {
  double q = 0.05;
  int k = 8;
  int trials = 200;
  bool exclude_box = false;
};

struct ContoursSpec {
  int k = 12;
  double p_green = 0.5;
  std::string grid;  // rows of 0/1 joined by newlines; empty = random
};

struct Lemma7Spec {
  Model model = Model::mst;
  double m = 10.0;
  int k = 10;
  double pad = 5.0;  // window border beyond the study square
  double intensity = 1.0;
};

struct RggSpec {
  double side = 0.0;
  double intensity = 1.0;
  double radius = 0.0;
};

struct RainCheckSpec {
  double side = 0.0;
  double intensity = 1.0;
  int sample = 1000;
};

// One experiment to run: the member matching `experiment` is the live
// one. Threads never enter the manifest because results are
// thread-count-invariant; it is recorded in the telemetry instead.
struct RunRequest {
  std::string experiment;
  std::uint64_t seed = 1;
  int threads = 1;

  RhoSpec rho;
  TailSpec tail;
  ScalingSpec scaling;
  RedSpec red;
  GreenSpec green;
  ContoursSpec contours;
  Lemma7Spec lemma7;
  RggSpec rgg;
  RainCheckSpec rain;
};

// Creates out_dir, writes manifest.json first, then the artifacts (each
// through a temp-file rename), then telemetry.json and the COMPLETE
// marker. Returns the artifact file names. Throws ValidationError for
// bad requests, std::runtime_error for execution failures.
std::vector<std::string> run_experiment(const RunRequest& req,
                                        const std::filesystem::path& out_dir);

// Reconstructs the request recorded in a run directory's manifest.
RunRequest request_from_manifest(const std::filesystem::path& run_dir);

// Executes a finished run's manifest again into out_dir. Every artifact
// must come out byte-for-byte identical; telemetry is the one file
// allowed to differ.
std::vector<std::string> rerun_from_manifest(
    const std::filesystem::path& src_dir, const std::filesystem::path& out_dir,
    std::optional<int> threads = std::nullopt);

// Human-readable summary of a finished run; also writes report.txt and
// the plot-ready report.csv into the directory. Returns the text.
std::string emit_report(const std::filesystem::path& run_dir);

// $TREENET_OUT when set, otherwise ./runs.
std::filesystem::path default_out_root();

// Deterministic directory name: experiment, seed and a parameter digest.
std::string default_run_name(const RunRequest& req);

}  // namespace treenet
