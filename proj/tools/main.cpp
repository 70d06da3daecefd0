// Command line front end: each subcommand runs one experiment into a run
// directory (manifest, artifacts, telemetry), plus report and rerun helpers.
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "treenet/experiments.hpp"
#include "treenet/version.hpp"

namespace fs = std::filesystem;
using treenet::Model;
using treenet::RunRequest;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

const std::map<std::string, Model> kModelMap{{"mst", Model::mst},
                                             {"rain", Model::rain},
                                             {"comb", Model::comb},
                                             {"gabriel", Model::gabriel}};

struct SubState {
  RunRequest req;
  std::string out;
};

void add_run_opts(CLI::App* sub, SubState& st) {
  sub->add_option("--seed", st.req.seed, "Root seed for this run")
      ->capture_default_str();
  sub->add_option("--threads", st.req.threads,
                  "Worker threads (results do not depend on this)")
      ->default_val(treenet::default_threads());
  sub->add_option("--out", st.out,
                  "Run directory (default: derived name under the output root)");
  sub->configurable();
}

void add_net_opts(CLI::App* sub, treenet::NetSpec& net) {
  sub->add_option("--model", net.model, "Network model")
      ->transform(CLI::CheckedTransformer(kModelMap, CLI::ignore_case))
      ->capture_default_str();
  sub->add_option("--side", net.side, "Window side length")->required();
  sub->add_option("--intensity", net.intensity, "Poisson intensity")
      ->capture_default_str();
  sub->add_option("--margin-frac", net.margin_frac,
                  "Boundary margin as a fraction of the side")
      ->capture_default_str();
  sub->add_option("--comb-spacing", net.comb_spacing,
                  "Tooth spacing for the comb model")
      ->capture_default_str();
}

// Best-effort line diagnostics for config mistakes: find the first line
// whose key appears in the parser's complaint.
std::string locate_config_error(const std::string& path,
                                const std::string& message) {
  std::ifstream is(path);
  if (!is) return message;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    key.erase(0, key.find_first_not_of(" \t"));
    key.erase(key.find_last_not_of(" \t") + 1);
    if (!key.empty() && message.find(key) != std::string::npos)
      return path + ":" + std::to_string(lineno) + ": " + message;
  }
  return path + ": " + message;
}

int run_and_print(const RunRequest& req, const std::string& out) {
  const fs::path dir = out.empty()
                           ? treenet::default_out_root() /
                                 treenet::default_run_name(req)
                           : fs::path(out);
  const std::vector<std::string> artifacts = treenet::run_experiment(req, dir);
  std::cout << "run directory: " << dir.string() << "\n";
  for (const std::string& a : artifacts) std::cout << "  " << a << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Route-length experiments on spatial networks"};
  app.set_version_flag("--version", std::string(treenet::kVersion));
  app.require_subcommand(1);
  app.set_config("--config", "", "Key-value config file; flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);

  std::map<std::string, SubState> states;
  auto run_sub = [&](const std::string& name, const std::string& desc) {
    CLI::App* sub = app.add_subcommand(name, desc);
    SubState& st = states[name];
    st.req.experiment = name;
    add_run_opts(sub, st);
    return sub;
  };

  {
    CLI::App* sub = run_sub("rho", "Mean route length by pair separation");
    SubState& st = states["rho"];
    add_net_opts(sub, st.req.rho.net);
    sub->add_option("--r-max", st.req.rho.r_max, "Largest separation binned")
        ->required();
    sub->add_option("--bins", st.req.rho.bins, "Separation bins")
        ->capture_default_str();
    sub->add_option("--cap", st.req.rho.cap, "Pair budget per bin")
        ->capture_default_str();
  }
  {
    CLI::App* sub = run_sub("tail", "Route-length tail at fixed separation");
    SubState& st = states["tail"];
    add_net_opts(sub, st.req.tail.net);
    sub->add_option("--r", st.req.tail.r, "Pair separation")->required();
    sub->add_option("--d-lo", st.req.tail.d_lo,
                    "Smallest route length in the grid (default 2r)");
    sub->add_option("--d-hi", st.req.tail.d_hi,
                    "Largest route length in the grid (default side/4)");
    sub->add_option("--cap", st.req.tail.cap, "Pair budget")
        ->capture_default_str();
  }
  {
    CLI::App* sub = run_sub("scaling", "Mean route length across window sides");
    SubState& st = states["scaling"];
    sub->add_option("--model", st.req.scaling.model, "Network model")
        ->transform(CLI::CheckedTransformer(kModelMap, CLI::ignore_case))
        ->capture_default_str();
    sub->add_option("--sides", st.req.scaling.sides,
                    "Window sides, strictly increasing")
        ->required()
        ->expected(-1);
    sub->add_option("--replicates", st.req.scaling.replicates,
                    "Independent replicates per side")
        ->capture_default_str();
    sub->add_option("--r", st.req.scaling.r, "Pair separation")->required();
    sub->add_option("--margin-frac", st.req.scaling.margin_frac,
                    "Boundary margin as a fraction of the side")
        ->capture_default_str();
    sub->add_option("--cap", st.req.scaling.cap, "Pair budget per replicate")
        ->capture_default_str();
    sub->add_option("--comb-spacing", st.req.scaling.comb_spacing,
                    "Tooth spacing for the comb model")
        ->capture_default_str();
  }
  {
    CLI::App* sub = run_sub("lemma-red",
                            "Bichromatic pair lower bound under skewed counts");
    SubState& st = states["lemma-red"];
    sub->add_option("--m", st.req.red.m, "Square side")->capture_default_str();
    sub->add_option("--trials", st.req.red.trials, "Adversarial trials")
        ->capture_default_str();
  }
  {
    CLI::App* sub = run_sub("lemma-green",
                            "Separation cost of balanced grid colorings");
    SubState& st = states["lemma-green"];
    sub->add_option("--q", st.req.green.q, "Cell removal probability")
        ->capture_default_str();
    sub->add_option("--k", st.req.green.k, "Grid side in cells")
        ->capture_default_str();
    sub->add_option("--trials", st.req.green.trials, "Monte Carlo trials")
        ->capture_default_str();
    sub->add_flag("--exclude-box", st.req.green.exclude_box,
                  "Also remove one random small box per trial");
  }
  {
    CLI::App* sub = run_sub("contours",
                            "Dual contours and decomposition of a coloring");
    SubState& st = states["contours"];
    sub->add_option("--k", st.req.contours.k, "Grid side for random colorings")
        ->capture_default_str();
    sub->add_option("--p-green", st.req.contours.p_green,
                    "Green probability for random colorings")
        ->capture_default_str();
    sub->add_option("--grid-file", st.req.contours.grid,
                    "File of 0/1 rows to use instead of a random coloring")
        ->check(CLI::ExistingFile);
  }
  {
    CLI::App* sub = run_sub("lemma7",
                            "Terminal census and route split inside a tree");
    SubState& st = states["lemma7"];
    sub->add_option("--model", st.req.lemma7.model, "Tree model")
        ->transform(CLI::CheckedTransformer(kModelMap, CLI::ignore_case))
        ->capture_default_str();
    sub->add_option("--m", st.req.lemma7.m, "Study cell side")
        ->capture_default_str();
    sub->add_option("--k", st.req.lemma7.k, "Study grid side in cells")
        ->capture_default_str();
    sub->add_option("--pad", st.req.lemma7.pad,
                    "Window border beyond the study square")
        ->capture_default_str();
    sub->add_option("--intensity", st.req.lemma7.intensity, "Poisson intensity")
        ->capture_default_str();
  }
  {
    CLI::App* sub = run_sub("rgg", "Component structure of a geometric graph");
    SubState& st = states["rgg"];
    sub->add_option("--side", st.req.rgg.side, "Window side length")
        ->required();
    sub->add_option("--intensity", st.req.rgg.intensity, "Poisson intensity")
        ->capture_default_str();
    sub->add_option("--radius", st.req.rgg.radius, "Connection radius")
        ->required();
  }
  {
    CLI::App* sub = run_sub("rain-check",
                            "Audit rain-tree parents against recomputation");
    SubState& st = states["rain-check"];
    sub->add_option("--side", st.req.rain.side, "Window side length")
        ->required();
    sub->add_option("--intensity", st.req.rain.intensity, "Poisson intensity")
        ->capture_default_str();
    sub->add_option("--sample", st.req.rain.sample, "Vertices to audit")
        ->capture_default_str();
  }

  std::string report_dir;
  CLI::App* report_sub =
      app.add_subcommand("report", "Summarize a finished run directory");
  report_sub->add_option("run_dir", report_dir, "Run directory")->required();

  std::string rerun_src, rerun_out;
  int rerun_threads = treenet::default_threads();
  CLI::App* rerun_sub = app.add_subcommand(
      "rerun", "Re-execute a run from its manifest into a new directory");
  rerun_sub->add_option("src_dir", rerun_src, "Existing run directory")
      ->required();
  rerun_sub->add_option("--out", rerun_out,
                        "Target directory (default: <src>-rerun)");
  rerun_sub->add_option("--threads", rerun_threads, "Worker threads")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ConfigError& e) {
    std::string where = e.what();
    try {
      const std::string cfg = app.get_config_ptr()->as<std::string>();
      if (!cfg.empty()) where = locate_config_error(cfg, e.what());
    } catch (...) {
    }
    std::cerr << "config error: " << where << "\n";
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() != 0) std::cerr << "error: " << e.what() << "\n";
    return e.get_exit_code() == 0 ? 0 : kExitUsage;
  }

  try {
    if (report_sub->parsed()) {
      std::cout << treenet::emit_report(report_dir);
      return 0;
    }
    if (rerun_sub->parsed()) {
      const fs::path src(rerun_src);
      const fs::path out = rerun_out.empty()
                               ? src.parent_path() /
                                     (src.filename().string() + "-rerun")
                               : fs::path(rerun_out);
      const auto artifacts =
          treenet::rerun_from_manifest(src, out, rerun_threads);
      std::cout << "run directory: " << out.string() << "\n";
      for (const std::string& a : artifacts) std::cout << "  " << a << "\n";
      return 0;
    }
    for (auto& [name, st] : states) {
      CLI::App* sub = app.get_subcommand(name);
      if (!sub->parsed()) continue;
      if (name == "contours" && !st.req.contours.grid.empty()) {
        std::ifstream is(st.req.contours.grid);
        if (!is)
          throw treenet::ValidationError("cannot open grid file " +
                                         st.req.contours.grid);
        std::string text((std::istreambuf_iterator<char>(is)),
                         std::istreambuf_iterator<char>());
        st.req.contours.grid = text;
      }
      return run_and_print(st.req, st.out);
    }
    std::cerr << "error: no subcommand selected\n";
    return kExitUsage;
  } catch (const treenet::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
