#include "treenet/experiments.hpp"

#include <sys/resource.h>

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "treenet/estimators.hpp"
#include "treenet/io.hpp"
#include "treenet/lemma_lab.hpp"
#include "treenet/rng.hpp"
#include "treenet/version.hpp"

namespace treenet {

namespace fs = std::filesystem;
using nlohmann::json;

int default_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : int(n);
}

namespace {

constexpr const char* kManifestName = "manifest.json";
constexpr const char* kTelemetryName = "telemetry.json";
constexpr const char* kCompleteName = "COMPLETE";

const std::vector<std::string>& known_experiments() {
  static const std::vector<std::string> k = {
      "rho",    "tail",   "scaling", "lemma-red", "lemma-green",
      "contours", "lemma7", "rgg",    "rain-check"};
  return k;
}

void write_atomic(const fs::path& dir, const std::string& name,
                  const std::string& content) {
  const fs::path tmp = dir / (name + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    os << content;
    if (!os)
      throw std::runtime_error("failed writing " + (dir / name).string());
  }
  fs::rename(tmp, dir / name);
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Window square_window(double side) {
  if (side <= 0.0) throw ValidationError("window side must be positive");
  return Window{0.0, 0.0, side, 0.0};
}

Model model_or_throw(const std::string& name) {
  const auto m = parse_model(name);
  if (!m) throw ValidationError("unknown model '" + name + "'");
  return *m;
}

json net_params(const NetSpec& n) {
  return json{{"model", model_name(n.model)},
              {"side", n.side},
              {"intensity", n.intensity},
              {"margin_frac", n.margin_frac},
              {"comb_spacing", n.comb_spacing}};
}

NetSpec net_from(const json& j) {
  NetSpec n;
  n.model = model_or_throw(j.at("model").get<std::string>());
  n.side = j.at("side").get<double>();
  n.intensity = j.at("intensity").get<double>();
  n.margin_frac = j.at("margin_frac").get<double>();
  n.comb_spacing = j.at("comb_spacing").get<double>();
  return n;
}

void check_net(const NetSpec& n) {
  if (n.side <= 0.0) throw ValidationError("window side must be positive");
  if (n.intensity <= 0.0 && n.model != Model::comb)
    throw ValidationError("intensity must be positive");
  if (n.margin_frac < 0.0 || n.margin_frac >= 0.5)
    throw ValidationError("margin-frac must lie in [0, 0.5)");
  if (n.comb_spacing <= 0.0)
    throw ValidationError("comb-spacing must be positive");
}

// Resolves defaults in place so the manifest records the values actually
// used and a rerun cannot drift.
void resolve_request(RunRequest& req) {
  if (req.threads <= 0) req.threads = default_threads();
  const std::string& e = req.experiment;
  bool known = false;
  for (const auto& name : known_experiments()) known = known || name == e;
  if (!known) throw ValidationError("unknown experiment '" + e + "'");

  if (e == "rho") {
    check_net(req.rho.net);
    if (req.rho.r_max <= 0.0) throw ValidationError("r-max must be positive");
    if (req.rho.bins < 1) throw ValidationError("bins must be at least 1");
  } else if (e == "tail") {
    check_net(req.tail.net);
    if (req.tail.r <= 0.0) throw ValidationError("r must be positive");
    if (req.tail.d_lo <= 0.0) req.tail.d_lo = 2.0 * req.tail.r;
    if (req.tail.d_hi <= 0.0) req.tail.d_hi = req.tail.net.side / 4.0;
    if (req.tail.d_hi <= req.tail.d_lo)
      throw ValidationError("d-hi must exceed d-lo");
  } else if (e == "scaling") {
    if (req.scaling.sides.empty())
      throw ValidationError("sides must list at least one window side");
    for (std::size_t i = 0; i < req.scaling.sides.size(); ++i) {
      if (req.scaling.sides[i] <= 0.0)
        throw ValidationError("sides must be positive");
      if (i > 0 && req.scaling.sides[i] <= req.scaling.sides[i - 1])
        throw ValidationError("sides must increase strictly");
    }
    if (req.scaling.replicates < 1)
      throw ValidationError("replicates must be at least 1");
    if (req.scaling.r <= 0.0) throw ValidationError("r must be positive");
    if (req.scaling.margin_frac < 0.0 || req.scaling.margin_frac >= 0.5)
      throw ValidationError("margin-frac must lie in [0, 0.5)");
  } else if (e == "lemma-red") {
    if (req.red.m <= 0.0) throw ValidationError("m must be positive");
    if (req.red.trials < 1) throw ValidationError("trials must be at least 1");
  } else if (e == "lemma-green") {
    if (req.green.q < 0.0 || req.green.q > 1.0)
      throw ValidationError("q must lie in [0, 1]");
    if (req.green.k < 2) throw ValidationError("k must be at least 2");
    if (req.green.trials < 1) throw ValidationError("trials must be at least 1");
  } else if (e == "contours") {
    if (req.contours.grid.empty() && req.contours.k < 2)
      throw ValidationError("k must be at least 2");
    if (req.contours.p_green < 0.0 || req.contours.p_green > 1.0)
      throw ValidationError("p-green must lie in [0, 1]");
  } else if (e == "lemma7") {
    if (req.lemma7.model == Model::gabriel)
      throw ValidationError("lemma7 needs a tree model (mst, rain or comb)");
    if (req.lemma7.m <= 0.0) throw ValidationError("m must be positive");
    if (req.lemma7.k < 1) throw ValidationError("k must be at least 1");
    if (req.lemma7.pad < 0.0) throw ValidationError("pad must be nonnegative");
    if (req.lemma7.intensity <= 0.0 && req.lemma7.model != Model::comb)
      throw ValidationError("intensity must be positive");
  } else if (e == "rgg") {
    if (req.rgg.side <= 0.0) throw ValidationError("window side must be positive");
    if (req.rgg.intensity <= 0.0) throw ValidationError("intensity must be positive");
    if (req.rgg.radius <= 0.0) throw ValidationError("radius must be positive");
  } else if (e == "rain-check") {
    if (req.rain.side <= 0.0) throw ValidationError("window side must be positive");
    if (req.rain.intensity <= 0.0) throw ValidationError("intensity must be positive");
    if (req.rain.sample < 1) throw ValidationError("sample must be at least 1");
  }
}

json params_json(const RunRequest& req) {
  const std::string& e = req.experiment;
  if (e == "rho") {
    json p = net_params(req.rho.net);
    p["r_max"] = req.rho.r_max;
    p["bins"] = req.rho.bins;
    p["cap"] = req.rho.cap;
    return p;
  }
  if (e == "tail") {
    json p = net_params(req.tail.net);
    p["r"] = req.tail.r;
    p["d_lo"] = req.tail.d_lo;
    p["d_hi"] = req.tail.d_hi;
    p["cap"] = req.tail.cap;
    return p;
  }
  if (e == "scaling")
    return json{{"model", model_name(req.scaling.model)},
                {"sides", req.scaling.sides},
                {"replicates", req.scaling.replicates},
                {"r", req.scaling.r},
                {"margin_frac", req.scaling.margin_frac},
                {"cap", req.scaling.cap},
                {"comb_spacing", req.scaling.comb_spacing}};
  if (e == "lemma-red")
    return json{{"m", req.red.m}, {"trials", req.red.trials}};
  if (e == "lemma-green")
    return json{{"q", req.green.q},
                {"k", req.green.k},
                {"trials", req.green.trials},
                {"exclude_box", req.green.exclude_box}};
  if (e == "contours")
    return json{{"k", req.contours.k},
                {"p_green", req.contours.p_green},
                {"grid", req.contours.grid}};
  if (e == "lemma7")
    return json{{"model", model_name(req.lemma7.model)},
                {"m", req.lemma7.m},
                {"k", req.lemma7.k},
                {"pad", req.lemma7.pad},
                {"intensity", req.lemma7.intensity}};
  if (e == "rgg")
    return json{{"side", req.rgg.side},
                {"intensity", req.rgg.intensity},
                {"radius", req.rgg.radius}};
  return json{{"side", req.rain.side},
              {"intensity", req.rain.intensity},
              {"sample", req.rain.sample}};
}

void params_into(const json& p, RunRequest& req) {
  const std::string& e = req.experiment;
  if (e == "rho") {
    req.rho.net = net_from(p);
    req.rho.r_max = p.at("r_max").get<double>();
    req.rho.bins = p.at("bins").get<int>();
    req.rho.cap = p.at("cap").get<std::uint64_t>();
  } else if (e == "tail") {
    req.tail.net = net_from(p);
    req.tail.r = p.at("r").get<double>();
    req.tail.d_lo = p.at("d_lo").get<double>();
    req.tail.d_hi = p.at("d_hi").get<double>();
    req.tail.cap = p.at("cap").get<std::uint64_t>();
  } else if (e == "scaling") {
    req.scaling.model = model_or_throw(p.at("model").get<std::string>());
    req.scaling.sides = p.at("sides").get<std::vector<double>>();
    req.scaling.replicates = p.at("replicates").get<int>();
    req.scaling.r = p.at("r").get<double>();
    req.scaling.margin_frac = p.at("margin_frac").get<double>();
    req.scaling.cap = p.at("cap").get<std::uint64_t>();
    req.scaling.comb_spacing = p.at("comb_spacing").get<double>();
  } else if (e == "lemma-red") {
    req.red.m = p.at("m").get<double>();
    req.red.trials = p.at("trials").get<int>();
  } else if (e == "lemma-green") {
    req.green.q = p.at("q").get<double>();
    req.green.k = p.at("k").get<int>();
    req.green.trials = p.at("trials").get<int>();
    req.green.exclude_box = p.at("exclude_box").get<bool>();
  } else if (e == "contours") {
    req.contours.k = p.at("k").get<int>();
    req.contours.p_green = p.at("p_green").get<double>();
    req.contours.grid = p.at("grid").get<std::string>();
  } else if (e == "lemma7") {
    req.lemma7.model = model_or_throw(p.at("model").get<std::string>());
    req.lemma7.m = p.at("m").get<double>();
    req.lemma7.k = p.at("k").get<int>();
    req.lemma7.pad = p.at("pad").get<double>();
    req.lemma7.intensity = p.at("intensity").get<double>();
  } else if (e == "rgg") {
    req.rgg.side = p.at("side").get<double>();
    req.rgg.intensity = p.at("intensity").get<double>();
    req.rgg.radius = p.at("radius").get<double>();
  } else if (e == "rain-check") {
    req.rain.side = p.at("side").get<double>();
    req.rain.intensity = p.at("intensity").get<double>();
    req.rain.sample = p.at("sample").get<int>();
  }
}

json seeds_json(const RunRequest& req) {
  const std::string& e = req.experiment;
  json s;
  if (e == "rho" || e == "tail") {
    s["build"] = derive_seed(req.seed, "build", 0);
    s["pairs"] = derive_seed(req.seed, "pairs", 0);
  } else if (e == "scaling") {
    json sides = json::array();
    for (std::size_t si = 0; si < req.scaling.sides.size(); ++si) {
      const std::uint64_t side_seed = derive_seed(req.seed, "scaling-side", si);
      json reps = json::array();
      for (int rep = 0; rep < req.scaling.replicates; ++rep)
        reps.push_back(derive_seed(side_seed, model_name(req.scaling.model),
                                   std::uint64_t(rep)));
      sides.push_back(std::move(reps));
    }
    s["replicates"] = std::move(sides);
  } else if (e == "lemma-red") {
    json t = json::array();
    for (int i = 0; i < req.red.trials; ++i)
      t.push_back(derive_seed(req.seed, "red-trial", std::uint64_t(i)));
    s["trials"] = std::move(t);
  } else if (e == "lemma-green") {
    json t = json::array();
    for (int i = 0; i < req.green.trials; ++i)
      t.push_back(derive_seed(req.seed, "green-trial", std::uint64_t(i)));
    s["trials"] = std::move(t);
  } else if (e == "contours") {
    if (req.contours.grid.empty())
      s["coloring"] = derive_seed(req.seed, "coloring", 0);
  } else if (e == "lemma7") {
    s["build"] = derive_seed(req.seed, "build", 0);
  } else if (e == "rgg") {
    s["points"] = derive_seed(req.seed, "points", 0);
  } else if (e == "rain-check") {
    s["build"] = derive_seed(req.seed, "build", 0);
    s["sample"] = derive_seed(req.seed, "sample", 0);
  }
  return s;
}

std::vector<std::string> artifact_names(const std::string& e) {
  if (e == "rho") return {"rho.csv", "summary.json"};
  if (e == "tail") return {"tail.csv", "summary.json"};
  if (e == "scaling") return {"scaling.csv", "summary.json"};
  if (e == "lemma-red") return {"trials.csv", "summary.json"};
  if (e == "lemma-green") return {"green.json"};
  if (e == "contours")
    return {"coloring.txt", "contours.json", "decomposition.json"};
  if (e == "lemma7") return {"lemma7.json"};
  if (e == "rgg") return {"rgg.json"};
  return {"rain.json"};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

using Artifacts = std::vector<std::pair<std::string, std::string>>;

Artifacts run_rho(const RunRequest& req) {
  const RhoSpec& sp = req.rho;
  const Window w = square_window(sp.net.side);
  const BuiltNetwork bn = build_model(sp.net.model, w, sp.net.intensity,
                                      derive_seed(req.seed, "build", 0),
                                      sp.net.comb_spacing);
  const auto src = make_route_source(bn);
  const double margin = sp.net.margin_frac * sp.net.side;
  const RhoCurve curve =
      estimate_rho(bn.points, *src, sp.r_max, sp.bins, sp.cap, margin,
                   derive_seed(req.seed, "pairs", 0), unsigned(req.threads));
  std::uint64_t total = 0, used = 0;
  for (const RhoBin& b : curve.bins) {
    total += b.total_pairs;
    used += b.used_pairs;
  }
  const json summary{{"experiment", "rho"},
                     {"model", model_name(sp.net.model)},
                     {"n_points", bn.points.size()},
                     {"bins", sp.bins},
                     {"r_max", sp.r_max},
                     {"margin", margin},
                     {"pairs_total", total},
                     {"pairs_used", used}};
  return {{"rho.csv", rho_csv(curve)}, {"summary.json", dump(summary)}};
}

Artifacts run_tail(const RunRequest& req) {
  const TailSpec& sp = req.tail;
  const Window w = square_window(sp.net.side);
  const BuiltNetwork bn = build_model(sp.net.model, w, sp.net.intensity,
                                      derive_seed(req.seed, "build", 0),
                                      sp.net.comb_spacing);
  const auto src = make_route_source(bn);
  const double margin = sp.net.margin_frac * sp.net.side;
  const std::vector<double> grid = geometric_d_grid(sp.d_lo, sp.d_hi);
  const TailEstimate te =
      estimate_tail(bn.points, *src, sp.r, grid, sp.cap, margin,
                    derive_seed(req.seed, "pairs", 0), unsigned(req.threads),
                    model_name(sp.net.model));
  json summary{{"experiment", "tail"},
               {"model", model_name(sp.net.model)},
               {"n_points", bn.points.size()},
               {"r", sp.r},
               {"d_lo", sp.d_lo},
               {"d_hi", sp.d_hi},
               {"margin", margin},
               {"pairs_total", te.pairs_total},
               {"pairs_used", te.pairs_used},
               {"capped", te.capped},
               {"insufficient_pairs", te.insufficient_pairs},
               {"grid_points", te.d.size()}};
  try {
    const TailFit fit = fit_tail_exponent(te, sp.d_lo, sp.d_hi);
    summary["fit"] = json{{"slope", fit.slope},
                          {"intercept", fit.intercept},
                          {"slope_se", fit.slope_se},
                          {"r2", fit.r2},
                          {"points_used", fit.points_used}};
  } catch (const std::exception& ex) {
    summary["fit"] = nullptr;
    summary["fit_skipped"] = ex.what();
  }
  return {{"tail.csv", tail_csv(te)}, {"summary.json", dump(summary)}};
}

Artifacts run_scaling(const RunRequest& req) {
  const ScalingSpec& sp = req.scaling;
  const ScalingStudy st = window_scaling_study(
      sp.model, sp.r, sp.sides, sp.replicates, req.seed, sp.margin_frac,
      sp.cap, unsigned(req.threads), sp.comb_spacing);
  json rows = json::array();
  for (const ScalingRow& row : st.rows)
    rows.push_back(json{{"side", row.side},
                        {"mean_route", row.mean_route},
                        {"ci_lo", row.ci_lo},
                        {"ci_hi", row.ci_hi},
                        {"pairs_used", row.pairs_used},
                        {"replicate_means", row.replicate_means}});
  const json summary{{"experiment", "scaling"},
                     {"model", model_name(sp.model)},
                     {"r", sp.r},
                     {"replicates", sp.replicates},
                     {"rows", std::move(rows)}};
  return {{"scaling.csv", scaling_csv(st)}, {"summary.json", dump(summary)}};
}

Artifacts run_red(const RunRequest& req) {
  const RedSpec& sp = req.red;
  std::ostringstream csv;
  csv << "trial,strategy,n1,n2,blue1,blue2,pairs,threshold,ok\n";
  std::uint64_t violations = 0;
  std::uint64_t min_pairs = UINT64_MAX;
  double threshold = 0.0;
  for (int t = 0; t < sp.trials; ++t) {
    const RedTrial rt =
        red_trial(sp.m, derive_seed(req.seed, "red-trial", std::uint64_t(t)));
    threshold = rt.threshold;
    if (!rt.ok) ++violations;
    min_pairs = std::min(min_pairs, rt.pairs);
    csv << t << ',' << rt.strategy << ',' << rt.n1 << ',' << rt.n2 << ','
        << rt.blue1 << ',' << rt.blue2 << ',' << rt.pairs << ','
        << fmt_double17(rt.threshold) << ',' << (rt.ok ? 1 : 0) << '\n';
  }
  const json summary{{"experiment", "lemma-red"},
                     {"m", sp.m},
                     {"trials", sp.trials},
                     {"violations", violations},
                     {"min_pairs", min_pairs},
                     {"threshold", threshold},
                     {"min_ratio", threshold > 0.0
                                       ? double(min_pairs) / threshold
                                       : 0.0}};
  return {{"trials.csv", csv.str()}, {"summary.json", dump(summary)}};
}

Artifacts run_green(const RunRequest& req) {
  const GreenSpec& sp = req.green;
  const GreenEstimate ge = mc_lemma_green(sp.q, sp.k, sp.trials, req.seed,
                                          sp.exclude_box);
  const json out{{"experiment", "lemma-green"},
                 {"q", ge.q},
                 {"k", ge.k},
                 {"trials", ge.trials},
                 {"failures", ge.failures},
                 {"threshold", ge.threshold},
                 {"p_hat", ge.p_hat},
                 {"lo", ge.lo},
                 {"hi", ge.hi},
                 {"exact", ge.exact},
                 {"exclude_box", ge.exclude_box}};
  return {{"green.json", dump(out)}};
}

GridColoring coloring_from_grid_text(const std::string& text) {
  std::vector<std::string> rows;
  std::string line;
  std::istringstream is(text);
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) rows.push_back(line);
  }
  const int k = int(rows.size());
  if (k < 2) throw ValidationError("grid needs at least 2 rows");
  GridColoring gc(k);
  for (int y = 0; y < k; ++y) {
    if (int(rows[std::size_t(y)].size()) != k)
      throw ValidationError("grid row " + std::to_string(y + 1) + " has " +
                            std::to_string(rows[std::size_t(y)].size()) +
                            " cells, expected " + std::to_string(k));
    for (int x = 0; x < k; ++x) {
      const char c = rows[std::size_t(y)][std::size_t(x)];
      if (c != '0' && c != '1')
        throw ValidationError("grid row " + std::to_string(y + 1) +
                              " column " + std::to_string(x + 1) +
                              ": expected 0 or 1");
      gc.set_green(x, y, c == '1');
    }
  }
  return gc;
}

std::string grid_text_of(const GridColoring& gc) {
  std::string out;
  for (int y = 0; y < gc.k; ++y) {
    for (int x = 0; x < gc.k; ++x) out += gc.is_green(x, y) ? '1' : '0';
    out += '\n';
  }
  return out;
}

Artifacts run_contours(const RunRequest& req) {
  const ContoursSpec& sp = req.contours;
  GridColoring gc(2);
  if (!sp.grid.empty()) {
    gc = coloring_from_grid_text(sp.grid);
  } else {
    Rng rng(derive_seed(req.seed, "coloring", 0));
    gc = random_coloring(sp.k, sp.p_green, rng);
  }
  const ContourSet cs = extract_dual_contours(gc);
  const Decomposition dec = maximal_decomposition(cs, gc);
  json items = json::array();
  int n_circuits = 0, n_paths = 0, max_circuits = 0, max_paths = 0;
  for (const ContourInfo& info : dec.items) {
    const Contour& c = cs.contours[std::size_t(info.index)];
    (c.is_circuit ? n_circuits : n_paths) += 1;
    if (info.maximal) (c.is_circuit ? max_circuits : max_paths) += 1;
    items.push_back(json{{"index", info.index},
                         {"circuit", c.is_circuit},
                         {"length", c.length()},
                         {"cost", contour_cost(c, gc)},
                         {"maximal", info.maximal},
                         {"parent", info.parent},
                         {"interior_cells", info.interior.size()},
                         {"ambiguous_interior", info.ambiguous_interior},
                         {"inner_uniform", info.inner_uniform},
                         {"outer_uniform", info.outer_uniform},
                         {"inner_connected", info.inner_connected}});
  }
  const json dj{{"k", dec.k},
                {"n_circuits", n_circuits},
                {"n_paths", n_paths},
                {"n_maximal_circuits", max_circuits},
                {"n_maximal_paths", max_paths},
                {"unlike_adjacent_pairs", unlike_adjacent_pairs(gc)},
                {"contours", std::move(items)}};
  return {{"coloring.txt", grid_text_of(gc)},
          {"contours.json", contours_json(cs) + "\n"},
          {"decomposition.json", dump(dj)}};
}

Artifacts run_lemma7(const RunRequest& req) {
  const Lemma7Spec& sp = req.lemma7;
  const double side = sp.m * double(sp.k) + 2.0 * sp.pad;
  const Window w = square_window(side);
  const BuiltNetwork bn = build_model(sp.model, w, sp.intensity,
                                      derive_seed(req.seed, "build", 0));
  if (!bn.tree)
    throw std::runtime_error("lemma7: the chosen model produced no tree");
  const Lemma7Report rep =
      lemma7_pipeline(*bn.tree, Vec2{sp.pad, sp.pad}, sp.m, sp.k);
  const json out{{"experiment", "lemma7"},
                 {"model", model_name(sp.model)},
                 {"m", rep.m},
                 {"k", rep.k},
                 {"n_terminals", rep.n_terminals},
                 {"v_star", rep.v_star},
                 {"v_star_source", rep.v_star_source},
                 {"n_blue", rep.n_blue},
                 {"n_rest", rep.n_rest},
                 {"census_mid", rep.census_mid},
                 {"census_low", rep.census_low},
                 {"census_high", rep.census_high},
                 {"census_unbalanced", rep.census_unbalanced},
                 {"near_threshold", rep.near_threshold},
                 {"route_threshold", rep.route_threshold},
                 {"close_cross_pairs", rep.close_cross_pairs},
                 {"qualifying_pairs", rep.qualifying_pairs},
                 {"census_mid_small", rep.census_mid_small},
                 {"split_large", rep.split_large}};
  return {{"lemma7.json", dump(out)}};
}

Artifacts run_rgg(const RunRequest& req) {
  const RggSpec& sp = req.rgg;
  const Window w = square_window(sp.side);
  const PointSet ps =
      sample_poisson(sp.intensity, w, derive_seed(req.seed, "points", 0));
  const RggComponents rc = rgg_components(ps, sp.radius);
  int largest = 0;
  for (const auto& [size, freq] : rc.size_histogram)
    largest = std::max(largest, size);
  json hist = json::array();
  for (const auto& [size, freq] : rc.size_histogram)
    hist.push_back(json::array({size, freq}));
  const json out{{"experiment", "rgg"},
                 {"side", sp.side},
                 {"intensity", sp.intensity},
                 {"radius", sp.radius},
                 {"n_points", ps.size()},
                 {"component_count", rc.component_count},
                 {"largest_component", largest},
                 {"size_histogram", std::move(hist)},
                 {"moments", rc.moments}};
  return {{"rgg.json", dump(out)}};
}

Artifacts run_rain_check(const RunRequest& req) {
  const RainCheckSpec& sp = req.rain;
  const Window w = square_window(sp.side);
  const RainTree rt =
      build_poisson_rain(sp.intensity, w, derive_seed(req.seed, "build", 0));
  const std::size_t n = rt.points.size();
  if (n < 2) throw std::runtime_error("rain-check: fewer than two points fell");

  // The first arrival has no parent; every other vertex should attach to
  // its nearest strict predecessor.
  std::vector<int> candidates;
  candidates.reserve(n);
  for (std::size_t v = 0; v < n; ++v)
    if (rt.parent[v] >= 0) candidates.push_back(int(v));
  Rng rng(derive_seed(req.seed, "sample", 0));
  const std::vector<std::uint64_t> picks = sample_positions(
      candidates.size(), std::min<std::uint64_t>(std::uint64_t(sp.sample),
                                                 candidates.size()),
      rng);
  std::uint64_t mismatches = 0;
  for (const std::uint64_t pi : picks) {
    const int v = candidates[std::size_t(pi)];
    const double tv = rt.arrival[std::size_t(v)];
    double best = -1.0;
    for (std::size_t u = 0; u < n; ++u) {
      if (rt.arrival[u] >= tv) continue;
      const double d = dist(rt.points[u], rt.points[std::size_t(v)]);
      if (best < 0.0 || d < best) best = d;
    }
    const double got =
        dist(rt.points[std::size_t(rt.parent[std::size_t(v)])],
             rt.points[std::size_t(v)]);
    const bool parent_earlier =
        rt.arrival[std::size_t(rt.parent[std::size_t(v)])] < tv;
    if (!parent_earlier || got > best + 1e-9 * (1.0 + best)) ++mismatches;
  }
  const json out{{"experiment", "rain-check"},
                 {"side", sp.side},
                 {"intensity", sp.intensity},
                 {"n_points", n},
                 {"checked", picks.size()},
                 {"mismatches", mismatches},
                 {"ok", mismatches == 0}};
  return {{"rain.json", dump(out)}};
}

Artifacts execute(const RunRequest& req) {
  const std::string& e = req.experiment;
  if (e == "rho") return run_rho(req);
  if (e == "tail") return run_tail(req);
  if (e == "scaling") return run_scaling(req);
  if (e == "lemma-red") return run_red(req);
  if (e == "lemma-green") return run_green(req);
  if (e == "contours") return run_contours(req);
  if (e == "lemma7") return run_lemma7(req);
  if (e == "rgg") return run_rgg(req);
  return run_rain_check(req);
}

}  // namespace

std::vector<std::string> run_experiment(const RunRequest& req_in,
                                        const std::filesystem::path& out_dir) {
  RunRequest req = req_in;
  resolve_request(req);

  const auto t0 = std::chrono::steady_clock::now();
  if (fs::exists(out_dir)) {
    if (!fs::is_directory(out_dir) || !fs::is_empty(out_dir))
      throw ValidationError("output directory exists and is not empty: " +
                            out_dir.string());
  } else {
    fs::create_directories(out_dir);
  }

  const std::vector<std::string> names = artifact_names(req.experiment);
  json manifest{{"format", 1},
                {"experiment", req.experiment},
                {"version", kVersion},
                {"seed", req.seed},
                {"params", params_json(req)},
                {"seeds", seeds_json(req)},
                {"artifacts", names}};
  write_atomic(out_dir, kManifestName, dump(manifest));

  const Artifacts arts = execute(req);
  for (const auto& [name, content] : arts) write_atomic(out_dir, name, content);

  const auto t1 = std::chrono::steady_clock::now();
  rusage ru{};
  getrusage(RUSAGE_SELF, &ru);
  const json telemetry{
      {"wall_seconds",
       std::chrono::duration_cast<std::chrono::duration<double>>(t1 - t0)
           .count()},
      {"max_rss_kb", ru.ru_maxrss},
      {"threads", req.threads}};
  write_atomic(out_dir, kTelemetryName, dump(telemetry));
  write_atomic(out_dir, kCompleteName, "ok\n");
  return names;
}

RunRequest request_from_manifest(const std::filesystem::path& run_dir) {
  const fs::path mf = run_dir / kManifestName;
  if (!fs::exists(mf))
    throw ValidationError("no manifest.json under " + run_dir.string());
  json m;
  try {
    m = json::parse(read_file(mf));
  } catch (const json::exception& ex) {
    throw ValidationError("manifest.json is not valid JSON: " +
                          std::string(ex.what()));
  }
  try {
    if (m.at("format").get<int>() != 1)
      throw ValidationError("manifest format not understood");
    RunRequest req;
    req.experiment = m.at("experiment").get<std::string>();
    req.seed = m.at("seed").get<std::uint64_t>();
    params_into(m.at("params"), req);
    resolve_request(req);
    return req;
  } catch (const json::exception& ex) {
    throw ValidationError("manifest.json is missing fields: " +
                          std::string(ex.what()));
  }
}

std::vector<std::string> rerun_from_manifest(
    const std::filesystem::path& src_dir, const std::filesystem::path& out_dir,
    std::optional<int> threads) {
  RunRequest req = request_from_manifest(src_dir);
  if (threads) req.threads = *threads;
  return run_experiment(req, out_dir);
}

namespace {

void report_lines(const json& manifest, const fs::path& dir,
                  std::vector<std::pair<std::string, std::string>>& kv) {
  const std::string e = manifest.at("experiment").get<std::string>();
  auto load = [&](const char* name) { return json::parse(read_file(dir / name)); };
  if (e == "rho") {
    const json s = load("summary.json");
    kv.push_back({"n_points", s.at("n_points").dump()});
    kv.push_back({"pairs_used", s.at("pairs_used").dump()});
    kv.push_back({"csv", "rho.csv"});
  } else if (e == "tail") {
    const json s = load("summary.json");
    kv.push_back({"n_points", s.at("n_points").dump()});
    kv.push_back({"pairs_used", s.at("pairs_used").dump()});
    if (s.contains("fit") && !s.at("fit").is_null()) {
      kv.push_back({"fit_slope", s.at("fit").at("slope").dump()});
      kv.push_back({"fit_slope_se", s.at("fit").at("slope_se").dump()});
      kv.push_back({"fit_r2", s.at("fit").at("r2").dump()});
    } else {
      kv.push_back({"fit", "skipped"});
    }
    kv.push_back({"csv", "tail.csv"});
  } else if (e == "scaling") {
    const json s = load("summary.json");
    for (const json& row : s.at("rows"))
      kv.push_back({"mean_route@side=" + row.at("side").dump(),
                    row.at("mean_route").dump() + " [" +
                        row.at("ci_lo").dump() + ", " +
                        row.at("ci_hi").dump() + "]"});
    kv.push_back({"csv", "scaling.csv"});
  } else if (e == "lemma-red") {
    const json s = load("summary.json");
    kv.push_back({"trials", s.at("trials").dump()});
    kv.push_back({"violations", s.at("violations").dump()});
    kv.push_back({"min_pairs", s.at("min_pairs").dump()});
    kv.push_back({"threshold", s.at("threshold").dump()});
    kv.push_back({"csv", "trials.csv"});
  } else if (e == "lemma-green") {
    const json s = load("green.json");
    kv.push_back({"p_hat", s.at("p_hat").dump()});
    kv.push_back({"wilson_lo", s.at("lo").dump()});
    kv.push_back({"wilson_hi", s.at("hi").dump()});
    kv.push_back({"exact_minimum", s.at("exact").dump()});
  } else if (e == "contours") {
    const json s = load("decomposition.json");
    kv.push_back({"circuits", s.at("n_circuits").dump()});
    kv.push_back({"paths", s.at("n_paths").dump()});
    kv.push_back({"maximal_circuits", s.at("n_maximal_circuits").dump()});
    kv.push_back({"maximal_paths", s.at("n_maximal_paths").dump()});
  } else if (e == "lemma7") {
    const json s = load("lemma7.json");
    for (const char* key :
         {"n_terminals", "n_blue", "census_mid", "census_low", "census_high",
          "census_unbalanced", "close_cross_pairs", "qualifying_pairs"})
      kv.push_back({key, s.at(key).dump()});
  } else if (e == "rgg") {
    const json s = load("rgg.json");
    kv.push_back({"n_points", s.at("n_points").dump()});
    kv.push_back({"components", s.at("component_count").dump()});
    kv.push_back({"largest_component", s.at("largest_component").dump()});
  } else if (e == "rain-check") {
    const json s = load("rain.json");
    kv.push_back({"n_points", s.at("n_points").dump()});
    kv.push_back({"checked", s.at("checked").dump()});
    kv.push_back({"mismatches", s.at("mismatches").dump()});
  }
}

}  // namespace

std::string emit_report(const std::filesystem::path& run_dir) {
  if (!fs::exists(run_dir / kCompleteName))
    throw ValidationError("run directory is incomplete (no COMPLETE marker): " +
                          run_dir.string());
  const json manifest = json::parse(read_file(run_dir / kManifestName));
  std::vector<std::pair<std::string, std::string>> kv;
  kv.push_back({"experiment", manifest.at("experiment").get<std::string>()});
  kv.push_back({"version", manifest.at("version").get<std::string>()});
  kv.push_back({"seed", manifest.at("seed").dump()});
  report_lines(manifest, run_dir, kv);

  std::ostringstream txt, csv;
  txt << "run: " << run_dir.string() << "\n";
  csv << "key,value\n";
  for (const auto& [k, v] : kv) {
    txt << "  " << k << ": " << v << "\n";
    std::string quoted = v;
    if (quoted.find(',') != std::string::npos) quoted = '"' + quoted + '"';
    csv << k << ',' << quoted << '\n';
  }
  write_atomic(run_dir, "report.txt", txt.str());
  write_atomic(run_dir, "report.csv", csv.str());
  return txt.str();
}

std::filesystem::path default_out_root() {
  if (const char* env = std::getenv("TREENET_OUT"); env && *env)
    return fs::path(env);
  return fs::path("runs");
}

std::string default_run_name(const RunRequest& req_in) {
  RunRequest req = req_in;
  resolve_request(req);
  const std::string canon =
      json{{"experiment", req.experiment}, {"params", params_json(req)}}.dump();
  std::uint64_t h = 0x243f6a8885a308d3ull;
  for (const unsigned char c : canon) h = mix64(h ^ c);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%08" PRIx64, h >> 32);
  return req.experiment + "-s" + std::to_string(req.seed) + "-" + buf;
}

}  // namespace treenet
