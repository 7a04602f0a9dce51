// latticeopt: dataset generation, surrogate training and surrogate-gated
// annealing for periodic lattice frames.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "CLI11.hpp"
#include "latticeopt/dataset.hpp"
#include "latticeopt/fem.hpp"
#include "latticeopt/lattice.hpp"
#include "latticeopt/optimizer.hpp"
#include "latticeopt/surrogate.hpp"
#include "latticeopt/text_io.hpp"
#include "manifest.hpp"

namespace fs = std::filesystem;
using namespace latticeopt;

namespace {

constexpr const char* kStatsColumns =
    "m,requested,retained,survival_rate,mean_volume_m3,std_volume_m3,mean_compliance_Nm,std_compliance_Nm,"
    "ground_volume_m3,ground_compliance_Nm";

std::string stats_line(const Dataset& d) {
  const DatasetStats s = stats(d);
  return fmt::format("{},{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}", d.meta.m, d.meta.requested, s.count,
                     d.survival_rate(), s.mean_volume, s.std_volume, s.mean_compliance, s.std_compliance,
                     s.ground_volume, s.ground_compliance);
}

struct GenDataArgs {
  int m = 4;
  std::size_t count = 20000;
  std::uint64_t seed = 1;
  double threshold = kDefaultScreeningThreshold;
  unsigned workers = 0;
  std::string out;
};

struct TrainArgs {
  std::string data;
  int n_m = 2;
  std::size_t top_k = 0;
  int epochs = 10;
  int batch = 200;
  double lr = 1e-3;
  double split = 0.75;
  std::uint64_t seed = 1;
  double conv_weight = 0.25;
  std::vector<int> hidden{kDefaultHiddenLayers.begin(), kDefaultHiddenLayers.end()};
  bool no_filter = false;
  std::string out;
  std::string loss_out;
};

struct OptimizeArgs {
  std::string model;
  std::string init;
  int m = 0;
  std::string mode = "sa";
  std::string gate = "on";
  SAConfig cfg;
  std::string out;
  std::string history_out;
  std::string best_out;
};

struct EvalArgs {
  std::string model;
  std::string data;
  std::vector<double> weights;
  std::string out;
};

struct BruteArgs {
  int m = 2;
  double lambda = 10.0;
  double v_c = 0.26;
  unsigned workers = 0;
  std::string out;
};

struct Single {
  std::string topology;
  std::string model;
  std::string out;
  std::string data;
  std::string scatter_out;
  int ground = 0;
  double threshold = std::numeric_limits<double>::infinity();
  std::optional<double> conv_weight;
};

/// Outputs written by a subcommand; the first one names the manifest.
using Outputs = std::vector<fs::path>;

UnitTopology topology_arg(const Single& a) {
  if (a.ground > 0) return UnitTopology::ground(a.ground);
  if (a.topology.empty()) throw std::invalid_argument("one of --topology or --ground is required");
  return read_topology(fs::path(a.topology));
}

Outputs run_gen_data(const GenDataArgs& a) {
  const Dataset d = generate(a.m, a.count, a.seed, a.threshold, a.workers);
  save_csv(fs::path(a.out), d);
  std::cout << stats_line(d) << '\n';
  return {a.out};
}

Outputs run_train(const TrainArgs& a) {
  const Dataset data = load_csv(fs::path(a.data));
  FeatureConfig fc;
  fc.n_m = a.no_filter ? 0 : a.n_m;
  fc.conv_weight = a.conv_weight;
  if (a.top_k > 0) fc.top_k = a.top_k;
  TrainConfig tc;
  tc.batch_size = a.batch;
  tc.epochs = a.epochs;
  tc.adam.learning_rate = a.lr;
  tc.split = a.split;
  tc.seed = a.seed;
  tc.hidden = a.hidden;
  const TrainResult r = train(data, fc, tc);

  save_model(fs::path(a.out), r.model);
  Outputs outs{a.out};
  if (!a.loss_out.empty()) {
    save_loss_history(fs::path(a.loss_out), r.history);
    outs.emplace_back(a.loss_out);
  }
  std::cout << fmt::format("input_dim={} train_rows={} test_rows={}\n", r.model.net.input_dim(), r.train_rows.size(),
                           r.test_rows.size());
  for (const auto& e : r.history) {
    std::cout << fmt::format("epoch {:>3}  train_mse {:.6f}  test_mse {:.6f}\n", e.epoch, e.train_mse, e.test_mse);
  }
  return outs;
}

UnitTopology first_stable_sample(int m, std::uint64_t seed) {
  const GridSpec spec = GridSpec::for_grid(m);
  for (std::size_t k = 0; k < 100000; ++k) {
    UnitTopology x = sample_for_index(m, seed, k);
    if (analyze(x, spec, std::numeric_limits<double>::infinity()).stable()) return x;
  }
  throw std::runtime_error("no stable random topology found");
}

Outputs run_optimize(OptimizeArgs a) {
  a.cfg.gate = a.gate == "on";
  a.cfg.mode = a.mode == "local" ? SearchMode::Local : SearchMode::Anneal;

  std::optional<SurrogateModel> model;
  if (!a.model.empty()) model = load_model(fs::path(a.model));
  if (a.cfg.gate && !model) throw std::invalid_argument("--gate on needs --model");

  UnitTopology x0;
  if (!a.init.empty()) {
    x0 = read_topology(fs::path(a.init));
  } else {
    const int m = a.m > 0 ? a.m : (model ? model->pipeline.m : 4);
    x0 = first_stable_sample(m, a.cfg.seed);
  }
  if (a.cfg.gate) {
    const int mm = model->pipeline.m;
    if (x0.m() != mm && x0.m() != 2 * mm) {
      throw std::invalid_argument(fmt::format("model is for m={} (or {}), initial topology has m={}", mm, 2 * mm, x0.m()));
    }
  }

  Predictor predictor;
  if (model) predictor = [&m = *model](const UnitTopology& x) { return predict(m, x); };
  const SAResult r = run(x0, a.cfg, fem_evaluator(GridSpec::for_grid(x0.m())), a.cfg.gate ? predictor : Predictor{});

  save_result(fs::path(a.out), r, a.cfg);
  Outputs outs{a.out};
  if (!a.history_out.empty()) {
    save_history(fs::path(a.history_out), r);
    outs.emplace_back(a.history_out);
  }
  if (!a.best_out.empty()) {
    write_topology(fs::path(a.best_out), r.best_feasible ? r.best_feasible->x : r.best_penalized.x);
    outs.emplace_back(a.best_out);
  }
  if (r.best_feasible) {
    std::cout << fmt::format("best feasible: compliance {:.6f} N*m, volume {:.6f} m^3\n", r.best_feasible->compliance,
                             r.best_feasible->volume);
  } else {
    std::cout << "best feasible: none\n";
  }
  std::cout << fmt::format("best penalized: g {:.6f}, compliance {:.6f} N*m, volume {:.6f} m^3\n",
                           r.best_penalized.objective, r.best_penalized.compliance, r.best_penalized.volume);
  std::cout << fmt::format("analyses {} / iterations {}\n", r.analysis_count, r.iteration_count);
  return outs;
}

Outputs run_analyze(const Single& a) {
  const UnitTopology x = topology_arg(a);
  const Analysis an = analyze(x, GridSpec::for_grid(x.m()), a.threshold);
  std::cout << format_real(an.volume) << ','
            << (an.result.compliance ? format_real(*an.result.compliance) : std::string("nan")) << ','
            << (an.stable() ? "stable" : "unstable") << '\n';
  return {};
}

Outputs run_predict(const Single& a) {
  SurrogateModel model = load_model(fs::path(a.model));
  if (a.conv_weight) model.pipeline.conv_weight = *a.conv_weight;
  std::cout << format_real(predict(model, topology_arg(a))) << '\n';
  return {};
}

Outputs run_refine(const Single& a) {
  const UnitTopology x = topology_arg(a);
  const UnitTopology fine = refine(x);
  write_topology(fs::path(a.out), fine);
  std::cout << fmt::format("m {} -> {}, volume {} -> {}\n", x.m(), fine.m(), format_real(unit_volume(x, GridSpec::for_grid(x.m()))),
                           format_real(unit_volume(fine, GridSpec::for_grid(fine.m()))));
  return {a.out};
}

Outputs run_stats(const Single& a) {
  const Dataset d = load_csv(fs::path(a.data));
  std::cout << stats_line(d) << '\n';
  if (a.scatter_out.empty()) return {};
  std::ofstream out(a.scatter_out, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + a.scatter_out);
  out << "volume_m3,compliance_Nm\n";
  for (const auto& row : d.rows) out << format_real(row.volume) << ',' << format_real(row.compliance) << '\n';
  if (!out) throw std::runtime_error("write failed: " + a.scatter_out);
  return {a.scatter_out};
}

Outputs run_eval(const EvalArgs& a) {
  SurrogateModel model = load_model(fs::path(a.model));
  const Dataset d = load_csv(fs::path(a.data));
  std::vector<double> weights = a.weights;
  if (weights.empty()) weights.push_back(model.pipeline.conv_weight);

  std::vector<std::pair<double, double>> rows;
  for (double w : weights) {
    model.pipeline.conv_weight = w;
    rows.emplace_back(w, evaluate_mse(model, d));
    std::cout << fmt::format("conv_weight {:.4f}  mse {:.6f}  rows {}\n", w, rows.back().second, d.rows.size());
  }
  if (a.out.empty()) return {};
  std::ofstream out(a.out, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + a.out);
  out << "conv_weight,mse,rows\n";
  for (const auto& [w, e] : rows) out << format_real(w) << ',' << format_real(e) << ',' << d.rows.size() << '\n';
  if (!out) throw std::runtime_error("write failed: " + a.out);
  return {a.out};
}

Outputs run_brute_force(const BruteArgs& a) {
  const BruteForceResult r = brute_force(a.m, GridSpec::for_grid(a.m), a.lambda, a.v_c,
                                         std::numeric_limits<double>::infinity(), a.workers);
  std::cout << fmt::format("evaluated {} stable {}\n", r.evaluated, r.stable);
  std::cout << fmt::format("best penalized: g {} compliance {} volume {} bits {}\n",
                           format_real(r.best_penalized.objective), format_real(r.best_penalized.compliance),
                           format_real(r.best_penalized.volume), r.best_penalized.x.to_string());
  if (r.best_feasible) {
    std::cout << fmt::format("best feasible: compliance {} volume {} bits {}\n", format_real(r.best_feasible->compliance),
                             format_real(r.best_feasible->volume), r.best_feasible->x.to_string());
  }
  if (a.out.empty()) return {};
  write_topology(fs::path(a.out), r.best_penalized.x);
  return {a.out};
}

/// Every option of `sub` with its effective value, defaults included.
void resolve(const CLI::App* sub, cli::RunManifest& manifest) {
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_lnames().empty() || opt->get_lnames().front() == "help") continue;
    const std::string name = "--" + opt->get_lnames().front();
    if (opt->get_type_size() == 0) {
      if (opt->count() > 0) {
        manifest.args.push_back(name);
        manifest.params.emplace_back(opt->get_lnames().front(), "true");
      }
      continue;
    }
    std::string value;
    if (opt->count() > 0) {
      value = fmt::format("{}", fmt::join(opt->results(), ","));
    } else {
      value = opt->get_default_str();
      // Container defaults are rendered as "[a,b,c]".
      if (value.size() >= 2 && value.front() == '[' && value.back() == ']') value = value.substr(1, value.size() - 2);
    }
    if (value.empty()) continue;
    manifest.args.push_back(name);
    manifest.args.push_back(value);
    manifest.params.emplace_back(opt->get_lnames().front(), value);
  }
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

int dispatch(std::vector<std::string> argv, bool replaying);

int run_replay(const std::string& manifest_file) {
  const cli::LoadedManifest lm = cli::read_manifest(fs::path(manifest_file));
  std::vector<std::string> argv{"latticeopt", lm.run.subcommand};
  argv.insert(argv.end(), lm.run.args.begin(), lm.run.args.end());
  const int rc = dispatch(argv, true);
  if (rc != 0) return rc;
  std::size_t mismatched = 0;
  for (const auto& [path, checksum] : lm.checksums) {
    const std::string now = file_checksum(path);
    if (now != checksum) {
      std::cerr << fmt::format("latticeopt: replay mismatch: {} (recorded {}, now {})\n", path.string(), checksum, now);
      ++mismatched;
    }
  }
  if (mismatched > 0) return 1;
  std::cout << fmt::format("replay: {} output(s) reproduced bit-identically\n", lm.checksums.size());
  return 0;
}

int dispatch(std::vector<std::string> argv, bool replaying) {
  CLI::App app{"Surrogate-gated topology optimization of periodic lattice frames", "latticeopt"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  GenDataArgs gd;
  auto* gen = app.add_subcommand("gen-data", "Sample random topologies, analyze and screen them, write a dataset CSV");
  gen->add_option("--m", gd.m, "Grid size of the periodic unit")->check(CLI::PositiveNumber);
  gen->add_option("--count", gd.count, "Number of random topologies to draw")
      ->check(CLI::Range(std::size_t{1}, std::numeric_limits<std::size_t>::max()));
  gen->add_option("--seed", gd.seed, "Master seed");
  gen->add_option("--threshold", gd.threshold, "Screening compliance threshold (N*m)")->check(CLI::PositiveNumber);
  gen->add_option("--workers", gd.workers, "Worker threads (0 = all cores); output does not depend on it");
  gen->add_option("--out", gd.out, "Dataset CSV")->required();

  TrainArgs tr;
  auto* trn = app.add_subcommand("train", "Train the surrogate on a dataset CSV");
  trn->add_option("--data", tr.data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  trn->add_option("--nm", tr.n_m, "Filter combination size")->check(CLI::Range(2, 7));
  trn->add_option("--top-k", tr.top_k, "Features kept after F-statistic ranking (0 = all)");
  trn->add_option("--epochs", tr.epochs, "Training epochs")->check(CLI::NonNegativeNumber);
  trn->add_option("--batch", tr.batch, "Minibatch size")->check(CLI::PositiveNumber);
  trn->add_option("--lr", tr.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  trn->add_option("--split", tr.split, "Training fraction")->check(CLI::Range(0.0, 1.0));
  trn->add_option("--seed", tr.seed, "Seed for split, shuffling and initialization");
  trn->add_option("--conv-weight", tr.conv_weight, "Coarsening kernel weight stored in the model");
  trn->add_option("--hidden", tr.hidden, "Hidden layer widths")->delimiter(',');
  trn->add_flag("--no-filter", tr.no_filter, "Feed raw member bits instead of filtered features");
  trn->add_option("--out", tr.out, "Model JSON")->required();
  trn->add_option("--loss-out", tr.loss_out, "Loss history CSV");

  OptimizeArgs op;
  auto* opt = app.add_subcommand("optimize", "Run surrogate-gated simulated annealing or local search");
  opt->add_option("--model", op.model, "Model JSON (required with --gate on)");
  opt->add_option("--init", op.init, "Initial topology file (default: first stable random sample)");
  opt->add_option("--m", op.m, "Grid size for the random initial topology (default: model grid, else 4)");
  opt->add_option("--mode", op.mode, "sa or local (T = 0)")->check(CLI::IsMember({"sa", "local"}));
  opt->add_option("--gate", op.gate, "Surrogate gate")->check(CLI::IsMember({"on", "off"}));
  opt->add_option("--vc", op.cfg.v_c, "Volume cap (m^3)");
  opt->add_option("--lambda", op.cfg.lambda, "Penalty coefficient");
  opt->add_option("--cool", op.cfg.cooling, "Cooling coefficient");
  op.cfg.steps = 25;
  op.cfg.period = 160;
  op.cfg.seed = 1;
  opt->add_option("--steps", op.cfg.steps, "Cooling steps");
  opt->add_option("--period", op.cfg.period, "Iterations per cooling step (total budget in local mode)");
  opt->add_option("--nv", op.cfg.max_flips, "Maximum members flipped per move");
  opt->add_option("--wd", op.cfg.w_d, "Gate threshold decrement on a pass");
  opt->add_option("--wi", op.cfg.w_i, "Gate threshold increment on a rejection");
  opt->add_option("--seed", op.cfg.seed, "Seed");
  opt->add_option("--out", op.out, "Result JSON")->required();
  opt->add_option("--history-out", op.history_out, "Per-iteration history CSV");
  opt->add_option("--best-out", op.best_out, "Topology file for the best feasible (else best penalized) solution");

  Single an;
  auto* ana = app.add_subcommand("analyze", "Print volume_m3,compliance_Nm,status for one topology");
  ana->add_option("--topology", an.topology, "Topology file");
  ana->add_option("--ground", an.ground, "Use the ground structure of this grid size");
  ana->add_option("--threshold", an.threshold, "Compliance above this counts as unstable");

  Single pr;
  auto* prd = app.add_subcommand("predict", "Print the surrogate compliance prediction for one topology");
  prd->add_option("--model", pr.model, "Model JSON")->required();
  prd->add_option("--topology", pr.topology, "Topology file");
  prd->add_option("--ground", pr.ground, "Use the ground structure of this grid size");
  prd->add_option("--conv-weight", pr.conv_weight, "Override the coarsening weight");

  Single rf;
  auto* ref = app.add_subcommand("refine", "Write the 2m-grid equivalent of a topology");
  ref->add_option("--topology", rf.topology, "Topology file");
  ref->add_option("--ground", rf.ground, "Use the ground structure of this grid size");
  ref->add_option("--out", rf.out, "Output topology file")->required();

  Single st;
  auto* sts = app.add_subcommand("stats", std::string("Print one CSV line: ") + kStatsColumns);
  sts->add_option("--data", st.data, "Dataset CSV")->required();
  sts->add_option("--scatter-out", st.scatter_out, "volume/compliance scatter CSV");

  EvalArgs ev;
  auto* evl = app.add_subcommand("eval", "Surrogate MSE on a dataset, optionally swept over coarsening weights");
  evl->add_option("--model", ev.model, "Model JSON")->required();
  evl->add_option("--data", ev.data, "Dataset CSV")->required();
  evl->add_option("--weights", ev.weights, "Coarsening weights to sweep")->delimiter(',');
  evl->add_option("--out", ev.out, "Sweep CSV");

  BruteArgs bf;
  auto* bru = app.add_subcommand("brute-force", "Exhaustive optimum for m <= 2");
  bru->add_option("--m", bf.m, "Grid size (1 or 2)")->check(CLI::Range(1, 2));
  bru->add_option("--lambda", bf.lambda, "Penalty coefficient");
  bru->add_option("--vc", bf.v_c, "Volume cap (m^3)");
  bru->add_option("--workers", bf.workers, "Worker threads (0 = all cores)");
  bru->add_option("--out", bf.out, "Topology file for the optimum");

  std::string manifest_file;
  auto* rep = app.add_subcommand("replay", "Re-run a manifest and verify output checksums");
  rep->add_option("--manifest", manifest_file, "Manifest JSON")->required()->check(CLI::ExistingFile);

  try {
    std::reverse(argv.begin(), argv.end());
    argv.pop_back();
    app.parse(std::move(argv));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "latticeopt: " << one_line(e.what()) << '\n';
    return 2;
  }

  const CLI::App* sub = app.get_subcommands().front();
  if (sub == rep) {
    if (replaying) throw std::invalid_argument("a manifest cannot replay another manifest");
    return run_replay(manifest_file);
  }

  const std::map<const CLI::App*, std::function<Outputs()>> handlers{
      {gen, [&] { return run_gen_data(gd); }},   {trn, [&] { return run_train(tr); }},
      {opt, [&] { return run_optimize(op); }},   {ana, [&] { return run_analyze(an); }},
      {prd, [&] { return run_predict(pr); }},    {ref, [&] { return run_refine(rf); }},
      {sts, [&] { return run_stats(st); }},      {evl, [&] { return run_eval(ev); }},
      {bru, [&] { return run_brute_force(bf); }},
  };

  cli::RunManifest manifest;
  manifest.subcommand = sub->get_name();
  resolve(sub, manifest);
  const auto started = std::chrono::system_clock::now();
  const auto t0 = std::chrono::steady_clock::now();
  manifest.outputs = handlers.at(sub)();
  manifest.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  manifest.started_utc = cli::utc_timestamp(started);
  if (!manifest.outputs.empty()) cli::write_manifest(cli::manifest_path_for(manifest.outputs.front()), manifest);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(std::vector<std::string>(argv, argv + argc), false);
  } catch (const std::exception& e) {
    std::cerr << "latticeopt: error: " << one_line(e.what()) << '\n';
    return 1;
  }
}
