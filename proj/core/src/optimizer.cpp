#include "latticeopt/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>

#include <fmt/format.h>

#include "latticeopt/text_io.hpp"

namespace latticeopt {

double penalized_objective(double compliance, double volume, double lambda, double v_c) {
  return compliance + lambda * std::max(volume - v_c, 0.0);
}

UnitTopology neighbor(const UnitTopology& x, Rng& rng, int n_v) {
  if (n_v < 1 || n_v > kSubregionSize) throw std::invalid_argument("n_v must be in 1..8");
  const int m = x.m();
  const auto node = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(m)));
  const auto incident = incident_members(m, node % m, node / m);

  // For m = 1 the incidence list names each member twice.
  std::vector<std::size_t> members;
  for (std::size_t idx : incident) {
    if (std::find(members.begin(), members.end(), idx) == members.end()) members.push_back(idx);
  }
  const auto flips = std::min<std::size_t>(1 + rng.uniform_index(static_cast<std::uint64_t>(n_v)), members.size());

  UnitTopology out = x;
  for (std::size_t t = 0; t < flips; ++t) {
    const auto pick = t + static_cast<std::size_t>(rng.uniform_index(members.size() - t));
    std::swap(members[t], members[pick]);
    out.flip(members[t]);
  }
  return out;
}

double transition_probability(double candidate, double previous, double temperature, double scale) {
  if (candidate < previous) return 1.0;
  if (temperature <= 0.0) return 0.0;
  return std::exp((previous - candidate) / (temperature * scale));
}

void SAConfig::validate() const {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
  if (!(cooling > 0.0 && cooling < 1.0)) throw std::invalid_argument("cooling coefficient must be in (0, 1)");
  if (steps < 1) throw std::invalid_argument("cooling steps must be >= 1");
  if (period < 1) throw std::invalid_argument("cooling period must be >= 1");
  if (max_flips < 1 || max_flips > kSubregionSize) throw std::invalid_argument("n_v must be in 1..8");
  if (!(w_d >= 0.0) || !(w_i >= 0.0)) throw std::invalid_argument("gate threshold steps must be >= 0");
  if (!std::isfinite(v_c)) throw std::invalid_argument("volume cap must be finite");
}

std::int64_t SAConfig::iteration_budget() const {
  return mode == SearchMode::Local ? period : static_cast<std::int64_t>(period) * steps;
}

Evaluator fem_evaluator(const GridSpec& spec, double threshold) {
  return [spec, threshold](const UnitTopology& x) {
    const Analysis a = analyze(x, spec, threshold);
    return Evaluation{a.volume, a.result.compliance};
  };
}

SAResult run(const UnitTopology& initial, const SAConfig& cfg, const Evaluator& evaluate, const Predictor& predict) {
  cfg.validate();
  if (!evaluate) throw std::invalid_argument("an evaluator is required");
  if (cfg.gate && !predict) throw std::invalid_argument("gated search needs a surrogate predictor");

  const Evaluation e0 = evaluate(initial);
  if (!e0.compliance) throw std::invalid_argument("initial solution is unstable");

  const GridSpec spec = GridSpec::for_grid(initial.m());
  auto objective = [&](double compliance, double volume) {
    return penalized_objective(compliance, volume, cfg.lambda, cfg.v_c);
  };

  SAResult res;
  Solution current{initial, *e0.compliance, e0.volume, objective(*e0.compliance, e0.volume)};
  res.initial_objective = current.objective;
  res.scale = 0.1 * current.objective / std::numbers::ln2;
  res.best_penalized = current;
  if (current.volume <= cfg.v_c) res.best_feasible = current;

  double gate = current.objective;
  double temperature = cfg.mode == SearchMode::Local ? 0.0 : 1.0;
  Rng proposals(derive_seed(cfg.seed, 1));
  Rng draws(derive_seed(cfg.seed, 2));

  const std::int64_t budget = cfg.iteration_budget();
  res.history.reserve(static_cast<std::size_t>(budget));
  for (std::int64_t k = 1; k <= budget; ++k) {
    UnitTopology candidate = neighbor(current.x, proposals, cfg.max_flips);
    // Drawn every iteration so the proposal and acceptance streams never
    // depend on the gate decision.
    const double r = draws.uniform01();

    bool pass = true;
    if (cfg.gate) {
      const double predicted = objective(predict(candidate), unit_volume(candidate, spec));
      if (predicted < gate) {
        gate -= cfg.w_d;
      } else {
        gate += cfg.w_i;
        pass = false;
      }
    }

    if (pass) {
      ++res.analysis_count;
      const Evaluation e = evaluate(candidate);
      if (e.compliance) {
        Solution s{std::move(candidate), *e.compliance, e.volume, objective(*e.compliance, e.volume)};
        if (s.objective < res.best_penalized.objective) res.best_penalized = s;
        if (s.volume <= cfg.v_c && (!res.best_feasible || s.compliance < res.best_feasible->compliance)) {
          res.best_feasible = s;
        }
        if (r < transition_probability(s.objective, current.objective, temperature, res.scale)) {
          current = std::move(s);
        }
      }
    }

    if (cfg.mode == SearchMode::Anneal) {
      temperature = std::pow(cfg.cooling, static_cast<double>(k / cfg.period));
    }
    res.history.push_back({k, temperature, gate, pass, current.objective,
                           res.best_feasible ? res.best_feasible->objective : std::numeric_limits<double>::quiet_NaN()});
  }
  res.iteration_count = budget;
  res.final_state = std::move(current);
  return res;
}

namespace {

std::string solution_json(const Solution& s) {
  return fmt::format(R"({{"bits": "{}", "m": {}, "compliance": {}, "volume": {}, "objective": {}}})", s.x.to_string(),
                     s.x.m(), format_real(s.compliance), format_real(s.volume), format_real(s.objective));
}

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& write) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write(out);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

void save_result(std::ostream& out, const SAResult& result, const SAConfig& cfg) {
  fmt::memory_buffer buf;
  auto it = std::back_inserter(buf);
  fmt::format_to(it, "{{\n  \"config\": {{\"mode\": \"{}\", \"gate\": {}, \"lambda\": {}, \"v_c\": {}, ",
                 cfg.mode == SearchMode::Local ? "local" : "sa", cfg.gate, format_real(cfg.lambda), format_real(cfg.v_c));
  fmt::format_to(it, "\"cooling\": {}, \"steps\": {}, \"period\": {}, \"max_flips\": {}, ", format_real(cfg.cooling),
                 cfg.steps, cfg.period, cfg.max_flips);
  fmt::format_to(it, "\"w_d\": {}, \"w_i\": {}, \"seed\": {}}},\n", format_real(cfg.w_d), format_real(cfg.w_i), cfg.seed);
  fmt::format_to(it, "  \"best_feasible\": {},\n", result.best_feasible ? solution_json(*result.best_feasible) : "null");
  fmt::format_to(it, "  \"best_penalized\": {},\n", solution_json(result.best_penalized));
  fmt::format_to(it, "  \"final_state\": {},\n", solution_json(result.final_state));
  fmt::format_to(it, "  \"initial_objective\": {},\n  \"scale\": {},\n", format_real(result.initial_objective),
                 format_real(result.scale));
  fmt::format_to(it, "  \"analysis_count\": {},\n  \"iteration_count\": {}\n}}\n", result.analysis_count,
                 result.iteration_count);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void save_result(const std::filesystem::path& path, const SAResult& result, const SAConfig& cfg) {
  write_file(path, [&](std::ostream& out) { save_result(out, result, cfg); });
}

void save_history(std::ostream& out, const SAResult& result) {
  out << "iter,T,c,analyzed,y_current,best_feasible_g\n";
  for (const auto& h : result.history) {
    out << h.iter << ',' << format_real(h.temperature) << ',' << format_real(h.gate_threshold) << ','
        << (h.analyzed ? 1 : 0) << ',' << format_real(h.y_current) << ',' << format_real(h.best_feasible_g) << '\n';
  }
}

void save_history(const std::filesystem::path& path, const SAResult& result) {
  write_file(path, [&](std::ostream& out) { save_history(out, result); });
}

BruteForceResult brute_force(int m, const GridSpec& spec, double lambda, double v_c, double threshold,
                             unsigned workers) {
  if (m < 1 || m > 2) throw std::invalid_argument("brute force is limited to m <= 2");
  if (spec.m != m) throw std::invalid_argument("grid spec does not match m");
  const int n_bits = member_count(m);
  const std::uint64_t total = std::uint64_t{1} << n_bits;

  struct Partial {
    std::optional<std::pair<double, std::uint64_t>> best;
    std::optional<std::pair<double, std::uint64_t>> feasible;
    std::size_t stable = 0;
  };
  auto decode = [&](std::uint64_t code) {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(n_bits));
    for (int b = 0; b < n_bits; ++b) bits[static_cast<std::size_t>(b)] = (code >> b) & 1U;
    return UnitTopology(m, std::move(bits));
  };
  // Lexicographic (value, code) keeps the winner independent of scheduling.
  auto better = [](const std::optional<std::pair<double, std::uint64_t>>& cur, std::pair<double, std::uint64_t> c) {
    return !cur || c < *cur;
  };

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<Partial> partials(workers);
  std::atomic<std::uint64_t> next{0};
  auto work = [&](unsigned w) {
    Partial& p = partials[w];
    for (std::uint64_t code = next.fetch_add(1); code < total; code = next.fetch_add(1)) {
      const Analysis a = analyze(decode(code), spec, threshold);
      if (!a.stable()) continue;
      ++p.stable;
      const double c = *a.result.compliance;
      const double g = penalized_objective(c, a.volume, lambda, v_c);
      if (better(p.best, {g, code})) p.best = {g, code};
      if (a.volume <= v_c && better(p.feasible, {c, code})) p.feasible = {c, code};
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }

  Partial merged;
  for (const auto& p : partials) {
    merged.stable += p.stable;
    if (p.best && better(merged.best, *p.best)) merged.best = p.best;
    if (p.feasible && better(merged.feasible, *p.feasible)) merged.feasible = p.feasible;
  }
  if (!merged.best) throw std::runtime_error("no stable topology found");

  auto solution = [&](std::uint64_t code) {
    UnitTopology x = decode(code);
    const Analysis a = analyze(x, spec, threshold);
    const double c = *a.result.compliance;
    return Solution{std::move(x), c, a.volume, penalized_objective(c, a.volume, lambda, v_c)};
  };
  BruteForceResult out;
  out.evaluated = static_cast<std::size_t>(total);
  out.stable = merged.stable;
  out.best_penalized = solution(merged.best->second);
  if (merged.feasible) out.best_feasible = solution(merged.feasible->second);
  return out;
}

}  // namespace latticeopt
