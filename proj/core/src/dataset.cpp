#include "latticeopt/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "latticeopt/text_io.hpp"

namespace latticeopt {

double Dataset::survival_rate() const {
  return meta.requested == 0 ? 0.0 : static_cast<double>(rows.size()) / static_cast<double>(meta.requested);
}

UnitTopology sample_topology(int m, Rng& rng) {
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(member_count(m)));
  for (auto& b : bits) b = rng.bernoulli_half() ? 1 : 0;
  return UnitTopology(m, std::move(bits));
}

UnitTopology sample_for_index(int m, std::uint64_t seed, std::size_t index) {
  Rng rng(derive_seed(seed, index));
  return sample_topology(m, rng);
}

Dataset generate(int m, std::size_t count, std::uint64_t seed, double threshold, unsigned workers) {
  if (count == 0) throw std::invalid_argument("sample count must be >= 1");
  const GridSpec spec = GridSpec::for_grid(m);

  std::vector<std::optional<DatasetRow>> slots(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next.fetch_add(1); k < count; k = next.fetch_add(1)) {
      UnitTopology x = sample_for_index(m, seed, k);
      const Analysis a = analyze(x, spec, threshold);
      if (a.stable()) slots[k] = DatasetRow{std::move(x), a.volume, *a.result.compliance};
    }
  };

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  Dataset d;
  d.meta = {m, seed, count, threshold};
  for (auto& s : slots) {
    if (s) d.rows.push_back(std::move(*s));
  }
  return d;
}

DatasetStats stats(const Dataset& d) {
  if (d.rows.empty()) throw std::invalid_argument("cannot compute statistics of an empty dataset");
  DatasetStats s;
  s.count = d.rows.size();
  const double n = static_cast<double>(s.count);
  for (const auto& r : d.rows) {
    s.mean_volume += r.volume;
    s.mean_compliance += r.compliance;
  }
  s.mean_volume /= n;
  s.mean_compliance /= n;
  for (const auto& r : d.rows) {
    s.std_volume += (r.volume - s.mean_volume) * (r.volume - s.mean_volume);
    s.std_compliance += (r.compliance - s.mean_compliance) * (r.compliance - s.mean_compliance);
  }
  s.std_volume = std::sqrt(s.std_volume / n);
  s.std_compliance = std::sqrt(s.std_compliance / n);

  const int m = d.rows.front().bits.m();
  const GridSpec spec = GridSpec::for_grid(m);
  const UnitTopology ground = UnitTopology::ground(m);
  const Analysis g = analyze(ground, spec, std::numeric_limits<double>::infinity());
  s.ground_volume = g.volume;
  s.ground_compliance = g.result.compliance.value_or(std::numeric_limits<double>::quiet_NaN());
  return s;
}

void save_csv(std::ostream& out, const Dataset& d) {
  out << fmt::format("# m={} members={} seed={} threshold={} requested={}\n", d.meta.m, member_count(d.meta.m),
                     d.meta.seed, format_real(d.meta.threshold), d.meta.requested);
  out << "bits,volume_m3,compliance_Nm\n";
  for (const auto& r : d.rows) {
    out << r.bits.to_string() << ',' << format_real(r.volume) << ',' << format_real(r.compliance) << '\n';
  }
}

void save_csv(const std::filesystem::path& path, const Dataset& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  save_csv(out, d);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

namespace {

std::map<std::string, std::string, std::less<>> parse_header(const std::string& line, const std::string& source) {
  if (line.rfind("# ", 0) != 0) throw ParseError(source, 1, "expected '# m=... ' metadata line");
  std::map<std::string, std::string, std::less<>> kv;
  std::istringstream fields(line.substr(2));
  std::string token;
  while (fields >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw ParseError(source, 1, "malformed metadata field '" + token + "'");
    kv[token.substr(0, eq)] = token.substr(eq + 1);
  }
  for (const char* key : {"m", "members", "seed", "threshold", "requested"}) {
    if (!kv.contains(key)) throw ParseError(source, 1, std::string("missing metadata field '") + key + "'");
  }
  return kv;
}

std::uint64_t parse_u64(const std::string& s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw std::invalid_argument("not an unsigned integer: '" + s + "'");
  }
  return v;
}

}  // namespace

Dataset load_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source, 1, "empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto kv = parse_header(line, source);

  Dataset d;
  try {
    d.meta.m = static_cast<int>(parse_int(kv.find("m")->second));
    d.meta.seed = parse_u64(kv.find("seed")->second);
    d.meta.threshold = parse_real(kv.find("threshold")->second);
    d.meta.requested = static_cast<std::size_t>(parse_u64(kv.find("requested")->second));
    if (d.meta.m < 1) throw std::invalid_argument("m must be >= 1");
    if (parse_int(kv.find("members")->second) != member_count(d.meta.m)) {
      throw std::invalid_argument("members does not equal 4 m^2");
    }
  } catch (const std::invalid_argument& e) {
    throw ParseError(source, 1, e.what());
  }

  if (!std::getline(in, line)) throw ParseError(source, 2, "missing column header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "bits,volume_m3,compliance_Nm") throw ParseError(source, 2, "unexpected column header '" + line + "'");

  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
    if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos) {
      throw ParseError(source, line_no, "expected 3 comma-separated fields");
    }
    try {
      DatasetRow row;
      row.bits = UnitTopology::from_string(d.meta.m, std::string_view(line).substr(0, c1));
      row.volume = parse_real(std::string_view(line).substr(c1 + 1, c2 - c1 - 1));
      row.compliance = parse_real(std::string_view(line).substr(c2 + 1));
      d.rows.push_back(std::move(row));
    } catch (const std::invalid_argument& e) {
      throw ParseError(source, line_no, e.what());
    }
  }
  if (d.rows.size() > d.meta.requested) {
    throw ParseError(source, 0, "more rows than requested samples");
  }
  return d;
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  return load_csv(in, path.string());
}

}  // namespace latticeopt
