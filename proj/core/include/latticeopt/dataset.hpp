#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "latticeopt/fem.hpp"
#include "latticeopt/lattice.hpp"
#include "latticeopt/rng.hpp"

namespace latticeopt {

struct DatasetRow {
  UnitTopology bits;
  double volume = 0.0;
  double compliance = 0.0;
};

struct DatasetMeta {
  int m = 0;
  std::uint64_t seed = 0;
  std::size_t requested = 0;
  double threshold = kDefaultScreeningThreshold;
};

/// Screened samples in sample-index order.
struct Dataset {
  DatasetMeta meta;
  std::vector<DatasetRow> rows;

  std::size_t retained() const { return rows.size(); }
  double survival_rate() const;
};

/// Each member present independently with probability 1/2.
UnitTopology sample_topology(int m, Rng& rng);

/// The topology of sample `index` in a dataset generated with `seed`.
UnitTopology sample_for_index(int m, std::uint64_t seed, std::size_t index);

/// Draws `count` samples, analyzes them and keeps those that are stable with
/// compliance <= threshold. Each sample is seeded from (seed, index), so the
/// result does not depend on `workers` (0 = hardware concurrency).
/// Throws std::invalid_argument if count == 0.
Dataset generate(int m, std::size_t count, std::uint64_t seed, double threshold = kDefaultScreeningThreshold,
                 unsigned workers = 0);

struct DatasetStats {
  std::size_t count = 0;
  double mean_volume = 0.0;
  double std_volume = 0.0;
  double mean_compliance = 0.0;
  double std_compliance = 0.0;
  /// Ground structure of the same m, for reference.
  double ground_volume = 0.0;
  double ground_compliance = 0.0;
};

/// Population mean and standard deviation. Throws std::invalid_argument when empty.
DatasetStats stats(const Dataset& d);

/// CSV: "# m=.. members=.. seed=.. threshold=.. requested=..", then
/// "bits,volume_m3,compliance_Nm" and one row per sample.
void save_csv(std::ostream& out, const Dataset& d);
void save_csv(const std::filesystem::path& path, const Dataset& d);
/// Throws ParseError with the offending line number.
Dataset load_csv(std::istream& in, const std::string& source = "<stream>");
Dataset load_csv(const std::filesystem::path& path);

}  // namespace latticeopt
