#include "latticeopt/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace latticeopt {
namespace {

constexpr double kMm2ToM2 = 1e-6;
constexpr double kMm4ToM4 = 1e-12;
constexpr double kNPerMm2ToNPerM2 = 1e6;

int wrap(int v, int m) {
  const int r = v % m;
  return r < 0 ? r + m : r;
}

void require_grid(int m) {
  if (m < 1) throw std::invalid_argument("grid resolution m must be >= 1, got " + std::to_string(m));
}

}  // namespace

GridSpec GridSpec::for_grid(int m) {
  require_grid(m);
  GridSpec spec;
  spec.m = m;
  spec.unit_side = 2.0;
  spec.spacing = spec.unit_side / m;
  const double md = static_cast<double>(m);
  spec.lattice_section = {6.0e4 / md * kMm2ToM2, 8.0e8 / (md * md * md) * kMm4ToM4,
                          20000.0 * kNPerMm2ToNPerM2};
  spec.frame_section = {1.2e5 * kMm2ToM2, 1.6e9 * kMm4ToM4, 20000.0 * kNPerMm2ToNPerM2};
  return spec;
}

int member_count(int m) {
  require_grid(m);
  return 4 * m * m;
}

std::size_t member_index(int m, Channel c, int i, int j) {
  const auto mm = static_cast<std::size_t>(m);
  return static_cast<std::size_t>(c) * mm * mm + static_cast<std::size_t>(wrap(j, m)) * mm +
         static_cast<std::size_t>(wrap(i, m));
}

std::array<std::size_t, kSubregionSize> incident_members(int m, int i, int j) {
  require_grid(m);
  if (i < 0 || j < 0 || i >= m || j >= m) {
    throw std::out_of_range("node (" + std::to_string(i) + "," + std::to_string(j) +
                            ") outside " + std::to_string(m) + "x" + std::to_string(m) + " unit");
  }
  return {member_index(m, Channel::H, i, j),           member_index(m, Channel::H, i - 1, j),
          member_index(m, Channel::V, i, j),           member_index(m, Channel::V, i, j - 1),
          member_index(m, Channel::DPlus, i, j),       member_index(m, Channel::DPlus, i - 1, j - 1),
          member_index(m, Channel::DMinus, i - 1, j),  member_index(m, Channel::DMinus, i, j - 1)};
}

UnitTopology::UnitTopology(int m) : m_(m), bits_(static_cast<std::size_t>(member_count(m)), 0) {}

UnitTopology::UnitTopology(int m, std::vector<std::uint8_t> bits) : m_(m), bits_(std::move(bits)) {
  if (bits_.size() != static_cast<std::size_t>(member_count(m))) {
    throw std::invalid_argument("topology for m=" + std::to_string(m) + " needs " +
                                std::to_string(member_count(m)) + " bits, got " +
                                std::to_string(bits_.size()));
  }
  if (std::any_of(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b > 1; })) {
    throw std::invalid_argument("topology bits must be 0 or 1");
  }
}

UnitTopology UnitTopology::ground(int m) {
  return UnitTopology(m, std::vector<std::uint8_t>(static_cast<std::size_t>(member_count(m)), 1));
}

UnitTopology UnitTopology::from_string(int m, std::string_view bits) {
  std::vector<std::uint8_t> v;
  v.reserve(bits.size());
  for (char ch : bits) {
    if (ch != '0' && ch != '1') {
      throw std::invalid_argument(std::string("invalid topology character '") + ch + "'");
    }
    v.push_back(ch == '1' ? 1 : 0);
  }
  return UnitTopology(m, std::move(v));
}

std::size_t UnitTopology::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::string UnitTopology::to_string() const {
  std::string s(bits_.size(), '0');
  for (std::size_t k = 0; k < bits_.size(); ++k) {
    if (bits_[k]) s[k] = '1';
  }
  return s;
}

double unit_volume(const UnitTopology& x, const GridSpec& spec) {
  if (x.m() != spec.m) {
    throw std::invalid_argument("topology m=" + std::to_string(x.m()) +
                                " does not match grid m=" + std::to_string(spec.m));
  }
  const std::size_t mm = static_cast<std::size_t>(x.m()) * x.m();
  std::size_t straight = 0;
  std::size_t diagonal = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!x[k]) continue;
    (k < 2 * mm ? straight : diagonal) += 1;
  }
  const double area = spec.lattice_section.area;
  return area * spec.spacing * (static_cast<double>(straight) + std::sqrt(2.0) * static_cast<double>(diagonal));
}

UnitTopology refine(const UnitTopology& x) {
  const int m = x.m();
  const int fine = 2 * m;
  UnitTopology out(fine);
  for (int c = 0; c < kChannels; ++c) {
    for (int j = 0; j < m; ++j) {
      for (int i = 0; i < m; ++i) {
        const bool bit = x.at(static_cast<Channel>(c), i, j);
        for (int dj = 0; dj < 2; ++dj) {
          for (int di = 0; di < 2; ++di) {
            out.set(member_index(fine, static_cast<Channel>(c), 2 * i + di, 2 * j + dj), bit);
          }
        }
      }
    }
  }
  return out;
}

UnitTopology mirror_vertical(const UnitTopology& x) {
  const int m = x.m();
  UnitTopology out(m);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      // x -> -x maps node column i to (m - i) mod m.
      out.set(member_index(m, Channel::H, m - 1 - i, j), x.at(Channel::H, i, j));
      out.set(member_index(m, Channel::V, m - i, j), x.at(Channel::V, i, j));
      out.set(member_index(m, Channel::DMinus, m - 1 - i, j), x.at(Channel::DPlus, i, j));
      out.set(member_index(m, Channel::DPlus, m - 1 - i, j), x.at(Channel::DMinus, i, j));
    }
  }
  return out;
}

ChannelArray to_channel_array(const UnitTopology& x) {
  ChannelArray a(x.m());
  for (std::size_t k = 0; k < x.size(); ++k) a.values[k] = x[k] ? 1.0 : 0.0;
  return a;
}

UnitTopology from_channel_array(const ChannelArray& a) {
  std::vector<std::uint8_t> bits(a.values.size());
  for (std::size_t k = 0; k < a.values.size(); ++k) {
    if (a.values[k] == 1.0) {
      bits[k] = 1;
    } else if (a.values[k] != 0.0) {
      throw std::invalid_argument("channel array entry " + std::to_string(k) + " is not binary");
    }
  }
  return UnitTopology(a.m, std::move(bits));
}

double FrameModel::total_load() const { return std::accumulate(loads.begin(), loads.end(), 0.0); }

FrameModel instantiate_global(const UnitTopology& x, const GridSpec& spec, const TilingOptions& options) {
  if (x.m() != spec.m) {
    throw std::invalid_argument("topology m=" + std::to_string(x.m()) +
                                " does not match grid m=" + std::to_string(spec.m));
  }
  if (options.tiles < 1) throw std::invalid_argument("tile count must be >= 1");
  const int m = x.m();
  const int n = options.tiles * m;  // cells per side
  const int side = n + 1;           // grid nodes per side
  auto grid_id = [side](int gi, int gj) { return gj * side + gi; };

  struct RawElement {
    int a, b;
    bool frame;
  };
  std::vector<RawElement> raw;
  raw.reserve(static_cast<std::size_t>(4) * n * n + 4 * n);

  // Horizontal segments: rows 0..n. Perimeter rows are outer frame.
  for (int gj = 0; gj <= n; ++gj) {
    for (int gi = 0; gi < n; ++gi) {
      const bool perimeter = gj == 0 || gj == n;
      if (perimeter || x.at(Channel::H, gi, gj)) raw.push_back({grid_id(gi, gj), grid_id(gi + 1, gj), perimeter});
    }
  }
  // Vertical segments: columns 0..n.
  for (int gi = 0; gi <= n; ++gi) {
    for (int gj = 0; gj < n; ++gj) {
      const bool perimeter = gi == 0 || gi == n;
      if (perimeter || x.at(Channel::V, gi, gj)) raw.push_back({grid_id(gi, gj), grid_id(gi, gj + 1), perimeter});
    }
  }
  // Diagonals cross at cell centres without a joint.
  for (int gj = 0; gj < n; ++gj) {
    for (int gi = 0; gi < n; ++gi) {
      if (x.at(Channel::DPlus, gi, gj)) raw.push_back({grid_id(gi, gj), grid_id(gi + 1, gj + 1), false});
      if (x.at(Channel::DMinus, gi, gj)) raw.push_back({grid_id(gi + 1, gj), grid_id(gi, gj + 1), false});
    }
  }

  std::vector<int> remap(static_cast<std::size_t>(side) * side, -1);
  for (const auto& e : raw) {
    remap[static_cast<std::size_t>(e.a)] = 0;
    remap[static_cast<std::size_t>(e.b)] = 0;
  }

  FrameModel model;
  for (int gj = 0; gj < side; ++gj) {
    for (int gi = 0; gi < side; ++gi) {
      auto& slot = remap[static_cast<std::size_t>(grid_id(gi, gj))];
      if (slot < 0) continue;
      slot = static_cast<int>(model.nodes.size());
      const bool corner = (gi == 0 || gi == n) && (gj == 0 || gj == n);
      const bool hinged = corner && options.supports == SupportLayout::BottomCornersPinnedFrame;
      model.nodes.push_back({gi * spec.spacing, gj * spec.spacing, hinged});
    }
  }
  model.elements.reserve(raw.size());
  for (const auto& e : raw) {
    model.elements.push_back({remap[static_cast<std::size_t>(e.a)], remap[static_cast<std::size_t>(e.b)],
                              e.frame ? spec.frame_section : spec.lattice_section, e.frame});
  }

  model.supports.push_back(remap[static_cast<std::size_t>(grid_id(0, 0))]);
  model.supports.push_back(remap[static_cast<std::size_t>(grid_id(n, 0))]);
  if (options.supports == SupportLayout::AllCorners) {
    model.supports.push_back(remap[static_cast<std::size_t>(grid_id(0, n))]);
    model.supports.push_back(remap[static_cast<std::size_t>(grid_id(n, n))]);
  }

  model.loads.assign(model.nodes.size(), 0.0);
  const double share = options.total_load / n;
  for (int gi = 0; gi <= n; ++gi) {
    const double f = (gi == 0 || gi == n) ? 0.5 * share : share;
    model.loads[static_cast<std::size_t>(remap[static_cast<std::size_t>(grid_id(gi, n))])] += f;
  }
  return model;
}

}  // namespace latticeopt
