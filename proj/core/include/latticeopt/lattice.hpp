#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace latticeopt {

/// Member orientation. Also the channel index of the 4-channel array form.
enum class Channel : int { H = 0, V = 1, DPlus = 2, DMinus = 3 };

inline constexpr int kChannels = 4;
inline constexpr int kSubregionSize = 8;

/// Beam cross-section, SI units (m^2, m^4, N/m^2).
struct SectionProps {
  double area = 0.0;
  double second_moment = 0.0;
  double youngs_modulus = 0.0;
};

/// Geometry and sections of an m x m periodic unit.
///
/// The unit is 2.0 m on a side. Lattice sections scale with m so that units
/// of different resolution are mechanically equivalent: A = 6.0e4/m mm^2,
/// I = 8.0e8/m^3 mm^4. The outer frame is 300 x 400 mm (A = 1.2e5 mm^2,
/// I = 1.6e9 mm^4). E = 20000 N/mm^2 for both.
struct GridSpec {
  int m = 0;
  double unit_side = 2.0;
  double spacing = 0.0;
  SectionProps lattice_section;
  SectionProps frame_section;

  /// Throws std::invalid_argument for m < 1.
  static GridSpec for_grid(int m);
};

/// Number of periodic members in an m x m unit: 4 m^2.
int member_count(int m);

/// Canonical index c*m^2 + j*m + i, with (i, j) wrapped modulo m.
std::size_t member_index(int m, Channel c, int i, int j);

/// The 8 members incident to periodic node (i, j), in the fixed order
/// H(i,j), H(i-1,j), V(i,j), V(i,j-1), D+(i,j), D+(i-1,j-1), D-(i-1,j), D-(i,j-1).
/// Throws std::out_of_range unless 0 <= i, j < m.
std::array<std::size_t, kSubregionSize> incident_members(int m, int i, int j);

/// 0-1 design vector over the 4 m^2 members of a unit, channel-major.
class UnitTopology {
public:
  UnitTopology() = default;
  /// All members absent.
  explicit UnitTopology(int m);
  /// Throws std::invalid_argument if bits.size() != 4 m^2 or an entry is not 0/1.
  UnitTopology(int m, std::vector<std::uint8_t> bits);

  static UnitTopology ground(int m);
  static UnitTopology empty(int m) { return UnitTopology(m); }
  /// Parses a string of '0'/'1' characters.
  static UnitTopology from_string(int m, std::string_view bits);

  int m() const { return m_; }
  std::size_t size() const { return bits_.size(); }
  std::span<const std::uint8_t> bits() const { return bits_; }

  bool operator[](std::size_t index) const { return bits_[index] != 0; }
  bool at(Channel c, int i, int j) const { return bits_[member_index(m_, c, i, j)] != 0; }
  void set(std::size_t index, bool value) { bits_.at(index) = value ? 1 : 0; }
  void flip(std::size_t index) { bits_.at(index) ^= 1; }

  std::size_t count() const;
  std::string to_string() const;

  friend bool operator==(const UnitTopology&, const UnitTopology&) = default;

private:
  int m_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Total lattice volume of the unit (m^3); the outer frame is excluded.
/// Throws std::invalid_argument if x.m() != spec.m.
double unit_volume(const UnitTopology& x, const GridSpec& spec);

/// Each member of an m-grid unit becomes the four parallel members it covers
/// on the 2m grid.
UnitTopology refine(const UnitTopology& x);

/// Mirror image about the vertical axis of the unit.
UnitTopology mirror_vertical(const UnitTopology& x);

/// Real-valued (4, m, m) array, entry (c, j, i) at c*m^2 + j*m + i.
struct ChannelArray {
  int m = 0;
  std::vector<double> values;

  ChannelArray() = default;
  explicit ChannelArray(int m_) : m(m_), values(static_cast<std::size_t>(kChannels) * m_ * m_, 0.0) {}

  double& at(int c, int j, int i) { return values[(static_cast<std::size_t>(c) * m + j) * m + i]; }
  double at(int c, int j, int i) const { return values[(static_cast<std::size_t>(c) * m + j) * m + i]; }
};

ChannelArray to_channel_array(const UnitTopology& x);
/// Inverse of to_channel_array. Throws std::invalid_argument on non-binary entries.
UnitTopology from_channel_array(const ChannelArray& a);

struct FrameNode {
  double x = 0.0;
  double y = 0.0;
  /// Pin joint: every element end at this node is moment-released.
  bool hinged = false;
};

struct FrameElement {
  int a = 0;
  int b = 0;
  SectionProps section;
  bool is_frame = false;
};

/// The tiled physical structure handed to the frame solver.
struct FrameModel {
  std::vector<FrameNode> nodes;
  std::vector<FrameElement> elements;
  /// Nodes with both translations fixed.
  std::vector<int> supports;
  /// Horizontal nodal force (N), one entry per node.
  std::vector<double> loads;

  double total_load() const;
};

inline constexpr double kTotalHorizontalLoad = 12000.0;

/// Where the structure is held and which joints are pins.
enum class SupportLayout {
  /// Pin supports at the two bottom corners; all four corners are pin joints.
  BottomCornersPinnedFrame,
  /// Pin supports at all four corners; all joints rigid.
  AllCorners,
};

struct TilingOptions {
  int tiles = 3;
  SupportLayout supports = SupportLayout::BottomCornersPinnedFrame;
  double total_load = kTotalHorizontalLoad;
};

/// Builds the tiled structure for unit x.
///
/// Members on the global perimeter are replaced by outer-frame elements.
/// The horizontal load is spread over the top edge nodes by tributary length
/// (half shares at the two top corners). Nodes without elements are dropped.
FrameModel instantiate_global(const UnitTopology& x, const GridSpec& spec,
                              const TilingOptions& options = {});

}  // namespace latticeopt
