#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace ipp {

/// Continuous position in kilometres. x grows east, y grows north; the
/// origin is the south-west corner of the raster.
struct Position {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Position&, const Position&) = default;
};

double distance(const Position& a, const Position& b);

inline constexpr int kNumActions = 8;

/// Compass actions in the order used for Q-value outputs.
enum class Action : int { S = 0, SE, E, NE, N, NW, W, SW };

const char* action_name(int a);

/// Index of the opposite compass direction.
constexpr int reverse_action(int a) { return (a + 4) % kNumActions; }

using ActionMask = std::array<bool, kNumActions>;

int count_valid(const ActionMask& mask);

struct Cell {
  int row = 0;
  int col = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

/// Navigability raster. Row 0 is the northern edge of the map.
class NavMap {
 public:
  NavMap(int width, int height, double cell_size, std::vector<bool> mask);

  int width() const { return width_; }
  int height() const { return height_; }
  double cell_size() const { return cell_size_; }
  int cell_count() const { return width_ * height_; }

  bool navigable(int cell_index) const { return mask_[static_cast<std::size_t>(cell_index)]; }
  bool navigable(Cell c) const;
  bool in_bounds(Cell c) const;
  bool in_bounds(const Position& p) const;
  /// True iff p lies inside the raster and its cell is water.
  bool navigable(const Position& p) const;

  int index(Cell c) const { return c.row * width_ + c.col; }
  Cell cell_of_index(int cell_index) const { return {cell_index / width_, cell_index % width_}; }
  /// Cell containing p. Only meaningful when in_bounds(p).
  Cell cell_at(const Position& p) const;
  Position center(Cell c) const;
  Position center(int cell_index) const { return center(cell_of_index(cell_index)); }

  /// Navigable cell indices in row-major order.
  const std::vector<int>& water_cells() const { return water_cells_; }
  /// Position of a cell inside water_cells(), or -1 for land.
  int water_index(int cell_index) const { return water_index_[static_cast<std::size_t>(cell_index)]; }
  /// Centers of water_cells(), same order.
  const std::vector<Position>& water_centers() const { return water_centers_; }

 private:
  int width_;
  int height_;
  double cell_size_;
  std::vector<bool> mask_;
  std::vector<int> water_cells_;
  std::vector<int> water_index_;
  std::vector<Position> water_centers_;
};

/// Parses the text map format: a `cellsize <km>` header line followed by
/// rows of '0'/'1' characters, northern row first.
NavMap parse_map(std::string_view document);
NavMap load_map(const std::filesystem::path& path);
std::string format_map(const NavMap& map);

/// Endpoint of travelling d_meas km along the compass bearing of action a.
Position move_endpoint(const Position& pos, int a, double d_meas);

bool is_segment_navigable(const NavMap& map, const Position& from, const Position& to);

ActionMask valid_action_mask(const NavMap& map, const Position& pos, double d_meas);

/// A* over the 8-connected water graph with octile step costs (1 axial,
/// sqrt(2) diagonal). Diagonal steps may not cut a land corner. Returns the
/// cell sequence from `from` to `to` inclusive, or empty when unreachable.
std::vector<int> shortest_path(const NavMap& map, int from, int to);

/// Octile cost of a path returned by shortest_path, in cell units.
double path_cost(const NavMap& map, const std::vector<int>& path);

/// Octile path cost from every cell to `goal` under the same move rules as
/// shortest_path; +inf for land and unreachable cells.
std::vector<double> distance_field(const NavMap& map, int goal);

}  // namespace ipp
