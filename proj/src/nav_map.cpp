#include "ipp/nav_map.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace ipp {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kSqrt2 = 1.41421356237309504880;

// Unit direction per compass action, [S, SE, E, NE, N, NW, W, SW].
constexpr std::array<std::array<double, 2>, kNumActions> kDirections{{
    {0.0, -1.0},
    {kInvSqrt2, -kInvSqrt2},
    {1.0, 0.0},
    {kInvSqrt2, kInvSqrt2},
    {0.0, 1.0},
    {-kInvSqrt2, kInvSqrt2},
    {-1.0, 0.0},
    {-kInvSqrt2, -kInvSqrt2},
}};

constexpr std::array<const char*, kNumActions> kNames{"S", "SE", "E", "NE", "N", "NW", "W", "SW"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

double distance(const Position& a, const Position& b) { return std::hypot(a.x - b.x, a.y - b.y); }

const char* action_name(int a) {
  if (a < 0 || a >= kNumActions) throw std::out_of_range("action index out of range");
  return kNames[static_cast<std::size_t>(a)];
}

int count_valid(const ActionMask& mask) {
  return static_cast<int>(std::count(mask.begin(), mask.end(), true));
}

NavMap::NavMap(int width, int height, double cell_size, std::vector<bool> mask)
    : width_(width), height_(height), cell_size_(cell_size), mask_(std::move(mask)) {
  if (width_ <= 0 || height_ <= 0) throw std::invalid_argument("map dimensions must be positive");
  if (!(cell_size_ > 0.0) || !std::isfinite(cell_size_)) throw std::invalid_argument("cell size must be positive");
  if (mask_.size() != static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_)) {
    throw std::invalid_argument("mask size does not match map dimensions");
  }
  water_index_.assign(mask_.size(), -1);
  for (int i = 0; i < cell_count(); ++i) {
    if (mask_[static_cast<std::size_t>(i)]) {
      water_index_[static_cast<std::size_t>(i)] = static_cast<int>(water_cells_.size());
      water_cells_.push_back(i);
      water_centers_.push_back(center(i));
    }
  }
  if (water_cells_.empty()) throw std::invalid_argument("map has no navigable cells");
}

bool NavMap::in_bounds(Cell c) const { return c.row >= 0 && c.row < height_ && c.col >= 0 && c.col < width_; }

bool NavMap::navigable(Cell c) const { return in_bounds(c) && navigable(index(c)); }

bool NavMap::in_bounds(const Position& p) const {
  return p.x >= 0.0 && p.y >= 0.0 && p.x < width_ * cell_size_ && p.y < height_ * cell_size_;
}

bool NavMap::navigable(const Position& p) const { return in_bounds(p) && navigable(cell_at(p)); }

Cell NavMap::cell_at(const Position& p) const {
  const int col = static_cast<int>(std::floor(p.x / cell_size_));
  const int row_from_south = static_cast<int>(std::floor(p.y / cell_size_));
  return {height_ - 1 - row_from_south, col};
}

Position NavMap::center(Cell c) const {
  return {(c.col + 0.5) * cell_size_, (height_ - c.row - 0.5) * cell_size_};
}

NavMap parse_map(std::string_view document) {
  std::istringstream in{std::string(document)};
  std::string line;
  double cell_size = 0.0;
  bool have_header = false;
  std::vector<std::string> rows;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty()) continue;
    if (!have_header) {
      std::istringstream hdr{std::string(t)};
      std::string key;
      hdr >> key >> cell_size;
      if (key != "cellsize" || hdr.fail() || !(cell_size > 0.0) || !std::isfinite(cell_size)) {
        throw std::invalid_argument("map header must be `cellsize <km>` with a positive value");
      }
      std::string rest;
      if (hdr >> rest) throw std::invalid_argument("unexpected token after cellsize: " + rest);
      have_header = true;
      continue;
    }
    rows.emplace_back(t);
  }
  if (!have_header) throw std::invalid_argument("map header `cellsize <km>` missing");
  if (rows.empty()) throw std::invalid_argument("map has no raster rows");

  const auto width = rows.front().size();
  std::vector<bool> mask;
  mask.reserve(width * rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != width) {
      throw std::invalid_argument("ragged map: row " + std::to_string(r) + " has length " +
                                  std::to_string(rows[r].size()) + ", expected " + std::to_string(width));
    }
    for (char ch : rows[r]) {
      if (ch != '0' && ch != '1') throw std::invalid_argument(std::string("invalid map character '") + ch + "'");
      mask.push_back(ch == '1');
    }
  }
  return NavMap(static_cast<int>(width), static_cast<int>(rows.size()), cell_size, std::move(mask));
}

NavMap load_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open map file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_map(buf.str());
}

std::string format_map(const NavMap& map) {
  std::ostringstream out;
  out.precision(17);
  out << "cellsize " << map.cell_size() << '\n';
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) out << (map.navigable(Cell{r, c}) ? '1' : '0');
    out << '\n';
  }
  return out.str();
}

Position move_endpoint(const Position& pos, int a, double d_meas) {
  if (a < 0 || a >= kNumActions) throw std::out_of_range("action index out of range");
  const auto& d = kDirections[static_cast<std::size_t>(a)];
  return {pos.x + d[0] * d_meas, pos.y + d[1] * d_meas};
}

bool is_segment_navigable(const NavMap& map, const Position& from, const Position& to) {
  const double len = distance(from, to);
  const double max_step = map.cell_size() / 4.0;
  const int n = std::max(1, static_cast<int>(std::ceil(len / max_step)));
  for (int k = 1; k <= n; ++k) {
    const double t = static_cast<double>(k) / n;
    const Position p{from.x + t * (to.x - from.x), from.y + t * (to.y - from.y)};
    if (!map.navigable(p)) return false;
  }
  return true;
}

ActionMask valid_action_mask(const NavMap& map, const Position& pos, double d_meas) {
  ActionMask mask{};
  for (int a = 0; a < kNumActions; ++a) {
    mask[static_cast<std::size_t>(a)] = is_segment_navigable(map, pos, move_endpoint(pos, a, d_meas));
  }
  return mask;
}

namespace {

double octile(const NavMap& map, int a, int b) {
  const Cell ca = map.cell_of_index(a);
  const Cell cb = map.cell_of_index(b);
  const int dr = std::abs(ca.row - cb.row);
  const int dc = std::abs(ca.col - cb.col);
  return (kSqrt2 - 1.0) * std::min(dr, dc) + std::max(dr, dc);
}

template <typename Visit>
void for_each_neighbor(const NavMap& map, int cell, Visit&& visit) {
  const Cell c = map.cell_of_index(cell);
  for (int dr = -1; dr <= 1; ++dr) {
    for (int dc = -1; dc <= 1; ++dc) {
      if (dr == 0 && dc == 0) continue;
      const Cell n{c.row + dr, c.col + dc};
      if (!map.navigable(n)) continue;
      if (dr != 0 && dc != 0) {
        if (!map.navigable(Cell{c.row + dr, c.col}) || !map.navigable(Cell{c.row, c.col + dc})) continue;
      }
      visit(map.index(n), (dr != 0 && dc != 0) ? kSqrt2 : 1.0);
    }
  }
}

}  // namespace

std::vector<int> shortest_path(const NavMap& map, int from, int to) {
  if (from < 0 || from >= map.cell_count() || !map.navigable(from) || to < 0 || to >= map.cell_count() ||
      !map.navigable(to)) {
    throw std::invalid_argument("shortest_path endpoints must be navigable cells");
  }
  if (from == to) return {from};

  const auto n = static_cast<std::size_t>(map.cell_count());
  std::vector<double> g(n, std::numeric_limits<double>::infinity());
  std::vector<int> parent(n, -1);
  std::vector<bool> closed(n, false);
  using Entry = std::pair<double, int>;  // (f, cell); ties resolve to the lowest cell index
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;

  g[static_cast<std::size_t>(from)] = 0.0;
  open.emplace(octile(map, from, to), from);
  while (!open.empty()) {
    const auto [f, cur] = open.top();
    open.pop();
    if (closed[static_cast<std::size_t>(cur)]) continue;
    closed[static_cast<std::size_t>(cur)] = true;
    if (cur == to) break;
    for_each_neighbor(map, cur, [&](int nb, double cost) {
      const double cand = g[static_cast<std::size_t>(cur)] + cost;
      if (cand < g[static_cast<std::size_t>(nb)] - 1e-12) {
        g[static_cast<std::size_t>(nb)] = cand;
        parent[static_cast<std::size_t>(nb)] = cur;
        open.emplace(cand + octile(map, nb, to), nb);
      }
    });
  }
  if (!closed[static_cast<std::size_t>(to)]) return {};

  std::vector<int> path;
  for (int c = to; c != -1; c = parent[static_cast<std::size_t>(c)]) path.push_back(c);
  std::reverse(path.begin(), path.end());
  return path;
}

double path_cost(const NavMap& map, const std::vector<int>& path) {
  double total = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) total += octile(map, path[i - 1], path[i]);
  return total;
}

std::vector<double> distance_field(const NavMap& map, int goal) {
  if (goal < 0 || goal >= map.cell_count() || !map.navigable(goal)) {
    throw std::invalid_argument("distance_field goal must be a navigable cell");
  }
  const auto n = static_cast<std::size_t>(map.cell_count());
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  dist[static_cast<std::size_t>(goal)] = 0.0;
  open.emplace(0.0, goal);
  while (!open.empty()) {
    const auto [d, cur] = open.top();
    open.pop();
    if (d > dist[static_cast<std::size_t>(cur)]) continue;
    for_each_neighbor(map, cur, [&](int nb, double cost) {
      if (d + cost < dist[static_cast<std::size_t>(nb)] - 1e-12) {
        dist[static_cast<std::size_t>(nb)] = d + cost;
        open.emplace(d + cost, nb);
      }
    });
  }
  return dist;
}

}  // namespace ipp
