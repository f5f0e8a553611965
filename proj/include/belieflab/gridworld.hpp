#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace belieflab {

// Coordinates: x is the column, y the row; y grows southward so North is -y.
enum class Orientation : std::uint8_t { North = 0, East = 1, South = 2, West = 3 };
enum class Action : std::uint8_t { Forward = 0, Backward = 1, RotateLeft = 2, RotateRight = 3 };

inline constexpr int kNumOrientations = 4;
inline constexpr int kNumActions = 4;
inline constexpr int kPatchSize = 5;
inline constexpr int kPatchRadius = kPatchSize / 2;
inline constexpr int kPatchCells = kPatchSize * kPatchSize;

enum class Cell : std::uint8_t { Wall, Free };

struct Position {
  int x = 0;
  int y = 0;
  friend auto operator<=>(const Position&, const Position&) = default;
};

struct Pose {
  int x = 0;
  int y = 0;
  Orientation theta = Orientation::North;
  friend auto operator<=>(const Pose&, const Pose&) = default;
};

// A start entry either fixes the orientation or allows all four.
struct StartSpec {
  Position cell;
  bool any_orientation = true;
  Orientation theta = Orientation::North;
  friend auto operator<=>(const StartSpec&, const StartSpec&) = default;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Static, immutable map of a gridworld. Free cells are indexed in row-major
/// order; a pose index is `free_index * 4 + theta`.
class GridMap {
 public:
  GridMap(std::string name, int width, int height, std::vector<Cell> cells,
          std::vector<StartSpec> starts, std::vector<Position> object_spawns,
          int object_count, bool teleport_on_touch);

  const std::string& name() const { return name_; }
  int width() const { return width_; }
  int height() const { return height_; }
  bool teleport_on_touch() const { return teleport_on_touch_; }
  int object_count() const { return object_count_; }
  bool has_objects() const { return object_count_ > 0; }

  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  // Out-of-grid cells read as walls.
  bool is_wall(int x, int y) const { return !in_bounds(x, y) || cells_[y * width_ + x] == Cell::Wall; }
  bool is_free(int x, int y) const { return !is_wall(x, y); }

  int free_count() const { return static_cast<int>(free_cells_.size()); }
  int pose_count() const { return free_count() * kNumOrientations; }
  const std::vector<Position>& free_cells() const { return free_cells_; }
  /// -1 for walls and out-of-grid cells.
  int free_index(int x, int y) const { return in_bounds(x, y) ? free_lookup_[y * width_ + x] : -1; }
  int pose_index(const Pose& p) const;
  Pose pose_at(int index) const;

  const std::vector<StartSpec>& starts() const { return starts_; }
  /// Every (cell, orientation) the agent may reset into.
  std::vector<Pose> start_poses() const;
  const std::vector<Position>& object_spawn_cells() const { return object_spawns_; }

  /// Serialise back to the map text format.
  std::string to_text() const;

 private:
  std::string name_;
  int width_;
  int height_;
  std::vector<Cell> cells_;
  std::vector<StartSpec> starts_;
  std::vector<Position> object_spawns_;
  int object_count_;
  bool teleport_on_touch_;
  std::vector<Position> free_cells_;
  std::vector<int> free_lookup_;
};

/// Parses the map text format:
///   '#' wall, '.' free, 'S' start cell (any orientation), 'O' object spawn,
///   '^' '>' 'v' '<' start cell with a fixed orientation.
/// Leading directive lines: `!teleport`, `!objects <n>`.
/// Without any start marker every free cell is a start cell.
GridMap parse_map(std::string_view text, std::string name = "custom");

/// Built-in presets: room9, two_hallways, teleport, non_teleport, room5.
GridMap preset_map(std::string_view name);
std::vector<std::string> preset_map_names();
/// Loads a preset by name, otherwise reads the path as a map file.
GridMap load_map(const std::string& name_or_path);

struct AgentState {
  Pose pose;
  Pose start_pose;
  std::set<Pose> visited;
  std::set<Position> objects;
};

struct ObservationOptions {
  bool egocentric = false;
  bool mark_agent = false;
};

struct Observation {
  std::array<std::uint8_t, kPatchCells> walls{};
  std::array<std::uint8_t, kPatchCells> objects{};
  bool mark_agent = false;

  std::uint8_t wall(int row, int col) const { return walls[row * kPatchSize + col]; }
  std::uint8_t object(int row, int col) const { return objects[row * kPatchSize + col]; }
  /// Flattened features: walls then objects, then the optional centre bit.
  std::vector<double> features() const;
  friend bool operator==(const Observation&, const Observation&) = default;
};

int observation_size(const ObservationOptions& opts);

using Rng = std::mt19937_64;

AgentState reset(const GridMap& map, Rng& rng);
AgentState step(const GridMap& map, const AgentState& state, Action action);
/// Movement and rotation only; object interaction is handled by `step`.
Pose step_pose(const GridMap& map, const Pose& pose, Action action);
Observation observe(const GridMap& map, const AgentState& state, const ObservationOptions& opts = {});
Observation observe_at(const GridMap& map, const Pose& pose, const std::set<Position>& objects,
                       const ObservationOptions& opts = {});

Orientation rotate_left(Orientation o);
Orientation rotate_right(Orientation o);
Position heading(Orientation o);
char orientation_char(Orientation o);
const char* action_name(Action a);

}  // namespace belieflab
