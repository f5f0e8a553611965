#include "belieflab/gridworld.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace belieflab {

namespace {

constexpr std::string_view kRoom9 =
    "###########\n"
    "#.........#\n"
    "#.........#\n"
    "#.........#\n"
    "#.........#\n"
    "#.........#\n"
    "#.........#\n"
    "#.........#\n"
    "#.........#\n"
    "#.........#\n"
    "###########\n";

constexpr std::string_view kRoom5 =
    "#######\n"
    "#.....#\n"
    "#.....#\n"
    "#.....#\n"
    "#.....#\n"
    "#.....#\n"
    "#######\n";

// Two one-cell corridors joined by a hallway along the top row. The walls
// between them are thick enough that a 5x5 patch inside either corridor sees
// the same thing until the junction row comes into view.
constexpr std::string_view kTwoHallways =
    "########\n"
    "#......#\n"
    "#.####.#\n"
    "#.####.#\n"
    "#^####^#\n"
    "#^####^#\n"
    "#^####^#\n"
    "#^####^#\n"
    "#^####^#\n"
    "#^####^#\n"
    "#^####^#\n"
    "########\n";

constexpr std::string_view kObjectRoom =
    "###########\n"
    "#OOOOOOOOO#\n"
    "#OOOOOOOOO#\n"
    "#OOOOOOOOO#\n"
    "#OOOOOOOOO#\n"
    "#OOOOOOOOO#\n"
    "#OOOOOOOOO#\n"
    "#OOOOOOOOO#\n"
    "#OOOOOOOOO#\n"
    "#OOOOOOOOO#\n"
    "###########\n";

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

GridMap::GridMap(std::string name, int width, int height, std::vector<Cell> cells,
                 std::vector<StartSpec> starts, std::vector<Position> object_spawns,
                 int object_count, bool teleport_on_touch)
    : name_(std::move(name)),
      width_(width),
      height_(height),
      cells_(std::move(cells)),
      starts_(std::move(starts)),
      object_spawns_(std::move(object_spawns)),
      object_count_(object_count),
      teleport_on_touch_(teleport_on_touch) {
  if (width_ < 5 || height_ < 5) throw ParseError("map must be at least 5x5");
  if (static_cast<int>(cells_.size()) != width_ * height_) throw ParseError("cell table size mismatch");
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      const bool boundary = x == 0 || y == 0 || x == width_ - 1 || y == height_ - 1;
      if (boundary && cells_[y * width_ + x] != Cell::Wall) {
        throw ParseError("boundary must be wall (cell " + std::to_string(x) + "," + std::to_string(y) + ")");
      }
    }
  }
  free_lookup_.assign(cells_.size(), -1);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      if (cells_[y * width_ + x] == Cell::Free) {
        free_lookup_[y * width_ + x] = static_cast<int>(free_cells_.size());
        free_cells_.push_back({x, y});
      }
    }
  }
  for (const auto& s : starts_) {
    if (is_wall(s.cell.x, s.cell.y)) throw ParseError("start cell on a wall");
  }
  for (const auto& p : object_spawns_) {
    if (is_wall(p.x, p.y)) throw ParseError("object spawn cell on a wall");
  }
  if (starts_.empty()) throw ParseError("map has no start cell");
  if (object_count_ < 0) throw ParseError("negative object count");
  if (object_count_ > static_cast<int>(object_spawns_.size())) {
    throw ParseError("more objects than object spawn cells");
  }
}

int GridMap::pose_index(const Pose& p) const {
  const int f = free_index(p.x, p.y);
  if (f < 0) throw std::out_of_range("pose outside free cells");
  return f * kNumOrientations + static_cast<int>(p.theta);
}

Pose GridMap::pose_at(int index) const {
  if (index < 0 || index >= pose_count()) throw std::out_of_range("pose index out of range");
  const auto& c = free_cells_[index / kNumOrientations];
  return {c.x, c.y, static_cast<Orientation>(index % kNumOrientations)};
}

std::vector<Pose> GridMap::start_poses() const {
  std::vector<Pose> out;
  for (const auto& s : starts_) {
    if (s.any_orientation) {
      for (int t = 0; t < kNumOrientations; ++t) out.push_back({s.cell.x, s.cell.y, static_cast<Orientation>(t)});
    } else {
      out.push_back({s.cell.x, s.cell.y, s.theta});
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string GridMap::to_text() const {
  std::ostringstream os;
  if (teleport_on_touch_) os << "!teleport\n";
  if (object_count_ > 0) os << "!objects " << object_count_ << "\n";
  std::vector<char> grid(cells_.size());
  for (std::size_t i = 0; i < cells_.size(); ++i) grid[i] = cells_[i] == Cell::Wall ? '#' : '.';
  const bool all_start = static_cast<int>(starts_.size()) == free_count() &&
                         std::all_of(starts_.begin(), starts_.end(), [](const StartSpec& s) { return s.any_orientation; });
  if (!all_start) {
    for (const auto& s : starts_) {
      grid[s.cell.y * width_ + s.cell.x] = s.any_orientation ? 'S' : orientation_char(s.theta);
    }
  }
  for (const auto& p : object_spawns_) grid[p.y * width_ + p.x] = 'O';
  for (int y = 0; y < height_; ++y) {
    os.write(grid.data() + y * width_, width_);
    os << '\n';
  }
  return os.str();
}

GridMap parse_map(std::string_view text, std::string name) {
  std::vector<std::string> lines;
  {
    std::size_t pos = 0;
    while (pos < text.size()) {
      auto nl = text.find('\n', pos);
      if (nl == std::string_view::npos) nl = text.size();
      std::string line(text.substr(pos, nl - pos));
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(std::move(line));
      pos = nl + 1;
    }
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();

  bool teleport = false;
  int object_count = -1;
  std::size_t first = 0;
  for (; first < lines.size() && (lines[first].empty() || lines[first].front() == '!'); ++first) {
    if (lines[first].empty()) continue;
    std::istringstream directive(lines[first].substr(1));
    std::string key;
    directive >> key;
    if (key == "teleport") {
      teleport = true;
    } else if (key == "objects") {
      if (!(directive >> object_count)) throw ParseError("'!objects' needs a count");
    } else {
      throw ParseError("unknown directive '!" + key + "'");
    }
  }
  std::vector<std::string> rows(lines.begin() + static_cast<std::ptrdiff_t>(first), lines.end());
  if (rows.empty()) throw ParseError("empty map");
  const int height = static_cast<int>(rows.size());
  const int width = static_cast<int>(rows.front().size());
  std::vector<Cell> cells;
  std::vector<StartSpec> starts;
  std::vector<Position> spawns;
  cells.reserve(static_cast<std::size_t>(width * height));
  for (int y = 0; y < height; ++y) {
    if (static_cast<int>(rows[y].size()) != width) {
      throw ParseError("map is not rectangular (row " + std::to_string(y) + ")");
    }
    for (int x = 0; x < width; ++x) {
      const char c = rows[y][x];
      switch (c) {
        case '#': cells.push_back(Cell::Wall); break;
        case '.': cells.push_back(Cell::Free); break;
        case 'S':
          cells.push_back(Cell::Free);
          starts.push_back({{x, y}, true, Orientation::North});
          break;
        case 'O':
          cells.push_back(Cell::Free);
          spawns.push_back({x, y});
          break;
        case '^': case '>': case 'v': case '<': {
          cells.push_back(Cell::Free);
          const Orientation o = c == '^' ? Orientation::North
                                : c == '>' ? Orientation::East
                                : c == 'v' ? Orientation::South
                                           : Orientation::West;
          starts.push_back({{x, y}, false, o});
          break;
        }
        default:
          throw ParseError(std::string("illegal map character '") + c + "' at row " + std::to_string(y));
      }
    }
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const bool boundary = x == 0 || y == 0 || x == width - 1 || y == height - 1;
      if (boundary && cells[y * width + x] != Cell::Wall) throw ParseError("boundary must be wall");
    }
  }
  if (starts.empty()) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        if (cells[y * width + x] == Cell::Free) starts.push_back({{x, y}, true, Orientation::North});
      }
    }
  }
  if (object_count < 0) object_count = spawns.empty() ? 0 : std::min<int>(2, static_cast<int>(spawns.size()));
  return GridMap(std::move(name), width, height, std::move(cells), std::move(starts), std::move(spawns),
                 object_count, teleport);
}

GridMap preset_map(std::string_view name) {
  if (name == "room9") return parse_map(kRoom9, "room9");
  if (name == "room5") return parse_map(kRoom5, "room5");
  if (name == "two_hallways") return parse_map(kTwoHallways, "two_hallways");
  if (name == "teleport") return parse_map("!teleport\n!objects 2\n" + std::string(kObjectRoom), "teleport");
  if (name == "non_teleport") return parse_map("!objects 2\n" + std::string(kObjectRoom), "non_teleport");
  throw ParseError("unknown map preset '" + std::string(name) + "'");
}

std::vector<std::string> preset_map_names() { return {"room9", "room5", "two_hallways", "teleport", "non_teleport"}; }

GridMap load_map(const std::string& name_or_path) {
  const auto names = preset_map_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end()) return preset_map(name_or_path);
  std::ifstream in(name_or_path);
  if (!in) throw ParseError("no preset or readable map file named '" + name_or_path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_map(buf.str(), name_or_path);
}

Orientation rotate_left(Orientation o) { return static_cast<Orientation>((static_cast<int>(o) + 3) % 4); }
Orientation rotate_right(Orientation o) { return static_cast<Orientation>((static_cast<int>(o) + 1) % 4); }

Position heading(Orientation o) {
  switch (o) {
    case Orientation::North: return {0, -1};
    case Orientation::East: return {1, 0};
    case Orientation::South: return {0, 1};
    case Orientation::West: return {-1, 0};
  }
  return {0, 0};
}

char orientation_char(Orientation o) {
  switch (o) {
    case Orientation::North: return '^';
    case Orientation::East: return '>';
    case Orientation::South: return 'v';
    case Orientation::West: return '<';
  }
  return '?';
}

const char* action_name(Action a) {
  switch (a) {
    case Action::Forward: return "forward";
    case Action::Backward: return "backward";
    case Action::RotateLeft: return "rotate_left";
    case Action::RotateRight: return "rotate_right";
  }
  return "?";
}

AgentState reset(const GridMap& map, Rng& rng) {
  const auto poses = map.start_poses();
  std::uniform_int_distribution<std::size_t> pick(0, poses.size() - 1);
  AgentState s;
  s.pose = poses[pick(rng)];
  s.start_pose = s.pose;
  s.visited.insert(s.pose);
  if (map.has_objects()) {
    std::vector<Position> candidates;
    for (const auto& c : map.object_spawn_cells()) {
      if (c.x != s.pose.x || c.y != s.pose.y) candidates.push_back(c);
    }
    if (static_cast<int>(candidates.size()) < map.object_count()) throw ParseError("not enough object spawn cells");
    // Partial Fisher-Yates: the first object_count entries are a uniform draw without replacement.
    for (int i = 0; i < map.object_count(); ++i) {
      std::uniform_int_distribution<std::size_t> d(static_cast<std::size_t>(i), candidates.size() - 1);
      std::swap(candidates[static_cast<std::size_t>(i)], candidates[d(rng)]);
      s.objects.insert(candidates[static_cast<std::size_t>(i)]);
    }
  }
  return s;
}

Pose step_pose(const GridMap& map, const Pose& pose, Action action) {
  Pose next = pose;
  switch (action) {
    case Action::RotateLeft: next.theta = rotate_left(pose.theta); break;
    case Action::RotateRight: next.theta = rotate_right(pose.theta); break;
    case Action::Forward:
    case Action::Backward: {
      const auto h = heading(pose.theta);
      const int sign = action == Action::Forward ? 1 : -1;
      const int nx = pose.x + sign * h.x;
      const int ny = pose.y + sign * h.y;
      if (map.is_free(nx, ny)) {
        next.x = nx;
        next.y = ny;
      }
      break;
    }
  }
  return next;
}

AgentState step(const GridMap& map, const AgentState& state, Action action) {
  AgentState next = state;
  next.pose = step_pose(map, state.pose, action);
  if (map.teleport_on_touch()) {
    const Position cell{next.pose.x, next.pose.y};
    if (auto it = next.objects.find(cell); it != next.objects.end()) {
      next.objects.erase(it);
      next.pose = next.start_pose;
    }
  }
  next.visited.insert(next.pose);
  return next;
}

Observation observe_at(const GridMap& map, const Pose& pose, const std::set<Position>& objects,
                       const ObservationOptions& opts) {
  Observation o;
  o.mark_agent = opts.mark_agent;
  for (int i = 0; i < kPatchSize; ++i) {
    for (int j = 0; j < kPatchSize; ++j) {
      int dx = j - kPatchRadius;
      int dy = i - kPatchRadius;
      if (opts.egocentric) {
        // Patch "up" is the agent's heading.
        const int a = dx, b = dy;
        switch (pose.theta) {
          case Orientation::North: break;
          case Orientation::East: dx = -b; dy = a; break;
          case Orientation::South: dx = -a; dy = -b; break;
          case Orientation::West: dx = b; dy = -a; break;
        }
      }
      const int wx = pose.x + dx;
      const int wy = pose.y + dy;
      o.walls[i * kPatchSize + j] = map.is_wall(wx, wy) ? 1 : 0;
      o.objects[i * kPatchSize + j] = objects.contains(Position{wx, wy}) ? 1 : 0;
    }
  }
  return o;
}

Observation observe(const GridMap& map, const AgentState& state, const ObservationOptions& opts) {
  return observe_at(map, state.pose, state.objects, opts);
}

std::vector<double> Observation::features() const {
  std::vector<double> f;
  f.reserve(2 * kPatchCells + 1);
  for (auto v : walls) f.push_back(v);
  for (auto v : objects) f.push_back(v);
  if (mark_agent) f.push_back(1.0);
  return f;
}

int observation_size(const ObservationOptions& opts) { return 2 * kPatchCells + (opts.mark_agent ? 1 : 0); }

}  // namespace belieflab
