#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <queue>
#include <sstream>

#include "belieflab/gridworld.hpp"

using namespace belieflab;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) {
    if (!l.empty() && l[0] != '!') out.push_back(l);
  }
  return out;
}

// Patch read straight off the map text, independent of GridMap.
std::array<int, kPatchCells> text_patch(const std::vector<std::string>& rows, int x, int y) {
  std::array<int, kPatchCells> p{};
  for (int i = 0; i < kPatchSize; ++i) {
    for (int j = 0; j < kPatchSize; ++j) {
      const int wx = x + j - 2, wy = y + i - 2;
      const bool out = wy < 0 || wy >= static_cast<int>(rows.size()) || wx < 0 || wx >= static_cast<int>(rows[0].size());
      p[static_cast<std::size_t>(i * kPatchSize + j)] = out || rows[static_cast<std::size_t>(wy)][static_cast<std::size_t>(wx)] == '#';
    }
  }
  return p;
}

AgentState at(const GridMap& map, Pose p) {
  (void)map;
  AgentState s;
  s.pose = p;
  s.start_pose = p;
  s.visited.insert(p);
  return s;
}

}  // namespace

TEST(ParseMap, Room9HasEightyOneFreeCells) {
  const auto map = preset_map("room9");
  EXPECT_EQ(map.width(), 11);
  EXPECT_EQ(map.height(), 11);
  EXPECT_EQ(map.free_count(), 81);
  EXPECT_EQ(map.pose_count(), 324);
  EXPECT_EQ(map.start_poses().size(), 324u);
}

TEST(ParseMap, DotOnlyTextGivesRoom9) {
  std::string text = "###########\n";
  for (int i = 0; i < 9; ++i) text += "#.........#\n";
  text += "###########\n";
  const auto map = parse_map(text);
  EXPECT_EQ(map.free_count(), 81);
  EXPECT_EQ(map.to_text(), preset_map("room9").to_text());
}

TEST(ParseMap, OpenBoundaryIsRejected) {
  try {
    parse_map("#.###\n#...#\n#...#\n#...#\n#####\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_STREQ(e.what(), "boundary must be wall");
  }
}

TEST(ParseMap, RaggedTextIsRejected) {
  EXPECT_THROW(parse_map("#####\n#...#\n#..#\n#...#\n#####\n"), ParseError);
}

TEST(ParseMap, IllegalCharacterIsRejected) {
  EXPECT_THROW(parse_map("#####\n#.x.#\n#...#\n#...#\n#####\n"), ParseError);
}

TEST(ParseMap, MapWithoutStartCellIsRejected) {
  EXPECT_THROW(parse_map("#####\n#####\n#####\n#####\n#####\n"), std::exception);
}

TEST(ParseMap, TooSmallIsRejected) { EXPECT_THROW(parse_map("####\n#..#\n#..#\n####\n"), std::exception); }

TEST(ParseMap, DirectivesAndMarkers) {
  const auto map = parse_map("!teleport\n!objects 1\n#####\n#S.O#\n#.^.#\n#O..#\n#####\n");
  EXPECT_TRUE(map.teleport_on_touch());
  EXPECT_EQ(map.object_count(), 1);
  EXPECT_EQ(map.object_spawn_cells().size(), 2u);
  // 'S' allows four orientations, '^' only North.
  EXPECT_EQ(map.start_poses().size(), 5u);
  EXPECT_EQ(parse_map(map.to_text()).to_text(), map.to_text());
}

TEST(ParseMap, PoseIndexRoundTrip) {
  const auto map = preset_map("two_hallways");
  for (int i = 0; i < map.pose_count(); ++i) EXPECT_EQ(map.pose_index(map.pose_at(i)), i);
}

TEST(ParseMap, TwoHallwaysMatchesFixture) {
  const auto fixture = read_file(std::string(BELIEFLAB_FIXTURES) + "/two_hallways.map");
  EXPECT_EQ(preset_map("two_hallways").to_text(), fixture);
}

// Connectivity brute force on the fixture: dropping the junction row leaves
// exactly two corridors, and the 14 start poses split evenly between them.
TEST(ParseMap, TwoHallwaysCorridorsAreDisjointExceptAtOneEnd) {
  const auto rows = lines_of(read_file(std::string(BELIEFLAB_FIXTURES) + "/two_hallways.map"));
  const int h = static_cast<int>(rows.size()), w = static_cast<int>(rows[0].size());
  auto free = [&](int x, int y) { return rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] != '#'; };
  auto components = [&](int skip_row) {
    std::vector<int> label(static_cast<std::size_t>(w * h), -1);
    int count = 0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!free(x, y) || y == skip_row || label[static_cast<std::size_t>(y * w + x)] >= 0) continue;
        std::queue<std::pair<int, int>> q;
        q.push({x, y});
        label[static_cast<std::size_t>(y * w + x)] = count;
        while (!q.empty()) {
          auto [cx, cy] = q.front();
          q.pop();
          const int dx[] = {1, -1, 0, 0}, dy[] = {0, 0, 1, -1};
          for (int k = 0; k < 4; ++k) {
            const int nx = cx + dx[k], ny = cy + dy[k];
            if (!free(nx, ny) || ny == skip_row || label[static_cast<std::size_t>(ny * w + nx)] >= 0) continue;
            label[static_cast<std::size_t>(ny * w + nx)] = count;
            q.push({nx, ny});
          }
        }
        ++count;
      }
    }
    return std::make_pair(count, label);
  };
  EXPECT_EQ(components(-1).first, 1);
  auto [count, label] = components(1);
  ASSERT_EQ(count, 2);
  std::map<int, int> starts_per_corridor;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] == '^') {
        ++starts_per_corridor[label[static_cast<std::size_t>(y * w + x)]];
      }
    }
  }
  EXPECT_EQ(starts_per_corridor.size(), 2u);
  EXPECT_EQ(starts_per_corridor[0], 7);
  EXPECT_EQ(starts_per_corridor[1], 7);
  EXPECT_EQ(preset_map("two_hallways").start_poses().size(), 14u);
}

TEST(Reset, Room9IsUniformOverAllPoses) {
  const auto map = preset_map("room9");
  Rng rng(3);
  std::vector<int> counts(static_cast<std::size_t>(map.pose_count()), 0);
  const int draws = 324 * 400;
  for (int i = 0; i < draws; ++i) {
    const auto s = reset(map, rng);
    ++counts[static_cast<std::size_t>(map.pose_index(s.pose))];
    ASSERT_EQ(s.visited, std::set<Pose>{s.pose});
    ASSERT_TRUE(s.objects.empty());
  }
  // Chi-square with 323 degrees of freedom; mean 323, sd ~25.4.
  double chi = 0.0;
  for (int c : counts) chi += (c - 400.0) * (c - 400.0) / 400.0;
  EXPECT_LT(chi, 323 + 5 * 25.4);
}

TEST(Reset, TeleportPlacesTwoDistinctObjects) {
  const auto map = preset_map("teleport");
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const auto s = reset(map, rng);
    ASSERT_EQ(s.objects.size(), 2u);
    EXPECT_FALSE(s.objects.contains({s.pose.x, s.pose.y}));
    for (const auto& c : s.objects) EXPECT_TRUE(map.is_free(c.x, c.y));
  }
}

TEST(Reset, SameSeedSameState) {
  const auto map = preset_map("teleport");
  Rng a(11), b(11);
  for (int i = 0; i < 20; ++i) {
    const auto sa = reset(map, a), sb = reset(map, b);
    EXPECT_EQ(sa.pose, sb.pose);
    EXPECT_EQ(sa.objects, sb.objects);
  }
}

TEST(Step, RotateLeftChangesOnlyHeading) {
  const auto map = preset_map("room9");
  const auto s = step(map, at(map, {4, 4, Orientation::North}), Action::RotateLeft);
  EXPECT_EQ(s.pose, (Pose{4, 4, Orientation::West}));
  EXPECT_EQ(step(map, s, Action::RotateRight).pose, (Pose{4, 4, Orientation::North}));
}

TEST(Step, BlockedForwardIsNoOp) {
  const auto map = preset_map("room9");
  for (int x = 1; x <= 9; ++x) {
    const auto s = step(map, at(map, {x, 1, Orientation::North}), Action::Forward);
    EXPECT_EQ(s.pose, (Pose{x, 1, Orientation::North}));
  }
}

TEST(Step, ForwardMovesAlongHeading) {
  const auto map = preset_map("room9");
  EXPECT_EQ(step(map, at(map, {4, 4, Orientation::North}), Action::Forward).pose, (Pose{4, 3, Orientation::North}));
  EXPECT_EQ(step(map, at(map, {4, 4, Orientation::East}), Action::Forward).pose, (Pose{5, 4, Orientation::East}));
  EXPECT_EQ(step(map, at(map, {4, 4, Orientation::South}), Action::Backward).pose, (Pose{4, 3, Orientation::South}));
}

TEST(Step, TeleportConsumesObjectAndReturnsToStart) {
  const auto map = preset_map("teleport");
  AgentState s = at(map, {3, 5, Orientation::East});
  s.start_pose = {7, 7, Orientation::South};
  s.objects = {{4, 5}, {8, 2}};
  const auto next = step(map, s, Action::Forward);
  EXPECT_EQ(next.pose, s.start_pose);
  EXPECT_EQ(next.objects, (std::set<Position>{{8, 2}}));
  EXPECT_TRUE(next.visited.contains(next.pose));
}

TEST(Step, NonTeleportObjectsStay) {
  const auto map = preset_map("non_teleport");
  AgentState s = at(map, {3, 5, Orientation::East});
  s.objects = {{4, 5}, {8, 2}};
  const auto next = step(map, s, Action::Forward);
  EXPECT_EQ(next.pose, (Pose{4, 5, Orientation::East}));
  EXPECT_EQ(next.objects.size(), 2u);
}

TEST(Observe, CentreOfRoom9SeesNoWalls) {
  const auto map = preset_map("room9");
  const auto o = observe(map, at(map, {5, 5, Orientation::North}));
  for (auto v : o.walls) EXPECT_EQ(v, 0);
  for (auto v : o.objects) EXPECT_EQ(v, 0);
}

TEST(Observe, NorthWestCornerMatchesEnumeration) {
  const auto map = preset_map("room9");
  const auto o = observe(map, at(map, {1, 1, Orientation::East}));
  const auto expected = text_patch(lines_of(map.to_text()), 1, 1);
  for (int i = 0; i < kPatchSize; ++i) {
    for (int j = 0; j < kPatchSize; ++j) {
      EXPECT_EQ(o.wall(i, j), expected[static_cast<std::size_t>(i * kPatchSize + j)]);
      EXPECT_EQ(o.wall(i, j), (i < 2 || j < 2) ? 1 : 0);
    }
  }
}

TEST(Observe, EveryPoseMatchesEnumeration) {
  for (const auto& name : preset_map_names()) {
    const auto map = preset_map(name);
    const auto rows = lines_of(map.to_text());
    for (int i = 0; i < map.pose_count(); ++i) {
      const Pose p = map.pose_at(i);
      const auto o = observe(map, at(map, p));
      const auto expected = text_patch(rows, p.x, p.y);
      for (std::size_t k = 0; k < expected.size(); ++k) ASSERT_EQ(o.walls[k], expected[k]) << name;
    }
  }
}

TEST(Observe, ObjectOneCellEast) {
  const auto map = preset_map("non_teleport");
  AgentState s = at(map, {5, 5, Orientation::South});
  s.objects = {{6, 5}};
  const auto o = observe(map, s);
  for (int i = 0; i < kPatchSize; ++i) {
    for (int j = 0; j < kPatchSize; ++j) EXPECT_EQ(o.object(i, j), (i == 2 && j == 3) ? 1 : 0);
  }
}

TEST(Observe, EgocentricPatchPutsHeadingUp) {
  const auto map = preset_map("room9");
  const auto o = observe(map, at(map, {9, 5, Orientation::East}), {.egocentric = true});
  for (int i = 0; i < kPatchSize; ++i) {
    for (int j = 0; j < kPatchSize; ++j) EXPECT_EQ(o.wall(i, j), i < 2 ? 1 : 0);
  }
  // The world-aligned patch has the wall on the right instead.
  const auto w = observe(map, at(map, {9, 5, Orientation::East}));
  for (int i = 0; i < kPatchSize; ++i) EXPECT_EQ(w.wall(i, 4), 1);
}

TEST(Observe, CentreBitIsOptional) {
  const auto map = preset_map("room9");
  EXPECT_EQ(observe(map, at(map, {5, 5, Orientation::North})).features().size(), 50u);
  const auto f = observe(map, at(map, {5, 5, Orientation::North}), {.mark_agent = true}).features();
  ASSERT_EQ(f.size(), 51u);
  EXPECT_EQ(f.back(), 1.0);
  EXPECT_EQ(observation_size({.mark_agent = true}), 51);
}

// ---- properties --------------------------------------------------------------

TEST(GridworldProperties, StepIsPure) {
  const auto map = preset_map("teleport");
  Rng rng(2);
  AgentState s = reset(map, rng);
  std::uniform_int_distribution<int> act(0, 3);
  for (int i = 0; i < 2000; ++i) {
    const auto a = static_cast<Action>(act(rng));
    const auto x = step(map, s, a), y = step(map, s, a);
    ASSERT_EQ(x.pose, y.pose);
    ASSERT_EQ(x.objects, y.objects);
    ASSERT_EQ(x.visited, y.visited);
    s = x;
  }
}

TEST(GridworldProperties, RandomWalksStayOnFreeCellsAndVisitedGrows) {
  for (const auto& name : preset_map_names()) {
    const auto map = preset_map(name);
    Rng rng(17);
    std::uniform_int_distribution<int> act(0, 3);
    AgentState s = reset(map, rng);
    for (int i = 0; i < 100000; ++i) {
      if (i % 500 == 0) s = reset(map, rng);
      const auto before = s.visited.size();
      const auto prev = s.visited;
      s = step(map, s, static_cast<Action>(act(rng)));
      ASSERT_TRUE(map.is_free(s.pose.x, s.pose.y)) << name;
      ASSERT_TRUE(s.visited.contains(s.pose));
      ASSERT_GE(s.visited.size(), before);
      if (i % 997 == 0) {
        for (const auto& p : prev) ASSERT_TRUE(s.visited.contains(p));
      }
    }
  }
}

TEST(GridworldProperties, ForwardThenBackwardRestoresPose) {
  const auto map = preset_map("two_hallways");
  for (int i = 0; i < map.pose_count(); ++i) {
    const Pose p = map.pose_at(i);
    const Pose f = step_pose(map, p, Action::Forward);
    if (f == p) continue;
    EXPECT_EQ(step_pose(map, f, Action::Backward), p);
  }
}

TEST(GridworldProperties, ObservationIgnoresDistantCells) {
  const auto base = preset_map("room9");
  auto rows = lines_of(base.to_text());
  Rng rng(23);
  std::uniform_int_distribution<int> coord(1, 9);
  for (int trial = 0; trial < 300; ++trial) {
    const Pose agent{coord(rng), coord(rng), Orientation::North};
    int cx = 0, cy = 0;
    do {
      cx = coord(rng);
      cy = coord(rng);
    } while (std::max(std::abs(cx - agent.x), std::abs(cy - agent.y)) <= 2);
    auto changed = rows;
    changed[static_cast<std::size_t>(cy)][static_cast<std::size_t>(cx)] = '#';
    std::string text;
    for (const auto& r : changed) text += r + "\n";
    const auto other = parse_map(text);
    EXPECT_EQ(observe(base, at(base, agent)), observe(other, at(other, agent)));
  }
}
