#pragma once

#include <array>
#include <span>
#include <string>

#include "belieflab/gridworld.hpp"
#include "belieflab/nn/params.hpp"

namespace belieflab {

/// Grayscale image, 0 = black, 255 = white, row-major height x width.
using Image = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr int kWallGray = 160;

/// One map-sized grid per orientation (N, E, S, W). Free cells are shaded so
/// the most probable pose across all four grids is 0 and zero probability is
/// 255; walls are kWallGray.
std::array<Image, kNumOrientations> belief_grids(const GridMap& map, std::span<const double> probs);

/// Map with walls gray, free cells white and the agent's cell black.
Image pose_image(const GridMap& map, const Pose& pose);
/// 5 x 5 patch: walls black, objects gray, free white.
Image observation_image(const Observation& obs);

/// Composite for one step. Top row: observation patch, true pose, probe
/// belief N E S W; bottom row: oracle belief N E S W under the probe grids.
/// Each cell becomes `scale` x `scale` pixels; panels are separated by white.
Image belief_panel(const GridMap& map, const Observation& obs, const Pose& pose, std::span<const double> probe,
                   std::span<const double> oracle, int scale = 1);

/// Plain-text PGM (P2) with maximum value 255.
void write_pgm(const Image& img, const std::string& path);
std::string to_pgm(const Image& img);

/// "x,y,theta,prob" rows, one per pose.
std::string belief_csv(const GridMap& map, std::span<const double> probs);

}  // namespace belieflab
