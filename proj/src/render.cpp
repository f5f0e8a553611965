#include "belieflab/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace belieflab {

namespace {

Image upscale(const Image& img, int scale) {
  Image out(img.rows() * scale, img.cols() * scale);
  for (Eigen::Index y = 0; y < out.rows(); ++y) {
    for (Eigen::Index x = 0; x < out.cols(); ++x) out(y, x) = img(y / scale, x / scale);
  }
  return out;
}

void blit(Image& dst, const Image& src, Eigen::Index top, Eigen::Index left) {
  dst.block(top, left, src.rows(), src.cols()) = src;
}

Image blank_map(const GridMap& map) {
  Image img(map.height(), map.width());
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) img(y, x) = map.is_wall(x, y) ? kWallGray : 255;
  }
  return img;
}

}  // namespace

std::array<Image, kNumOrientations> belief_grids(const GridMap& map, std::span<const double> probs) {
  if (probs.size() != static_cast<std::size_t>(map.pose_count())) {
    throw std::invalid_argument("belief table does not match the map");
  }
  const double peak = *std::max_element(probs.begin(), probs.end());
  std::array<Image, kNumOrientations> grids;
  for (auto& g : grids) g = blank_map(map);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const Pose p = map.pose_at(static_cast<int>(i));
    const double level = peak > 0.0 ? probs[i] / peak : 0.0;
    grids[static_cast<std::size_t>(p.theta)](p.y, p.x) = static_cast<int>(std::lround(255.0 * (1.0 - level)));
  }
  return grids;
}

Image pose_image(const GridMap& map, const Pose& pose) {
  Image img = blank_map(map);
  img(pose.y, pose.x) = 0;
  return img;
}

Image observation_image(const Observation& obs) {
  Image img(kPatchSize, kPatchSize);
  for (int i = 0; i < kPatchSize; ++i) {
    for (int j = 0; j < kPatchSize; ++j) {
      const auto k = static_cast<std::size_t>(i * kPatchSize + j);
      img(i, j) = obs.walls[k] ? 0 : obs.objects[k] ? kWallGray / 2 : 255;
    }
  }
  return img;
}

Image belief_panel(const GridMap& map, const Observation& obs, const Pose& pose, std::span<const double> probe,
                   std::span<const double> oracle, int scale) {
  if (scale < 1) throw std::invalid_argument("scale must be positive");
  const auto probe_grids = belief_grids(map, probe);
  const auto oracle_grids = belief_grids(map, oracle);
  const Eigen::Index gap = scale;
  const Eigen::Index w = map.width() * scale;
  const Eigen::Index h = map.height() * scale;
  const Eigen::Index patch = kPatchSize * scale;
  const Eigen::Index first = std::max(patch, w) + gap;  // column where the pose map starts
  const Eigen::Index grids_left = first + w + gap;
  Image out = Image::Constant(2 * std::max(h, patch) + gap, grids_left + 4 * (w + gap) - gap, 255);
  blit(out, upscale(observation_image(obs), scale), 0, 0);
  blit(out, upscale(pose_image(map, pose), scale), 0, first);
  for (int k = 0; k < kNumOrientations; ++k) {
    const Eigen::Index left = grids_left + k * (w + gap);
    blit(out, upscale(probe_grids[static_cast<std::size_t>(k)], scale), 0, left);
    blit(out, upscale(oracle_grids[static_cast<std::size_t>(k)], scale), std::max(h, patch) + gap, left);
  }
  return out;
}

std::string to_pgm(const Image& img) {
  std::ostringstream out;
  out << "P2\n" << img.cols() << ' ' << img.rows() << "\n255\n";
  for (Eigen::Index y = 0; y < img.rows(); ++y) {
    for (Eigen::Index x = 0; x < img.cols(); ++x) out << (x ? " " : "") << img(y, x);
    out << '\n';
  }
  return out.str();
}

void write_pgm(const Image& img, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_pgm(img);
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::string belief_csv(const GridMap& map, std::span<const double> probs) {
  if (probs.size() != static_cast<std::size_t>(map.pose_count())) {
    throw std::invalid_argument("belief table does not match the map");
  }
  std::ostringstream out;
  out.precision(17);
  out << "x,y,theta,prob\n";
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const Pose p = map.pose_at(static_cast<int>(i));
    out << p.x << ',' << p.y << ',' << orientation_char(p.theta) << ',' << probs[i] << '\n';
  }
  return out.str();
}

}  // namespace belieflab
