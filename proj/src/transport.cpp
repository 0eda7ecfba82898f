#include "hmdetect/transport.hpp"

#include <cmath>
#include <limits>

#include "hmdetect/errors.hpp"
#include "hmdetect/util.hpp"

namespace hmdetect {

std::vector<int> solve_assignment(const Matrix& cost) {
  const auto n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw_validation("assignment cost matrix must be square");
  if (n == 0) return {};
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // 1-based shortest augmenting paths; column 0 is a virtual source.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> assignment(n);
  for (int j = 1; j <= n; ++j) assignment[match[j] - 1] = j - 1;
  return assignment;
}

double w1_exact(const PointCloud& a, const PointCloud& b) {
  const auto n = a.points.rows();
  if (n == 0 || b.points.rows() == 0) throw_validation("point clouds must be nonempty");
  if (b.points.rows() != n) {
    throw_validation("point cloud sizes differ (" + std::to_string(n) + " vs " +
                     std::to_string(b.points.rows()) + "); only equal-size clouds are supported");
  }
  if (a.points.cols() != b.points.cols()) {
    throw_validation("point cloud dimensions differ (" + std::to_string(a.points.cols()) + " vs " +
                     std::to_string(b.points.cols()) + ")");
  }
  if (!a.points.allFinite() || !b.points.allFinite()) {
    throw_validation("non-finite point coordinate");
  }

  Matrix cost(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) cost(i, j) = (a.points.row(i) - b.points.row(j)).norm();
  }
  const auto assignment = solve_assignment(cost);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) total += cost(i, assignment[static_cast<std::size_t>(i)]);
  return total / static_cast<double>(n);
}

std::vector<LayerDistance> layer_discrimination(const std::vector<LayerClouds>& layers,
                                                unsigned threads) {
  std::vector<LayerDistance> out(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    // Validate up front so worker threads never throw.
    const auto& l = layers[i];
    if (l.clean.points.rows() != l.adversarial.points.rows() ||
        l.clean.points.cols() != l.adversarial.points.cols() || l.clean.points.rows() == 0) {
      throw_validation("layer '" + l.layer_tag + "': clean and adversarial clouds must be " +
                       "nonempty with equal size and dimension");
    }
    if (!l.clean.points.allFinite() || !l.adversarial.points.allFinite()) {
      throw_validation("layer '" + l.layer_tag + "': non-finite point coordinate");
    }
  }
  parallel_for(layers.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      out[i] = LayerDistance{layers[i].layer_tag, w1_exact(layers[i].clean, layers[i].adversarial)};
    }
  });
  return out;
}

}  // namespace hmdetect
