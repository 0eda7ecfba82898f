#pragma once

#include <string>
#include <vector>

#include "hmdetect/types.hpp"

namespace hmdetect {

// Uniformly weighted empirical measure; one point per row.
struct PointCloud {
  Points points;
};

// Minimum-cost perfect matching on a square cost matrix (Hungarian method
// with row/column potentials, O(n^3)). Returns assignment[row] = column.
std::vector<int> solve_assignment(const Matrix& cost);

// Exact Wasserstein-1 distance between two equal-size clouds under the
// Euclidean ground cost: the minimal mean matched-pair distance.
double w1_exact(const PointCloud& a, const PointCloud& b);

struct LayerClouds {
  std::string layer_tag;
  PointCloud clean;
  PointCloud adversarial;
};

struct LayerDistance {
  std::string layer_tag;
  double w1 = 0.0;
};

// One w1_exact per layer, in input order.
std::vector<LayerDistance> layer_discrimination(const std::vector<LayerClouds>& layers,
                                                unsigned threads = 1);

}  // namespace hmdetect
