#pragma once

#include <vector>

#include "dnc/image.hpp"

namespace dnc::metrics {

// A feature map of one pyramid level: dense values with an explicit shape so
// levels of different resolutions can ride in one container.
struct FeatureLevel {
  std::vector<int> shape;
  std::vector<float> data;

  size_t element_count() const;
};

// Percentage of masked pixels whose absolute disparity error exceeds x
// (strictly). Throws EMPTY_MASK when no pixel is masked, SHAPE_MISMATCH on
// size disagreements.
double bp_x(const Image& pred, const Image& gt, double x, const Mask& mask);

// Percentage of masked pixels whose error exceeds both 3 px and 5% of the
// ground-truth disparity (strict on both clauses).
double d1(const Image& pred, const Image& gt, const Mask& mask);

// Mean absolute disparity error over the mask.
double epe(const Image& pred, const Image& gt, const Mask& mask);

// Mean of per-level mean squared differences, weighting every pyramid level
// equally regardless of its size. Throws SHAPE_MISMATCH when level counts or
// shapes disagree.
double feature_distill_mse(const std::vector<FeatureLevel>& student,
                           const std::vector<FeatureLevel>& teacher);

}  // namespace dnc::metrics
