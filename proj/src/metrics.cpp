#include "dnc/metrics.hpp"

#include <cmath>
#include <string>

#include "dnc/error.hpp"

namespace dnc::metrics {

namespace {

long long checked_mask_count(const Image& pred, const Image& gt,
                             const Mask& mask) {
  if (!pred.same_size(gt))
    fail(Errc::ShapeMismatch, "prediction and ground truth differ in size");
  if (!mask.same_size(gt))
    fail(Errc::ShapeMismatch, "evaluation mask size differs from ground truth");
  long long count = 0;
  for (uint8_t b : mask.bits) count += b ? 1 : 0;
  if (count == 0) fail(Errc::EmptyMask, "evaluation mask selects no pixels");
  return count;
}

}  // namespace

size_t FeatureLevel::element_count() const {
  size_t n = 1;
  for (int d : shape) n *= size_t(d);
  return shape.empty() ? 0 : n;
}

double bp_x(const Image& pred, const Image& gt, double x, const Mask& mask) {
  if (!(x >= 0.0))
    fail(Errc::InvalidArgument, "error threshold must be non-negative");
  long long count = checked_mask_count(pred, gt, mask);
  long long bad = 0;
  for (int v = 0; v < gt.height; ++v)
    for (int u = 0; u < gt.width; ++u)
      if (mask.get(u, v) &&
          std::fabs(double(pred.at(u, v)) - double(gt.at(u, v))) > x)
        ++bad;
  return 100.0 * double(bad) / double(count);
}

double d1(const Image& pred, const Image& gt, const Mask& mask) {
  long long count = checked_mask_count(pred, gt, mask);
  long long bad = 0;
  for (int v = 0; v < gt.height; ++v)
    for (int u = 0; u < gt.width; ++u) {
      if (!mask.get(u, v)) continue;
      double e = std::fabs(double(pred.at(u, v)) - double(gt.at(u, v)));
      if (e > 3.0 && e > 0.05 * double(gt.at(u, v))) ++bad;
    }
  return 100.0 * double(bad) / double(count);
}

double epe(const Image& pred, const Image& gt, const Mask& mask) {
  long long count = checked_mask_count(pred, gt, mask);
  double sum = 0.0;
  for (int v = 0; v < gt.height; ++v)
    for (int u = 0; u < gt.width; ++u)
      if (mask.get(u, v))
        sum += std::fabs(double(pred.at(u, v)) - double(gt.at(u, v)));
  return sum / double(count);
}

double feature_distill_mse(const std::vector<FeatureLevel>& student,
                           const std::vector<FeatureLevel>& teacher) {
  if (student.size() != teacher.size())
    fail(Errc::ShapeMismatch,
         "pyramids have " + std::to_string(student.size()) + " and " +
             std::to_string(teacher.size()) + " levels");
  if (student.empty()) fail(Errc::ShapeMismatch, "pyramids have no levels");

  double total = 0.0;
  for (size_t level = 0; level < student.size(); ++level) {
    const auto& s = student[level];
    const auto& t = teacher[level];
    if (s.shape != t.shape || s.data.size() != t.data.size() ||
        s.data.size() != s.element_count() || s.data.empty())
      fail(Errc::ShapeMismatch,
           "pyramid level " + std::to_string(level) + " shapes disagree");
    double sum = 0.0;
    for (size_t i = 0; i < s.data.size(); ++i) {
      double diff = double(s.data[i]) - double(t.data[i]);
      sum += diff * diff;
    }
    total += sum / double(s.data.size());
  }
  return total / double(student.size());
}

}  // namespace dnc::metrics
