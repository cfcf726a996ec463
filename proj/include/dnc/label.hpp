#pragma once

#include <string>
#include <vector>

#include "dnc/image.hpp"

namespace dnc::label {

struct CameraRig {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  double baseline = 0.0;  // meters
};

// Focal lengths and baseline must be positive and everything finite.
void validate_rig(const CameraRig& rig);

struct DisparityMap {
  Image values;  // pixels of horizontal offset
  Mask valid;
};

struct DepthMap {
  Image z;  // meters
  Mask valid;
};

struct PointMap {
  int width = 0;
  int height = 0;
  std::vector<double> x, y, z;  // meters, camera frame
  Mask valid;
};

struct NormalMap {
  int width = 0;
  int height = 0;
  std::vector<double> nx, ny, nz;  // unit vectors, nz < 0 where defined
  Mask defined;
};

struct SimilarityMap {
  int width = 0;
  int height = 0;
  std::vector<double> cosine;  // clamped to [-1, 1]
  Mask defined;
};

struct CurationThresholds {
  double cosine_threshold = 0.85;
  double acceptance_fraction = 0.7;
  double epsilon_disp = 1e-3;     // px; smaller disparities are invalid
  long long min_valid_pixels = 64;
};

struct PseudoLabelVerdict {
  Mask consistency;           // passing pixels (defined, non-sky, above threshold)
  double agreement_fraction = 0.0;
  bool accepted = false;
  DisparityMap final_label;   // input disparity with sky forced to 0
  CurationThresholds thresholds;
  long long domain_pixels = 0;  // defined non-sky pixels the fraction is over
};

// Z = fx * baseline / d where the disparity is valid and above epsilon_disp;
// everything else is masked rather than divided.
DepthMap disparity_to_depth(const DisparityMap& disp, const CameraRig& rig,
                            double epsilon_disp = 1e-3);

// Marks positive finite depths valid, for externally supplied depth rasters.
DepthMap depth_from_image(const Image& z);

// Pinhole back-projection: X = (u-cx)*Z/fx, Y = (v-cy)*Z/fy.
PointMap unproject(const DepthMap& depth, const CameraRig& rig);

// Surface normals from 3x3 Sobel tangents (1/8 normalization, replicated
// borders): n = normalize(t_u x t_v), sign-flipped to face the camera
// (nz < 0). A pixel is undefined when its window touches an invalid point or
// the tangents are degenerate.
NormalMap normals_from_points(const PointMap& points);

// Per-pixel dot product where both maps are defined. Throws SHAPE_MISMATCH
// on size disagreement.
SimilarityMap cosine_consistency(const NormalMap& a, const NormalMap& b);

// True where the similarity is defined, outside the sky, and at or above the
// threshold. Sky pixels are outside the domain entirely: they neither pass
// nor fail. The threshold must lie in [-1, 1].
Mask consistency_mask(const SimilarityMap& sim, double threshold,
                      const Mask& sky);

// Full curation chain: both depth sources to normals, cosine comparison,
// sky-aware thresholding, accept/reject by agreement fraction, and the final
// label with sky disparity forced to exactly 0. Throws DEGENERATE when fewer
// than min_valid_pixels defined non-sky pixels remain.
PseudoLabelVerdict curate_sample(const DisparityMap& disp, const Image& mono_depth,
                                 const CameraRig& rig, const Mask& sky,
                                 const CurationThresholds& thresholds = {});

// Every stride-th frame starting at index 0.
std::vector<std::string> subsample_manifest(const std::vector<std::string>& frames,
                                            int stride);

}  // namespace dnc::label
