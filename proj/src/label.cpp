#include "dnc/label.hpp"

#include <algorithm>
#include <cmath>

#include "dnc/error.hpp"

namespace dnc::label {

namespace {

void check_same_size(int w, int h, int ow, int oh, const char* what) {
  if (w != ow || h != oh)
    fail(Errc::ShapeMismatch, std::string(what) + " is " + std::to_string(ow) +
                                  "x" + std::to_string(oh) + ", expected " +
                                  std::to_string(w) + "x" + std::to_string(h));
}

int clamp_coord(int v, int hi) { return std::clamp(v, 0, hi - 1); }

}  // namespace

void validate_rig(const CameraRig& rig) {
  if (!std::isfinite(rig.fx) || !std::isfinite(rig.fy) || !std::isfinite(rig.cx) ||
      !std::isfinite(rig.cy) || !std::isfinite(rig.baseline))
    fail(Errc::InvalidArgument, "camera rig has non-finite parameters");
  if (rig.fx <= 0.0 || rig.fy <= 0.0)
    fail(Errc::InvalidArgument, "focal lengths must be positive");
  if (rig.baseline <= 0.0)
    fail(Errc::InvalidArgument, "baseline must be positive");
}

DepthMap disparity_to_depth(const DisparityMap& disp, const CameraRig& rig,
                            double epsilon_disp) {
  validate_rig(rig);
  if (!disp.valid.same_size(disp.values))
    fail(Errc::ShapeMismatch, "disparity validity mask size differs from values");
  DepthMap out;
  out.z = Image(disp.values.width, disp.values.height, 0.0f);
  out.valid = Mask(disp.values.width, disp.values.height, false);
  for (int y = 0; y < disp.values.height; ++y)
    for (int x = 0; x < disp.values.width; ++x) {
      double d = disp.values.at(x, y);
      if (!disp.valid.get(x, y) || !std::isfinite(d) || d <= epsilon_disp)
        continue;
      out.z.at(x, y) = float(rig.fx * rig.baseline / d);
      out.valid.set(x, y, true);
    }
  return out;
}

DepthMap depth_from_image(const Image& z) {
  DepthMap out;
  out.z = z;
  out.valid = Mask(z.width, z.height, false);
  for (int y = 0; y < z.height; ++y)
    for (int x = 0; x < z.width; ++x) {
      float v = z.at(x, y);
      if (std::isfinite(v) && v > 0.0f) out.valid.set(x, y, true);
    }
  return out;
}

PointMap unproject(const DepthMap& depth, const CameraRig& rig) {
  validate_rig(rig);
  if (!depth.valid.same_size(depth.z))
    fail(Errc::ShapeMismatch, "depth validity mask size differs from values");
  PointMap out;
  out.width = depth.z.width;
  out.height = depth.z.height;
  size_t count = size_t(out.width) * size_t(out.height);
  out.x.assign(count, 0.0);
  out.y.assign(count, 0.0);
  out.z.assign(count, 0.0);
  out.valid = Mask(out.width, out.height, false);
  for (int v = 0; v < out.height; ++v)
    for (int u = 0; u < out.width; ++u) {
      if (!depth.valid.get(u, v)) continue;
      size_t i = size_t(v) * size_t(out.width) + size_t(u);
      double z = depth.z.at(u, v);
      out.x[i] = (double(u) - rig.cx) * z / rig.fx;
      out.y[i] = (double(v) - rig.cy) * z / rig.fy;
      out.z[i] = z;
      out.valid.set(u, v, true);
    }
  return out;
}

NormalMap normals_from_points(const PointMap& points) {
  // Sobel pairs: d/du weights column offsets by (-1, 0, +1), d/dv does the
  // same for rows; each row/column triple weighs (1, 2, 1). With the 1/8
  // scale the response to a linear field is its exact derivative.
  NormalMap out;
  out.width = points.width;
  out.height = points.height;
  size_t count = size_t(points.width) * size_t(points.height);
  out.nx.assign(count, 0.0);
  out.ny.assign(count, 0.0);
  out.nz.assign(count, 0.0);
  out.defined = Mask(points.width, points.height, false);

  auto idx = [&](int u, int v) {
    return size_t(v) * size_t(points.width) + size_t(u);
  };

  for (int v = 0; v < points.height; ++v)
    for (int u = 0; u < points.width; ++u) {
      bool ok = true;
      for (int dv = -1; dv <= 1 && ok; ++dv)
        for (int du = -1; du <= 1 && ok; ++du)
          ok = points.valid.get(clamp_coord(u + du, points.width),
                                clamp_coord(v + dv, points.height));
      if (!ok) continue;

      double tu[3] = {0, 0, 0};
      double tv[3] = {0, 0, 0};
      for (int dv = -1; dv <= 1; ++dv)
        for (int du = -1; du <= 1; ++du) {
          size_t i = idx(clamp_coord(u + du, points.width),
                         clamp_coord(v + dv, points.height));
          double wu = double(du) * (dv == 0 ? 2.0 : 1.0) / 8.0;
          double wv = double(dv) * (du == 0 ? 2.0 : 1.0) / 8.0;
          double p[3] = {points.x[i], points.y[i], points.z[i]};
          for (int c = 0; c < 3; ++c) {
            tu[c] += wu * p[c];
            tv[c] += wv * p[c];
          }
        }

      double nx = tu[1] * tv[2] - tu[2] * tv[1];
      double ny = tu[2] * tv[0] - tu[0] * tv[2];
      double nz = tu[0] * tv[1] - tu[1] * tv[0];
      double len = std::sqrt(nx * nx + ny * ny + nz * nz);
      if (!(len > 1e-15)) continue;
      nx /= len;
      ny /= len;
      nz /= len;
      if (nz > 0.0) {
        nx = -nx;
        ny = -ny;
        nz = -nz;
      }
      if (nz >= 0.0) continue;  // side-on surfaces have no camera-facing sign

      size_t i = idx(u, v);
      out.nx[i] = nx;
      out.ny[i] = ny;
      out.nz[i] = nz;
      out.defined.set(u, v, true);
    }
  return out;
}

SimilarityMap cosine_consistency(const NormalMap& a, const NormalMap& b) {
  if (a.width != b.width || a.height != b.height)
    fail(Errc::ShapeMismatch, "normal maps differ in size");
  SimilarityMap out;
  out.width = a.width;
  out.height = a.height;
  size_t count = size_t(a.width) * size_t(a.height);
  out.cosine.assign(count, 0.0);
  out.defined = Mask(a.width, a.height, false);
  for (int v = 0; v < a.height; ++v)
    for (int u = 0; u < a.width; ++u) {
      if (!a.defined.get(u, v) || !b.defined.get(u, v)) continue;
      size_t i = size_t(v) * size_t(a.width) + size_t(u);
      double dot = a.nx[i] * b.nx[i] + a.ny[i] * b.ny[i] + a.nz[i] * b.nz[i];
      out.cosine[i] = std::clamp(dot, -1.0, 1.0);
      out.defined.set(u, v, true);
    }
  return out;
}

Mask consistency_mask(const SimilarityMap& sim, double threshold,
                      const Mask& sky) {
  if (std::isnan(threshold) || threshold < -1.0 || threshold > 1.0)
    fail(Errc::InvalidArgument, "cosine threshold must lie in [-1, 1]");
  if (sky.width != sim.width || sky.height != sim.height)
    fail(Errc::ShapeMismatch, "sky mask size differs from the similarity map");
  Mask out(sim.width, sim.height, false);
  for (int v = 0; v < sim.height; ++v)
    for (int u = 0; u < sim.width; ++u) {
      if (sky.get(u, v) || !sim.defined.get(u, v)) continue;
      size_t i = size_t(v) * size_t(sim.width) + size_t(u);
      if (sim.cosine[i] >= threshold) out.set(u, v, true);
    }
  return out;
}

PseudoLabelVerdict curate_sample(const DisparityMap& disp, const Image& mono_depth,
                                 const CameraRig& rig, const Mask& sky,
                                 const CurationThresholds& thresholds) {
  validate_rig(rig);
  int w = disp.values.width;
  int h = disp.values.height;
  check_same_size(w, h, disp.valid.width, disp.valid.height, "disparity mask");
  check_same_size(w, h, mono_depth.width, mono_depth.height, "monocular depth");
  check_same_size(w, h, sky.width, sky.height, "sky mask");

  auto stereo_normals = normals_from_points(
      unproject(disparity_to_depth(disp, rig, thresholds.epsilon_disp), rig));
  auto mono_normals = normals_from_points(unproject(depth_from_image(mono_depth), rig));
  auto sim = cosine_consistency(stereo_normals, mono_normals);

  long long domain = 0;
  long long passed = 0;
  Mask pass = consistency_mask(sim, thresholds.cosine_threshold, sky);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      if (sky.get(u, v) || !sim.defined.get(u, v)) continue;
      ++domain;
      if (pass.get(u, v)) ++passed;
    }
  if (domain < std::max<long long>(thresholds.min_valid_pixels, 1))
    fail(Errc::Degenerate,
         "only " + std::to_string(domain) +
             " valid non-sky pixels; need at least " +
             std::to_string(std::max<long long>(thresholds.min_valid_pixels, 1)));

  PseudoLabelVerdict verdict;
  verdict.consistency = std::move(pass);
  verdict.agreement_fraction = double(passed) / double(domain);
  verdict.accepted = verdict.agreement_fraction >= thresholds.acceptance_fraction;
  verdict.thresholds = thresholds;
  verdict.domain_pixels = domain;
  verdict.final_label = disp;
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
      if (sky.get(u, v)) {
        verdict.final_label.values.at(u, v) = 0.0f;
        verdict.final_label.valid.set(u, v, false);
      }
  return verdict;
}

std::vector<std::string> subsample_manifest(const std::vector<std::string>& frames,
                                            int stride) {
  if (stride < 1) fail(Errc::InvalidArgument, "stride must be at least 1");
  std::vector<std::string> out;
  for (size_t i = 0; i < frames.size(); i += size_t(stride))
    out.push_back(frames[i]);
  return out;
}

}  // namespace dnc::label
