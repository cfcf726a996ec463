#include <doctest.h>

#include <cmath>
#include <functional>

#include "dnc/error.hpp"
#include "dnc/label.hpp"

using namespace dnc;
using namespace dnc::label;

namespace {

Errc thrown_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a dnc::Error");
  return Errc::InvalidArgument;
}

CameraRig rig_320(int w, int h) {
  return CameraRig{320.0, 320.0, double(w) / 2.0, double(h) / 2.0, 0.5};
}

// Plane Z = a*X + b*Y + c expressed through the pinhole model:
// Z(u,v) = c / (1 - a*(u-cx)/fx - b*(v-cy)/fy).
Image plane_depth(const CameraRig& rig, int w, int h, double a, double b,
                  double c) {
  Image z(w, h);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      double denom =
          1.0 - a * (double(u) - rig.cx) / rig.fx - b * (double(v) - rig.cy) / rig.fy;
      z.at(u, v) = float(c / denom);
    }
  return z;
}

DisparityMap disparity_of_depth(const Image& z, const CameraRig& rig) {
  DisparityMap d;
  d.values = Image(z.width, z.height);
  d.valid = Mask(z.width, z.height, true);
  for (int v = 0; v < z.height; ++v)
    for (int u = 0; u < z.width; ++u)
      d.values.at(u, v) = float(rig.fx * rig.baseline / double(z.at(u, v)));
  return d;
}

// Monocular depth recomputed from the stored disparity, so both pipeline
// branches see bit-identical depth.
Image mono_from_disparity(const DisparityMap& d, const CameraRig& rig) {
  Image z(d.values.width, d.values.height);
  for (int v = 0; v < z.height; ++v)
    for (int u = 0; u < z.width; ++u)
      z.at(u, v) = float(rig.fx * rig.baseline / double(d.values.at(u, v)));
  return z;
}

}  // namespace

TEST_CASE("depth conversion applies the rectified-stereo relation") {
  DisparityMap d;
  d.values = Image(2, 1, 10.0f);
  d.valid = Mask(2, 1, true);
  CameraRig rig{100.0, 100.0, 1.0, 0.5, 0.5};
  auto depth = disparity_to_depth(d, rig);
  CHECK(depth.z.at(0, 0) == 5.0f);
  CHECK(depth.valid.get(1, 0));

  d.values.at(1, 0) = 5.0f;  // halved disparity, doubled depth
  depth = disparity_to_depth(d, rig);
  CHECK(depth.z.at(1, 0) == 10.0f);

  d.values.at(0, 0) = 5e-4f;  // below epsilon
  d.values.at(1, 0) = 0.0f;
  depth = disparity_to_depth(d, rig);
  CHECK(!depth.valid.get(0, 0));
  CHECK(!depth.valid.get(1, 0));

  CHECK(thrown_code([&] {
          disparity_to_depth(d, CameraRig{0.0, 1.0, 0.0, 0.0, 1.0});
        }) == Errc::InvalidArgument);
}

TEST_CASE("unprojection follows the pinhole model") {
  DepthMap depth;
  depth.z = Image(201, 2, 2.0f);
  depth.valid = Mask(201, 2, true);
  CameraRig rig{100.0, 100.0, 100.0, 1.0, 0.5};
  auto pts = unproject(depth, rig);
  size_t center = size_t(1) * 201 + 100;  // (cx, cy)
  CHECK(pts.x[center] == 0.0);
  CHECK(pts.y[center] == 0.0);
  CHECK(pts.z[center] == 2.0);

  depth.z.at(200, 1) = 1.0f;  // u = cx + fx
  pts = unproject(depth, rig);
  CHECK(pts.x[size_t(1) * 201 + 200] == 1.0);

  // Homogeneity: scaling depth scales every coordinate.
  DepthMap doubled = depth;
  for (auto& z : doubled.z.pixels) z *= 2.0f;
  auto big = unproject(doubled, rig);
  for (size_t i = 0; i < pts.x.size(); ++i) {
    CHECK(big.x[i] == 2.0 * pts.x[i]);
    CHECK(big.z[i] == 2.0 * pts.z[i]);
  }
}

TEST_CASE("constant depth yields camera-facing normals") {
  CameraRig rig = rig_320(16, 12);
  DepthMap depth;
  depth.z = Image(16, 12, 2.0f);
  depth.valid = Mask(16, 12, true);
  auto normals = normals_from_points(unproject(depth, rig));
  for (int v = 0; v < 12; ++v)
    for (int u = 0; u < 16; ++u) {
      REQUIRE(normals.defined.get(u, v));
      size_t i = size_t(v) * 16 + size_t(u);
      CHECK(std::fabs(normals.nx[i]) <= 1e-12);
      CHECK(std::fabs(normals.ny[i]) <= 1e-12);
      CHECK(std::fabs(normals.nz[i] + 1.0) <= 1e-12);
    }
}

TEST_CASE("slanted plane normals match the analytic normal") {
  const double a = 0.2, b = -0.1, c = 5.0;
  CameraRig rig = rig_320(64, 48);
  auto depth = depth_from_image(plane_depth(rig, 64, 48, a, b, c));
  auto normals = normals_from_points(unproject(depth, rig));

  double len = std::sqrt(a * a + b * b + 1.0);
  double ex = a / len, ey = b / len, ez = -1.0 / len;
  for (int v = 1; v < 47; ++v)
    for (int u = 1; u < 63; ++u) {
      REQUIRE(normals.defined.get(u, v));
      size_t i = size_t(v) * 64 + size_t(u);
      CHECK(std::fabs(normals.nx[i] - ex) <= 1e-3);
      CHECK(std::fabs(normals.ny[i] - ey) <= 1e-3);
      CHECK(std::fabs(normals.nz[i] - ez) <= 1e-3);
      CHECK(normals.nz[i] < 0.0);
      double norm = std::sqrt(normals.nx[i] * normals.nx[i] +
                              normals.ny[i] * normals.ny[i] +
                              normals.nz[i] * normals.nz[i]);
      CHECK(std::fabs(norm - 1.0) <= 1e-4);
    }
}

TEST_CASE("invalid points mask their whole sobel window") {
  CameraRig rig = rig_320(8, 8);
  DepthMap depth;
  depth.z = Image(8, 8, 2.0f);
  depth.valid = Mask(8, 8, true);
  depth.valid.set(4, 4, false);
  auto normals = normals_from_points(unproject(depth, rig));
  for (int v = 0; v < 8; ++v)
    for (int u = 0; u < 8; ++u) {
      bool near_hole = std::abs(u - 4) <= 1 && std::abs(v - 4) <= 1;
      CHECK(normals.defined.get(u, v) == !near_hole);
    }

  DepthMap none;
  none.z = Image(4, 4, 1.0f);
  none.valid = Mask(4, 4, false);
  auto empty = normals_from_points(unproject(none, rig_320(4, 4)));
  for (uint8_t bit : empty.defined.bits) CHECK(bit == 0);
}

TEST_CASE("cosine similarity is the per-pixel dot product") {
  NormalMap a, b;
  a.width = b.width = 3;
  a.height = b.height = 1;
  a.defined = Mask(3, 1, true);
  b.defined = Mask(3, 1, true);
  a.nx = {0, 0, 1};
  a.ny = {0, 0, 0};
  a.nz = {-1, -1, 0};
  b.nx = {0, 0, 0};
  b.ny = {0, 0, 0};
  b.nz = {-1, 1, -1};
  b.defined.set(1, 0, true);
  auto sim = cosine_consistency(a, b);
  CHECK(sim.cosine[0] == 1.0);   // identical
  CHECK(sim.cosine[1] == -1.0);  // opposite
  CHECK(sim.cosine[2] == 0.0);   // orthogonal
  CHECK(cosine_consistency(b, a).cosine == sim.cosine);

  NormalMap c;
  c.width = 2;
  c.height = 1;
  c.defined = Mask(2, 1, false);
  CHECK(thrown_code([&] { cosine_consistency(a, c); }) == Errc::ShapeMismatch);
}

TEST_CASE("threshold mask excludes sky from the domain") {
  SimilarityMap sim;
  sim.width = 4;
  sim.height = 1;
  sim.cosine = {0.9, 0.9, 0.9, 0.2};
  sim.defined = Mask(4, 1, true);
  sim.defined.set(2, 0, false);
  Mask sky(4, 1, false);
  sky.set(1, 0, true);

  auto pass = consistency_mask(sim, 0.85, sky);
  CHECK(pass.get(0, 0));
  CHECK(!pass.get(1, 0));  // sky: neither pass nor fail
  CHECK(!pass.get(2, 0));  // undefined
  CHECK(!pass.get(3, 0));  // below threshold

  auto all = consistency_mask(sim, -1.0, sky);
  CHECK(all.get(3, 0));
  CHECK(!all.get(1, 0));

  CHECK(consistency_mask(sim, 0.95, sky).get(0, 0) == false);
  CHECK(thrown_code([&] { consistency_mask(sim, 1.5, sky); }) ==
        Errc::InvalidArgument);
}

TEST_CASE("self-consistent samples are accepted with full agreement") {
  CameraRig rig = rig_320(32, 24);
  auto disp = disparity_of_depth(plane_depth(rig, 32, 24, 0.2, -0.1, 5.0), rig);
  auto mono = mono_from_disparity(disp, rig);
  Mask sky(32, 24, false);

  auto verdict = curate_sample(disp, mono, rig, sky);
  CHECK(verdict.agreement_fraction == 1.0);
  CHECK(verdict.accepted);
  CHECK(verdict.domain_pixels == 32 * 24);

  // Cosine comparison happens in normal space, so global depth scale drops out.
  for (float s : {0.1f, 10.0f}) {
    Image scaled = mono;
    for (auto& z : scaled.pixels) z *= s;
    auto v = curate_sample(disp, scaled, rig, sky);
    CHECK(v.agreement_fraction == 1.0);
    CHECK(v.accepted);
  }
}

TEST_CASE("sky pixels are zeroed in the final label and skipped in the fraction") {
  CameraRig rig = rig_320(32, 24);
  auto disp = disparity_of_depth(plane_depth(rig, 32, 24, 0.1, 0.05, 4.0), rig);
  auto mono = mono_from_disparity(disp, rig);
  Mask sky(32, 24, false);
  for (int v = 0; v < 12; ++v)
    for (int u = 0; u < 32; ++u) sky.set(u, v, true);

  auto verdict = curate_sample(disp, mono, rig, sky);
  CHECK(verdict.agreement_fraction == 1.0);
  CHECK(verdict.domain_pixels == 32 * 12);
  for (int v = 0; v < 12; ++v)
    for (int u = 0; u < 32; ++u) {
      CHECK(verdict.final_label.values.at(u, v) == 0.0f);
      CHECK(!verdict.final_label.valid.get(u, v));
    }
  for (int v = 12; v < 24; ++v)
    for (int u = 0; u < 32; ++u)
      CHECK(verdict.final_label.values.at(u, v) == disp.values.at(u, v));
}

TEST_CASE("warped monocular depth is rejected") {
  CameraRig rig = rig_320(32, 24);
  auto disp = disparity_of_depth(plane_depth(rig, 32, 24, 0.0, 0.0, 5.0), rig);
  auto mono = mono_from_disparity(disp, rig);
  // High-frequency multiplicative warp tilts mono normals almost everywhere.
  for (int v = 0; v < 24; ++v)
    for (int u = 0; u < 32; ++u)
      mono.at(u, v) *= float(1.0 + 0.3 * std::sin(u * 1.3) * std::sin(v * 1.1));

  auto verdict = curate_sample(disp, mono, rig, Mask(32, 24, false));
  CHECK(!verdict.accepted);
  CHECK(verdict.agreement_fraction < 0.5);
}

TEST_CASE("too few usable pixels is an error") {
  CameraRig rig = rig_320(4, 4);
  auto disp = disparity_of_depth(plane_depth(rig, 4, 4, 0.0, 0.0, 5.0), rig);
  auto mono = mono_from_disparity(disp, rig);
  Mask sky(4, 4, false);
  CHECK(thrown_code([&] { curate_sample(disp, mono, rig, sky); }) ==
        Errc::Degenerate);

  CurationThresholds loose;
  loose.min_valid_pixels = 1;
  CHECK(curate_sample(disp, mono, rig, sky, loose).accepted);
}

TEST_CASE("manifest subsampling starts at frame zero") {
  std::vector<std::string> frames;
  for (int i = 0; i < 100; ++i) frames.push_back("f" + std::to_string(i));
  auto out = subsample_manifest(frames, 10);
  REQUIRE(out.size() == 10);
  CHECK(out.front() == "f0");
  CHECK(out.back() == "f90");

  CHECK(subsample_manifest(frames, 1) == frames);
  CHECK(subsample_manifest({}, 3).empty());
  CHECK(thrown_code([&] { subsample_manifest(frames, 0); }) ==
        Errc::InvalidArgument);
}
