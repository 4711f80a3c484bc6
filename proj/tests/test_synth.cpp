#include <doctest.h>

#include <cmath>

#include "n2d/core/error.hpp"
#include "n2d/synth/synth.hpp"

using namespace n2d;
using namespace n2d::synth;

TEST_CASE("generate_scene") {
  const Image a = generate_scene(64, 64, 1);
  CHECK(a == generate_scene(64, 64, 1));
  for (float v : a.data()) {
    CHECK(v >= 0.3f);
    CHECK(v <= 0.9f);
  }
  const Image b = generate_scene(64, 64, 2);
  std::size_t differ = 0;
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      bool d = false;
      for (int c = 0; c < 3; ++c) d = d || a.at(y, x, c) != b.at(y, x, c);
      differ += d;
    }
  }
  CHECK(differ > 64 * 64 / 2);
}

TEST_CASE("night sequence without objects has empty masks and is dark") {
  const Image ref = generate_scene(64, 64, 3);
  const auto seq = generate_night_sequence(ref, 10, {}, 5);
  REQUIRE(seq.gt.size() == 10);
  for (const auto& m : seq.gt) CHECK(m.count() == 0);
  const double ref_lum = to_luminance(ref).mean();
  double night = 0.0;
  for (const auto& f : seq.video.frames) night += to_luminance(f).mean();
  CHECK(night / 10 < 0.4 * ref_lum);
}

TEST_CASE("frames render in isolation") {
  const Image ref = generate_scene(32, 32, 4);
  const std::vector<Blob> blobs{default_blob(32, 0)};
  const auto seq = generate_night_sequence(ref, 6, blobs, 11);
  Mask gt;
  CHECK(render_night_frame(ref, 4, blobs, 11, {}, &gt) == seq.video.frames[4]);
  CHECK(gt.data == seq.gt[4].data);
}

TEST_CASE("blob centroid follows the specified path") {
  const int size = 64;
  const Image ref = generate_scene(size, size, 6);
  const Blob blob = default_blob(size, 0);
  const auto seq = generate_night_sequence(ref, 60, {blob}, 7);
  for (int t = 0; t < 60; ++t) {
    const Mask& m = seq.gt[static_cast<std::size_t>(t)];
    REQUIRE(m.count() > 0);
    double sx = 0, sy = 0;
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        if (m.at(y, x)) {
          sx += x;
          sy += y;
        }
      }
    }
    const auto [cx, cy] = blob.center_at(t, size, size);
    CHECK(std::abs(sx / m.count() - cx) <= 1.0);
    CHECK(std::abs(sy / m.count() - cy) <= 1.0);
  }
}

TEST_CASE("default dataset") {
  const Dataset d = make_dataset({});
  CHECK(d.num_frames() == 120);
  CHECK(d.train_split() == 60);
  for (int t = 0; t < 60; ++t) CHECK(d.gt[static_cast<std::size_t>(t)]->count() == 0);
  for (int t = 60; t < 120; ++t) CHECK(d.gt[static_cast<std::size_t>(t)]->count() > 0);
}

TEST_CASE("oversized blob is rejected") {
  Blob huge = default_blob(32, 0);
  huge.radius_x = 40;
  CHECK_THROWS_AS(generate_night_sequence(generate_scene(32, 32, 1), 2, {huge}, 1), ArgumentError);
}
