#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hcdn/augment/augment.hpp"
#include "hcdn/image_ops.hpp"
#include "testutil.hpp"

using namespace hcdn;

namespace {

HousekeepingPair sample_pair(int h, int w, std::uint64_t seed) {
  HousekeepingPair pair;
  pair.pair_id = "aug";
  pair.poor = testutil::textured_image(h, w, seed);
  pair.good = testutil::textured_image(h, w, seed + 1);
  pair.mask = testutil::rect_mask(h, w, h / 4, w / 4, h / 3, w / 3);
  return pair;
}

AugmentPolicy identity_policy() {
  AugmentPolicy p;
  p.rotate_prob = 0.0;
  p.hflip_prob = 0.0;
  p.vflip_prob = 0.0;
  p.photometric_prob = 0.0;
  p.crop_enabled = false;
  return p;
}

bool pairs_equal(const HousekeepingPair& a, const HousekeepingPair& b) {
  return a.poor == b.poor && a.good == b.good && a.mask == b.mask;
}

}  // namespace

TEST_CASE("identity policy returns the input unchanged", "[augment]") {
  const HousekeepingPair pair = sample_pair(64, 64, 31);
  const HousekeepingPair out = augment_pair(pair, identity_policy(), 5);
  CHECK(pairs_equal(out, pair));
}

TEST_CASE("enabled policy emits exactly crop_size output", "[augment]") {
  const HousekeepingPair pair = sample_pair(320, 320, 32);
  AugmentPolicy policy;  // all defaults on, crop 256
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const HousekeepingPair out = augment_pair(pair, policy, seed);
    CHECK(out.poor.height == 256);
    CHECK(out.poor.width == 256);
    CHECK(out.good.same_shape(out.poor));
    CHECK(out.mask.height == 256);
    CHECK(out.mask.width == 256);
    CHECK(out.mask.is_binary());
  }
}

TEST_CASE("identical inputs stay identical under shared geometry", "[augment]") {
  HousekeepingPair pair = sample_pair(300, 300, 33);
  pair.good = pair.poor;
  AugmentPolicy policy;
  policy.photometric_prob = 0.0;
  for (std::uint64_t seed : {7ULL, 8ULL, 9ULL, 10ULL}) {
    const HousekeepingPair out = augment_pair(pair, policy, seed);
    CHECK(out.good == out.poor);
  }
}

TEST_CASE("flips and crops move the mask in lockstep with the images", "[augment]") {
  // encode the mask into the poor image so geometric consistency is checkable
  const int h = 300, w = 300;
  HousekeepingPair pair;
  pair.pair_id = "grid";
  pair.mask = BinaryMask(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) pair.mask.at(y, x) = ((y / 20) + (x / 20)) % 2;
  pair.poor = ImageBuffer(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) pair.poor.at(y, x, c) = pair.mask.at(y, x) ? 255 : 0;
  pair.good = pair.poor;

  AugmentPolicy policy;
  policy.rotate_prob = 0.0;  // flips + crop are exact; rotation tested separately
  policy.photometric_prob = 0.0;
  for (std::uint64_t seed : {11ULL, 12ULL, 13ULL, 14ULL}) {
    const HousekeepingPair out = augment_pair(pair, policy, seed);
    for (int y = 0; y < out.mask.height; ++y)
      for (int x = 0; x < out.mask.width; ++x)
        REQUIRE((out.poor.at(y, x, 0) > 127) == (out.mask.at(y, x) == 1));
  }
}

TEST_CASE("rotation keeps mask and image consistent to within resampling", "[augment]") {
  const int h = 300, w = 300;
  HousekeepingPair pair;
  pair.pair_id = "rot";
  pair.mask = testutil::rect_mask(h, w, 60, 60, 120, 150);
  pair.poor = ImageBuffer(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) pair.poor.at(y, x, c) = pair.mask.at(y, x) ? 255 : 0;
  pair.good = pair.poor;

  AugmentPolicy policy;
  policy.rotate_prob = 1.0;
  policy.hflip_prob = 0.0;
  policy.vflip_prob = 0.0;
  policy.crop_enabled = false;
  policy.photometric_prob = 0.0;
  const HousekeepingPair out = augment_pair(pair, policy, 15);
  CHECK(out.mask.is_binary());

  int agree = 0, total = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      ++total;
      if ((out.poor.at(y, x, 0) > 127) == (out.mask.at(y, x) == 1)) ++agree;
    }
  CHECK(static_cast<double>(agree) / total >= 0.98);
}

TEST_CASE("augmentation is deterministic in the seed", "[augment]") {
  const HousekeepingPair pair = sample_pair(300, 300, 34);
  AugmentPolicy policy;
  const HousekeepingPair a = augment_pair(pair, policy, 77);
  const HousekeepingPair b = augment_pair(pair, policy, 77);
  CHECK(pairs_equal(a, b));
  const HousekeepingPair c = augment_pair(pair, policy, 78);
  CHECK(!pairs_equal(a, c));
}

TEST_CASE("dominance cap holds when a compliant window exists", "[augment]") {
  const int h = 300, w = 300;
  HousekeepingPair pair = sample_pair(h, w, 35);
  // left 140 columns all change: windows at x0 <= ~32 are near-fully class 1,
  // windows toward the right are mixed
  pair.mask = testutil::rect_mask(h, w, 0, 0, h, 140);

  AugmentPolicy policy;
  policy.rotate_prob = 0.0;
  policy.hflip_prob = 0.0;
  policy.vflip_prob = 0.0;
  policy.photometric_prob = 0.0;
  policy.crop_size = 256;
  int compliant = 0, trials = 0;
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const HousekeepingPair out = augment_pair(pair, policy, seed);
    const double share1 = static_cast<double>(out.mask.count_ones()) / (256.0 * 256.0);
    ++trials;
    if (std::max(share1, 1.0 - share1) <= policy.dominance_cap) ++compliant;
  }
  // every 256-window of a 300-wide image keeps class shares within the cap
  // here, so the first draw must already comply
  CHECK(compliant == trials);

  // when no compliant window exists the retries exhaust and the last crop
  // is kept rather than failing
  pair.mask = testutil::rect_mask(h, w, 0, 0, h, 10);
  const HousekeepingPair out = augment_pair(pair, policy, 99);
  CHECK(out.mask.height == 256);
  const double share1 = static_cast<double>(out.mask.count_ones()) / (256.0 * 256.0);
  CHECK(1.0 - share1 > policy.dominance_cap);
}

TEST_CASE("crop larger than the image raises CropTooLarge", "[augment]") {
  const HousekeepingPair pair = sample_pair(100, 100, 36);
  AugmentPolicy policy;
  CHECK_THROWS_MATCHES(augment_pair(pair, policy, 1), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.code() == ErrorCode::CropTooLarge; }));
}

TEST_CASE("photometric jitter leaves the mask alone and stays in range", "[augment]") {
  const HousekeepingPair pair = sample_pair(300, 300, 37);
  AugmentPolicy policy;
  policy.rotate_prob = 0.0;
  policy.hflip_prob = 0.0;
  policy.vflip_prob = 0.0;
  policy.crop_enabled = false;
  policy.photometric_prob = 1.0;
  const HousekeepingPair out = augment_pair(pair, policy, 38);
  CHECK(out.mask == pair.mask);
  CHECK(out.poor != pair.poor);  // jitter altered intensities
  CHECK(out.good != pair.good);
}

TEST_CASE("normalization follows the channel constants", "[augment]") {
  const NormalizationConstants c;

  SECTION("pixel at the channel mean maps to zero") {
    ImageBuffer img(2, 2);
    for (int y = 0; y < 2; ++y)
      for (int x = 0; x < 2; ++x) {
        img.at(y, x, 0) = 123;  // nearest 8-bit value to 122.8
        img.at(y, x, 1) = 117;
        img.at(y, x, 2) = 104;
      }
    const FloatImage f = normalize_image(img, c);
    CHECK(std::abs(f.at(0, 0, 0) - (123 - 122.8) / 68.5) < 1e-6);
    CHECK(std::abs(f.at(1, 0, 0) - (117 - 116.7) / 66.6) < 1e-6);
    CHECK(std::abs(f.at(2, 1, 1) - (104 - 104.1) / 70.3) < 1e-6);
  }
  SECTION("saturated red channel lands near 1.93") {
    ImageBuffer img(1, 1);
    img.at(0, 0, 0) = 255;
    const FloatImage f = normalize_image(img, c);
    CHECK(std::abs(f.at(0, 0, 0) - 1.930) < 1e-3);
  }
  SECTION("exact-mean constants give an all-zero tensor") {
    NormalizationConstants whole;
    whole.mean = {120.0, 110.0, 100.0};
    ImageBuffer img(3, 3);
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 3; ++x) {
        img.at(y, x, 0) = 120;
        img.at(y, x, 1) = 110;
        img.at(y, x, 2) = 100;
      }
    const FloatImage f = normalize_image(img, whole);
    for (float v : f.data) CHECK(v == 0.0f);
  }
}

TEST_CASE("resize helpers preserve shape contracts", "[augment]") {
  const ImageBuffer img = testutil::textured_image(64, 48, 39);
  CHECK(resize_image(img, 64, 48) == img);
  const ImageBuffer half = resize_image(img, 32, 24);
  CHECK(half.height == 32);
  CHECK(half.width == 24);

  const BinaryMask mask = testutil::rect_mask(64, 48, 10, 10, 20, 20);
  const BinaryMask small = resize_mask(mask, 32, 24);
  CHECK(small.height == 32);
  CHECK(small.is_binary());
  CHECK(resize_mask(mask, 64, 48) == mask);
}
