#include <random>

#include "doctest.h"
#include "rsv/error.hpp"
#include "rsv/morphology.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace rsv;

TEST_CASE("se_from_resolution") {
  CHECK(se_from_resolution(100, 1.0) == StructuringElement::square(101));
  CHECK(se_from_resolution(100, 2.0) == StructuringElement::square(51));
  CHECK(se_from_resolution(0, 1.0) == StructuringElement::square(1));
  CHECK(se_from_resolution(100, 1.5) == StructuringElement::square(67));  // 66.7 -> 67
  CHECK_THROWS_AS(se_from_resolution(100, 0.0), ValidationError);
  CHECK_THROWS_AS(se_from_resolution(100, -1.0), ValidationError);
  CHECK_THROWS_AS(StructuringElement(2, 3), ValidationError);
}

TEST_CASE("dilate") {
  BinaryMask m(5, 5);
  m.set(2, 2);
  const BinaryMask d = dilate(m, StructuringElement::square(3));
  CHECK(d.count() == 9);
  for (int r = 1; r <= 3; ++r)
    for (int c = 1; c <= 3; ++c) CHECK(d.at(r, c));
  CHECK(dilate(BinaryMask(6, 4), StructuringElement(3, 5)).empty());
}

TEST_CASE("erode shrinks at the frame border") {
  const BinaryMask full(5, 5, true);
  const BinaryMask e = erode(full, StructuringElement::square(3));
  CHECK(e.count() == 9);
  CHECK_FALSE(e.at(0, 0));
  CHECK(e.at(1, 1));
  CHECK(erode(dilate(BinaryMask(5, 5), StructuringElement::square(3)), StructuringElement::square(3)).empty());
}

TEST_CASE("open and close basics") {
  const auto se = StructuringElement::square(3);
  BinaryMask iso(9, 9);
  iso.set(4, 4);
  CHECK(open(iso, se).empty());

  BinaryMask block(14, 14);
  synth::fill_rect(block, 2, 2, 11, 11);
  CHECK(open(block, se) == block);

  BinaryMask holed = block;
  holed.set(6, 6, false);
  CHECK(close(holed, se) == block);
  CHECK(close(BinaryMask(7, 7), se).empty());

  // Closing is extensive even for objects touching the frame.
  const BinaryMask full(5, 5, true);
  CHECK(close(full, se) == full);
}

TEST_CASE("all four operators match the brute-force definition") {
  std::mt19937_64 g(17);
  for (int k = 0; k < 120; ++k) {
    const int h = 1 + synth::below(g, 48), w = 1 + synth::below(g, 48);
    const int sh = 1 + 2 * synth::below(g, 5), sw = 1 + 2 * synth::below(g, 5);
    const BinaryMask m = synth::random_mask(g, h, w, 0.2 + 0.6 * synth::unit(g));
    const StructuringElement se(sh, sw);
    REQUIRE(dilate(m, se) == oracle::dilate(m, sh, sw));
    REQUIRE(erode(m, se) == oracle::erode(m, sh, sw));
    REQUIRE(open(m, se) == oracle::open(m, sh, sw));
    REQUIRE(close(m, se) == oracle::close(m, sh, sw));
  }
}

TEST_CASE("erosion/dilation duality with false padding") {
  std::mt19937_64 g(23);
  for (int k = 0; k < 40; ++k) {
    const int h = 3 + synth::below(g, 30), w = 3 + synth::below(g, 30);
    const int s = 1 + 2 * synth::below(g, 4), half = s / 2;
    const BinaryMask m = synth::random_mask(g, h, w, 0.7);
    // Pad with false so complementing makes the outside true, then crop.
    BinaryMask padded(h + 2 * half, w + 2 * half);
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) padded.set(r + half, c + half, m.at(r, c));
    const BinaryMask dual = mask_not(dilate(mask_not(padded), StructuringElement::square(s)));
    BinaryMask cropped(h, w);
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) cropped.set(r, c, dual.at(r + half, c + half));
    REQUIRE(erode(m, StructuringElement::square(s)) == cropped);
  }
}

TEST_CASE("ordering, idempotence and monotonicity") {
  std::mt19937_64 g(29);
  for (int k = 0; k < 60; ++k) {
    const int h = 4 + synth::below(g, 40), w = 4 + synth::below(g, 40);
    const StructuringElement se(1 + 2 * synth::below(g, 4), 1 + 2 * synth::below(g, 4));
    const BinaryMask a = synth::random_mask(g, h, w, 0.5);
    const BinaryMask b = mask_or(a, synth::random_mask(g, h, w, 0.2));
    REQUIRE(is_subset(open(a, se), a));
    REQUIRE(is_subset(a, close(a, se)));
    REQUIRE(open(open(a, se), se) == open(a, se));
    REQUIRE(close(close(a, se), se) == close(a, se));
    REQUIRE(is_subset(dilate(a, se), dilate(b, se)));
    REQUIRE(is_subset(erode(a, se), erode(b, se)));
    REQUIRE(is_subset(open(a, se), open(b, se)));
    REQUIRE(is_subset(close(a, se), close(b, se)));
  }
}

TEST_CASE("geo metadata propagates") {
  const GeoMeta meta{2.0, 3, 4};
  const BinaryMask m(4, 4, true, meta);
  CHECK(dilate(m, {}).meta() == meta);
  CHECK(close(m, StructuringElement::square(3)).meta() == meta);
}
