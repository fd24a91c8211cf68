#include <gtest/gtest.h>

#include "meshpad/canny.hpp"

using namespace meshpad;

namespace {

GrayImage step_image(int size, int split) {
  GrayImage img(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = split; x < size; ++x) img(x, y) = 1.0;
  return img;
}

}  // namespace

TEST(Canny, ConstantImageHasNoEdges) {
  EXPECT_EQ(count(canny(GrayImage(20, 20, 0.7))), 0u);
  EXPECT_EQ(count(canny(GrayImage(0, 0))), 0u);
}

TEST(Canny, RejectsBadThresholds) {
  EXPECT_THROW(canny(GrayImage(4, 4), {0.3, 0.2}), Error);
  EXPECT_THROW(canny(GrayImage(4, 4), {0.0, 0.2}), Error);
}

TEST(Canny, VerticalStepGivesOneColumn) {
  // Blurred step across columns 6..9 is 1/16, 5/16, 11/16, 15/16, so the
  // horizontal Sobel response peaks with a tie at columns 7 and 8 (both 2.5).
  // Suppression keeps the lower column of a tie.
  const auto edges = canny(step_image(16, 8));
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) EXPECT_EQ(edges(x, y), x == 7 ? 1 : 0) << x << "," << y;
}

TEST(Canny, HorizontalStepGivesOneRow) {
  GrayImage img(16, 16);
  for (int y = 5; y < 16; ++y)
    for (int x = 0; x < 16; ++x) img(x, y) = 3.0;
  const auto edges = canny(img);
  EXPECT_EQ(count(edges), 16u);
  for (int x = 0; x < 16; ++x) EXPECT_EQ(edges(x, 4), 1);
}

TEST(Canny, InvariantUnderIntensityOffset) {
  Rng rng(2);
  GrayImage img(40, 30);
  for (auto& v : img.data()) v = uniform_int(rng, 0, 9);
  GrayImage shifted = img;
  for (auto& v : shifted.data()) v += 100.0;
  const auto edges = canny(img);
  EXPECT_GT(count(edges), 0u);
  EXPECT_EQ(canny(shifted), edges);
}

TEST(Canny, EdgesAreThin) {
  // Filled disc: no 2x2 block of edge pixels anywhere on the outline.
  GrayImage img(64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) img(x, y) = (x - 32) * (x - 32) + (y - 30) * (y - 30) < 400 ? 1.0 : 0.0;
  const auto e = canny(img);
  EXPECT_GT(count(e), 80u);
  for (int y = 0; y + 1 < 64; ++y)
    for (int x = 0; x + 1 < 64; ++x) EXPECT_FALSE(e(x, y) && e(x + 1, y) && e(x, y + 1) && e(x + 1, y + 1));
}

TEST(Dilate, SquareStructuringElement) {
  Bitmap b(7, 7);
  b(3, 3) = 1;
  const auto d = dilate(b, 1);
  EXPECT_EQ(count(d), 9u);
  for (int y = 2; y <= 4; ++y)
    for (int x = 2; x <= 4; ++x) EXPECT_EQ(d(x, y), 1);
  Bitmap corner(4, 4);
  corner(0, 0) = 1;
  EXPECT_EQ(count(dilate(corner, 1)), 4u);
  EXPECT_EQ(dilate(corner, 0), corner);
}
