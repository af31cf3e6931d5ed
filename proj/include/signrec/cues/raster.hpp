#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "signrec/cues/landmarks.hpp"

namespace signrec::cues {

// Square black-and-white image, row-major, one byte per pixel holding 0 or 1.
class BinaryImage {
 public:
  BinaryImage() = default;
  explicit BinaryImage(std::size_t side);

  std::size_t side() const noexcept { return side_; }
  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

  std::uint8_t at(std::size_t x, std::size_t y) const { return bits_[y * side_ + x]; }
  void set(std::size_t x, std::size_t y) { bits_[y * side_ + x] = 1; }
  // Ignores coordinates outside the canvas.
  void set_clipped(long x, long y);
  std::size_t count() const;

  bool operator==(const BinaryImage&) const = default;

 private:
  std::size_t side_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Standard 21-landmark hand graph: four joints per finger plus the palm ring.
inline constexpr std::array<std::pair<int, int>, 21> kHandEdges{{
    {0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 5}, {5, 6}, {6, 7}, {7, 8}, {5, 9}, {9, 10}, {10, 11},
    {11, 12}, {9, 13}, {13, 14}, {14, 15}, {15, 16}, {13, 17}, {17, 18}, {18, 19}, {19, 20}, {0, 17},
}};

// 1-pixel Bresenham segment, endpoints included.
void draw_line(BinaryImage& img, long x0, long y0, long x1, long y1);
// Midpoint circle outline.
void draw_circle(BinaryImage& img, long cx, long cy, long r);

// Hand skeleton cropped to its square bounding box plus a 10% margin per side.
BinaryImage rasterize_hand(const HandPoints& points, std::size_t side);

// Whole frame in absolute coordinates: hand skeletons, shoulder line and a
// head circle centered between the eyes.
BinaryImage render_scene_frame(const LandmarkFrame& frame, std::size_t side);

}  // namespace signrec::cues
