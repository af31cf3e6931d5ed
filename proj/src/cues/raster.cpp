#include "signrec/cues/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "signrec/errors.hpp"

namespace signrec::cues {

BinaryImage::BinaryImage(std::size_t side) : side_(side), bits_(side * side, 0) {
  if (side == 0) throw ConfigError("image side must be positive");
}

void BinaryImage::set_clipped(long x, long y) {
  const long s = static_cast<long>(side_);
  if (x >= 0 && y >= 0 && x < s && y < s) set(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
}

std::size_t BinaryImage::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

void draw_line(BinaryImage& img, long x0, long y0, long x1, long y1) {
  const long dx = std::labs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const long dy = -std::labs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  long err = dx + dy;
  while (true) {
    img.set_clipped(x0, y0);
    if (x0 == x1 && y0 == y1) break;
    const long e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void draw_circle(BinaryImage& img, long cx, long cy, long r) {
  if (r <= 0) {
    img.set_clipped(cx, cy);
    return;
  }
  long x = r, y = 0, err = 1 - r;
  while (x >= y) {
    const long pts[8][2] = {{x, y}, {y, x}, {-y, x}, {-x, y}, {-x, -y}, {-y, -x}, {y, -x}, {x, -y}};
    for (const auto& p : pts) img.set_clipped(cx + p[0], cy + p[1]);
    ++y;
    if (err < 0) {
      err += 2 * y + 1;
    } else {
      --x;
      err += 2 * (y - x) + 1;
    }
  }
}

namespace {

// Maps a normalized coordinate u in [0, 1] to a pixel index.
long to_pixel(double u, std::size_t side) {
  const double p = std::floor(u * static_cast<double>(side));
  return static_cast<long>(std::clamp(p, 0.0, static_cast<double>(side - 1)));
}

void check_finite(const HandPoints& points) {
  for (const auto& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw InputError("non-finite hand landmark");
  }
}

void draw_skeleton(BinaryImage& img, const std::array<long, kHandPoints>& px,
                   const std::array<long, kHandPoints>& py) {
  for (const auto& [a, b] : kHandEdges) draw_line(img, px[a], py[a], px[b], py[b]);
}

}  // namespace

BinaryImage rasterize_hand(const HandPoints& points, std::size_t side) {
  check_finite(points);
  double x0 = points[0].x, x1 = x0, y0 = points[0].y, y1 = y0;
  for (const auto& p : points) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  const double cx = (x0 + x1) / 2.0, cy = (y0 + y1) / 2.0;
  const double extent = std::max(x1 - x0, y1 - y0);
  const double box = extent > 0.0 ? extent * 1.2 : 1.0;

  std::array<long, kHandPoints> px{}, py{};
  for (std::size_t i = 0; i < kHandPoints; ++i) {
    px[i] = to_pixel((points[i].x - cx) / box + 0.5, side);
    py[i] = to_pixel((points[i].y - cy) / box + 0.5, side);
  }
  BinaryImage img(side);
  draw_skeleton(img, px, py);
  return img;
}

BinaryImage render_scene_frame(const LandmarkFrame& frame, std::size_t side) {
  BinaryImage img(side);
  for (Hand h : {Hand::Left, Hand::Right}) {
    const auto& pts = frame.hand(h);
    if (!pts) continue;
    check_finite(*pts);
    std::array<long, kHandPoints> px{}, py{};
    for (std::size_t i = 0; i < kHandPoints; ++i) {
      px[i] = to_pixel((*pts)[i].x, side);
      py[i] = to_pixel((*pts)[i].y, side);
    }
    draw_skeleton(img, px, py);
  }
  const Pose& p = frame.pose;
  draw_line(img, to_pixel(p.left_shoulder.x, side), to_pixel(p.left_shoulder.y, side),
            to_pixel(p.right_shoulder.x, side), to_pixel(p.right_shoulder.y, side));

  const double mx = (p.left_eye.x + p.right_eye.x) / 2.0;
  const double my = (p.left_eye.y + p.right_eye.y) / 2.0;
  const double ex = p.right_eye.x - p.left_eye.x, ey = p.right_eye.y - p.left_eye.y;
  const double radius = std::sqrt(ex * ex + ey * ey) / 2.0;
  draw_circle(img, to_pixel(mx, side), to_pixel(my, side),
              static_cast<long>(std::floor(radius * static_cast<double>(side) + 0.5)));
  return img;
}

}  // namespace signrec::cues
