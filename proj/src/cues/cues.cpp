#include "signrec/cues/cues.hpp"

#include <algorithm>
#include <cmath>

#include "signrec/cues/raster.hpp"
#include "signrec/errors.hpp"

namespace signrec::cues {

namespace {

constexpr double kMinShoulderWidth = 1e-3;

Point midpoint(const Point& a, const Point& b) { return {(a.x + b.x) / 2.0, (a.y + b.y) / 2.0}; }

double squared_distance(const Point& a, const Point& b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

void check_nonempty(const std::vector<LandmarkFrame>& frames) {
  if (frames.empty()) throw InputError("cue extraction needs at least one frame");
}

}  // namespace

Point palm_center(const HandPoints& p) {
  const double x = p[0].x + p[5].x + p[9].x + p[13].x + p[17].x;
  const double y = p[0].y + p[5].y + p[9].y + p[13].y + p[17].y;
  return {x / 5.0, y / 5.0};
}

nn::Tensor<double> palm_displacement_seq(const std::vector<LandmarkFrame>& frames, Hand hand) {
  check_nonempty(frames);
  nn::Tensor<double> out({frames.size(), 2});
  for (std::size_t t = 1; t < frames.size(); ++t) {
    const auto& cur = frames[t].hand(hand);
    const auto& prev = frames[t - 1].hand(hand);
    if (!cur || !prev) continue;
    const Pose& pose = frames[t].pose;
    const double width = std::max(std::sqrt(squared_distance(pose.left_shoulder, pose.right_shoulder)),
                                  kMinShoulderWidth);
    const Point a = palm_center(*prev), b = palm_center(*cur);
    out.at(t, 0) = (b.x - a.x) / width;
    out.at(t, 1) = (b.y - a.y) / width;
  }
  return out;
}

nn::Tensor<double> location_onehot_seq(const std::vector<LandmarkFrame>& frames, Hand hand) {
  check_nonempty(frames);
  nn::Tensor<double> out({frames.size(), 3});
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const auto& pts = frames[t].hand(hand);
    if (!pts) continue;
    const Pose& pose = frames[t].pose;
    const Point refs[3] = {midpoint(pose.left_eye, pose.right_eye),
                           midpoint(pose.mouth_left, pose.mouth_right),
                           midpoint(pose.left_shoulder, pose.right_shoulder)};
    const Point palm = palm_center(*pts);
    std::size_t best = 0;
    double best_d = squared_distance(palm, refs[0]);
    for (std::size_t r = 1; r < 3; ++r) {
      const double d = squared_distance(palm, refs[r]);
      if (d < best_d) {
        best = r;
        best_d = d;
      }
    }
    out.at(t, best) = 1.0;
  }
  return out;
}

CueSequences build_cue_sequences(const std::vector<LandmarkFrame>& frames, std::size_t side) {
  check_nonempty(frames);
  const std::size_t T = frames.size();
  CueSequences cues;
  for (Hand h : {Hand::Left, Hand::Right}) {
    HandCues& hc = h == Hand::Left ? cues.left : cues.right;
    hc.images = nn::Tensor<float>({T, 1, side, side});
    for (std::size_t t = 0; t < T; ++t) {
      const auto& pts = frames[t].hand(h);
      if (!pts) continue;
      const auto img = rasterize_hand(*pts, side);
      std::transform(img.bits().begin(), img.bits().end(), hc.images.ptr() + t * side * side,
                     [](std::uint8_t b) { return static_cast<float>(b); });
    }
    hc.displacement = palm_displacement_seq(frames, h).cast<float>();
    hc.location = location_onehot_seq(frames, h).cast<float>();
  }
  return cues;
}

nn::Tensor<float> render_scene_sequence(const std::vector<LandmarkFrame>& frames, std::size_t side) {
  check_nonempty(frames);
  nn::Tensor<float> out({frames.size(), 1, side, side});
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const auto img = render_scene_frame(frames[t], side);
    std::transform(img.bits().begin(), img.bits().end(), out.ptr() + t * side * side,
                   [](std::uint8_t b) { return static_cast<float>(b); });
  }
  return out;
}

}  // namespace signrec::cues
