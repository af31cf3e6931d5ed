#include "signrec/synth/library.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "signrec/errors.hpp"
#include "signrec/rng.hpp"

namespace signrec::synth {

using cues::HandPoints;
using cues::kHandPoints;
using cues::Point;
using cues::Region;

namespace {

constexpr double kHandSize = 0.12;
constexpr double kPathAmplitude = 0.04;
constexpr double kRightHandX = 0.62;
constexpr Point kRestPalm{0.3, 0.85};
constexpr int kMaxAttempts = 20000;

constexpr const char* kBaseNames[] = {
    "RAIN", "SUN",   "WIND",  "CLOUD", "SNOW",  "FOG",    "STORM",  "FROST",
    "WARM", "COLD",  "NORTH", "SOUTH", "EAST",  "WEST",   "MORNING", "EVENING",
    "TODAY", "TOMORROW", "WEEKEND", "SHOWER", "THUNDER", "CLEAR", "MILD", "ICE",
};

double region_y(Region r) {
  switch (r) {
    case Region::Eyes: return 0.29;
    case Region::Mouth: return 0.41;
    case Region::Chest: return 0.62;
  }
  return 0.62;
}

Point polar(double length, double angle) { return {length * std::cos(angle), length * std::sin(angle)}; }

Point add(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }

// Hand pointing up (image y grows downward), wrist at the origin, one unit
// per hand length. curls[0] is the thumb.
HandPoints hand_shape(const std::array<double, 5>& curls, double rotation) {
  constexpr double up = -std::numbers::pi / 2.0;
  struct Finger {
    Point base;
    double angle;
    double seg[3];
  };
  const Finger fingers[5] = {
      {{-0.20, -0.12}, up - 0.9, {0.17, 0.14, 0.12}},
      {{-0.18, -0.50}, up - 0.12, {0.18, 0.13, 0.11}},
      {{-0.02, -0.55}, up, {0.19, 0.14, 0.12}},
      {{0.13, -0.50}, up + 0.12, {0.17, 0.13, 0.11}},
      {{0.26, -0.42}, up + 0.25, {0.14, 0.10, 0.09}},
  };
  HandPoints h{};
  h[0] = {0.0, 0.0};
  for (int f = 0; f < 5; ++f) {
    const Finger& fg = fingers[f];
    const std::size_t first = f == 0 ? 1 : static_cast<std::size_t>(4 * f + 1);
    Point p = fg.base;
    h[first] = p;
    const double bend = curls[f] * 1.25;
    for (int j = 0; j < 3; ++j) {
      if (f == 0) {
        // Thumb folds sideways across the palm.
        p = add(p, polar(fg.seg[j], fg.angle + bend * (j + 1)));
      } else {
        // Other fingers fold toward the camera; the projection shortens and reverses.
        p = add(p, polar(fg.seg[j] * std::cos(bend * (j + 1)), fg.angle));
      }
      h[first + 1 + static_cast<std::size_t>(j)] = p;
    }
  }
  const double c = std::cos(rotation), s = std::sin(rotation);
  for (auto& p : h) p = {(c * p.x - s * p.y) * kHandSize, (s * p.x + c * p.y) * kHandSize};
  const Point palm = cues::palm_center(h);
  for (auto& p : h) p = {p.x - palm.x, p.y - palm.y};
  return h;
}

HandPoints place(const HandPoints& shape, Point palm, bool mirror) {
  HandPoints out;
  for (std::size_t i = 0; i < kHandPoints; ++i) {
    out[i] = mirror ? Point{1.0 - (palm.x + shape[i].x), palm.y + shape[i].y}
                    : Point{palm.x + shape[i].x, palm.y + shape[i].y};
  }
  return out;
}

const HandPoints& rest_shape() {
  static const HandPoints shape = hand_shape({1.0, 1.0, 1.0, 1.0, 1.0}, 0.0);
  return shape;
}

// Palm position at phase s in [0, 1]: piecewise linear through the anchors.
Point path_at(const std::array<Point, 3>& path, double s) {
  const Point& a = s <= 0.5 ? path[0] : path[1];
  const Point& b = s <= 0.5 ? path[1] : path[2];
  const double u = s <= 0.5 ? s * 2.0 : (s - 0.5) * 2.0;
  return {a.x + (b.x - a.x) * u, a.y + (b.y - a.y) * u};
}

cues::LandmarkFrame frame_at(const GlossTemplate& g, double s, int t) {
  cues::LandmarkFrame f;
  f.t = t;
  f.pose = neutral_pose();
  const Point palm = path_at(g.path, s);
  f.right = place(g.shape, palm, false);
  f.left = g.two_handed ? place(g.shape, palm, true) : place(rest_shape(), kRestPalm, false);
  return f;
}

GlossTemplate random_template(Rng& rng, int id) {
  GlossTemplate g;
  g.id = id;
  std::array<double, 5> curls{};
  for (auto& c : curls) c = 0.5 * static_cast<double>(rng.below(3));
  const double rotation = 0.35 * (static_cast<double>(rng.below(3)) - 1.0);
  g.shape = hand_shape(curls, rotation);
  g.region = static_cast<Region>(id % 3);
  const Point center{kRightHandX, region_y(g.region)};
  for (auto& a : g.path) {
    const double r = kPathAmplitude * std::sqrt(rng.uniform());
    const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    a = add(center, polar(r, theta));
  }
  g.duration = rng.between(6, 10);
  g.two_handed = rng.uniform() < 0.3;
  return g;
}

std::string gloss_name(std::size_t i) {
  constexpr std::size_t n = std::size(kBaseNames);
  if (i < n) return kBaseNames[i];
  return std::string(kBaseNames[i % n]) + std::to_string(i / n + 1);
}

}  // namespace

cues::Pose neutral_pose() {
  cues::Pose p;
  p.left_eye = {0.45, 0.3};
  p.right_eye = {0.55, 0.3};
  p.mouth_left = {0.47, 0.4};
  p.mouth_right = {0.53, 0.4};
  p.left_shoulder = {0.35, 0.6};
  p.right_shoulder = {0.65, 0.6};
  return p;
}

std::vector<cues::LandmarkFrame> template_trajectory(const GlossTemplate& g) {
  if (g.duration < 4) throw ConfigError("template duration must be at least 4 frames");
  std::vector<cues::LandmarkFrame> frames;
  frames.reserve(static_cast<std::size_t>(g.duration));
  for (int t = 0; t < g.duration; ++t) {
    frames.push_back(frame_at(g, static_cast<double>(t) / (g.duration - 1), t));
  }
  return frames;
}

double template_distance(const GlossTemplate& a, const GlossTemplate& b) {
  constexpr int kSamples = 8;
  double total = 0.0;
  std::size_t n = 0;
  for (int i = 0; i < kSamples; ++i) {
    const double s = static_cast<double>(i) / (kSamples - 1);
    const auto fa = frame_at(a, s, i), fb = frame_at(b, s, i);
    for (cues::Hand h : {cues::Hand::Left, cues::Hand::Right}) {
      for (std::size_t k = 0; k < kHandPoints; ++k) {
        const Point& p = (*fa.hand(h))[k];
        const Point& q = (*fb.hand(h))[k];
        total += (p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y);
        ++n;
      }
    }
  }
  return std::sqrt(total / static_cast<double>(n));
}

std::vector<GlossTemplate> build_gloss_library(std::size_t vocab_size, std::uint64_t seed) {
  if (vocab_size == 0) throw ConfigError("vocabulary size must be at least 1");
  Rng rng(seed);
  std::vector<GlossTemplate> lib;
  lib.reserve(vocab_size);
  for (std::size_t i = 0; i < vocab_size; ++i) {
    int attempts = 0;
    while (true) {
      if (++attempts > kMaxAttempts) {
        throw ConfigError("could not place " + std::to_string(vocab_size) +
                          " mutually distinct gloss templates");
      }
      GlossTemplate g = random_template(rng, static_cast<int>(i));
      const bool distinct = std::all_of(lib.begin(), lib.end(), [&](const GlossTemplate& other) {
        return template_distance(g, other) >= kMinTemplateDistance;
      });
      if (!distinct) continue;
      g.name = gloss_name(i);
      lib.push_back(std::move(g));
      break;
    }
  }
  return lib;
}

ctc::GlossVocabulary library_vocabulary(const std::vector<GlossTemplate>& library) {
  std::vector<std::string> names;
  names.reserve(library.size());
  for (const auto& g : library) names.push_back(g.name);
  return ctc::GlossVocabulary(std::move(names));
}

}  // namespace signrec::synth
