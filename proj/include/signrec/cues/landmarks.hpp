#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace signrec::cues {

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

inline constexpr std::size_t kHandPoints = 21;
using HandPoints = std::array<Point, kHandPoints>;

enum class Hand { Left, Right };

const char* hand_name(Hand h);

struct Pose {
  Point left_eye, right_eye;
  Point mouth_left, mouth_right;
  Point left_shoulder, right_shoulder;
  bool operator==(const Pose&) const = default;
};

struct LandmarkFrame {
  int t = 0;
  std::optional<HandPoints> left;
  std::optional<HandPoints> right;
  Pose pose;

  const std::optional<HandPoints>& hand(Hand h) const { return h == Hand::Left ? left : right; }
  std::optional<HandPoints>& hand(Hand h) { return h == Hand::Left ? left : right; }
  bool operator==(const LandmarkFrame&) const = default;
};

// JSON Lines, one frame per line:
//   {"t": 0, "left": [[x,y]...21] | null, "right": ..., "pose": {...six keys...}}
// Blank lines are skipped. Frames come back sorted by "t".
std::vector<LandmarkFrame> parse_landmark_stream(std::istream& in);
std::vector<LandmarkFrame> read_landmark_file(const std::filesystem::path& path);

void write_landmark_stream(std::ostream& out, const std::vector<LandmarkFrame>& frames);
void write_landmark_file(const std::filesystem::path& path, const std::vector<LandmarkFrame>& frames);

}  // namespace signrec::cues
