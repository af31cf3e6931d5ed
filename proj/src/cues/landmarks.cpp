#include "signrec/cues/landmarks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <json.hpp>
#include <ostream>

#include "signrec/errors.hpp"

namespace signrec::cues {

using nlohmann::json;

const char* hand_name(Hand h) { return h == Hand::Left ? "left" : "right"; }

namespace {

constexpr const char* kPoseKeys[] = {"left_eye",      "right_eye",     "mouth_left",
                                     "mouth_right",   "left_shoulder", "right_shoulder"};

Point* pose_slot(Pose& p, int i) {
  Point* slots[] = {&p.left_eye,      &p.right_eye,     &p.mouth_left,
                    &p.mouth_right,   &p.left_shoulder, &p.right_shoulder};
  return slots[i];
}

const Point* pose_slot(const Pose& p, int i) { return pose_slot(const_cast<Pose&>(p), i); }

Point parse_point(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw SchemaError(where + ": expected [x, y]");
  }
  Point p{j[0].get<double>(), j[1].get<double>()};
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw SchemaError(where + ": non-finite coordinate");
  return p;
}

std::optional<HandPoints> parse_hand(const json& obj, Hand h, std::size_t line) {
  const char* name = hand_name(h);
  if (!obj.contains(name) || obj[name].is_null()) return std::nullopt;
  const json& arr = obj[name];
  if (!arr.is_array() || arr.size() != kHandPoints) {
    throw SchemaError("line " + std::to_string(line) + ": " + name + " hand must have 21 points, got " +
                      (arr.is_array() ? std::to_string(arr.size()) : std::string("non-array")));
  }
  HandPoints pts;
  for (std::size_t i = 0; i < kHandPoints; ++i) {
    pts[i] = parse_point(arr[i], "line " + std::to_string(line) + ": " + name + "[" + std::to_string(i) + "]");
  }
  return pts;
}

json point_json(const Point& p) { return json::array({p.x, p.y}); }

json hand_json(const std::optional<HandPoints>& h) {
  if (!h) return nullptr;
  json arr = json::array();
  for (const auto& p : *h) arr.push_back(point_json(p));
  return arr;
}

}  // namespace

std::vector<LandmarkFrame> parse_landmark_stream(std::istream& in) {
  std::vector<LandmarkFrame> frames;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(line, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(line, "expected a JSON object");
    const std::string at = "line " + std::to_string(line);
    if (!obj.contains("t") || !obj["t"].is_number_integer()) throw SchemaError(at + ": missing integer \"t\"");
    if (!obj.contains("pose") || !obj["pose"].is_object()) throw SchemaError(at + ": missing \"pose\" object");

    LandmarkFrame f;
    f.t = obj["t"].get<int>();
    f.left = parse_hand(obj, Hand::Left, line);
    f.right = parse_hand(obj, Hand::Right, line);
    const json& pose = obj["pose"];
    for (int i = 0; i < 6; ++i) {
      if (!pose.contains(kPoseKeys[i])) {
        throw SchemaError(at + ": pose is missing \"" + std::string(kPoseKeys[i]) + "\"");
      }
      *pose_slot(f.pose, i) = parse_point(pose[kPoseKeys[i]], at + ": pose." + kPoseKeys[i]);
    }
    frames.push_back(std::move(f));
  }
  std::stable_sort(frames.begin(), frames.end(),
                   [](const LandmarkFrame& a, const LandmarkFrame& b) { return a.t < b.t; });
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i].t == frames[i - 1].t) {
      throw SchemaError("duplicate frame index " + std::to_string(frames[i].t));
    }
  }
  return frames;
}

std::vector<LandmarkFrame> read_landmark_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open landmark file " + path.string());
  try {
    return parse_landmark_stream(in);
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void write_landmark_stream(std::ostream& out, const std::vector<LandmarkFrame>& frames) {
  for (const auto& f : frames) {
    json pose = json::object();
    for (int i = 0; i < 6; ++i) pose[kPoseKeys[i]] = point_json(*pose_slot(f.pose, i));
    json obj = json::object();
    obj["t"] = f.t;
    obj["left"] = hand_json(f.left);
    obj["right"] = hand_json(f.right);
    obj["pose"] = std::move(pose);
    out << obj.dump() << '\n';
  }
}

void write_landmark_file(const std::filesystem::path& path, const std::vector<LandmarkFrame>& frames) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write landmark file " + path.string());
  write_landmark_stream(out, frames);
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace signrec::cues
