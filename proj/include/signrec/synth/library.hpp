#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "signrec/ctc/vocabulary.hpp"
#include "signrec/cues/cues.hpp"
#include "signrec/cues/landmarks.hpp"

namespace signrec::synth {

// A parameterized sign: a fixed dominant-hand shape carried along a short
// path near one body region. Positions are normalized image coordinates.
struct GlossTemplate {
  int id = 0;
  std::string name;
  cues::HandPoints shape;              // landmark offsets from the palm center
  std::array<cues::Point, 3> path;     // palm-center anchors: start, middle, end
  cues::Region region = cues::Region::Chest;
  int duration = 8;                    // frames, >= 4
  bool two_handed = false;             // left hand mirrors the right
};

// Signer pose shared by every generated frame before jitter.
cues::Pose neutral_pose();

std::vector<GlossTemplate> build_gloss_library(std::size_t vocab_size, std::uint64_t seed);

// Noise-free frames of one template, t = 0..duration-1.
std::vector<cues::LandmarkFrame> template_trajectory(const GlossTemplate& g);

// RMS landmark distance between two templates, both resampled to 8 frames.
double template_distance(const GlossTemplate& a, const GlossTemplate& b);

// Minimum template_distance accepted between two library entries.
inline constexpr double kMinTemplateDistance = 0.012;

ctc::GlossVocabulary library_vocabulary(const std::vector<GlossTemplate>& library);

}  // namespace signrec::synth
