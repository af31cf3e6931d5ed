#pragma once

#include <vector>

#include "signrec/cues/landmarks.hpp"
#include "signrec/nn/tensor.hpp"

namespace signrec::cues {

inline constexpr std::size_t kDefaultSkeletonSide = 32;
inline constexpr std::size_t kDefaultSceneSide = 96;

enum class Region { Eyes = 0, Mouth = 1, Chest = 2 };

struct HandCues {
  nn::Tensor<float> images;        // [T,1,S,S], values 0/1
  nn::Tensor<float> displacement;  // [T,2]
  nn::Tensor<float> location;      // [T,3]
  bool operator==(const HandCues&) const = default;
};

struct CueSequences {
  HandCues left, right;
  std::size_t frames() const { return left.displacement.dim(0); }
  std::size_t side() const { return left.images.dim(2); }
  const HandCues& hand(Hand h) const { return h == Hand::Left ? left : right; }
  bool operator==(const CueSequences&) const = default;
};

// Mean of the wrist and the four finger bases (landmarks 0, 5, 9, 13, 17).
Point palm_center(const HandPoints& points);

// Row t: palm motion since frame t-1 divided by the shoulder width at t.
nn::Tensor<double> palm_displacement_seq(const std::vector<LandmarkFrame>& frames, Hand hand);

// Row t: one-hot [eyes, mouth, chest] of the region nearest the palm, or zeros.
nn::Tensor<double> location_onehot_seq(const std::vector<LandmarkFrame>& frames, Hand hand);

CueSequences build_cue_sequences(const std::vector<LandmarkFrame>& frames,
                                 std::size_t side = kDefaultSkeletonSide);

// Scene renders stacked as [T,1,S,S] float 0/1.
nn::Tensor<float> render_scene_sequence(const std::vector<LandmarkFrame>& frames,
                                        std::size_t side = kDefaultSceneSide);

}  // namespace signrec::cues
