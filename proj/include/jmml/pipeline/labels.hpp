#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <utility>

#include "jmml/error.hpp"
#include "jmml/types.hpp"

namespace jmml::pipeline {

inline constexpr double kRatingThreshold = 4.5;

// Self-assessment rating on the 1..9 scale: '+' iff rating >= threshold.
inline Polarity binarize_rating(double rating, double threshold = kRatingThreshold) {
  if (!(rating >= 1.0 && rating <= 9.0)) throw RangeError("binarize_rating: rating must lie in [1, 9]");
  return rating >= threshold ? Polarity::positive : Polarity::negative;
}

enum class Category { anger, happy, sad, neutral };

struct DimensionalLabel {
  EmotionDimension dimension;
  Polarity polarity;

  bool operator==(const DimensionalLabel&) const = default;
};

// Anger -> V-, Happy -> V+, Sad -> A-, Neutral -> A+.
inline DimensionalLabel relabel_categorical(Category c) {
  switch (c) {
    case Category::anger: return {EmotionDimension::valence, Polarity::negative};
    case Category::happy: return {EmotionDimension::valence, Polarity::positive};
    case Category::sad: return {EmotionDimension::arousal, Polarity::negative};
    case Category::neutral: return {EmotionDimension::arousal, Polarity::positive};
  }
  throw LabelError("relabel_categorical: unknown category");
}

inline DimensionalLabel relabel_categorical(std::string_view name) {
  std::string s(name);
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (s == "anger") return relabel_categorical(Category::anger);
  if (s == "happy") return relabel_categorical(Category::happy);
  if (s == "sad") return relabel_categorical(Category::sad);
  if (s == "neutral") return relabel_categorical(Category::neutral);
  throw LabelError("relabel_categorical: unknown category '" + std::string(name) + "'");
}

// "V+", "V-", "A+", "A-".
inline std::string label_string(DimensionalLabel l) {
  return std::string(l.dimension == EmotionDimension::valence ? "V" : "A") + (l.polarity == Polarity::positive ? "+" : "-");
}

inline DimensionalLabel parse_label(std::string_view s) {
  if (s == "V+") return {EmotionDimension::valence, Polarity::positive};
  if (s == "V-") return {EmotionDimension::valence, Polarity::negative};
  if (s == "A+") return {EmotionDimension::arousal, Polarity::positive};
  if (s == "A-") return {EmotionDimension::arousal, Polarity::negative};
  throw LabelError("unknown label '" + std::string(s) + "' (expected V+, V-, A+ or A-)");
}

inline EmotionDimension parse_dimension(std::string_view s) {
  if (s == "valence") return EmotionDimension::valence;
  if (s == "arousal") return EmotionDimension::arousal;
  throw InvalidArgument("unknown emotion dimension '" + std::string(s) + "'");
}

}  // namespace jmml::pipeline
