#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "jmml/error.hpp"
#include "jmml/types.hpp"

namespace jmml::pipeline {

enum class Source { deap, emodb, ravdess, synthetic, external };

inline std::string_view to_string(Source s) {
  switch (s) {
    case Source::deap: return "deap";
    case Source::emodb: return "emodb";
    case Source::ravdess: return "ravdess";
    case Source::synthetic: return "synthetic";
    case Source::external: return "external";
  }
  return "?";
}

struct LabeledSample {
  std::string id;
  FeatureVector features;
  EmotionDimension dimension = EmotionDimension::valence;
  Polarity polarity = Polarity::negative;
  Source source = Source::external;
};

// Column-oriented collection of labeled samples from one modality.
struct Dataset {
  Matrix features;
  std::vector<std::string> ids;
  std::vector<EmotionDimension> dimensions;
  std::vector<Polarity> labels;
  Modality modality = Modality::eeg;
  Source source = Source::external;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }

  LabeledSample sample(std::size_t i) const {
    return {ids.at(i), {features.row(static_cast<Eigen::Index>(i)).transpose(), modality}, dimensions.at(i), labels.at(i), source};
  }

  Dataset subset(const std::vector<std::size_t>& idx) const {
    Dataset out;
    out.features = take_rows(features, idx);
    out.modality = modality;
    out.source = source;
    for (std::size_t i : idx) {
      out.ids.push_back(ids.at(i));
      out.dimensions.push_back(dimensions.at(i));
      out.labels.push_back(labels.at(i));
    }
    return out;
  }

  // Samples labelled on one emotion dimension only.
  Dataset select(EmotionDimension d) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < size(); ++i)
      if (dimensions[i] == d) idx.push_back(i);
    return subset(idx);
  }

  std::vector<int> class_indices() const {
    std::vector<int> out;
    out.reserve(labels.size());
    for (Polarity p : labels) out.push_back(class_index(p));
    return out;
  }

  void validate() const {
    require_shape(static_cast<std::size_t>(features.rows()) == labels.size() && ids.size() == labels.size() &&
                      dimensions.size() == labels.size(),
                  "Dataset: column lengths differ");
    if (!features.allFinite()) throw InvalidArgument("Dataset: non-finite feature value");
  }
};

}  // namespace jmml::pipeline
