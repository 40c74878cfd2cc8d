#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "jmml/error.hpp"

namespace jmml {

// Row-major keeps "one sample per row" matrices contiguous per sample, which
// matches the CSV layouts and makes per-row slicing cheap.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

enum class Modality { eeg, speech };

// Binary emotion polarity. Stored as 0/1 so it can index class tables.
enum class Polarity : int { negative = 0, positive = 1 };

enum class EmotionDimension { valence, arousal };

inline std::string_view to_string(Modality m) { return m == Modality::eeg ? "eeg" : "speech"; }

inline std::string_view to_string(Polarity p) { return p == Polarity::positive ? "+" : "-"; }

inline std::string_view to_string(EmotionDimension d) {
  return d == EmotionDimension::valence ? "valence" : "arousal";
}

inline Modality parse_modality(std::string_view s) {
  if (s == "eeg") return Modality::eeg;
  if (s == "speech") return Modality::speech;
  throw InvalidArgument("unknown modality '" + std::string(s) + "'");
}

inline int class_index(Polarity p) { return static_cast<int>(p); }

inline Polarity polarity_from_index(int c) {
  return c == 0 ? Polarity::negative : Polarity::positive;
}

// Fixed-dimension feature vector tagged with the modality it came from.
struct FeatureVector {
  Vector values;
  Modality modality = Modality::eeg;

  std::size_t dim() const { return static_cast<std::size_t>(values.size()); }
};

inline bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}

inline void require_shape(bool cond, const std::string& msg) {
  if (!cond) throw ShapeError(msg);
}

// Gathers rows of `m` at `idx` into a new matrix.
inline Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

// Independent 64-bit seed for sub-stream `stream` of a base seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

inline Matrix hconcat(const Matrix& a, const Matrix& b) {
  require_shape(a.rows() == b.rows(), "hconcat: row counts differ");
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

}  // namespace jmml
