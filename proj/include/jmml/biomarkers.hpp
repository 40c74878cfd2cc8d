#pragma once

// Tempo-spectral EEG biomarkers (fractal dimensions, Hjorth parameters, DFA,
// Hurst exponent, band intensities and spectral entropy) and the per-trial
// feature vector assembled from them.

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "jmml/error.hpp"
#include "jmml/types.hpp"

namespace jmml::biomarkers {

using Signal = std::span<const double>;

struct EegTrial {
  Matrix channels;  // channel x time
  double sample_rate = 128.0;
  std::string trial_id;

  std::size_t channel_count() const { return static_cast<std::size_t>(channels.rows()); }
  std::size_t length() const { return static_cast<std::size_t>(channels.cols()); }

  Signal channel(std::size_t c) const {
    return {channels.data() + static_cast<Eigen::Index>(c) * channels.cols(),
            static_cast<std::size_t>(channels.cols())};
  }
};

inline void validate(const EegTrial& trial) {
  require(trial.channels.rows() >= 1, "EegTrial: at least one channel required");
  require(trial.channels.cols() >= 1, "EegTrial: empty channels");
  require(trial.sample_rate > 0.0, "EegTrial: sample_rate must be positive");
  if (trial.channels.hasNaN()) throw InvalidArgument("EegTrial: NaN sample");
}

// Keeps samples in [start_s * fs, end_s * fs). Used to drop pre-trial
// baselines (e.g. start_s = 3, end_s = 63 for one-minute trials).
inline EegTrial trim_window(const EegTrial& trial, double start_s, double end_s) {
  const auto begin = static_cast<Eigen::Index>(std::llround(start_s * trial.sample_rate));
  const auto end = static_cast<Eigen::Index>(std::llround(end_s * trial.sample_rate));
  require(begin >= 0 && begin < end, "trim_window: empty window");
  require(end <= trial.channels.cols(), "trim_window: window exceeds trial length");
  EegTrial out{trial.channels.middleCols(begin, end - begin), trial.sample_rate, trial.trial_id};
  return out;
}

struct Band {
  std::string name;
  double low_hz = 0.0;
  double high_hz = 0.0;
};

using BandSet = std::vector<Band>;

inline BandSet standard_bands() {
  return {{"theta", 4.0, 8.0},
          {"alpha_low", 8.0, 10.0},
          {"alpha_high", 10.0, 13.0},
          {"beta", 13.0, 25.0},
          {"gamma", 25.0, 40.0}};
}

// The four bands retained for the 416-D trial vector (theta dropped).
inline BandSet selected_bands() {
  BandSet b = standard_bands();
  b.erase(b.begin());
  return b;
}

inline void validate(const BandSet& bands, double sample_rate) {
  require(!bands.empty(), "BandSet: no bands");
  for (std::size_t i = 0; i < bands.size(); ++i) {
    const Band& b = bands[i];
    require(b.low_hz > 0.0 && b.low_hz < b.high_hz && b.high_hz < sample_rate / 2.0,
            "BandSet: band '" + b.name + "' must satisfy 0 < low < high < fs/2");
    if (i > 0) require(b.low_hz >= bands[i - 1].high_hz, "BandSet: bands must ascend without overlap");
  }
}

namespace detail {

inline double mean(Signal x) { return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size()); }

// Population variance.
inline double variance(Signal x) {
  const double mu = mean(x);
  double acc = 0.0;
  for (double v : x) acc += (v - mu) * (v - mu);
  return acc / static_cast<double>(x.size());
}

inline std::vector<double> diff(Signal x) {
  std::vector<double> d(x.size() > 0 ? x.size() - 1 : 0);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) d[i] = x[i + 1] - x[i];
  return d;
}

inline bool is_constant(Signal x) {
  return std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
}

// Least-squares slope of y against x.
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

// Box sizes 4, 8, ..., N/4.
inline std::vector<std::size_t> box_sizes(std::size_t n) {
  std::vector<std::size_t> sizes;
  for (std::size_t s = 4; s <= n / 4; s *= 2) sizes.push_back(s);
  return sizes;
}

}  // namespace detail

struct Hjorth {
  double mobility = 0.0;
  double complexity = 0.0;
};

// mobility = sqrt(var(dx)/var(x)), complexity = mobility(dx)/mobility(x).
// A signal whose first difference is constant has mobility 0 and complexity 0.
inline Hjorth hjorth(Signal x) {
  require(x.size() >= 3, "hjorth: need at least 3 samples");
  const double var_x = detail::variance(x);
  if (var_x == 0.0) throw DegenerateSignal("hjorth: zero-variance signal");
  const auto d1 = detail::diff(x);
  const auto d2 = detail::diff(d1);
  const double var_d1 = detail::variance(d1);
  const double var_d2 = detail::variance(d2);
  Hjorth h;
  h.mobility = std::sqrt(var_d1 / var_x);
  if (var_d1 > 0.0) h.complexity = std::sqrt(var_d2 / var_d1) / h.mobility;
  return h;
}

inline double petrosian_fd(Signal x) {
  require(x.size() >= 2, "petrosian_fd: need at least 2 samples");
  const auto d = detail::diff(x);
  std::size_t sign_changes = 0;
  for (std::size_t i = 1; i < d.size(); ++i)
    if (d[i] * d[i - 1] < 0.0) ++sign_changes;
  const double n = static_cast<double>(x.size());
  const double log_n = std::log10(n);
  return log_n / (log_n + std::log10(n / (n + 0.4 * static_cast<double>(sign_changes))));
}

inline double higuchi_fd(Signal x, std::size_t k_max = 8) {
  require(k_max >= 2, "higuchi_fd: k_max must be >= 2");
  require(x.size() >= 2 * k_max, "higuchi_fd: signal shorter than 2*k_max");
  const std::size_t n = x.size();
  std::vector<double> log_inv_k, log_len;
  for (std::size_t k = 1; k <= k_max; ++k) {
    double total = 0.0;
    std::size_t used = 0;
    for (std::size_t m = 0; m < k; ++m) {
      const std::size_t steps = (n - 1 - m) / k;
      if (steps == 0) continue;
      double len = 0.0;
      for (std::size_t i = 1; i <= steps; ++i) len += std::abs(x[m + i * k] - x[m + (i - 1) * k]);
      total += len * static_cast<double>(n - 1) / (static_cast<double>(steps * k) * static_cast<double>(k));
      ++used;
    }
    const double mean_len = total / static_cast<double>(used);
    if (mean_len <= 0.0) throw DegenerateSignal("higuchi_fd: zero curve length");
    log_inv_k.push_back(std::log(1.0 / static_cast<double>(k)));
    log_len.push_back(std::log(mean_len));
  }
  return detail::ls_slope(log_inv_k, log_len);
}

// Detrended fluctuation analysis scaling exponent over box sizes 4..N/4.
inline double dfa(Signal x) {
  require(x.size() >= 64, "dfa: need at least 64 samples");
  if (detail::is_constant(x)) throw DegenerateSignal("dfa: constant signal");
  const double mu = detail::mean(x);
  std::vector<double> profile(x.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) profile[i] = (acc += x[i] - mu);

  std::vector<double> log_n, log_f;
  for (std::size_t box : detail::box_sizes(x.size())) {
    const std::size_t windows = x.size() / box;
    // Centered abscissa makes the per-window fit closed form.
    const double t_mean = (static_cast<double>(box) - 1.0) / 2.0;
    double t_ss = 0.0;
    for (std::size_t t = 0; t < box; ++t) t_ss += (static_cast<double>(t) - t_mean) * (static_cast<double>(t) - t_mean);
    double sq = 0.0;
    for (std::size_t w = 0; w < windows; ++w) {
      const double* seg = profile.data() + w * box;
      double y_mean = 0.0;
      for (std::size_t t = 0; t < box; ++t) y_mean += seg[t];
      y_mean /= static_cast<double>(box);
      double sxy = 0.0;
      for (std::size_t t = 0; t < box; ++t) sxy += (static_cast<double>(t) - t_mean) * (seg[t] - y_mean);
      const double slope = sxy / t_ss;
      for (std::size_t t = 0; t < box; ++t) {
        const double r = seg[t] - (y_mean + slope * (static_cast<double>(t) - t_mean));
        sq += r * r;
      }
    }
    const double f = std::sqrt(sq / static_cast<double>(windows * box));
    if (f <= 0.0) continue;
    log_n.push_back(std::log(static_cast<double>(box)));
    log_f.push_back(std::log(f));
  }
  if (log_n.size() < 2) throw DegenerateSignal("dfa: fluctuation vanishes at every scale");
  return detail::ls_slope(log_n, log_f);
}

// Rescaled-range Hurst exponent over the DFA box schedule.
inline double hurst(Signal x) {
  require(x.size() >= 64, "hurst: need at least 64 samples");
  if (detail::is_constant(x)) throw DegenerateSignal("hurst: constant signal");
  std::vector<double> log_n, log_rs;
  for (std::size_t box : detail::box_sizes(x.size())) {
    const std::size_t windows = x.size() / box;
    double rs_sum = 0.0;
    std::size_t rs_count = 0;
    for (std::size_t w = 0; w < windows; ++w) {
      Signal seg = x.subspan(w * box, box);
      const double mu = detail::mean(seg);
      double z = 0.0, z_max = 0.0, z_min = 0.0, ss = 0.0;
      for (std::size_t i = 0; i < box; ++i) {
        const double dev = seg[i] - mu;
        z += dev;
        ss += dev * dev;
        if (i == 0 || z > z_max) z_max = z;
        if (i == 0 || z < z_min) z_min = z;
      }
      const double s = std::sqrt(ss / static_cast<double>(box));
      if (s <= 0.0) continue;
      rs_sum += (z_max - z_min) / s;
      ++rs_count;
    }
    if (rs_count == 0 || rs_sum <= 0.0) continue;
    log_n.push_back(std::log(static_cast<double>(box)));
    log_rs.push_back(std::log(rs_sum / static_cast<double>(rs_count)));
  }
  if (log_n.size() < 2) throw DegenerateSignal("hurst: rescaled range vanishes at every scale");
  return detail::ls_slope(log_n, log_rs);
}

struct BandPowers {
  std::vector<double> psi;  // summed DFT magnitude per band
  std::vector<double> rir;  // psi / sum(psi)
};

// Magnitude of the DFT of the un-windowed signal, bins 0..N/2.
inline std::vector<double> magnitude_spectrum(Signal x) {
  Eigen::FFT<double> fft;
  std::vector<double> in(x.begin(), x.end());
  std::vector<std::complex<double>> out;
  fft.fwd(out, in);
  std::vector<double> mag(x.size() / 2 + 1);
  for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::abs(out[k]);
  return mag;
}

// Band b covers DFT bins floor(low*N/fs) <= k < floor(high*N/fs).
inline BandPowers band_powers(Signal x, double sample_rate, const BandSet& bands) {
  validate(bands, sample_rate);
  require(x.size() >= 2, "band_powers: need at least 2 samples");
  if (std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; }))
    throw DegenerateSignal("band_powers: all-zero signal");
  const auto mag = magnitude_spectrum(x);
  const double n = static_cast<double>(x.size());
  BandPowers out;
  double total = 0.0;
  for (const Band& b : bands) {
    const auto lo = static_cast<std::size_t>(std::floor(b.low_hz * n / sample_rate));
    const auto hi = std::min(static_cast<std::size_t>(std::floor(b.high_hz * n / sample_rate)), mag.size());
    double p = 0.0;
    for (std::size_t k = lo; k < hi; ++k) p += mag[k];
    out.psi.push_back(p);
    total += p;
  }
  if (total <= 0.0) throw DegenerateSignal("band_powers: no spectral mass inside the bands");
  for (double p : out.psi) out.rir.push_back(p / total);
  return out;
}

// Normalized Shannon entropy of a band distribution, in [0, 1].
inline double spectral_entropy(std::span<const double> rir) {
  require(rir.size() >= 2, "spectral_entropy: need at least 2 bands");
  double h = 0.0;
  for (double p : rir)
    if (p > 0.0) h -= p * std::log(p);
  return h / std::log(static_cast<double>(rir.size()));
}

enum class TemporalFeature { hjorth_mobility, hjorth_complexity, hfd, pfd, dfa, hurst };
enum class SpectralFeature { psi, rir, spectral_entropy };

inline std::string_view to_string(TemporalFeature f) {
  switch (f) {
    case TemporalFeature::hjorth_mobility: return "hjorth_mobility";
    case TemporalFeature::hjorth_complexity: return "hjorth_complexity";
    case TemporalFeature::hfd: return "hfd";
    case TemporalFeature::pfd: return "pfd";
    case TemporalFeature::dfa: return "dfa";
    case TemporalFeature::hurst: return "hurst";
  }
  return "?";
}

inline std::string_view to_string(SpectralFeature f) {
  switch (f) {
    case SpectralFeature::psi: return "psi";
    case SpectralFeature::rir: return "rir";
    case SpectralFeature::spectral_entropy: return "spectral_entropy";
  }
  return "?";
}

struct FeatureSelection {
  std::vector<TemporalFeature> temporal;
  BandSet bands;
  std::vector<SpectralFeature> spectral;
  std::size_t higuchi_k_max = 8;

  // Output length per channel.
  std::size_t per_channel_dim() const {
    std::size_t d = temporal.size();
    for (SpectralFeature f : spectral) d += f == SpectralFeature::spectral_entropy ? 1 : bands.size();
    return d;
  }

  std::size_t dim(std::size_t channels) const { return channels * per_channel_dim(); }
};

// Hjorth x2, HFD, PFD; PSI, RIR over alpha_low..gamma; spectral entropy.
// 13 values per channel, 416 for a 32-channel montage.
inline FeatureSelection default_selection() {
  return {{TemporalFeature::hjorth_mobility, TemporalFeature::hjorth_complexity, TemporalFeature::hfd,
           TemporalFeature::pfd},
          selected_bands(),
          {SpectralFeature::psi, SpectralFeature::rir, SpectralFeature::spectral_entropy}};
}

inline FeatureSelection full_selection() {
  return {{TemporalFeature::hjorth_mobility, TemporalFeature::hjorth_complexity, TemporalFeature::hfd,
           TemporalFeature::pfd, TemporalFeature::dfa, TemporalFeature::hurst},
          standard_bands(),
          {SpectralFeature::psi, SpectralFeature::rir, SpectralFeature::spectral_entropy}};
}

inline void validate(const FeatureSelection& sel, double sample_rate) {
  require(!sel.temporal.empty() || !sel.spectral.empty(), "FeatureSelection: empty selection");
  auto unique = [](auto v) {
    std::sort(v.begin(), v.end());
    return std::adjacent_find(v.begin(), v.end()) == v.end();
  };
  require(unique(sel.temporal) && unique(sel.spectral), "FeatureSelection: duplicate feature");
  if (!sel.spectral.empty()) validate(sel.bands, sample_rate);
}

// Per-channel layout: temporal features in selection order, then for each
// spectral feature in selection order its per-band values (psi, rir) or one
// scalar (spectral_entropy). Channels are concatenated in montage order.
inline FeatureVector extract_trial(const EegTrial& trial, const FeatureSelection& sel) {
  validate(trial);
  validate(sel, trial.sample_rate);
  FeatureVector out;
  out.modality = Modality::eeg;
  out.values.resize(static_cast<Eigen::Index>(sel.dim(trial.channel_count())));
  Eigen::Index pos = 0;
  for (std::size_t c = 0; c < trial.channel_count(); ++c) {
    const Signal x = trial.channel(c);
    try {
      if (detail::is_constant(x)) throw DegenerateSignal("constant channel");
      Hjorth hj{};
      bool have_hjorth = false;
      for (TemporalFeature f : sel.temporal) {
        double v = 0.0;
        switch (f) {
          case TemporalFeature::hjorth_mobility:
          case TemporalFeature::hjorth_complexity:
            if (!have_hjorth) {
              hj = hjorth(x);
              have_hjorth = true;
            }
            v = f == TemporalFeature::hjorth_mobility ? hj.mobility : hj.complexity;
            break;
          case TemporalFeature::hfd: v = higuchi_fd(x, sel.higuchi_k_max); break;
          case TemporalFeature::pfd: v = petrosian_fd(x); break;
          case TemporalFeature::dfa: v = dfa(x); break;
          case TemporalFeature::hurst: v = hurst(x); break;
        }
        out.values[pos++] = v;
      }
      if (!sel.spectral.empty()) {
        const BandPowers bp = band_powers(x, trial.sample_rate, sel.bands);
        for (SpectralFeature f : sel.spectral) {
          if (f == SpectralFeature::spectral_entropy) {
            out.values[pos++] = spectral_entropy(bp.rir);
          } else {
            const auto& src = f == SpectralFeature::psi ? bp.psi : bp.rir;
            for (double v : src) out.values[pos++] = v;
          }
        }
      }
    } catch (const DegenerateSignal& e) {
      throw DegenerateSignal(e.what(), c);
    }
  }
  return out;
}

// Column names matching extract_trial's layout, e.g. "ch0_hfd", "ch3_rir_beta".
inline std::vector<std::string> feature_names(std::size_t channels, const FeatureSelection& sel) {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < channels; ++c) {
    const std::string ch = "ch" + std::to_string(c) + "_";
    for (TemporalFeature f : sel.temporal) names.push_back(ch + std::string(to_string(f)));
    for (SpectralFeature f : sel.spectral) {
      if (f == SpectralFeature::spectral_entropy) {
        names.push_back(ch + "spectral_entropy");
      } else {
        for (const Band& b : sel.bands) names.push_back(ch + std::string(to_string(f)) + "_" + b.name);
      }
    }
  }
  return names;
}

}  // namespace jmml::biomarkers
