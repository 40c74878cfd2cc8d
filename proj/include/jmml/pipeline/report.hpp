#pragma once

// Report rendering: a JSON array of rows, and a text table with one line per
// setup and the column groups  Setup | EEG: Input Acc F1 | Speech: Input Acc F1.
// F1 cells of non-baseline setups carry the difference to the baseline F1.

#include <array>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jmml/nn/serialize.hpp"
#include "jmml/pipeline/config.hpp"
#include "jmml/pipeline/experiment.hpp"

namespace jmml::pipeline {

inline nn::json to_json(const ReportRow& r) {
  return {{"setup", std::string(to_string(r.setup))},
          {"modality", std::string(to_string(r.modality))},
          {"input", r.input},
          {"input_dim", r.input_dim},
          {"accuracy", r.accuracy},
          {"f1", r.f1},
          {"n_estimators", r.n_estimators},
          {"max_depth", r.max_depth},
          {"cv_f1", r.cv_f1},
          {"latent_variables", r.latent_variables},
          {"dimension", std::string(to_string(r.dimension))},
          {"seed", r.seed}};
}

inline nn::json to_json(const std::vector<ReportRow>& rows) {
  nn::json a = nn::json::array();
  for (const auto& r : rows) a.push_back(to_json(r));
  return a;
}

inline std::string setup_title(SetupKind s) {
  switch (s) {
    case SetupKind::baseline: return "Baseline";
    case SetupKind::jec_ssl: return "JEC-SSL";
    case SetupKind::baseline_edcc: return "Baseline -> E-DCC-CAE";
    case SetupKind::jmml: return "JMML [JEC-SSL -> E-DCC-CAE]";
  }
  return "?";
}

namespace detail {

// Display width, counting UTF-8 code points and skipping combining marks.
inline std::size_t display_width(const std::string& s) {
  std::size_t w = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto c = static_cast<unsigned char>(s[i]);
    if ((c & 0xC0) == 0x80) continue;
    if (c == 0xCC && i + 1 < s.size() && static_cast<unsigned char>(s[i + 1]) >= 0x80 &&
        static_cast<unsigned char>(s[i + 1]) <= 0xAF)
      continue;  // U+0300..U+032F
    ++w;
  }
  return w;
}

inline std::string pad(const std::string& s, std::size_t width) {
  const std::size_t w = display_width(s);
  return s + std::string(width > w ? width - w : 0, ' ');
}

inline std::string fixed(double v, int digits = 1) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string signed_fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.1f", v);
  return buf;
}

}  // namespace detail

inline std::string render_table(const std::vector<ReportRow>& rows, EmotionDimension dimension) {
  std::vector<SetupKind> order;
  std::map<SetupKind, std::array<std::optional<ReportRow>, 2>> cells;
  for (const auto& r : rows) {
    if (r.dimension != dimension) continue;
    if (cells.find(r.setup) == cells.end()) order.push_back(r.setup);
    cells[r.setup][r.modality == Modality::eeg ? 0 : 1] = r;
  }
  std::array<std::optional<double>, 2> base;
  if (auto it = cells.find(SetupKind::baseline); it != cells.end())
    for (std::size_t m = 0; m < 2; ++m)
      if (it->second[m]) base[m] = it->second[m]->f1;

  std::vector<std::array<std::string, 7>> lines;
  lines.push_back({"Experiment Setup", "EEG Input", "Acc", "F1", "Speech Input", "Acc", "F1"});
  for (SetupKind s : order) {
    std::array<std::string, 7> line{setup_title(s), "", "", "", "", "", ""};
    for (std::size_t m = 0; m < 2; ++m) {
      const auto& r = cells[s][m];
      if (!r) continue;
      line[1 + 3 * m] = r->input;
      line[2 + 3 * m] = detail::fixed(r->accuracy);
      std::string f1 = detail::fixed(r->f1);
      if (s != SetupKind::baseline && base[m]) f1 += " (" + detail::signed_fixed(r->f1 - *base[m]) + ")";
      line[3 + 3 * m] = f1;
    }
    lines.push_back(line);
  }
  std::array<std::size_t, 7> width{};
  for (const auto& l : lines)
    for (std::size_t c = 0; c < 7; ++c) width[c] = std::max(width[c], detail::display_width(l[c]));

  std::string rule = "+";
  for (std::size_t c = 0; c < 7; ++c) rule += std::string(width[c] + 2, '-') + (c == 3 ? "++" : "+");
  std::string out = std::string(to_string(dimension)) + "\n" + rule + "\n";
  for (std::size_t i = 0; i < lines.size(); ++i) {
    out += "|";
    for (std::size_t c = 0; c < 7; ++c) out += " " + detail::pad(lines[i][c], width[c]) + (c == 3 ? " ||" : " |");
    out += "\n";
    if (i == 0) out += rule + "\n";
  }
  out += rule + "\n";
  return out;
}

}  // namespace jmml::pipeline
