#pragma once

// File formats.
//
// Feature CSV: header "id,label,f0,...,f{d-1}" (the first column may also be
// named "trial_id"); label is one of V+, V-, A+, A-; values are written with
// 17 significant digits.
//
// Trial container, CSV flavour: for every trial one header line
//   trial,<trial_id>,<label>,<channels>,<samples>,<sample_rate>
// followed by <channels> lines of <samples> comma-separated values
// (row-major, channel by channel). Blank lines and lines starting with '#'
// are ignored.
//
// Trial container, binary flavour (little-endian):
//   "JMTR" | u32 version=1 | u32 trial_count
//   per trial: u32 id_len | id bytes | u32 label_len | label bytes |
//              u32 channels | u32 samples | f64 sample_rate |
//              f64[channels * samples] row-major samples

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "jmml/biomarkers.hpp"
#include "jmml/error.hpp"
#include "jmml/pipeline/dataset.hpp"
#include "jmml/pipeline/labels.hpp"
#include "jmml/types.hpp"

namespace jmml::pipeline {

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t start = 0;
    while (start < cell.size() && cell[start] == ' ') ++start;
    out.push_back(cell.substr(start));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw FormatError(where + ": trailing characters in '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw FormatError(where + ": not a number: '" + s + "'");
  }
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline Dataset read_feature_csv(const std::string& path, Modality modality, Source source = Source::external) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw FormatError("'" + path + "': empty file");
  const auto header = detail::split_csv_line(line);
  if (header.size() < 3 || (header[0] != "id" && header[0] != "trial_id") || header[1] != "label")
    throw FormatError("'" + path + "': header must start with id,label,f0");
  const std::size_t d = header.size() - 2;
  Dataset ds;
  ds.modality = modality;
  ds.source = source;
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split_csv_line(line);
    const std::string where = path + ":" + std::to_string(line_no);
    if (cells.size() != d + 2) throw FormatError(where + ": expected " + std::to_string(d + 2) + " columns");
    const DimensionalLabel lab = parse_label(cells[1]);
    ds.ids.push_back(cells[0]);
    ds.dimensions.push_back(lab.dimension);
    ds.labels.push_back(lab.polarity);
    for (std::size_t k = 0; k < d; ++k) values.push_back(detail::parse_double(cells[k + 2], where));
  }
  ds.features = Eigen::Map<const Matrix>(values.data(), static_cast<Eigen::Index>(ds.labels.size()), static_cast<Eigen::Index>(d));
  ds.validate();
  return ds;
}

inline void write_feature_csv(const std::string& path, const std::vector<std::string>& ids,
                              const std::vector<std::string>& labels, const Matrix& features,
                              std::string_view id_column = "id") {
  require_shape(ids.size() == labels.size() && static_cast<std::size_t>(features.rows()) == ids.size(),
                "write_feature_csv: column lengths differ");
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out << id_column << ",label";
  for (Eigen::Index k = 0; k < features.cols(); ++k) out << ",f" << k;
  out << '\n';
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << ids[i] << ',' << labels[i];
    for (Eigen::Index k = 0; k < features.cols(); ++k)
      out << ',' << detail::format_double(features(static_cast<Eigen::Index>(i), k));
    out << '\n';
  }
}

inline void write_feature_csv(const std::string& path, const Dataset& ds) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < ds.size(); ++i) labels.push_back(label_string({ds.dimensions[i], ds.labels[i]}));
  write_feature_csv(path, ds.ids, labels, ds.features);
}

struct LabeledTrial {
  biomarkers::EegTrial trial;
  std::string label;
};

namespace detail {

inline bool has_binary_magic(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[4] = {};
  in.read(magic, 4);
  return in.gcount() == 4 && std::memcmp(magic, "JMTR", 4) == 0;
}

template <class T>
void write_le(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T read_le(std::istream& in, const std::string& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw FormatError("'" + path + "': truncated binary trial container");
  return v;
}

inline std::string read_string(std::istream& in, const std::string& path) {
  const auto len = read_le<std::uint32_t>(in, path);
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw FormatError("'" + path + "': truncated string");
  return s;
}

}  // namespace detail

inline std::vector<LabeledTrial> read_trials_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "JMTR", 4) != 0) throw FormatError("'" + path + "': bad magic");
  if (detail::read_le<std::uint32_t>(in, path) != 1) throw FormatError("'" + path + "': unsupported version");
  const auto count = detail::read_le<std::uint32_t>(in, path);
  std::vector<LabeledTrial> out;
  for (std::uint32_t t = 0; t < count; ++t) {
    LabeledTrial lt;
    lt.trial.trial_id = detail::read_string(in, path);
    lt.label = detail::read_string(in, path);
    const auto ch = detail::read_le<std::uint32_t>(in, path);
    const auto ns = detail::read_le<std::uint32_t>(in, path);
    lt.trial.sample_rate = detail::read_le<double>(in, path);
    lt.trial.channels.resize(ch, ns);
    in.read(reinterpret_cast<char*>(lt.trial.channels.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(ch) * ns));
    if (!in) throw FormatError("'" + path + "': truncated samples");
    out.push_back(std::move(lt));
  }
  return out;
}

inline void write_trials_binary(const std::string& path, const std::vector<LabeledTrial>& trials) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out.write("JMTR", 4);
  detail::write_le<std::uint32_t>(out, 1);
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(trials.size()));
  for (const auto& lt : trials) {
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(lt.trial.trial_id.size()));
    out.write(lt.trial.trial_id.data(), static_cast<std::streamsize>(lt.trial.trial_id.size()));
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(lt.label.size()));
    out.write(lt.label.data(), static_cast<std::streamsize>(lt.label.size()));
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(lt.trial.channels.rows()));
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(lt.trial.channels.cols()));
    detail::write_le<double>(out, lt.trial.sample_rate);
    out.write(reinterpret_cast<const char*>(lt.trial.channels.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(lt.trial.channels.size())));
  }
}

inline std::vector<LabeledTrial> read_trials_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::vector<LabeledTrial> out;
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&](std::string& l) {
    while (std::getline(in, l)) {
      ++line_no;
      if (!l.empty() && l != "\r" && l[0] != '#') return true;
    }
    return false;
  };
  while (next_line(line)) {
    const std::string where = path + ":" + std::to_string(line_no);
    const auto h = detail::split_csv_line(line);
    if (h.size() != 6 || h[0] != "trial")
      throw FormatError(where + ": expected 'trial,<id>,<label>,<channels>,<samples>,<sample_rate>'");
    LabeledTrial lt;
    lt.trial.trial_id = h[1];
    lt.label = h[2];
    const auto ch = static_cast<Eigen::Index>(detail::parse_double(h[3], where));
    const auto ns = static_cast<Eigen::Index>(detail::parse_double(h[4], where));
    lt.trial.sample_rate = detail::parse_double(h[5], where);
    if (ch < 1 || ns < 1) throw FormatError(where + ": channel and sample counts must be positive");
    lt.trial.channels.resize(ch, ns);
    for (Eigen::Index c = 0; c < ch; ++c) {
      if (!next_line(line)) throw FormatError(path + ": missing channel rows for trial '" + lt.trial.trial_id + "'");
      const auto cells = detail::split_csv_line(line);
      const std::string w = path + ":" + std::to_string(line_no);
      if (static_cast<Eigen::Index>(cells.size()) != ns)
        throw FormatError(w + ": expected " + std::to_string(ns) + " samples");
      for (Eigen::Index k = 0; k < ns; ++k) lt.trial.channels(c, k) = detail::parse_double(cells[static_cast<std::size_t>(k)], w);
    }
    out.push_back(std::move(lt));
  }
  return out;
}

inline void write_trials_csv(const std::string& path, const std::vector<LabeledTrial>& trials) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  for (const auto& lt : trials) {
    out << "trial," << lt.trial.trial_id << ',' << lt.label << ',' << lt.trial.channels.rows() << ','
        << lt.trial.channels.cols() << ',' << detail::format_double(lt.trial.sample_rate) << '\n';
    for (Eigen::Index c = 0; c < lt.trial.channels.rows(); ++c) {
      for (Eigen::Index k = 0; k < lt.trial.channels.cols(); ++k)
        out << (k ? "," : "") << detail::format_double(lt.trial.channels(c, k));
      out << '\n';
    }
  }
}

// Binary when the file starts with the "JMTR" magic, CSV otherwise.
inline std::vector<LabeledTrial> read_trials(const std::string& path) {
  return detail::has_binary_magic(path) ? read_trials_binary(path) : read_trials_csv(path);
}

}  // namespace jmml::pipeline
