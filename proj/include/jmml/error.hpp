#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace jmml {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

// A signal without enough variation for the requested feature. When raised
// during trial extraction, channel() names the offending channel.
class DegenerateSignal : public Error {
 public:
  static constexpr std::size_t kNoChannel = static_cast<std::size_t>(-1);

  explicit DegenerateSignal(const std::string& what, std::size_t channel = kNoChannel)
      : Error(channel == kNoChannel ? what : what + " (channel " + std::to_string(channel) + ")"),
        channel_(channel) {}

  std::size_t channel() const noexcept { return channel_; }
  bool has_channel() const noexcept { return channel_ != kNoChannel; }

 private:
  std::size_t channel_;
};

class DegenerateVector : public Error {
 public:
  using Error::Error;
};

class EmptyClassError : public Error {
 public:
  using Error::Error;
};

class SingleClassError : public Error {
 public:
  using Error::Error;
};

class PairingError : public Error {
 public:
  using Error::Error;
};

class LabelError : public Error {
 public:
  using Error::Error;
};

class UnsupportedConfiguration : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

// Wraps an error raised inside one stage of an experiment run.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace jmml
