// Copyright 2026 The nervc Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NERVC_ERRORS_HPP
#define NERVC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace nervc {

// Error taxonomy. The CLI maps each category to a distinct exit code, so
// library code should throw the most specific type that applies.
//
//   input_error   bad data fed to the library (wrong shapes, empty dataset,
//                 mismatched resolutions, values out of range)
//   config_error  an invalid configuration (unknown variant name, bit width
//                 outside the supported range, malformed config file)
//   io_error      filesystem trouble; carries the offending path
//   format_error  a file exists but its bytes are not what we expect
//                 (truncated checkpoint, bad magic, non-P6 image)
//   usage_error   the caller asked for something nonsensical (backward on a
//                 non-scalar, quantizing an already-quantized checkpoint)
//   internal_error a broken invariant inside the library itself

class error : public std::runtime_error {
public:
  explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

class input_error : public error {
public:
  explicit input_error(const std::string& msg) : error(msg) {}
};

class config_error : public error {
public:
  explicit config_error(const std::string& msg) : error(msg) {}
};

class io_error : public error {
public:
  io_error(const std::string& msg, const std::string& path)
      : error(msg + ": " + path), path_(path) {}
  const std::string& path() const { return path_; }

private:
  std::string path_;
};

class format_error : public error {
public:
  explicit format_error(const std::string& msg) : error(msg) {}
};

class usage_error : public error {
public:
  explicit usage_error(const std::string& msg) : error(msg) {}
};

class internal_error : public error {
public:
  explicit internal_error(const std::string& msg) : error(msg) {}
};

}  // namespace nervc

#endif  // NERVC_ERRORS_HPP
