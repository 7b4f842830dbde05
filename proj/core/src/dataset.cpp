// Copyright 2026 The nervc Authors
// SPDX-License-Identifier: Apache-2.0

#include "nervc/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nervc/errors.hpp"

namespace fs = std::filesystem;

namespace nervc {

namespace {

// Reads one PPM header token, skipping whitespace and '#' comments.
std::string ppm_token(std::istream& is) {
  std::string tok;
  int c;
  while ((c = is.get()) != EOF) {
    if (c == '#') {
      while ((c = is.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

std::size_t parse_dim(const std::string& tok, const std::string& path) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(tok, &pos);
  } catch (const std::exception&) {
    throw format_error(path + ": bad PPM header field '" + tok + "'");
  }
  if (pos != tok.size() || v == 0)
    throw format_error(path + ": bad PPM header field '" + tok + "'");
  return static_cast<std::size_t>(v);
}

Tensor planar_from_bytes(const std::vector<std::uint8_t>& buf, std::size_t h,
                         std::size_t w, bool interleaved) {
  Tensor frame({3, h, w});
  // Divide in double so every level lands on the correctly rounded float
  // for k/255; a reciprocal multiply is off by one ulp for some bytes,
  // which would break the exact save/load round trip.
  const std::size_t hw = h * w;
  if (interleaved) {
    for (std::size_t i = 0; i < hw; ++i)
      for (std::size_t c = 0; c < 3; ++c)
        frame[c * hw + i] = static_cast<float>(buf[3 * i + c] / 255.0);
  } else {
    for (std::size_t i = 0; i < 3 * hw; ++i)
      frame[i] = static_cast<float>(buf[i] / 255.0);
  }
  return frame;
}

std::vector<std::uint8_t> read_exact(std::istream& is, std::size_t n,
                                     const std::string& path) {
  std::vector<std::uint8_t> buf(n);
  is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n)
    throw format_error(path + ": truncated pixel data");
  return buf;
}

void check_frame_shape(const Tensor& frame, const char* what) {
  if (frame.rank() != 3 || frame.extent(0) != 3)
    throw input_error(std::string(what) + ": expected a [3,H,W] frame, got " +
                      frame.shape_str());
}

VideoDataset ingest_raw_dir(const fs::path& dir) {
  const fs::path manifest = dir / "manifest.txt";
  std::ifstream mis(manifest);
  if (!mis) throw io_error("cannot open manifest", manifest.string());
  std::size_t w = 0, h = 0, n = 0;
  if (!(mis >> w >> h >> n) || w == 0 || h == 0 || n == 0)
    throw format_error(manifest.string() + ": expected 'W H N' with positive values");

  VideoDataset ds;
  ds.width = w;
  ds.height = h;
  ds.frames.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%06zu.rgb", i);
    const fs::path p = dir / name;
    std::ifstream is(p, std::ios::binary);
    if (!is) throw io_error("cannot open frame", p.string());
    const auto buf = read_exact(is, 3 * w * h, p.string());
    if (is.peek() != EOF)
      throw format_error(p.string() + ": trailing bytes after pixel data");
    ds.frames.push_back(planar_from_bytes(buf, h, w, /*interleaved=*/false));
  }
  ds.times = frame_times(n);
  return ds;
}

VideoDataset ingest_ppm_dir(const fs::path& dir) {
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() > 4 && name.substr(name.size() - 4) == ".ppm")
      names.push_back(name);
  }
  if (names.empty())
    throw input_error(dir.string() + ": no .ppm frames and no manifest.txt");
  std::sort(names.begin(), names.end());

  VideoDataset ds;
  ds.frames.reserve(names.size());
  for (const auto& name : names) {
    Tensor frame = load_ppm((dir / name).string());
    if (ds.frames.empty()) {
      ds.height = frame.extent(1);
      ds.width = frame.extent(2);
    } else if (frame.extent(1) != ds.height || frame.extent(2) != ds.width) {
      throw input_error(dir.string() + ": mixed frame sizes (" + name + " is " +
                        frame.shape_str() + ")");
    }
    ds.frames.push_back(std::move(frame));
  }
  ds.times = frame_times(ds.frames.size());
  return ds;
}

}  // namespace

std::vector<float> frame_times(std::size_t n) {
  std::vector<float> t(n, 0.0f);
  if (n > 1) {
    const float inv = 1.0f / static_cast<float>(n - 1);
    for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<float>(i) * inv;
  }
  return t;
}

Tensor load_ppm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error("cannot open image", path);
  if (ppm_token(is) != "P6") throw format_error(path + ": not a binary PPM (P6)");
  const std::size_t w = parse_dim(ppm_token(is), path);
  const std::size_t h = parse_dim(ppm_token(is), path);
  const std::string maxval = ppm_token(is);
  if (maxval != "255")
    throw format_error(path + ": unsupported maxval " + maxval + " (need 255)");
  // ppm_token consumed exactly one whitespace byte after the maxval, so the
  // stream now sits on the first pixel byte.
  const auto buf = read_exact(is, 3 * w * h, path);
  return planar_from_bytes(buf, h, w, /*interleaved=*/true);
}

void save_ppm(const std::string& path, const Tensor& frame) {
  check_frame_shape(frame, "save_ppm");
  const std::size_t h = frame.extent(1);
  const std::size_t w = frame.extent(2);
  const std::size_t hw = h * w;
  std::vector<std::uint8_t> buf(3 * hw);
  for (std::size_t i = 0; i < hw; ++i)
    for (std::size_t c = 0; c < 3; ++c) {
      const float v = std::clamp(frame[c * hw + i], 0.0f, 1.0f);
      buf[3 * i + c] =
          static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw io_error("cannot create image", path);
  os << "P6\n" << w << " " << h << "\n255\n";
  os.write(reinterpret_cast<const char*>(buf.data()),
           static_cast<std::streamsize>(buf.size()));
  if (!os) throw io_error("short write", path);
}

void save_frames_ppm(const std::string& dir, const std::vector<Tensor>& frames) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io_error("cannot create directory", dir);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%06zu.ppm", i);
    save_ppm((fs::path(dir) / name).string(), frames[i]);
  }
}

VideoDataset ingest(const std::string& path) {
  const fs::path p(path);
  std::error_code ec;
  const auto st = fs::status(p, ec);
  if (ec || st.type() == fs::file_type::not_found)
    throw io_error("no such file or directory", path);

  if (fs::is_regular_file(st)) {
    VideoDataset ds;
    ds.frames.push_back(load_ppm(path));
    ds.height = ds.frames[0].extent(1);
    ds.width = ds.frames[0].extent(2);
    ds.times = frame_times(1);
    return ds;
  }
  if (!fs::is_directory(st))
    throw input_error(path + ": not a file or directory");
  if (fs::exists(p / "manifest.txt")) return ingest_raw_dir(p);
  return ingest_ppm_dir(p);
}

}  // namespace nervc
