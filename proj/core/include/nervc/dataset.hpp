// Copyright 2026 The nervc Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NERVC_DATASET_HPP
#define NERVC_DATASET_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "nervc/tensor.hpp"

namespace nervc {

// A video clip held fully in memory: planar RGB frames in [0,1] plus the
// normalized sampling position of each frame.
struct VideoDataset {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<Tensor> frames;  // each [3, H, W]
  std::vector<float> times;    // t_i in [0,1], same length as frames

  std::size_t count() const { return frames.size(); }
};

// t_i = i / (n - 1); a single frame sits at t = 0.
std::vector<float> frame_times(std::size_t n);

// Binary PPM (P6), maxval 255 only. load returns [3,H,W] in [0,1]; save
// rounds to the nearest 8-bit level, so save followed by load is exact for
// values already on that grid.
Tensor load_ppm(const std::string& path);
void save_ppm(const std::string& path, const Tensor& frame);

// Writes frames as frame_000000.ppm, frame_000001.ppm, ... into dir
// (created if missing).
void save_frames_ppm(const std::string& dir, const std::vector<Tensor>& frames);

// Loads a clip from `path`:
//   - a .ppm file    -> single-frame clip
//   - a directory with manifest.txt -> raw planar frames (see below)
//   - any other directory           -> all *.ppm files, sorted by name
//
// Raw layout: manifest.txt holds "W H N"; each frame_000000.rgb file holds
// 3*W*H bytes, all red samples then green then blue, row-major.
// Mixed frame sizes raise input_error; unreadable files raise io_error;
// malformed contents raise format_error.
VideoDataset ingest(const std::string& path);

}  // namespace nervc

#endif  // NERVC_DATASET_HPP
