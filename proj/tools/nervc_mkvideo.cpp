// Copyright 2026 The nervc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Generates the procedural test clip as a PPM directory, or as raw planar
// frames plus a manifest. Exit codes match the main tool.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <vector>

#include "CLI11.hpp"
#include "nervc/dataset.hpp"
#include "nervc/errors.hpp"
#include "nervc/synth.hpp"

namespace fs = std::filesystem;
using namespace nervc;

namespace {

void write_raw(const fs::path& dir, const VideoDataset& ds) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io_error("cannot create directory", dir.string());
  {
    std::ofstream m(dir / "manifest.txt");
    if (!m) throw io_error("cannot create manifest", (dir / "manifest.txt").string());
    m << ds.width << " " << ds.height << " " << ds.count() << "\n";
  }
  for (std::size_t i = 0; i < ds.count(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%06zu.rgb", i);
    std::ofstream os(dir / name, std::ios::binary);
    if (!os) throw io_error("cannot create frame", (dir / name).string());
    const Tensor& fr = ds.frames[i];
    std::vector<std::uint8_t> buf(fr.size());
    for (std::size_t j = 0; j < fr.size(); ++j)
      buf[j] = static_cast<std::uint8_t>(std::lround(fr[j] * 255.0f));
    os.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size()));
    if (!os) throw io_error("short write", (dir / name).string());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nervc_mkvideo: procedural test clip generator"};
  std::string out = "clip", format = "ppm";
  SynthSpec spec;
  app.add_option("--out", out, "Output directory")->required();
  app.add_option("--width", spec.width, "Frame width");
  app.add_option("--height", spec.height, "Frame height");
  app.add_option("--frames", spec.count, "Frame count");
  app.add_option("--seed", spec.seed, "Content seed");
  app.add_option("--detail", spec.detail, "Fine-texture strength");
  app.add_option("--format", format, "ppm | raw");

  try {
    app.parse(argc, argv);
    const VideoDataset ds = make_synth_video(spec);
    if (format == "ppm") {
      save_frames_ppm(out, ds.frames);
    } else if (format == "raw") {
      write_raw(out, ds);
    } else {
      throw usage_error("unknown format '" + format + "' (use ppm or raw)");
    }
    std::cout << "wrote " << ds.count() << " " << ds.width << "x" << ds.height
              << " frames to " << out << " (" << format << ")\n";
    return 0;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 5;
  } catch (const usage_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const input_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const format_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 6;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
