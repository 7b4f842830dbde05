// Copyright 2026 The nervc Authors
// SPDX-License-Identifier: Apache-2.0

#include "nervc/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <utility>

#include "json.hpp"
#include "nervc/errors.hpp"

namespace nervc {

// Raw float blobs are written straight from memory.
static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");
static_assert(sizeof(float) == 4);

namespace {

using json = nlohmann::json;

constexpr char kMagic[8] = {'N', 'R', 'V', 'C', 'K', 'P', 'T', '1'};

json variant_to_json(const VariantConfig& v) {
  json j;
  j["name"] = v.name;
  j["stem_hidden"] = v.stem_hidden;
  j["seed_channels"] = v.seed_channels;
  j["seed_h"] = v.seed_h;
  j["seed_w"] = v.seed_w;
  j["stage_widths"] = v.stage_widths;
  j["strides"] = v.strides;
  j["kernel"] = v.kernel;
  j["pe_base"] = v.pe_base;
  j["pe_levels"] = v.pe_levels;
  return j;
}

VariantConfig variant_from_json(const json& j) {
  VariantConfig v;
  try {
    v.name = j.at("name").get<std::string>();
    v.stem_hidden = j.at("stem_hidden").get<std::size_t>();
    v.seed_channels = j.at("seed_channels").get<std::size_t>();
    v.seed_h = j.at("seed_h").get<std::size_t>();
    v.seed_w = j.at("seed_w").get<std::size_t>();
    v.stage_widths = j.at("stage_widths").get<std::vector<std::size_t>>();
    v.strides = j.at("strides").get<std::vector<std::size_t>>();
    v.kernel = j.at("kernel").get<std::size_t>();
    v.pe_base = j.at("pe_base").get<double>();
    v.pe_levels = j.at("pe_levels").get<std::size_t>();
  } catch (const json::exception& e) {
    throw format_error(std::string("checkpoint variant block: ") + e.what());
  }
  try {
    v.validate();
  } catch (const config_error& e) {
    throw format_error(std::string("checkpoint variant invalid: ") + e.what());
  }
  return v;
}

void write_u32(std::ostream& os, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff),
                     static_cast<char>((v >> 24) & 0xff)};
  os.write(b, 4);
}

std::uint32_t read_u32(std::istream& is, const std::string& path) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (is.gcount() != 4) throw format_error(path + ": truncated header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_floats(std::ostream& os, const float* p, std::size_t n) {
  os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(4 * n));
}

void read_floats(std::istream& is, float* p, std::size_t n, const std::string& path,
                 const char* what) {
  is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(4 * n));
  if (static_cast<std::size_t>(is.gcount()) != 4 * n)
    throw format_error(path + ": truncated " + what);
}

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

}  // namespace

std::size_t Checkpoint::payload_bytes() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.payload_bytes();
  return n;
}

std::size_t Checkpoint::calibration_bytes() const {
  std::size_t n = 0;
  for (const auto& e : entries)
    if (e.codes) n += 8 * e.q.channels();
  return n;
}

Checkpoint Checkpoint::from_params(ModelParams& params) {
  Checkpoint cp;
  cp.variant = params.cfg;
  for (auto& p : params.named()) {
    Entry e;
    e.name = p.name;
    e.dense = p.value->value();
    cp.entries.push_back(std::move(e));
  }
  return cp;
}

Checkpoint Checkpoint::from_params_quantized(ModelParams& params,
                                             const QuantPolicy& policy) {
  policy.validate();
  Checkpoint cp;
  cp.variant = params.cfg;
  cp.quantized = true;
  cp.policy = policy;
  for (auto& p : params.named()) {
    Entry e;
    e.name = p.name;
    const bool is_weight =
        p.name.size() > 7 && p.name.substr(p.name.size() - 7) == ".weight";
    if (is_weight) {
      e.codes = true;
      e.q = quantize(p.value->value(), policy);
    } else {
      e.dense = p.value->value();
    }
    cp.entries.push_back(std::move(e));
  }
  return cp;
}

ModelParams Checkpoint::to_params() const {
  ModelParams params = ModelParams::init(variant, 0);
  auto named = params.named();
  if (named.size() != entries.size())
    throw format_error("checkpoint holds " + std::to_string(entries.size()) +
                       " tensors, model needs " + std::to_string(named.size()));
  for (std::size_t i = 0; i < named.size(); ++i) {
    const Entry& e = entries[i];
    if (e.name != named[i].name)
      throw format_error("checkpoint tensor '" + e.name + "' where '" +
                         named[i].name + "' was expected");
    Tensor t = e.codes ? dequantize(e.q) : e.dense;
    if (!t.same_shape(named[i].value->value()))
      throw format_error("checkpoint tensor '" + e.name + "' has shape " +
                         t.shape_str() + ", model expects " +
                         named[i].value->value().shape_str());
    named[i].value->value() = std::move(t);
  }
  return params;
}

void Checkpoint::save(const std::string& path) const {
  json header;
  header["format"] = format;
  header["variant"] = variant_to_json(variant);
  header["precision"] = quantized ? "int" : "fp32";
  if (quantized) {
    header["quant"] = {{"bits", policy.bits}, {"per_channel", policy.per_channel}};
  }
  header["calib_bytes"] = calibration_bytes();
  header["payload_bytes"] = payload_bytes();
  json tensors = json::array();
  for (const auto& e : entries) {
    json t;
    t["name"] = e.name;
    t["shape"] = e.shape();
    t["enc"] = e.codes ? "codes" : "fp32";
    tensors.push_back(std::move(t));
  }
  header["tensors"] = std::move(tensors);
  if (!meta.empty()) header["meta"] = meta;

  const std::string hs = header.dump();
  if (hs.size() > 0xffffffffull) throw internal_error("checkpoint header too large");

  std::ofstream os(path, std::ios::binary);
  if (!os) throw io_error("cannot create checkpoint", path);
  os.write(kMagic, sizeof(kMagic));
  write_u32(os, static_cast<std::uint32_t>(hs.size()));
  os.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const auto& e : entries) {
    if (!e.codes) continue;
    write_floats(os, e.q.w_min.data(), e.q.w_min.size());
    write_floats(os, e.q.scale.data(), e.q.scale.size());
  }
  for (const auto& e : entries) {
    if (e.codes)
      os.write(reinterpret_cast<const char*>(e.q.codes.data()),
               static_cast<std::streamsize>(e.q.codes.size()));
    else
      write_floats(os, e.dense.data(), e.dense.size());
  }
  if (!os) throw io_error("short write", path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error("cannot open checkpoint", path);

  char magic[sizeof(kMagic)];
  is.read(magic, sizeof(magic));
  if (is.gcount() != sizeof(magic) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw format_error(path + ": not a checkpoint file");

  const std::uint32_t hlen = read_u32(is, path);
  std::string hs(hlen, '\0');
  is.read(hs.data(), hlen);
  if (static_cast<std::uint32_t>(is.gcount()) != hlen)
    throw format_error(path + ": truncated header");

  json header;
  try {
    header = json::parse(hs);
  } catch (const json::exception& e) {
    throw format_error(path + ": header is not valid JSON: " + e.what());
  }

  Checkpoint cp;
  try {
    cp.format = header.at("format").get<int>();
    if (cp.format != 1)
      throw format_error(path + ": unsupported format " + std::to_string(cp.format));
    cp.variant = variant_from_json(header.at("variant"));
    const std::string precision = header.at("precision").get<std::string>();
    if (precision == "int") {
      cp.quantized = true;
      cp.policy.bits = header.at("quant").at("bits").get<int>();
      cp.policy.per_channel = header.at("quant").at("per_channel").get<bool>();
      try {
        cp.policy.validate();
      } catch (const config_error& e) {
        throw format_error(path + ": " + e.what());
      }
    } else if (precision != "fp32") {
      throw format_error(path + ": unknown precision '" + precision + "'");
    }
    if (header.contains("meta"))
      cp.meta = header.at("meta").get<std::map<std::string, std::string>>();

    for (const auto& t : header.at("tensors")) {
      Entry e;
      e.name = t.at("name").get<std::string>();
      const auto shape = t.at("shape").get<std::vector<std::size_t>>();
      const std::string enc = t.at("enc").get<std::string>();
      if (enc == "codes") {
        if (!cp.quantized)
          throw format_error(path + ": code-packed tensor in an fp32 file");
        e.codes = true;
        e.q.bits = cp.policy.bits;
        e.q.per_channel = cp.policy.per_channel;
        e.q.shape = shape;
        e.q.count = shape_product(shape);
        const std::size_t ch = cp.policy.per_channel && !shape.empty() ? shape[0] : 1;
        e.q.w_min.resize(ch);
        e.q.scale.resize(ch);
        e.q.codes.resize((e.q.count * static_cast<std::size_t>(cp.policy.bits) + 7) / 8);
      } else if (enc == "fp32") {
        e.dense = Tensor(shape);
      } else {
        throw format_error(path + ": unknown tensor encoding '" + enc + "'");
      }
      cp.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw format_error(path + ": bad header field: " + e.what());
  }

  const std::size_t calib = header.value("calib_bytes", std::size_t{0});
  const std::size_t payload = header.value("payload_bytes", std::size_t{0});
  if (calib != cp.calibration_bytes() || payload != cp.payload_bytes())
    throw format_error(path + ": declared region sizes disagree with tensor list");

  for (auto& e : cp.entries) {
    if (!e.codes) continue;
    read_floats(is, e.q.w_min.data(), e.q.w_min.size(), path, "calibration data");
    read_floats(is, e.q.scale.data(), e.q.scale.size(), path, "calibration data");
  }
  for (auto& e : cp.entries) {
    if (e.codes) {
      is.read(reinterpret_cast<char*>(e.q.codes.data()),
              static_cast<std::streamsize>(e.q.codes.size()));
      if (static_cast<std::size_t>(is.gcount()) != e.q.codes.size())
        throw format_error(path + ": truncated payload");
    } else {
      read_floats(is, e.dense.data(), e.dense.size(), path, "payload");
    }
  }
  if (is.peek() != EOF) throw format_error(path + ": trailing bytes after payload");
  return cp;
}

}  // namespace nervc
