// Copyright 2026 The nervc Authors
// SPDX-License-Identifier: Apache-2.0

#include "nervc/variant.hpp"

#include <array>
#include <fstream>
#include <map>
#include <sstream>

#include "nervc/errors.hpp"

namespace nervc {

namespace {

constexpr std::array<std::size_t, 5> kStrideSchedule = {5, 2, 2, 2, 2};

std::vector<std::size_t> parse_size_list(const std::string& s, const std::string& key) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const unsigned long long v = std::stoull(item, &pos);
      if (pos != item.size()) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw config_error("bad value '" + item + "' for " + key);
    }
  }
  if (out.empty()) throw config_error("empty list for " + key);
  return out;
}

std::string join_size_list(const std::vector<std::size_t>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

}  // namespace

VariantConfig VariantConfig::scaled(std::size_t g) const {
  if (g == 0) throw config_error("grid multiplier must be >= 1");
  VariantConfig c = *this;
  c.seed_h *= g;
  c.seed_w *= g;
  return c;
}

void VariantConfig::validate() const {
  if (name.empty()) throw config_error("variant needs a name");
  if (stem_hidden == 0) throw config_error(name + ": stem_hidden must be positive");
  if (seed_channels == 0) throw config_error(name + ": seed_channels must be positive");
  if (seed_h % 9 != 0 || seed_w % 16 != 0 || seed_h / 9 != seed_w / 16 || seed_h == 0)
    throw config_error(name + ": seed grid must be a multiple of 9x16");
  if (strides.empty() || strides.size() > kStrideSchedule.size())
    throw config_error(name + ": between 1 and 5 blocks required");
  for (std::size_t i = 0; i < strides.size(); ++i)
    if (strides[i] != kStrideSchedule[i])
      throw config_error(name + ": strides must be a prefix of (5,2,2,2,2)");
  if (stage_widths.size() != strides.size())
    throw config_error(name + ": stage_widths and strides length mismatch");
  for (std::size_t w : stage_widths)
    if (w == 0) throw config_error(name + ": zero stage width");
  if (stage_widths[0] != seed_channels)
    throw config_error(name + ": first stage width must equal seed_channels");
  if (kernel != 3) throw config_error(name + ": block kernel must be 3");
  if (!(pe_base > 0.0)) throw config_error(name + ": pe_base must be positive");
  if (pe_levels == 0) throw config_error(name + ": pe_levels must be >= 1");
}

VariantConfig make_variant(const std::string& name) {
  VariantConfig c;
  c.name = name;
  if (name == "T") {
    c.stem_hidden = 256;
    c.seed_channels = 16;
    c.stage_widths = {16, 32, 32, 32, 32};
    c.strides = {5, 2, 2, 2, 2};
  } else if (name == "T+") {
    c.stem_hidden = 512;
    c.seed_channels = 15;
    c.stage_widths = {15, 64, 64, 64, 64};
    c.strides = {5, 2, 2, 2, 2};
  } else if (name == "S") {
    c.stem_hidden = 512;
    c.seed_channels = 26;
    c.stage_widths = {26, 96, 96, 96, 96};
    c.strides = {5, 2, 2, 2, 2};
  } else if (name == "T-desk") {
    c.stem_hidden = 256;
    c.seed_channels = 16;
    c.stage_widths = {16, 32, 32};
    c.strides = {5, 2, 2};
  } else if (name == "T+-desk") {
    c.stem_hidden = 512;
    c.seed_channels = 15;
    c.stage_widths = {15, 64, 64};
    c.strides = {5, 2, 2};
  } else if (name == "S-desk") {
    c.stem_hidden = 512;
    c.seed_channels = 26;
    c.stage_widths = {26, 96, 96};
    c.strides = {5, 2, 2};
  } else {
    throw config_error("unknown variant '" + name +
                       "' (built-ins: T, T+, S, T-desk, T+-desk, S-desk)");
  }
  c.validate();
  return c;
}

std::vector<std::string> builtin_variant_names() {
  return {"T", "T+", "S", "T-desk", "T+-desk", "S-desk"};
}

VariantConfig load_variant_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open variant file", path);
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t h = line.find('#');
    if (h != std::string::npos) line.erase(h);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r'))
      line.pop_back();
    std::size_t b = line.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error(path + ":" + std::to_string(lineno) + ": expected key=value");
    std::string key = line.substr(b, eq - b);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
    std::size_t vb = line.find_first_not_of(" \t", eq + 1);
    kv[key] = vb == std::string::npos ? "" : line.substr(vb);
  }

  VariantConfig c;
  c.stage_widths.clear();
  c.strides.clear();
  for (const auto& [key, val] : kv) {
    try {
      if (key == "name") {
        c.name = val;
      } else if (key == "stem_hidden") {
        c.stem_hidden = std::stoull(val);
      } else if (key == "seed_channels") {
        c.seed_channels = std::stoull(val);
      } else if (key == "seed_grid") {
        const std::size_t x = val.find('x');
        if (x == std::string::npos) throw config_error("seed_grid wants HxW");
        c.seed_h = std::stoull(val.substr(0, x));
        c.seed_w = std::stoull(val.substr(x + 1));
      } else if (key == "stage_widths") {
        c.stage_widths = parse_size_list(val, key);
      } else if (key == "strides") {
        c.strides = parse_size_list(val, key);
      } else if (key == "kernel") {
        c.kernel = std::stoull(val);
      } else if (key == "pe_base") {
        c.pe_base = std::stod(val);
      } else if (key == "pe_levels") {
        c.pe_levels = std::stoull(val);
      } else {
        throw config_error("unknown key '" + key + "'");
      }
    } catch (const config_error&) {
      throw;
    } catch (const std::exception&) {
      throw config_error(path + ": bad value '" + val + "' for " + key);
    }
  }
  c.validate();
  return c;
}

void save_variant_file(const VariantConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write variant file", path);
  out << "name=" << cfg.name << "\n"
      << "stem_hidden=" << cfg.stem_hidden << "\n"
      << "seed_channels=" << cfg.seed_channels << "\n"
      << "seed_grid=" << cfg.seed_h << "x" << cfg.seed_w << "\n"
      << "stage_widths=" << join_size_list(cfg.stage_widths) << "\n"
      << "strides=" << join_size_list(cfg.strides) << "\n"
      << "kernel=" << cfg.kernel << "\n"
      << "pe_base=" << cfg.pe_base << "\n"
      << "pe_levels=" << cfg.pe_levels << "\n";
  if (!out) throw io_error("write failed", path);
}

bool operator==(const VariantConfig& a, const VariantConfig& b) {
  return a.name == b.name && a.stem_hidden == b.stem_hidden &&
         a.seed_channels == b.seed_channels && a.seed_h == b.seed_h &&
         a.seed_w == b.seed_w && a.stage_widths == b.stage_widths &&
         a.strides == b.strides && a.kernel == b.kernel && a.pe_base == b.pe_base &&
         a.pe_levels == b.pe_levels;
}

}  // namespace nervc
