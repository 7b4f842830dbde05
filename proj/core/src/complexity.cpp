// Copyright 2026 The nervc Authors
// SPDX-License-Identifier: Apache-2.0

#include "nervc/complexity.hpp"

#include <iomanip>
#include <ostream>
#include <sstream>

namespace nervc {

std::size_t parameter_count(const VariantConfig& cfg) {
  std::size_t n = 0;
  n += cfg.pe_dim() * cfg.stem_hidden + cfg.stem_hidden;   // stem layer 1
  n += cfg.stem_hidden * cfg.seed_len() + cfg.seed_len();  // stem layer 2
  for (std::size_t i = 0; i < cfg.num_blocks(); ++i) {
    const std::size_t cout = cfg.block_conv_channels(i);
    n += cout * cfg.block_in_channels(i) * cfg.kernel * cfg.kernel + cout;
  }
  n += 3 * cfg.stage_widths.back() + 3;  // 1x1 head
  return n;
}

ComplexityReport analyze(const VariantConfig& cfg, std::size_t scale) {
  const VariantConfig c = cfg.scaled(scale);
  c.validate();

  ComplexityReport r;
  r.variant = c.name;
  auto [oh, ow] = c.output_size();
  r.out_h = oh;
  r.out_w = ow;
  r.param_count = parameter_count(c);

  std::size_t gh = c.seed_h, gw = c.seed_w;
  for (std::size_t i = 0; i < c.num_blocks(); ++i) {
    StageCost s;
    s.label = "block" + std::to_string(i + 1);
    s.grid_h = gh;
    s.grid_w = gw;
    s.c_in = c.block_in_channels(i);
    s.c_out = c.block_conv_channels(i);
    s.mults = static_cast<std::uint64_t>(gh) * gw * s.c_out *
              (c.kernel * c.kernel * s.c_in);
    s.gflops = 2.0 * static_cast<double>(s.mults) / 1e9;
    r.stages.push_back(s);
    gh *= c.strides[i];
    gw *= c.strides[i];
  }

  StageCost head;
  head.label = "head";
  head.grid_h = gh;
  head.grid_w = gw;
  head.c_in = c.stage_widths.back();
  head.c_out = 3;
  head.mults = static_cast<std::uint64_t>(gh) * gw * 3 * head.c_in;
  head.gflops = 2.0 * static_cast<double>(head.mults) / 1e9;
  r.stages.push_back(head);

  for (const StageCost& s : r.stages) r.total_mults += s.mults;
  r.total_gflops = 2.0 * static_cast<double>(r.total_mults) / 1e9;
  return r;
}

std::string ComplexityReport::table() const {
  std::ostringstream os;
  os << variant << "  (" << out_h << "x" << out_w << ", " << param_count
     << " params)\n";
  os << std::left << std::setw(8) << "stage" << std::right << std::setw(11)
     << "grid" << std::setw(7) << "c_in" << std::setw(7) << "c_out"
     << std::setw(16) << "mults" << std::setw(11) << "gflops" << "\n";
  for (const StageCost& s : stages) {
    std::ostringstream grid;
    grid << s.grid_h << "x" << s.grid_w;
    os << std::left << std::setw(8) << s.label << std::right << std::setw(11)
       << grid.str() << std::setw(7) << s.c_in << std::setw(7) << s.c_out
       << std::setw(16) << s.mults << std::setw(11) << std::fixed
       << std::setprecision(4) << s.gflops << "\n";
  }
  os << std::left << std::setw(8) << "total" << std::right << std::setw(41)
     << total_mults << std::setw(11) << std::fixed << std::setprecision(4)
     << total_gflops << "\n";
  return os.str();
}

void ComplexityReport::write_csv(std::ostream& os) const {
  os << "variant,stage,grid_h,grid_w,c_in,c_out,mults,gflops\n";
  os << std::setprecision(10);
  for (const StageCost& s : stages)
    os << variant << "," << s.label << "," << s.grid_h << "," << s.grid_w << ","
       << s.c_in << "," << s.c_out << "," << s.mults << "," << s.gflops << "\n";
  os << variant << ",total,,,,," << total_mults << "," << total_gflops << "\n";
}

}  // namespace nervc
