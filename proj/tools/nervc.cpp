// Copyright 2026 The nervc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Subcommands cover the full workflow: ingest-check,
// analyze, train, distill, quantize, qat, evaluate, benchmark, decode.
//
// Exit codes: 0 success, 1 runtime failure, 2 bad input data, 3 bad
// configuration, 4 I/O failure, 5 usage error, 6 malformed file format.

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nervc/checkpoint.hpp"
#include "nervc/complexity.hpp"
#include "nervc/dataset.hpp"
#include "nervc/errors.hpp"
#include "nervc/metrics.hpp"
#include "nervc/model.hpp"
#include "nervc/pipeline.hpp"
#include "nervc/quant.hpp"
#include "nervc/variant.hpp"

namespace fs = std::filesystem;
using namespace nervc;

namespace {

// ---------------------------------------------------------------------------
// Shared plumbing

// Relative output paths land under $NERVC_OUTPUT_ROOT when it is set.
fs::path out_path(const std::string& p) {
  const fs::path path(p);
  if (path.is_absolute()) return path;
  if (const char* root = std::getenv("NERVC_OUTPUT_ROOT"); root && *root)
    return fs::path(root) / path;
  return path;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io_error("cannot create directory", dir.string());
}

VariantConfig resolve_variant(const std::string& spec) {
  std::error_code ec;
  if (fs::is_regular_file(spec, ec)) return load_variant_file(spec);
  return make_variant(spec);
}

std::vector<std::size_t> parse_size_list(const std::string& s, const char* what) {
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
      throw config_error(std::string(what) + ": bad entry '" + item + "'");
    }
  }
  if (out.empty()) throw config_error(std::string(what) + ": empty list");
  return out;
}

std::vector<float> parse_time_list(const std::string& s) {
  std::vector<float> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(item, &pos);
      if (pos != item.size()) throw std::invalid_argument(item);
      out.push_back(static_cast<float>(v));
    } catch (const std::exception&) {
      throw config_error("--times: bad entry '" + item + "'");
    }
  }
  if (out.empty()) throw config_error("--times: empty list");
  return out;
}

// A key=value run file applied after flag parsing, so its settings win over
// anything given on the command line. Keys are the long option names without
// the leading dashes.
class ConfigKeys {
 public:
  void add(const std::string& key, std::function<void(const std::string&)> set) {
    setters_[key] = std::move(set);
  }

  void number(const std::string& key, std::size_t* v) {
    add(key, [key, v](const std::string& s) {
      try {
        std::size_t pos = 0;
        *v = static_cast<std::size_t>(std::stoull(s, &pos));
        if (pos != s.size()) throw std::invalid_argument(s);
      } catch (const std::exception&) {
        throw config_error("config key '" + key + "': bad number '" + s + "'");
      }
    });
  }

  void number(const std::string& key, int* v) {
    add(key, [key, v](const std::string& s) {
      try {
        std::size_t pos = 0;
        *v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
      } catch (const std::exception&) {
        throw config_error("config key '" + key + "': bad number '" + s + "'");
      }
    });
  }

  void number(const std::string& key, double* v) {
    add(key, [key, v](const std::string& s) {
      try {
        std::size_t pos = 0;
        *v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
      } catch (const std::exception&) {
        throw config_error("config key '" + key + "': bad number '" + s + "'");
      }
    });
  }

  void text(const std::string& key, std::string* v) {
    add(key, [v](const std::string& s) { *v = s; });
  }

  void flag(const std::string& key, bool* v) {
    add(key, [key, v](const std::string& s) {
      if (s == "true" || s == "1" || s == "yes" || s == "on")
        *v = true;
      else if (s == "false" || s == "0" || s == "no" || s == "off")
        *v = false;
      else
        throw config_error("config key '" + key + "': bad boolean '" + s + "'");
    });
  }

  void apply_file(const std::string& path) const {
    std::ifstream is(path);
    if (!is) throw io_error("cannot open config file", path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto strip = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
      };
      if (strip(line).empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw config_error(path + ":" + std::to_string(lineno) +
                           ": expected key=value");
      const std::string key = strip(line.substr(0, eq));
      const std::string val = strip(line.substr(eq + 1));
      const auto it = setters_.find(key);
      if (it == setters_.end())
        throw config_error(path + ":" + std::to_string(lineno) +
                           ": unknown config key '" + key + "'");
      it->second(val);
    }
  }

 private:
  std::map<std::string, std::function<void(const std::string&)>> setters_;
};

// ---------------------------------------------------------------------------
// Option bundles shared by the training-family subcommands

struct TrainFlags {
  std::string data;
  std::string variant = "T-desk";
  std::string out = "run-out";
  std::string config;
  std::uint64_t seed = 1;
  std::size_t steps = 300;
  std::size_t batch = 1;
  std::size_t log_every = 25;
  std::size_t snapshot_every = 0;
  double lr = 5e-4;
  double beta = 0.7;
  bool quiet = false;
};

struct KdFlags {
  std::string teacher;
  std::string mode = "final";
  std::string stages;
  double lambda = 1.0;
  double alpha = 2.0;
  double gamma = 1.0;
  double sigma = 1.0;
  std::size_t radius = 3;
  std::size_t delta = 1;
};

void add_train_flags(CLI::App* cmd, TrainFlags* f, ConfigKeys* keys,
                     bool data_required = true) {
  auto* data = cmd->add_option("--data", f->data, "Clip to fit (PPM dir, raw dir, or one .ppm)");
  if (data_required) data->required();
  cmd->add_option("--variant", f->variant, "Builtin variant name or variant file");
  cmd->add_option("--out", f->out, "Output directory");
  cmd->add_option("--seed", f->seed, "Run seed (init and shuffle)");
  cmd->add_option("--steps", f->steps, "Optimizer step budget");
  cmd->add_option("--batch", f->batch, "Frames per optimizer step");
  cmd->add_option("--lr", f->lr, "Peak learning rate (cosine-decayed)");
  cmd->add_option("--beta", f->beta, "L1 weight in the reconstruction loss");
  cmd->add_option("--log-every", f->log_every, "Progress print interval");
  cmd->add_option("--snapshot-every", f->snapshot_every,
                  "Also save checkpoint_stepNNNNNN.nrvc every N steps (0 = off)");
  cmd->add_flag("--quiet", f->quiet, "Suppress progress output");
  cmd->add_option("--config", f->config,
                  "key=value run file; its settings override the flags");

  keys->text("data", &f->data);
  keys->text("variant", &f->variant);
  keys->text("out", &f->out);
  keys->number("seed", &f->seed);
  keys->number("steps", &f->steps);
  keys->number("batch", &f->batch);
  keys->number("lr", &f->lr);
  keys->number("beta", &f->beta);
  keys->number("log-every", &f->log_every);
  keys->number("snapshot-every", &f->snapshot_every);
  keys->flag("quiet", &f->quiet);
}

void add_kd_flags(CLI::App* cmd, KdFlags* f, ConfigKeys* keys,
                  bool teacher_required = true) {
  auto* teacher = cmd->add_option("--teacher", f->teacher, "Teacher checkpoint");
  if (teacher_required) teacher->required();
  cmd->add_option("--kd-mode", f->mode,
                  "none|final|freq|freq_focal|temporal|feature");
  cmd->add_option("--lambda", f->lambda, "Teacher-term weight");
  cmd->add_option("--alpha", f->alpha, "High-band weight (freq modes)");
  cmd->add_option("--gamma", f->gamma, "Focal exponent (freq_focal)");
  cmd->add_option("--sigma", f->sigma, "Band-split Gaussian std, pixels");
  cmd->add_option("--radius", f->radius, "Band-split kernel radius, taps");
  cmd->add_option("--delta", f->delta, "Temporal lag, frames");
  cmd->add_option("--stages", f->stages,
                  "Feature-KD blocks, e.g. 2,3 (default: all after the first)");

  keys->text("teacher", &f->teacher);
  keys->text("kd-mode", &f->mode);
  keys->number("lambda", &f->lambda);
  keys->number("alpha", &f->alpha);
  keys->number("gamma", &f->gamma);
  keys->number("sigma", &f->sigma);
  keys->number("radius", &f->radius);
  keys->number("delta", &f->delta);
  keys->text("stages", &f->stages);
}

KDConfig kd_from_flags(const KdFlags& f) {
  KDConfig kd;
  kd.mode = KDConfig::parse_mode(f.mode);
  kd.lambda_kd = f.lambda;
  kd.alpha = f.alpha;
  kd.gamma = f.gamma;
  kd.sigma = f.sigma;
  kd.kernel_radius = f.radius;
  kd.delta = f.delta;
  if (!f.stages.empty()) kd.feature_stages = parse_size_list(f.stages, "--stages");
  kd.validate();
  return kd;
}

// ---------------------------------------------------------------------------
// Run helpers

struct RunOutputs {
  fs::path dir;
  std::ofstream step_csv;
};

RunOutputs open_run_dir(const TrainFlags& f) {
  RunOutputs r;
  r.dir = out_path(f.out);
  ensure_dir(r.dir);
  r.step_csv.open(r.dir / "steps.csv");
  if (!r.step_csv) throw io_error("cannot create step log", (r.dir / "steps.csv").string());
  return r;
}

TrainOptions options_from_flags(const TrainFlags& f, RunOutputs& out) {
  TrainOptions opt;
  opt.seed = f.seed;
  opt.steps = f.steps;
  opt.batch = f.batch;
  opt.lr = f.lr;
  opt.beta = f.beta;
  opt.log_every = f.log_every;
  opt.step_csv = &out.step_csv;
  if (!f.quiet) opt.progress = &std::cout;
  if (f.snapshot_every != 0) {
    opt.snapshot_every = f.snapshot_every;
    opt.on_snapshot = [dir = out.dir](std::size_t step, ModelParams& p) {
      char name[40];
      std::snprintf(name, sizeof(name), "checkpoint_step%06zu.nrvc", step);
      Checkpoint::from_params(p).save((dir / name).string());
    };
  }
  return opt;
}

void finish_run(const TrainFlags& f, const TrainStats& stats, ModelParams& params,
                const VideoDataset& data, RunOutputs& out) {
  Checkpoint cp = Checkpoint::from_params(params);
  cp.meta["seed"] = std::to_string(f.seed);
  cp.meta["steps"] = std::to_string(stats.steps);
  {
    std::ostringstream s;
    s << std::setprecision(10) << stats.final_loss;
    cp.meta["final_loss"] = s.str();
  }
  cp.save((out.dir / "checkpoint.nrvc").string());

  const MetricReport report = evaluate(params, data);
  std::ofstream mcsv(out.dir / "metrics.csv");
  if (!mcsv) throw io_error("cannot create metrics file", (out.dir / "metrics.csv").string());
  report.write_csv(mcsv);
  if (!f.quiet) std::cout << "\n" << report.table();
  std::cout << "checkpoint: " << (out.dir / "checkpoint.nrvc").string() << "\n";
}

ModelParams load_params(const std::string& path) {
  return Checkpoint::load(path).to_params();
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_ingest_check(const std::string& path) {
  const VideoDataset ds = ingest(path);
  float lo = 1.0f, hi = 0.0f;
  for (const Tensor& fr : ds.frames)
    for (std::size_t i = 0; i < fr.size(); ++i) {
      lo = std::min(lo, fr[i]);
      hi = std::max(hi, fr[i]);
    }
  std::cout << path << ": " << ds.count() << " frames, " << ds.width << "x"
            << ds.height << ", t in [" << ds.times.front() << ", "
            << ds.times.back() << "], pixel range [" << lo << ", " << hi << "]\n";
  return 0;
}

int cmd_analyze(const std::string& variant, std::size_t scale,
                const std::string& csv) {
  const VariantConfig cfg = resolve_variant(variant);
  const ComplexityReport report = analyze(cfg, scale);
  std::cout << report.table();
  if (!csv.empty()) {
    const fs::path p = out_path(csv);
    std::ofstream os(p);
    if (!os) throw io_error("cannot create CSV", p.string());
    report.write_csv(os);
    std::cout << "wrote " << p.string() << "\n";
  }
  return 0;
}

int cmd_train(const TrainFlags& f) {
  const VariantConfig cfg = resolve_variant(f.variant);
  const VideoDataset data = ingest(f.data);
  RunOutputs out = open_run_dir(f);
  TrainOptions opt = options_from_flags(f, out);
  ModelParams params = ModelParams::init(cfg, f.seed);
  const TrainStats stats = train_model(data, params, opt);
  finish_run(f, stats, params, data, out);
  return 0;
}

int cmd_distill(const TrainFlags& f, const KdFlags& k) {
  const VariantConfig cfg = resolve_variant(f.variant);
  const VideoDataset data = ingest(f.data);
  const ModelParams teacher = load_params(k.teacher);
  RunOutputs out = open_run_dir(f);
  TrainOptions opt = options_from_flags(f, out);
  opt.kd = kd_from_flags(k);
  ModelParams params = ModelParams::init(cfg, f.seed);
  const TrainStats stats = train_model(data, params, opt, &teacher);
  finish_run(f, stats, params, data, out);
  return 0;
}

int cmd_quantize(const std::string& in, const std::string& out_file, int bits,
                 bool per_tensor) {
  Checkpoint src = Checkpoint::load(in);
  if (src.quantized)
    throw usage_error(in + " is already quantized; quantize takes an fp32 checkpoint");
  QuantPolicy policy;
  policy.bits = bits;
  policy.per_channel = !per_tensor;
  policy.validate();

  ModelParams params = src.to_params();
  Checkpoint dst = Checkpoint::from_params_quantized(params, policy);
  dst.meta = src.meta;
  dst.meta["quantized_from"] = fs::path(in).filename().string();
  const fs::path out = out_path(out_file);
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  dst.save(out.string());

  const double ratio = static_cast<double>(dst.payload_bytes()) /
                       static_cast<double>(src.payload_bytes());
  std::cout << "fp32 payload  " << src.payload_bytes() << " bytes\n"
            << "int" << bits << " payload  " << dst.payload_bytes()
            << " bytes (ratio " << std::fixed << std::setprecision(4) << ratio
            << ", ideal " << std::setprecision(4) << bits / 32.0 << ")\n"
            << "calibration   " << dst.calibration_bytes() << " bytes\n"
            << "wrote " << out.string() << "\n";
  return 0;
}

int cmd_qat(const TrainFlags& f, const KdFlags& k, const std::string& in,
            int bits, bool per_tensor, bool use_kd) {
  const VideoDataset data = ingest(f.data);
  ModelParams params = load_params(in);

  RunOutputs out = open_run_dir(f);
  TrainOptions opt = options_from_flags(f, out);
  opt.qat = true;
  opt.quant.bits = bits;
  opt.quant.per_channel = !per_tensor;
  opt.quant.validate();

  const ModelParams* teacher_ptr = nullptr;
  ModelParams teacher;
  if (use_kd) {
    opt.kd = kd_from_flags(k);
    if (opt.kd.mode != KDConfig::Mode::none) {
      if (k.teacher.empty())
        throw usage_error("qat with a KD mode needs --teacher");
      teacher = load_params(k.teacher);
      teacher_ptr = &teacher;
    }
  }

  const TrainStats stats = train_model(data, params, opt, teacher_ptr);

  // Master weights, then the deployable quantized file.
  Checkpoint fp = Checkpoint::from_params(params);
  fp.meta["seed"] = std::to_string(f.seed);
  fp.meta["steps"] = std::to_string(stats.steps);
  fp.save((out.dir / "checkpoint.nrvc").string());

  Checkpoint q = Checkpoint::from_params_quantized(params, opt.quant);
  q.meta = fp.meta;
  char qname[32];
  std::snprintf(qname, sizeof(qname), "checkpoint_int%d.nrvc", bits);
  q.save((out.dir / qname).string());

  const MetricReport report = evaluate(q.to_params(), data, "qat-int" + std::to_string(bits));
  std::ofstream mcsv(out.dir / "metrics.csv");
  if (!mcsv) throw io_error("cannot create metrics file", (out.dir / "metrics.csv").string());
  report.write_csv(mcsv);
  if (!f.quiet) std::cout << "\n" << report.table();
  std::cout << "checkpoint: " << (out.dir / qname).string() << "\n";
  return 0;
}

int cmd_evaluate(const std::string& ckpt, const std::string& data_path,
                 const std::string& csv, const std::string& label) {
  const ModelParams params = load_params(ckpt);
  const VideoDataset data = ingest(data_path);
  const MetricReport report = evaluate(params, data, label);
  std::cout << report.table();
  if (!csv.empty()) {
    const fs::path p = out_path(csv);
    if (p.has_parent_path()) ensure_dir(p.parent_path());
    std::ofstream os(p);
    if (!os) throw io_error("cannot create CSV", p.string());
    report.write_csv(os);
    std::cout << "wrote " << p.string() << "\n";
  }
  return 0;
}

int cmd_benchmark(const std::string& ckpt, const std::string& variant,
                  std::uint64_t seed, std::size_t frames, std::size_t warmup,
                  std::size_t runs) {
  if (ckpt.empty() == variant.empty())
    throw usage_error("benchmark needs exactly one of --ckpt or --variant");
  ModelParams params = ckpt.empty() ? ModelParams::init(resolve_variant(variant), seed)
                                    : load_params(ckpt);
  const BenchmarkResult r = benchmark_decode(params, frames, warmup, runs);
  std::cout << r.table();
  return 0;
}

int cmd_decode(const std::string& ckpt, const std::string& out_dir,
               std::size_t frames, const std::string& times_arg) {
  if ((frames == 0) == times_arg.empty())
    throw usage_error("decode needs exactly one of --frames or --times");
  const ModelParams params = load_params(ckpt);
  const std::vector<float> times =
      times_arg.empty() ? frame_times(frames) : parse_time_list(times_arg);
  for (float t : times)
    if (t < 0.0f || t > 1.0f)
      throw input_error("decode index " + std::to_string(t) + " outside [0,1]");
  const fs::path dir = out_path(out_dir);
  save_frames_ppm(dir.string(), decode_frames(params, times));
  std::cout << "wrote " << times.size() << " frames to " << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::ostringstream variants;
  for (const auto& n : builtin_variant_names()) variants << " " << n;

  CLI::App app{"nervc: video-as-network-weights workbench"};
  app.require_subcommand(1);

  // ingest-check
  std::string ic_path;
  auto* ingest_cmd = app.add_subcommand("ingest-check", "Validate and describe a clip");
  ingest_cmd->add_option("path", ic_path, "Clip path")->required();

  // analyze
  std::string an_variant = "T", an_csv;
  std::size_t an_scale = 1;
  auto* an_cmd = app.add_subcommand("analyze", "Per-stage compute and parameter report");
  an_cmd->add_option("--variant", an_variant, "Builtin name (" + variants.str() + " ) or file");
  an_cmd->add_option("--scale", an_scale, "Seed-grid multiplier");
  an_cmd->add_option("--csv", an_csv, "Also write the table as CSV");

  // train
  TrainFlags tr;
  ConfigKeys tr_keys;
  auto* tr_cmd = app.add_subcommand("train", "Fit a model to a clip");
  add_train_flags(tr_cmd, &tr, &tr_keys);

  // distill
  TrainFlags di;
  KdFlags di_kd;
  ConfigKeys di_keys;
  auto* di_cmd = app.add_subcommand("distill", "Fit a student against a frozen teacher");
  add_train_flags(di_cmd, &di, &di_keys);
  add_kd_flags(di_cmd, &di_kd, &di_keys);

  // quantize
  std::string qz_in, qz_out = "checkpoint_quant.nrvc";
  int qz_bits = 8;
  bool qz_per_tensor = false;
  auto* qz_cmd = app.add_subcommand("quantize", "Post-training quantization of a checkpoint");
  qz_cmd->add_option("--in", qz_in, "fp32 checkpoint")->required();
  qz_cmd->add_option("--out", qz_out, "Quantized checkpoint to write");
  qz_cmd->add_option("--bits", qz_bits, "Code width, 2..8");
  qz_cmd->add_flag("--per-tensor", qz_per_tensor, "One range per tensor instead of per channel");

  // qat
  TrainFlags qa;
  KdFlags qa_kd;
  ConfigKeys qa_keys;
  std::string qa_in;
  int qa_bits = 8;
  bool qa_per_tensor = false;
  auto* qa_cmd = app.add_subcommand("qat", "Quantization-aware fine-tune from a checkpoint");
  add_train_flags(qa_cmd, &qa, &qa_keys);
  add_kd_flags(qa_cmd, &qa_kd, &qa_keys, /*teacher_required=*/false);
  qa_cmd->get_option("--kd-mode")->default_str("none");
  qa_kd.mode = "none";
  qa_cmd->add_option("--in", qa_in, "Base fp32 checkpoint")->required();
  qa_cmd->add_option("--bits", qa_bits, "Code width, 2..8");
  qa_cmd->add_flag("--per-tensor", qa_per_tensor, "One range per tensor instead of per channel");
  qa_keys.number("bits", &qa_bits);
  qa_keys.flag("per-tensor", &qa_per_tensor);
  qa_keys.text("in", &qa_in);

  // evaluate
  std::string ev_ckpt, ev_data, ev_csv, ev_label;
  auto* ev_cmd = app.add_subcommand("evaluate", "Decode a clip and report quality metrics");
  ev_cmd->add_option("--ckpt", ev_ckpt, "Checkpoint (fp32 or quantized)")->required();
  ev_cmd->add_option("--data", ev_data, "Ground-truth clip")->required();
  ev_cmd->add_option("--csv", ev_csv, "Also write per-frame rows as CSV");
  ev_cmd->add_option("--label", ev_label, "Report label");

  // benchmark
  std::string bm_ckpt, bm_variant;
  std::uint64_t bm_seed = 1;
  std::size_t bm_frames = 4, bm_warmup = 1, bm_runs = 3;
  auto* bm_cmd = app.add_subcommand("benchmark", "Wall-clock decode throughput");
  bm_cmd->add_option("--ckpt", bm_ckpt, "Checkpoint to time");
  bm_cmd->add_option("--variant", bm_variant, "Or: time a fresh init of this variant");
  bm_cmd->add_option("--seed", bm_seed, "Init seed with --variant");
  bm_cmd->add_option("--frames", bm_frames, "Frames per run");
  bm_cmd->add_option("--warmup", bm_warmup, "Warmup passes (>= 1)");
  bm_cmd->add_option("--runs", bm_runs, "Timed runs (median reported)");

  // decode
  std::string dc_ckpt, dc_out = "decoded", dc_times;
  std::size_t dc_frames = 0;
  auto* dc_cmd = app.add_subcommand("decode", "Decode frames to PPM files");
  dc_cmd->add_option("--ckpt", dc_ckpt, "Checkpoint")->required();
  dc_cmd->add_option("--out", dc_out, "Output directory");
  dc_cmd->add_option("--frames", dc_frames, "Decode N frames at t = i/(N-1)");
  dc_cmd->add_option("--times", dc_times, "Comma-separated decode indices in [0,1]");

  try {
    app.parse(argc, argv);

    if (*ingest_cmd) return cmd_ingest_check(ic_path);
    if (*an_cmd) return cmd_analyze(an_variant, an_scale, an_csv);
    if (*tr_cmd) {
      if (!tr.config.empty()) tr_keys.apply_file(tr.config);
      return cmd_train(tr);
    }
    if (*di_cmd) {
      if (!di.config.empty()) di_keys.apply_file(di.config);
      return cmd_distill(di, di_kd);
    }
    if (*qz_cmd) return cmd_quantize(qz_in, qz_out, qz_bits, qz_per_tensor);
    if (*qa_cmd) {
      if (!qa.config.empty()) qa_keys.apply_file(qa.config);
      return cmd_qat(qa, qa_kd, qa_in, qa_bits, qa_per_tensor,
                     qa_kd.mode != "none" || !qa_kd.teacher.empty());
    }
    if (*ev_cmd) return cmd_evaluate(ev_ckpt, ev_data, ev_csv, ev_label);
    if (*bm_cmd)
      return cmd_benchmark(bm_ckpt, bm_variant, bm_seed, bm_frames, bm_warmup, bm_runs);
    if (*dc_cmd) return cmd_decode(dc_ckpt, dc_out, dc_frames, dc_times);
    return 5;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
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
