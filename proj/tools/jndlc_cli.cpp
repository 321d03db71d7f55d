#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "jndlc/codec/checkpoint.hpp"
#include "jndlc/codec/image_codec.hpp"
#include "jndlc/core/binary_io.hpp"
#include "jndlc/core/error.hpp"
#include "jndlc/core/kv_config.hpp"
#include "jndlc/core/rng.hpp"
#include "jndlc/data/image_io.hpp"
#include "jndlc/data/synthetic.hpp"
#include "jndlc/metrics/rd_results.hpp"
#include "jndlc/train/evaluate.hpp"
#include "jndlc/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace jndlc;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct TrainArgs {
  std::string preset = "desk";
  std::string config;
  std::vector<std::string> sets;
  std::optional<double> lambda;
  std::optional<std::uint64_t> seed;
  std::optional<int> max_steps;
  std::string labeled;
  std::string unlabeled;
  int toy = 0;
  int proxy_level = 3;
  std::string init;
  std::string out_dir;
};

void add_train_options(CLI::App* sub, TrainArgs& a, bool single) {
  sub->add_option("--preset", a.preset, "Starting configuration: desk or paper")->capture_default_str();
  sub->add_option("--config", a.config, "key = value configuration file")->check(CLI::ExistingFile);
  sub->add_option("--set", a.sets, "Override one key (key=value); repeatable");
  if (single) sub->add_option("--lambda", a.lambda, "Rate-distortion multiplier of this run");
  sub->add_option("--seed", a.seed, "Master seed");
  sub->add_option("--max-steps", a.max_steps, "Stop after this many optimizer steps");
  sub->add_option("--labeled", a.labeled, "Manifest of JND-labeled pairs (JSON lines)");
  sub->add_option("--unlabeled", a.unlabeled, "Manifest of unlabeled images mixed in as proxies");
  sub->add_option("--toy", a.toy, "Train on N generated labeled + N generated unlabeled images instead");
  sub->add_option("--proxy-level", a.proxy_level, "Proxy JND level for --toy labels")->capture_default_str();
  sub->add_option("--init", a.init, "Warm-start checkpoint");
  sub->add_option("--out-dir", a.out_dir, "Directory for checkpoints and logs")->required();
}

TrainConfig build_config(const TrainArgs& a) {
  TrainConfig cfg = TrainConfig::preset(a.preset);
  if (!a.config.empty()) {
    const auto bytes = read_file(a.config);
    for (const auto& kv : parse_key_values(std::string(bytes.begin(), bytes.end()))) {
      if (!cfg.set(kv.key, kv.value)) {
        throw ConfigError(a.config + ":" + std::to_string(kv.line) + ": unknown key '" + kv.key + "'");
      }
    }
  }
  for (const auto& s : a.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    const std::string key = trim(std::string_view(s).substr(0, eq));
    if (!cfg.set(key, trim(std::string_view(s).substr(eq + 1)))) throw ConfigError("unknown key '" + key + "'");
  }
  if (a.lambda) {
    cfg.loss.lambda = *a.lambda;
    cfg.lambdas = {*a.lambda};
  }
  if (a.seed) cfg.seed = *a.seed;
  if (a.max_steps) cfg.max_steps = *a.max_steps;
  cfg.loss.resolve_extractor();
  cfg.validate();
  return cfg;
}

std::unique_ptr<PairSource> build_source(const TrainArgs& a, const TrainConfig& cfg) {
  if (a.toy > 0) {
    if (!a.labeled.empty() || !a.unlabeled.empty()) throw ArgumentError("--toy excludes --labeled/--unlabeled");
    std::vector<SamplePair> pairs;
    const int size = cfg.patch.size;
    for (int i = 0; i < 2 * a.toy; ++i) {
      Tensor x = synth_toy_image(size, size, derive_seed(cfg.seed, 0x70000 + static_cast<std::uint64_t>(i)));
      if (i < a.toy) {
        SamplePair p;
        p.x_j = synth_jnd_proxy(x, a.proxy_level);
        p.x_o = std::move(x);
        p.source = SampleSource::jnd_labeled;
        p.image_id = "toy" + std::to_string(i);
        pairs.push_back(std::move(p));
      } else {
        pairs.push_back(make_proxy_pair(std::move(x), "toy" + std::to_string(i)));
      }
    }
    return std::make_unique<FixedPairSource>(std::move(pairs));
  }
  if (a.labeled.empty()) throw ArgumentError("training needs --labeled (or --toy N)");
  DatasetManifest labeled = DatasetManifest::load(a.labeled);
  DatasetManifest unlabeled = a.unlabeled.empty() ? DatasetManifest{} : DatasetManifest::load(a.unlabeled);
  labeled.check();
  unlabeled.check();
  return std::make_unique<ManifestPairSource>(std::move(labeled), std::move(unlabeled), cfg.patch, cfg.seed);
}

void report_step(const StepLog& s) {
  if (s.step % 50 == 0) {
    std::cerr << "step " << s.step << " rate_bpp " << s.rate_bpp << " distortion " << s.distortion << " loss "
              << s.total_loss << '\n';
  }
}

void print_result(const TrainResult& r, const fs::path& out_dir, int window) {
  const double lambda = r.log.lambda;
  std::cout << "checkpoint=" << (out_dir / checkpoint_name(lambda)).string() << '\n';
  if (!r.log.steps.empty()) {
    std::cout << "lambda=" << format_double(lambda) << " steps=" << r.log.steps.size()
              << " final_smoothed_loss=" << format_double(r.log.smoothed(r.log.steps.size() - 1, window)) << '\n';
  }
}

int run_train(const TrainArgs& a, bool is_sweep) {
  const TrainConfig cfg = build_config(a);
  const auto source = build_source(a, cfg);
  std::optional<Checkpoint> init;
  if (!a.init.empty()) init = load_checkpoint(a.init);
  if (is_sweep) {
    for (const auto& r : sweep(cfg, *source, init, a.out_dir, report_step)) {
      print_result(r, a.out_dir, cfg.smoothing_window);
    }
  } else {
    print_result(train(cfg, *source, init, a.out_dir, report_step), a.out_dir, cfg.smoothing_window);
  }
  return kOk;
}

int run_compress(const std::string& input, const std::string& ckpt, const std::string& output) {
  const Checkpoint ck = load_checkpoint(ckpt);
  const Tensor x = load_image(input);
  const Bitstream bs = compress_image(x, ck.params);
  const auto bytes = bs.serialize();
  write_file_atomic(output, bytes);
  std::cout << "bpp=" << format_double(payload_bpp(bs)) << '\n';
  std::cout << "payload_bytes=" << bs.payload.size() << '\n';
  std::cout << "file_bytes=" << bytes.size() << '\n';
  return kOk;
}

int run_decompress(const std::string& input, const std::string& ckpt, const std::string& output) {
  const Checkpoint ck = load_checkpoint(ckpt);
  const Bitstream bs = Bitstream::parse(read_file(input));
  save_image(decompress_image(bs, ck.params), output);
  std::cout << "width=" << bs.header.image_w << '\n' << "height=" << bs.header.image_h << '\n';
  return kOk;
}

int run_eval(const std::vector<std::string>& ckpts, const std::string& manifest, std::string dataset_id,
             const std::string& method_id, const std::string& output, const std::string& csv) {
  std::vector<Checkpoint> cks;
  for (const auto& p : ckpts) cks.push_back(load_checkpoint(p));
  const DatasetManifest m = DatasetManifest::load(manifest);
  m.check();
  if (dataset_id.empty()) dataset_id = fs::path(manifest).stem().string();
  const RDResults r = evaluate(cks, load_pairs(m), dataset_id, method_id);
  save_results(output, r, csv);
  for (const auto& p : r.points) {
    std::cout << "lambda=" << format_double(p.lambda) << " bpp=" << format_double(p.bpp)
              << " psnr=" << format_double(p.psnr) << " msssim=" << format_double(p.msssim) << '\n';
  }
  return kOk;
}

std::vector<QualityMetric> metrics_of(const std::string& flag) {
  if (flag == "both") return {QualityMetric::psnr, QualityMetric::msssim};
  return {parse_metric(flag)};
}

void emit(const std::string& text, const std::string& output) {
  if (output.empty()) {
    std::cout << text;
  } else {
    write_text_atomic(output, text);
  }
}

int run_bdrate(const std::string& anchor_path, const std::vector<std::string>& tests, const std::string& metric,
               const std::string& output) {
  const RDResults anchor = load_results(anchor_path);
  std::vector<RDResults> rs;
  for (const auto& t : tests) rs.push_back(load_results(t));
  std::ostringstream os;
  os << "method,metric,bdrate_percent\n";
  for (const auto& r : rs) {
    if (r.dataset_id != anchor.dataset_id) {
      std::cerr << "warning: dataset '" << r.dataset_id << "' differs from anchor dataset '" << anchor.dataset_id
                << "'\n";
    }
    for (QualityMetric m : metrics_of(metric)) {
      const double v = bd_rate(anchor.curve(), r.curve(), m);
      os << r.method_id << ',' << to_string(m) << ',' << format_double(v) << '\n';
    }
  }
  emit(os.str(), output);
  return kOk;
}

int run_bsjnd(const std::string& base_path, const std::string& prop_path, const std::string& jnd_path,
              const std::string& metric_flag, const std::string& output) {
  const RDResults base = load_results(base_path);
  const RDResults prop = load_results(prop_path);
  const RDResults labels = jnd_path.empty() ? base : load_results(jnd_path);
  const QualityMetric metric = parse_metric(metric_flag);
  std::ostringstream os;
  os << "image_id,bs_jnd_percent\n";
  double total = 0.0;
  int used = 0;
  int skipped = 0;
  for (const auto& q : labels.jnd) {
    if (q.metric != metric) continue;
    RDCurve bc = base.image_curve(q.image_id);
    RDCurve pc = prop.image_curve(q.image_id);
    if (bc.size() == 0) bc = base.curve();
    if (pc.size() == 0) pc = prop.curve();
    try {
      const double v = bs_jnd(bc, pc, q);
      os << q.image_id << ',' << format_double(v) << '\n';
      total += v;
      ++used;
    } catch (const OutOfRangeError& e) {
      std::cerr << "skipping '" << q.image_id << "': " << e.what() << '\n';
      ++skipped;
    }
  }
  if (used == 0) {
    throw OutOfRangeError("no image has its JND " + to_string(metric) + " within both curves (" +
                          std::to_string(skipped) + " skipped)");
  }
  os << "mean," << format_double(total / used) << '\n';
  os << "skipped," << skipped << '\n';
  emit(os.str(), output);
  return kOk;
}

int run_plotdata(const std::vector<std::string>& inputs, const std::string& output) {
  struct Row {
    std::string method;
    RDPoint p;
  };
  std::vector<Row> rows;
  for (const auto& in : inputs) {
    const RDResults r = load_results(in);
    for (const auto& p : r.points) {
      if (!std::isfinite(p.psnr)) {
        std::cerr << "warning: " << r.method_id << ": dropping point with infinite PSNR\n";
        continue;
      }
      rows.push_back({r.method_id, p});
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return a.method != b.method ? a.method < b.method : a.p.bpp < b.p.bpp;
  });
  std::ostringstream os;
  os << "method,lambda,bpp,psnr,msssim\n";
  for (const auto& r : rows) {
    os << r.method << ',' << format_double(r.p.lambda) << ',' << format_double(r.p.bpp) << ','
       << format_double(r.p.psnr) << ',' << format_double(r.p.msssim) << '\n';
  }
  emit(os.str(), output);
  return kOk;
}

struct SynthArgs {
  std::string input;
  std::string output;
  std::string manifest;
  std::string out_dir;
  std::string out_manifest;
  std::string toy_dir;
  int level = 3;
  int labeled = 8;
  int unlabeled = 8;
  int size = 64;
  std::uint64_t seed = 0;
};

int run_synth(const SynthArgs& a) {
  const int modes = !a.input.empty() + !a.manifest.empty() + !a.toy_dir.empty();
  if (modes != 1) throw ArgumentError("synth-jnd needs exactly one of --input, --manifest or --toy-dir");
  if (!a.input.empty()) {
    if (a.output.empty()) throw ArgumentError("--input needs --output");
    const Tensor x = load_image(a.input);
    const Tensor j = synth_jnd_proxy(x, a.level);
    save_image(j, a.output);
    std::cout << "psnr=" << format_double(psnr(x, load_image(a.output))) << '\n';
    return kOk;
  }
  if (!a.manifest.empty()) {
    if (a.out_dir.empty() || a.out_manifest.empty()) throw ArgumentError("--manifest needs --out-dir and --out-manifest");
    const DatasetManifest src = DatasetManifest::load(a.manifest);
    const DatasetManifest out = synth_label_manifest(src, a.level, a.out_dir);
    out.save(a.out_manifest);
    std::cout << "entries=" << out.size() << '\n';
    return kOk;
  }
  const ToyCorpus c = write_toy_corpus(a.toy_dir, a.labeled, a.unlabeled, a.size, a.size, a.level, a.seed);
  std::cout << "labeled_manifest=" << (fs::path(a.toy_dir) / "labeled.jsonl").string() << '\n';
  std::cout << "unlabeled_manifest=" << (fs::path(a.toy_dir) / "unlabeled.jsonl").string() << '\n';
  std::cout << "labeled=" << c.labeled.size() << " unlabeled=" << c.unlabeled.size() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"jndlc: JND-aware learned image compression lab"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train one model at a single lambda");
  add_train_options(train_cmd, train_args, true);
  TrainArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "Train one model per lambda of the grid");
  add_train_options(sweep_cmd, sweep_args, false);

  std::string c_in, c_ckpt, c_out;
  auto* compress_cmd = app.add_subcommand("compress", "Encode an image to a .jlc bitstream");
  compress_cmd->add_option("--input,-i", c_in, "PNG or PPM image")->required();
  compress_cmd->add_option("--checkpoint,-c", c_ckpt, "Model checkpoint")->required();
  compress_cmd->add_option("--output,-o", c_out, "Bitstream file")->required();

  std::string d_in, d_ckpt, d_out;
  auto* decompress_cmd = app.add_subcommand("decompress", "Decode a .jlc bitstream to an image");
  decompress_cmd->add_option("--input,-i", d_in, "Bitstream file")->required();
  decompress_cmd->add_option("--checkpoint,-c", d_ckpt, "Model checkpoint")->required();
  decompress_cmd->add_option("--output,-o", d_out, "Output image (.png or .ppm)")->required();

  std::vector<std::string> e_ckpts;
  std::string e_manifest, e_dataset, e_method = "method", e_out, e_csv;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate checkpoints into an RD results file");
  eval_cmd->add_option("--checkpoint,-c", e_ckpts, "Checkpoint (repeatable, one RD point each)")->required();
  eval_cmd->add_option("--manifest", e_manifest, "Evaluation manifest")->required();
  eval_cmd->add_option("--dataset-id", e_dataset, "Dataset name (default: manifest file stem)");
  eval_cmd->add_option("--method-id", e_method, "Method name")->capture_default_str();
  eval_cmd->add_option("--output,-o", e_out, "RD results JSON")->required();
  eval_cmd->add_option("--csv", e_csv, "Optional CSV mirror");

  std::string b_anchor, b_metric = "both", b_out;
  std::vector<std::string> b_tests;
  auto* bdrate_cmd = app.add_subcommand("bdrate", "BD-rate of test results against an anchor");
  bdrate_cmd->add_option("--anchor", b_anchor, "Anchor RD results")->required();
  bdrate_cmd->add_option("--test", b_tests, "Test RD results (repeatable)")->required();
  bdrate_cmd->add_option("--metric", b_metric, "psnr, msssim or both")->capture_default_str();
  bdrate_cmd->add_option("--output,-o", b_out, "CSV file (default: standard output)");

  std::string j_base, j_prop, j_labels, j_metric = "psnr", j_out;
  auto* bsjnd_cmd = app.add_subcommand("bsjnd", "Bitrate saving at the JND quality");
  bsjnd_cmd->add_option("--baseline", j_base, "Baseline RD results")->required();
  bsjnd_cmd->add_option("--proposed", j_prop, "Proposed RD results")->required();
  bsjnd_cmd->add_option("--jnd", j_labels, "RD results file holding the JND thresholds (default: baseline)");
  bsjnd_cmd->add_option("--metric", j_metric, "psnr or msssim")->capture_default_str();
  bsjnd_cmd->add_option("--output,-o", j_out, "CSV file (default: standard output)");

  std::vector<std::string> p_inputs;
  std::string p_out;
  auto* plot_cmd = app.add_subcommand("plotdata", "Long-format CSV of RD curves");
  plot_cmd->add_option("inputs", p_inputs, "RD results files")->required();
  plot_cmd->add_option("--output,-o", p_out, "CSV file (default: standard output)");

  SynthArgs s;
  auto* synth_cmd = app.add_subcommand("synth-jnd", "Fabricate proxy JND images or a toy labeled corpus");
  synth_cmd->add_option("--input", s.input, "Single image to degrade");
  synth_cmd->add_option("--output", s.output, "Output image for --input");
  synth_cmd->add_option("--manifest", s.manifest, "Manifest whose originals get proxy JND images");
  synth_cmd->add_option("--out-dir", s.out_dir, "Directory for generated JND images (--manifest)");
  synth_cmd->add_option("--out-manifest", s.out_manifest, "Labeled manifest to write (--manifest)");
  synth_cmd->add_option("--toy-dir", s.toy_dir, "Write a generated toy corpus with manifests here");
  synth_cmd->add_option("--level", s.level, "Proxy level (0 = identity)")->capture_default_str();
  synth_cmd->add_option("--labeled", s.labeled, "Toy labeled images")->capture_default_str();
  synth_cmd->add_option("--unlabeled", s.unlabeled, "Toy unlabeled images")->capture_default_str();
  synth_cmd->add_option("--size", s.size, "Toy image side")->capture_default_str();
  synth_cmd->add_option("--seed", s.seed, "Toy corpus seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*train_cmd) return run_train(train_args, false);
    if (*sweep_cmd) return run_train(sweep_args, true);
    if (*compress_cmd) return run_compress(c_in, c_ckpt, c_out);
    if (*decompress_cmd) return run_decompress(d_in, d_ckpt, d_out);
    if (*eval_cmd) return run_eval(e_ckpts, e_manifest, e_dataset, e_method, e_out, e_csv);
    if (*bdrate_cmd) return run_bdrate(b_anchor, b_tests, b_metric, b_out);
    if (*bsjnd_cmd) return run_bsjnd(j_base, j_prop, j_labels, j_metric, j_out);
    if (*plot_cmd) return run_plotdata(p_inputs, p_out);
    if (*synth_cmd) return run_synth(s);
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumeric;
  } catch (const OutOfRangeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumeric;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
