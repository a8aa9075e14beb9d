#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "easz/container.hpp"
#include "easz/error.hpp"
#include "easz/metrics.hpp"
#include "easz/model.hpp"
#include "easz/pipeline.hpp"
#include "easz/synthetic.hpp"
#include "easz/transport.hpp"

namespace fs = std::filesystem;
using namespace easz;

namespace {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("cannot write " + path);
}

std::string num(double v, int precision = 6) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

struct PipelineFlags {
  PipelineConfig cfg;
  std::string codec = "store";
  std::string mask_mode = "explicit";

  void add(CLI::App* app) {
    app->add_option("--n", cfg.patch_size, "patch size in pixels")->capture_default_str();
    app->add_option("--b", cfg.subpatch_size, "sub-patch size in pixels")->capture_default_str();
    app->add_option("--T", cfg.erased_per_row, "erased sub-patches per mask row (0 = keep all)")->capture_default_str();
    app->add_option("--delta", cfg.intra_delta, "same-row separation must exceed this")->capture_default_str();
    app->add_option("--Delta", cfg.inter_delta, "separation from the previous row must exceed this")
        ->capture_default_str();
    app->add_option("--seed", cfg.seed, "mask sampler seed")->capture_default_str();
    app->add_option("--mask-mode", mask_mode, "explicit (bits in the header) or seed (regenerated)")
        ->check(CLI::IsMember({"explicit", "seed"}))
        ->capture_default_str();
    add_codec(app);
  }

  void add_codec(CLI::App* app) {
    app->add_option("--codec", codec, "payload codec")->check(CLI::IsMember({"store", "external"}))->capture_default_str();
    app->add_option("--codec-cmd", cfg.codec.encode_cmd, "external encode command template ({quality} substituted)");
    app->add_option("--codec-decode-cmd", cfg.codec.decode_cmd, "external decode command template");
    app->add_option("--quality", cfg.codec.quality, "quality passed to the external codec")->capture_default_str();
  }

  PipelineConfig resolve() const {
    PipelineConfig c = cfg;
    c.codec.id = codec == "external" ? CodecId::external : CodecId::store;
    c.mask_mode = mask_mode == "seed" ? MaskMode::seed : MaskMode::explicit_bits;
    return c;
  }
};

std::shared_ptr<const Reconstructor> load_model(const std::string& path) {
  if (path.empty()) return nullptr;
  auto params = load_checkpoint_file(path);
  spdlog::info("loaded checkpoint {} ({} parameters, n={} b={})", path, params.count(), params.config.patch_size(),
               params.config.subpatch_size);
  return std::make_shared<const Reconstructor>(std::move(params));
}

void print_timings(const StageTimings& t) {
  for (std::size_t i = 0; i < kStageCount; ++i) {
    const auto s = static_cast<Stage>(i);
    if (auto v = t.get(s)) std::cout << "stage." << stage_name(s) << "_ms=" << num(*v, 3) << "\n";
  }
}

std::atomic<bool> g_stop{false};

// ---- compress / decompress -------------------------------------------------

int run_compress(const std::string& in, const std::string& out, const PipelineFlags& flags) {
  const Image img = read_raster_file(in);
  const auto cfg = flags.resolve();
  const auto bytes = compress(img, cfg);
  write_file(out, bytes);
  spdlog::info("{}x{}x{} -> {} bytes ({} bpp)", img.orig_height, img.orig_width, img.channels, bytes.size(),
               num(bpp(bytes.size(), img.orig_height, img.orig_width), 4));
  return 0;
}

int run_decompress(const std::string& in, const std::string& out, const std::string& checkpoint,
                   const PipelineFlags& flags) {
  const auto model = load_model(checkpoint);
  const Image img = decompress(read_file(in), model.get(), flags.resolve().codec);
  write_raster_file(out, img);
  spdlog::info("wrote {} ({}x{}x{})", out, img.orig_height, img.orig_width, img.channels);
  return 0;
}

// ---- train -----------------------------------------------------------------

struct TrainFlags {
  std::vector<std::string> data;
  std::size_t synthetic = 0;
  std::string distribution = "gradient";
  std::string init;
  std::string out = "model.ckpt";
  std::size_t patch = 32;
  ModelConfig model;
  TrainConfig train;
  std::size_t log_every = 10;
};

std::vector<Image> training_patches(const TrainFlags& f) {
  std::vector<Image> patches;
  for (const auto& path : f.data) {
    const PatchGrid grid = patchify(read_raster_file(path), f.patch, f.model.subpatch_size);
    for (const auto& p : grid.patches) {
      Image img = Image::blank(f.patch, f.patch, grid.channels);
      img.pixels = p;
      patches.push_back(std::move(img));
    }
  }
  if (f.synthetic > 0) {
    auto extra = f.distribution == "ripple" ? ripple_patches(f.synthetic, f.patch, f.model.channels, f.train.seed)
                                            : gradient_patches(f.synthetic, f.patch, f.model.channels, f.train.seed);
    std::move(extra.begin(), extra.end(), std::back_inserter(patches));
  }
  return patches;
}

int run_train(TrainFlags f) {
  if (f.patch % f.model.subpatch_size != 0) throw ParameterError("--b must divide --n");
  f.model.grid_side = f.patch / f.model.subpatch_size;
  std::optional<ModelParams> init;
  if (!f.init.empty()) {
    init = load_checkpoint_file(f.init);
    f.model = init->config;
    f.patch = f.model.patch_size();
  }
  if (!f.data.empty()) f.model.channels = read_raster_file(f.data.front()).channels;
  const auto patches = training_patches(f);
  if (patches.empty()) throw ParameterError("no training data: pass --data files or --synthetic N");
  spdlog::info("training on {} patches of {}x{}, {} parameters, {} steps", patches.size(), f.patch, f.patch,
               param_count(f.model), f.train.steps);
  const auto t0 = std::chrono::steady_clock::now();
  f.train.on_step = [&](std::size_t step, double loss) {
    if (step % f.log_every == 0 || step + 1 == f.train.steps) {
      const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      spdlog::info("step {} loss {} ({}s)", step, num(loss), num(s, 1));
    }
  };
  const auto result = train(patches, f.model, f.train, init ? &*init : nullptr);
  save_checkpoint_file(f.out, result.params);
  if (!result.loss_trace.empty()) {
    std::cout << "initial_loss=" << num(result.loss_trace.front()) << "\nfinal_loss=" << num(result.loss_trace.back())
              << "\n";
  }
  std::cout << "checkpoint=" << f.out << "\n";
  return 0;
}

// ---- eval ------------------------------------------------------------------

int run_eval(const std::string& a, const std::string& b, const std::string& container, const std::string& baseline) {
  const Image ref = read_raster_file(a), test = read_raster_file(b);
  QualityReport r = compare(ref, test);
  if (!container.empty()) {
    const auto size = fs::file_size(container);
    r.has_rate = true;
    r.bpp = bpp(size, ref.orig_height, ref.orig_width);
    const auto base = baseline.empty() ? store_raster(ref).size() : fs::file_size(baseline);
    r.saving_ratio = saving_ratio(base, size);
  }
  std::cout << format_report(r);
  return 0;
}

// ---- serve / send ----------------------------------------------------------

int run_serve(ServerConfig cfg, const std::string& checkpoint) {
  cfg.model = load_model(checkpoint);
  Server server(std::move(cfg));
  server.start();
  spdlog::info("listening on port {}", server.port());
  std::cout << "port=" << server.port() << std::endl;
  std::signal(SIGINT, [](int) { g_stop = true; });
  std::signal(SIGTERM, [](int) { g_stop = true; });
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  spdlog::info("stopped after {} requests ({} failed)", server.served() + server.failed(), server.failed());
  return 0;
}

int run_send(const std::string& in, const std::string& host, std::uint16_t port, const PipelineFlags& flags) {
  const auto r = edge_send(in, host, port, flags.resolve());
  std::cout << "status=" << (r.status.code == StatusCode::ok ? "ok" : "error") << "\n"
            << "message=" << r.status.message << "\n";
  print_timings(r.status.timings);
  std::cout << "end_to_end_ms=" << num(r.end_to_end_ms, 3) << "\n";
  return r.status.code == StatusCode::ok ? 0 : 1;
}

// ---- bench -----------------------------------------------------------------

struct BenchFlags {
  std::string in;
  std::string synthetic = "256x256";
  std::size_t channels = 1;
  std::vector<std::size_t> Ts{0, 1, 2};
  std::vector<int> qualities;
  std::string checkpoint;
  std::string out;
  bool no_timings = false;
};

int run_bench(const BenchFlags& b, const PipelineFlags& flags) {
  const auto t_load = std::chrono::steady_clock::now();
  Image img;
  if (!b.in.empty()) {
    img = read_raster_file(b.in);
  } else {
    std::size_t h = 0, w = 0;
    if (std::sscanf(b.synthetic.c_str(), "%zux%zu", &h, &w) != 2 || h == 0 || w == 0) {
      throw ParameterError("--synthetic expects HxW, got '" + b.synthetic + "'");
    }
    img = synthetic_scene(h, w, b.channels, 1);
  }
  const double load_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_load).count();
  const auto model = load_model(b.checkpoint);
  auto qualities = b.qualities;
  if (qualities.empty()) qualities.push_back(flags.cfg.codec.quality);

  std::ofstream file;
  if (!b.out.empty()) {
    file.open(b.out);
    if (!file) throw Error("cannot write " + b.out);
  }
  std::ostream& csv = b.out.empty() ? std::cout : file;
  csv << "# easz-bench v1\n";
  csv << "T,quality,codec,bytes,bpp,psnr,ssim,saving_ratio";
  if (!b.no_timings) {
    for (std::size_t i = 0; i < kStageCount; ++i) csv << "," << stage_name(static_cast<Stage>(i)) << "_ms";
  }
  csv << "\n";

  for (int q : qualities) {
    PipelineConfig base = flags.resolve();
    base.codec.quality = q;
    base.erased_per_row = 0;
    const auto baseline_bytes = compress(img, base).size();
    for (std::size_t T : b.Ts) {
      PipelineConfig cfg = base;
      cfg.erased_per_row = T;
      StageTimings t;
      t.set(Stage::load, load_ms);
      const auto container = compress(img, cfg, &t);
      // Frame through an in-memory stream so the transmit column covers
      // framing cost without a network.
      const auto t_tx = std::chrono::steady_clock::now();
      MemoryStream wire;
      frame_write(wire, container);
      const auto received = frame_read(wire);
      t.set(Stage::transmit, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_tx).count());
      const Image out = decompress(received, model.get(), cfg.codec, &t);
      const auto r = compare(img, out);
      csv << T << "," << q << "," << flags.codec << "," << container.size() << ","
          << num(bpp(container.size(), img.orig_height, img.orig_width)) << "," << num(r.psnr) << "," << num(r.ssim)
          << "," << num(saving_ratio(baseline_bytes, container.size()));
      if (!b.no_timings) {
        for (const auto& v : t.ms) csv << "," << num(v.value_or(0.0), 3);
      }
      csv << "\n";
    }
  }
  return 0;
}

// ---- cost ------------------------------------------------------------------

constexpr const char* kCostHelp =
    "Attention cost estimator (multiply units, excluding the d_model factor).\n"
    "pixel_token = (h*w)^2; two_stage = (h*w/n^2) * ((n/b)^2)^2 = h*w*n^2/b^4.\n"
    "Note: for h=w=256, n=32, b=4 the formula gives 262,144 (a 16,384x reduction).\n"
    "A worked figure of 1,048,576 (4,096x) is sometimes quoted for these inputs; it does\n"
    "not follow from the formula and is not reproduced here.";

int run_cost(std::uint64_t h, std::uint64_t w, std::uint64_t n, std::uint64_t b) {
  const auto c = attn_cost(h, w, n, b);
  std::cout << "pixel_token=" << c.pixel_token << "\ntwo_stage=" << c.two_stage << "\nreduction=" << num(c.reduction, 3)
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  // Logs go to stderr; stdout carries key=value and CSV output.
  spdlog::set_default_logger(spdlog::stderr_color_mt("easz"));
  const char* level = std::getenv("EASZ_LOG");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::warn);

  CLI::App app{"Erase-and-squeeze image coding toolkit"};
  app.require_subcommand(1);

  std::string in, out, checkpoint, container, baseline;
  PipelineFlags pflags;

  auto* c = app.add_subcommand("compress", "image -> .easz container");
  c->add_option("input", in, "PGM/PPM image")->required()->check(CLI::ExistingFile);
  c->add_option("--out,-o", out, "container path")->required();
  pflags.add(c);

  auto* d = app.add_subcommand("decompress", "container (+ checkpoint) -> PGM/PPM image");
  d->add_option("input", in, "container")->required()->check(CLI::ExistingFile);
  d->add_option("--out,-o", out, "raster path")->required();
  d->add_option("--checkpoint", checkpoint, "model checkpoint; without one erased areas stay zero");
  pflags.add_codec(d);

  TrainFlags tflags;
  tflags.train.steps = 100;
  tflags.train.batch = 64;
  tflags.model.d_model = 32;
  tflags.model.heads = 2;
  auto* t = app.add_subcommand("train", "train or fine-tune a reconstruction model");
  t->add_option("--data", tflags.data, "PGM/PPM images cut into n x n patches")->check(CLI::ExistingFile);
  t->add_option("--synthetic", tflags.synthetic, "add N synthetic patches")->capture_default_str();
  t->add_option("--distribution", tflags.distribution, "synthetic patch family")
      ->check(CLI::IsMember({"gradient", "ripple"}))
      ->capture_default_str();
  t->add_option("--init", tflags.init, "continue from this checkpoint (its config wins)");
  t->add_option("--out,-o", tflags.out, "checkpoint path")->capture_default_str();
  t->add_option("--n", tflags.patch, "patch size")->capture_default_str();
  t->add_option("--b", tflags.model.subpatch_size, "sub-patch size")->capture_default_str();
  t->add_option("--channels", tflags.model.channels, "channels for synthetic data")->capture_default_str();
  t->add_option("--d-model", tflags.model.d_model, "embedding width")->capture_default_str();
  t->add_option("--heads", tflags.model.heads, "attention heads")->capture_default_str();
  t->add_option("--ffn", tflags.model.ffn_multiplier, "feedforward width multiplier")->capture_default_str();
  t->add_option("--enc", tflags.model.encoder_blocks, "encoder blocks")->capture_default_str();
  t->add_option("--dec", tflags.model.decoder_blocks, "decoder blocks")->capture_default_str();
  t->add_option("--steps", tflags.train.steps, "optimizer steps")->capture_default_str();
  t->add_option("--batch", tflags.train.batch, "patches per step")->capture_default_str();
  t->add_option("--lr", tflags.train.learning_rate, "learning rate")->capture_default_str();
  t->add_option("--wd", tflags.train.weight_decay, "decoupled weight decay")->capture_default_str();
  t->add_option("--erase-ratio", tflags.train.erase_ratio, "fraction of each mask row erased")->capture_default_str();
  t->add_option("--delta", tflags.train.intra_delta, "training mask same-row separation")->capture_default_str();
  t->add_option("--Delta", tflags.train.inter_delta, "training mask previous-row separation")->capture_default_str();
  t->add_option("--seed", tflags.train.seed, "initialisation, data and mask seed")->capture_default_str();
  t->add_option("--log-every", tflags.log_every, "log loss every N steps")->capture_default_str();

  std::string eval_b;
  auto* e = app.add_subcommand("eval", "quality report for two rasters as key=value lines");
  e->add_option("reference", in, "reference image")->required()->check(CLI::ExistingFile);
  e->add_option("candidate", eval_b, "image to score")->required()->check(CLI::ExistingFile);
  e->add_option("--container", container, "also report bpp and saving ratio for this container")
      ->check(CLI::ExistingFile);
  e->add_option("--baseline", baseline, "baseline file for the saving ratio (default: reference as PGM/PPM)")
      ->check(CLI::ExistingFile);

  ServerConfig scfg;
  std::string out_dir = ".";
  auto* s = app.add_subcommand("serve", "receive containers over TCP and write reconstructions");
  s->add_option("--host", scfg.host, "bind address")->capture_default_str();
  s->add_option("--port", scfg.port, "port (0 = any free port)")->capture_default_str();
  s->add_option("--checkpoint", checkpoint, "model checkpoint");
  s->add_option("--out-dir", out_dir, "where reconstructions are written")->capture_default_str();
  s->add_option("--codec-decode-cmd", scfg.codec.decode_cmd, "external decode command template");
  s->add_option("--quality", scfg.codec.quality, "quality substituted into the decode command")->capture_default_str();

  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  auto* se = app.add_subcommand("send", "compress an image and send it to a server");
  se->add_option("input", in, "PGM/PPM image")->required()->check(CLI::ExistingFile);
  se->add_option("--host", host, "server host")->capture_default_str();
  se->add_option("--port", port, "server port")->required();
  pflags.add(se);

  BenchFlags bflags;
  auto* be = app.add_subcommand("bench", "sweep T and quality, emit CSV");
  be->add_option("--in", bflags.in, "PGM/PPM image (default: synthetic scene)")->check(CLI::ExistingFile);
  be->add_option("--synthetic", bflags.synthetic, "synthetic scene size HxW")->capture_default_str();
  be->add_option("--channels", bflags.channels, "synthetic scene channels")->capture_default_str();
  be->add_option("--Ts", bflags.Ts, "T values to sweep")->delimiter(',')->capture_default_str();
  be->add_option("--qualities", bflags.qualities, "quality values to sweep")->delimiter(',');
  be->add_option("--checkpoint", bflags.checkpoint, "model checkpoint");
  be->add_option("--out,-o", bflags.out, "CSV path (default stdout)");
  be->add_flag("--no-timings", bflags.no_timings, "omit timing columns so output is reproducible");
  pflags.add(be);

  std::uint64_t ch = 256, cw = 256, cn = 32, cb = 4;
  auto* co = app.add_subcommand("cost", kCostHelp);
  co->footer(kCostHelp);
  co->add_option("--height", ch, "image height")->capture_default_str();
  co->add_option("--width", cw, "image width")->capture_default_str();
  co->add_option("--n", cn, "patch size")->capture_default_str();
  co->add_option("--b", cb, "sub-patch size")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*c) return run_compress(in, out, pflags);
    if (*d) return run_decompress(in, out, checkpoint, pflags);
    if (*t) return run_train(tflags);
    if (*e) return run_eval(in, eval_b, container, baseline);
    if (*s) {
      scfg.out_dir = out_dir;
      return run_serve(scfg, checkpoint);
    }
    if (*se) return run_send(in, host, port, pflags);
    if (*be) return run_bench(bflags, pflags);
    if (*co) return run_cost(ch, cw, cn, cb);
  } catch (const std::exception& ex) {
    spdlog::error("{}", ex.what());
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
