#include <doctest.h>

#include <cmath>

#include "jndlc/codec/checkpoint.hpp"
#include "jndlc/codec/image_codec.hpp"
#include "jndlc/core/kv_config.hpp"
#include "jndlc/core/error.hpp"
#include "jndlc/data/synthetic.hpp"
#include "jndlc/metrics/metrics.hpp"
#include "jndlc/train/evaluate.hpp"
#include "jndlc/train/optimizer.hpp"
#include "jndlc/train/trainer.hpp"
#include "test_support.hpp"

using namespace jndlc;

namespace {

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.set("hidden_channels", "8");
  cfg.set("latent_channels", "6");
  cfg.set("downsampling", "4");
  cfg.set("patch_size", "16");
  cfg.set("batch_size", "2");
  cfg.set("learning_rate", "1e-3");
  cfg.set("entropy_init_scale", "1");
  cfg.set("seed", "5");
  return cfg;
}

std::vector<SamplePair> toy_pairs(int n, int size, int level) {
  std::vector<SamplePair> out;
  for (int i = 0; i < n; ++i) {
    SamplePair p;
    p.x_o = synth_toy_image(size, size, 100 + i);
    p.x_j = synth_jnd_proxy(p.x_o, level);
    p.image_id = "toy" + std::to_string(i);
    out.push_back(p);
  }
  return out;
}

}  // namespace

TEST_SUITE("optimizer") {
  TEST_CASE("first adam step moves each coordinate by the learning rate") {
    std::vector<double> p{1.0, -2.0, 3.0};
    std::vector<double> g{0.5, -4.0, 1e-3};
    Adam adam({0.9, 0.999, 1e-12}, 0.01);
    adam.step({std::span<double>(p)}, {std::span<double>(g)});
    CHECK(p[0] == doctest::Approx(0.99).epsilon(1e-9));
    CHECK(p[1] == doctest::Approx(-1.99).epsilon(1e-9));
    CHECK(p[2] == doctest::Approx(2.99).epsilon(1e-6));
    CHECK(adam.steps() == 1);
  }

  TEST_CASE("zero learning rate leaves parameters untouched") {
    std::vector<double> p{1.0, 2.0};
    const auto keep = p;
    std::vector<double> g{3.0, -1.0};
    Adam adam({}, 0.0);
    for (int i = 0; i < 3; ++i) adam.step({std::span<double>(p)}, {std::span<double>(g)});
    CHECK(p == keep);
  }

  TEST_CASE("global norm clipping") {
    std::vector<double> a{3.0}, b{4.0};
    const std::vector<std::span<double>> grads{std::span<double>(a), std::span<double>(b)};
    CHECK(global_norm(grads) == 5.0);
    CHECK(clip_global_norm(grads, 1.0) == 5.0);
    CHECK(a[0] == doctest::Approx(0.6));
    CHECK(global_norm(grads) == doctest::Approx(1.0));
    CHECK(clip_global_norm(grads, 0.0) == doctest::Approx(1.0));
  }
}

TEST_SUITE("train_config") {
  TEST_CASE("text round trip and validation") {
    TrainConfig cfg = tiny_config();
    cfg.set("lambdas", "0.001,0.01");
    cfg.set("variant", "iwl");
    const TrainConfig back = TrainConfig::from_text(cfg.to_text());
    CHECK(back.to_text() == cfg.to_text());
    CHECK(back.lambdas == std::vector<double>{0.001, 0.01});
    CHECK(!cfg.set("bogus", "1"));
    CHECK_THROWS_AS(cfg.set("epochs", "many"), ConfigError);
    CHECK_THROWS_AS(TrainConfig::from_text("bogus = 1"), ConfigError);
    cfg.lambdas = {0.01, 0.001};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.lambdas = {0.01};
    cfg.set("patch_size", "18");
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }

  TEST_CASE("presets") {
    const TrainConfig desk = TrainConfig::preset("desk");
    CHECK_NOTHROW(desk.validate());
    CHECK(desk.lambdas.size() == 3);
    const TrainConfig paper = TrainConfig::preset("paper");
    CHECK(paper.lambdas == lambda_preset("paper-mse"));
    CHECK(paper.epochs == 100);
    CHECK(paper.batch_size == 16);
    CHECK(paper.learning_rate == 1e-4);
    CHECK(paper.patch.size == 256);
    CHECK_THROWS_AS(TrainConfig::preset("huge"), ConfigError);
  }
}

TEST_SUITE("trainer") {
  TEST_CASE("batch loss decomposes and its gradient matches finite differences") {
    TrainConfig cfg = tiny_config();
    CodecParams params = CodecParams::create(cfg.arch, 1);
    const auto pairs = toy_pairs(2, 16, 4);
    const Tensor xo = Tensor::stack(std::vector<Tensor>{pairs[0].x_o, pairs[1].x_o});
    const Tensor xj = Tensor::stack(std::vector<Tensor>{pairs[0].x_j, pairs[1].x_j});
    params.zero_grad();
    const StepLoss l = batch_loss(cfg, params, xo, xj, 42, true);
    CHECK(l.total == doctest::Approx(l.rate_bpp + cfg.loss.lambda * 255.0 * 255.0 * l.distortion).epsilon(1e-12));
    const auto blocks = params.parameter_blocks();
    const auto grads = params.gradient_blocks();
    for (std::size_t b : {std::size_t{0}, blocks.size() / 2, blocks.size() - 1}) {
      Rng rng(b + 1);
      for (int k = 0; k < 3; ++k) {
        const std::size_t i = rng.index(blocks[b].size());
        const double keep = blocks[b][i];
        const double h = 1e-6;
        blocks[b][i] = keep + h;
        const double up = batch_loss(cfg, params, xo, xj, 42, false).total;
        blocks[b][i] = keep - h;
        const double down = batch_loss(cfg, params, xo, xj, 42, false).total;
        blocks[b][i] = keep;
        CAPTURE(params.parameter_names()[b]);
        CHECK(grads[b][i] == doctest::Approx((up - down) / (2 * h)).epsilon(1e-4).scale(1e-3));
      }
    }
  }

  TEST_CASE("image-wise loss on proxy pairs equals the baseline") {
    TrainConfig base = tiny_config();
    TrainConfig iwl = tiny_config();
    iwl.set("variant", "iwl");
    const Tensor x = synth_toy_image(16, 16, 3);
    CodecParams pa = CodecParams::create(base.arch, 2);
    CodecParams pb = CodecParams::create(base.arch, 2);
    pa.zero_grad();
    pb.zero_grad();
    const StepLoss a = batch_loss(base, pa, x, x, 7, true);
    const StepLoss b = batch_loss(iwl, pb, x, x, 7, true);
    CHECK(a.total == b.total);
    const auto ga = pa.gradient_blocks();
    const auto gb = pb.gradient_blocks();
    for (std::size_t i = 0; i < ga.size(); ++i) CHECK(std::equal(ga[i].begin(), ga[i].end(), gb[i].begin()));
  }

  TEST_CASE("training is bit-reproducible") {
    TrainConfig cfg = tiny_config();
    cfg.epochs = 3;
    const FixedPairSource data(toy_pairs(4, 16, 3));
    const TrainResult a = train(cfg, data);
    const TrainResult b = train(cfg, data);
    CHECK(a.log == b.log);
    CHECK(a.checkpoint.params.hash() == b.checkpoint.params.hash());
    CHECK(a.log.steps.size() == 6);
    cfg.seed = 6;
    CHECK(train(cfg, data).checkpoint.params.hash() != a.checkpoint.params.hash());
  }

  TEST_CASE("zero learning rate keeps the initial model") {
    TrainConfig cfg = tiny_config();
    cfg.learning_rate = 0.0;
    cfg.max_steps = 3;
    const Checkpoint init{CodecParams::create(cfg.arch, 8), {}};
    const TrainResult r = train(cfg, FixedPairSource(toy_pairs(2, 16, 3)), init);
    CHECK(r.checkpoint.params.hash() == init.params.hash());
    CHECK(r.checkpoint.metadata["warm_started"].get<bool>());
  }

  TEST_CASE("non-finite losses abort with diagnostics") {
    TrainConfig cfg = tiny_config();
    cfg.max_steps = 2;
    Checkpoint init{CodecParams::create(cfg.arch, 8), {}};
    init.params.parameter_blocks()[0][0] = NAN;
    try {
      train(cfg, FixedPairSource(toy_pairs(2, 16, 3)), init);
      FAIL("expected NumericError");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("lambda") != std::string::npos);
    }
  }

  TEST_CASE("mismatched initial architecture is rejected") {
    TrainConfig cfg = tiny_config();
    ArchDescriptor other = cfg.arch;
    other.hidden_channels = 4;
    const Checkpoint init{CodecParams::create(other, 1), {}};
    CHECK_THROWS_AS(train(cfg, FixedPairSource(toy_pairs(2, 16, 3)), init), ConfigError);
  }

  TEST_CASE("sweep writes one checkpoint and log per lambda") {
    TrainConfig cfg = tiny_config();
    cfg.max_steps = 2;
    cfg.lambdas = {0.001, 0.01};
    const auto dir = test::temp_dir("sweep");
    const auto results = sweep(cfg, FixedPairSource(toy_pairs(2, 16, 3)), {}, dir);
    REQUIRE(results.size() == 2);
    CHECK(checkpoint_name(0.0067) == "lambda_0.0067.jndk");
    for (double l : cfg.lambdas) {
      const Checkpoint ck = load_checkpoint(dir / checkpoint_name(l));
      CHECK(ck.metadata["lambda"].get<double>() == l);
      CHECK(std::filesystem::exists(dir / ("lambda_" + format_double(l) + ".log.jsonl")));
    }
  }

  TEST_CASE("manifest source mixes and patches each epoch") {
    const auto dir = test::temp_dir("train_manifest");
    const ToyCorpus c = write_toy_corpus(dir, 3, 5, 24, 24, 4, 2);
    const ManifestPairSource src(c.labeled, c.unlabeled, {16, 1, 0}, 9);
    const auto e0 = src.epoch(0);
    CHECK(e0.size() == 6);
    int proxies = 0;
    for (const auto& p : e0) {
      CHECK(p.x_o.shape() == Shape{1, 3, 16, 16});
      if (p.source == SampleSource::unlabeled_proxy) {
        ++proxies;
        CHECK(p.x_j == p.x_o);
      }
    }
    CHECK(proxies == 3);
    const auto again = src.epoch(0);
    for (std::size_t i = 0; i < e0.size(); ++i) CHECK(again[i].x_o == e0[i].x_o);
  }

  TEST_CASE("log smoothing") {
    TrainLog log;
    for (int i = 0; i < 5; ++i) log.steps.push_back({i, 0, 0, 0, static_cast<double>(i), 0});
    CHECK(log.initial(2) == 0.5);
    CHECK(log.smoothed(4, 2) == 3.5);
    CHECK(log.smoothed(0, 3) == 0.0);
  }
}

TEST_SUITE("evaluate") {
  TEST_CASE("coded bitrate comes from the payload") {
    const TrainConfig cfg = tiny_config();
    const CodecParams params = CodecParams::create(cfg.arch, 3);
    const Tensor x = synth_toy_image(30, 26, 1);
    const CodedImage coded = code_image(params, x);
    CHECK(coded.bpp == static_cast<double>(coded.bitstream.payload_bits()) / (30.0 * 26.0));
    const Tensor x8 = quantize_to_8bit(x);
    CHECK(coded.psnr == psnr(x8, coded.reconstruction));
    CHECK(coded.reconstruction == quantize_to_8bit(decompress_image(coded.bitstream, params)));

    const QuantizedLatent q =
        quantize(analyze(reflect_pad(x8, cfg.arch.downsampling), params), QuantMode::infer_round);
    const double estimate_bits = estimate_rate_bpp(q, params.entropy, 1);
    CHECK(std::abs(static_cast<double>(coded.bitstream.payload_bits()) - estimate_bits) <=
          0.02 * estimate_bits + 64 * 8);
  }

  TEST_CASE("checkpoint round trip reproduces the evaluation") {
    const TrainConfig cfg = tiny_config();
    const Checkpoint ck{CodecParams::create(cfg.arch, 4), {{"lambda", 0.01}}};
    const auto dir = test::temp_dir("eval_ckpt");
    save_checkpoint(dir / "m.jndk", ck);
    const auto pairs = toy_pairs(2, 20, 3);
    const RDResults a = evaluate({ck}, pairs, "toy", "base");
    const RDResults b = evaluate({load_checkpoint(dir / "m.jndk")}, pairs, "toy", "base");
    CHECK(a.to_json() == b.to_json());
    REQUIRE(a.points.size() == 1);
    CHECK(a.points[0].lambda == 0.01);
    CHECK(a.per_image.size() == 2);
    CHECK(a.jnd.size() == 4);
    const CodedImage c0 = code_image(ck.params, pairs[0].x_o);
    const CodedImage c1 = code_image(ck.params, pairs[1].x_o);
    CHECK(a.points[0].bpp == doctest::Approx((c0.bpp + c1.bpp) / 2));
  }
}
