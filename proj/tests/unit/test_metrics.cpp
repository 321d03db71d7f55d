#include <doctest.h>

#include <cmath>
#include <fstream>

#include "jndlc/core/error.hpp"
#include "jndlc/metrics/metrics.hpp"
#include "jndlc/metrics/pchip.hpp"
#include "jndlc/metrics/rd_results.hpp"
#include "test_support.hpp"

using namespace jndlc;

namespace {

RDCurve make_curve(const std::vector<double>& bpp, const std::vector<double>& psnr, double bpp_scale = 1.0,
                   double shift = 0.0) {
  std::vector<RDPoint> pts;
  for (std::size_t i = 0; i < bpp.size(); ++i) {
    RDPoint p;
    p.bpp = bpp[i] * bpp_scale;
    p.psnr = psnr[i] + shift;
    p.msssim = 0.9 + 0.02 * static_cast<double>(i);
    pts.push_back(p);
  }
  return RDCurve(pts, "m");
}

const std::vector<double> kBpp{0.12, 0.31, 0.55, 0.9, 1.6};
const std::vector<double> kPsnr{27.1, 30.4, 32.2, 34.9, 37.0};

}  // namespace

TEST_SUITE("pchip") {
  TEST_CASE("passes through knots and stays monotone") {
    const std::vector<double> x{0, 1, 2, 3, 4, 5};
    const std::vector<double> y{0, 0.1, 0.15, 2.0, 2.05, 5.0};
    const Pchip p(x, y);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(p(x[i]) == y[i]);
    double prev = -1;
    for (int i = 0; i <= 500; ++i) {
      const double v = p(0.01 * i);
      CHECK(v >= prev);
      CHECK(v <= 5.0);
      prev = v;
    }
  }

  TEST_CASE("flat segments stay flat") {
    const Pchip p({0, 1, 2, 3}, {1, 2, 2, 3});
    for (int i = 0; i <= 10; ++i) CHECK(p(1 + 0.1 * i) == doctest::Approx(2.0));
  }

  TEST_CASE("two knots give a line and bad knots are rejected") {
    const Pchip p({1, 3}, {2, 6});
    CHECK(p(2.5) == doctest::Approx(5.0));
    CHECK_THROWS_AS(Pchip({1, 1}, {0, 1}), ArgumentError);
    CHECK_THROWS_AS(Pchip({1}, {0}), ArgumentError);
  }
}

TEST_SUITE("metrics") {
  TEST_CASE("psnr oracle") {
    Tensor a({1, 3, 4, 4}, 0.5);
    Tensor b({1, 3, 4, 4}, 0.6);
    CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(psnr(a, a) == kInfinitePsnr);
    Tensor c({1, 3, 16, 16}, 0.5);
    CHECK(msssim_metric(c, c) == doctest::Approx(1.0));
  }

  TEST_CASE("curve validation") {
    RDPoint p{0.5, 30, 0.9, 0.01, "m"};
    CHECK_THROWS_AS(RDCurve({p, p}), ArgumentError);
    RDPoint neg = p;
    neg.bpp = -1;
    CHECK_THROWS_AS(RDCurve({neg}), ArgumentError);
    RDPoint bad = p;
    bad.msssim = 1.2;
    CHECK_THROWS_AS(RDCurve({bad}), ArgumentError);
    RDPoint q = p;
    q.bpp = 0.2;
    const RDCurve c({p, q});
    CHECK(c.points().front().bpp == 0.2);
    CHECK_THROWS_AS(parse_metric("vmaf"), ArgumentError);
  }

  TEST_CASE("bd-rate of a curve against itself is zero") {
    const RDCurve c = make_curve(kBpp, kPsnr);
    CHECK(std::abs(bd_rate(c, c, QualityMetric::psnr)) <= 1e-6);
    CHECK(std::abs(bd_rate(c, c, QualityMetric::msssim)) <= 1e-6);
  }

  TEST_CASE("bd-rate of a scaled curve is the scale") {
    const RDCurve c = make_curve(kBpp, kPsnr);
    for (double k : {0.8, 0.9, 1.1}) {
      CHECK(bd_rate(c, make_curve(kBpp, kPsnr, k), QualityMetric::psnr) == doctest::Approx(100 * (k - 1)).epsilon(1e-9));
    }
  }

  TEST_CASE("bd-rate is invariant to a common quality shift") {
    const RDCurve a = make_curve(kBpp, kPsnr);
    const RDCurve b = make_curve({0.1, 0.3, 0.6, 1.0, 1.5}, {27.5, 30.9, 32.6, 35.3, 36.6});
    const double base = bd_rate(a, b, QualityMetric::psnr);
    const double shifted =
        bd_rate(make_curve(kBpp, kPsnr, 1.0, 7.5), make_curve({0.1, 0.3, 0.6, 1.0, 1.5}, {27.5, 30.9, 32.6, 35.3, 36.6}, 1.0, 7.5),
                QualityMetric::psnr);
    CHECK(std::abs(base - shifted) <= 1e-6);
    CHECK(base < 0.0);
  }

  TEST_CASE("bd-rate of log-linear curves matches the closed form") {
    // Both curves are linear in (quality, log bpp), so the mean log-rate
    // difference is the difference at the midpoint quality.
    const std::vector<double> q{30, 33, 36, 39};
    std::vector<double> ba, bt;
    for (double v : q) {
      ba.push_back(0.25 * std::exp2((v - 30) / 3));
      bt.push_back(ba.back() * std::exp(0.1 + 0.01 * (v - 30)));
    }
    const double expected = 100 * (std::exp(0.1 + 0.01 * 4.5) - 1);
    CHECK(bd_rate(make_curve(ba, q), make_curve(bt, q), QualityMetric::psnr) == doctest::Approx(expected).epsilon(1e-9));
  }

  TEST_CASE("bd-rate rejects short or disjoint curves") {
    const RDCurve c = make_curve(kBpp, kPsnr);
    const RDCurve short_curve = make_curve({0.1, 0.2, 0.3}, {28, 30, 32});
    CHECK_THROWS_AS(bd_rate(c, short_curve, QualityMetric::psnr), OutOfRangeError);
    const RDCurve far = make_curve(kBpp, kPsnr, 1.0, 20.0);
    CHECK_THROWS_AS(bd_rate(c, far, QualityMetric::psnr), OutOfRangeError);
  }

  TEST_CASE("infinite psnr points are dropped") {
    std::vector<double> psnr = kPsnr;
    psnr.push_back(kInfinitePsnr);
    std::vector<double> bpp = kBpp;
    bpp.push_back(4.0);
    std::vector<RDPoint> pts;
    for (std::size_t i = 0; i < bpp.size(); ++i) pts.push_back({bpp[i], psnr[i], 0.95, 0.0, "m"});
    const RDCurve c(pts);
    CHECK(bd_rate(c, make_curve(kBpp, kPsnr), QualityMetric::psnr) == doctest::Approx(0.0).scale(1e-6));
  }

  TEST_CASE("bitrate at a knot quality is the knot bitrate") {
    const RDCurve c = make_curve(kBpp, kPsnr);
    for (std::size_t i = 0; i < kBpp.size(); ++i) CHECK(bpp_at_quality(c, kPsnr[i], QualityMetric::psnr) == kBpp[i]);
    const double mid = bpp_at_quality(c, 31.0, QualityMetric::psnr);
    CHECK(mid > kBpp[1]);
    CHECK(mid < kBpp[2]);
    CHECK_THROWS_AS(bpp_at_quality(c, 40.0, QualityMetric::psnr), OutOfRangeError);
    CHECK_THROWS_AS(bpp_at_quality(c, 20.0, QualityMetric::psnr), OutOfRangeError);
  }

  TEST_CASE("bitrate saving at the JND quality") {
    const RDCurve base = make_curve({0.5, 1.0, 2.0}, {30, 33, 36});
    const RDCurve prop = make_curve({0.45, 0.9, 1.8}, {30, 33, 36});
    const JNDQuality jnd{33.0, QualityMetric::psnr, "img"};
    CHECK(bs_jnd(base, base, jnd) == 0.0);
    CHECK(bs_jnd(base, prop, jnd) == -10.0);
    CHECK(bs_jnd(base, prop, {31.7, QualityMetric::psnr, "x"}) == doctest::Approx(-10.0).epsilon(1e-9));
    CHECK_THROWS_AS(bs_jnd(base, prop, {40.0, QualityMetric::psnr, "x"}), OutOfRangeError);
  }

  TEST_CASE("JND threshold of a labeled pair") {
    const Tensor x = test::random_tensor({1, 3, 32, 32}, 1);
    const Tensor y = test::perturb(x, 0.05, 2);
    const JNDQuality j = jnd_quality_of_pair(x, y, QualityMetric::psnr, "a");
    CHECK(j.value == psnr(x, y));
    CHECK(j.image_id == "a");
    CHECK(jnd_quality_of_pair(x, x, QualityMetric::psnr).value == kInfinitePsnr);
    CHECK(jnd_quality_of_pair(x, y, QualityMetric::msssim).value == msssim_metric(x, y));
  }
}

TEST_SUITE("rd_results") {
  RDResults sample() {
    RDResults r;
    r.dataset_id = "toy";
    r.method_id = "iwl";
    r.points = {{0.5, 30.25, 0.93, 0.0067, "iwl"}, {0.9, kInfinitePsnr, 1.0, 0.0483, "iwl"}};
    r.jnd = {{31.5, QualityMetric::psnr, "img0"}, {0.97, QualityMetric::msssim, "img0"}};
    r.per_image = {{"img0", {{0.4, 29.0, 0.91, 0.0067, "iwl"}}}};
    r.notes["padding"] = "reflect";
    return r;
  }

  TEST_CASE("json round trip keeps every field") {
    const RDResults r = sample();
    const auto j = r.to_json();
    CHECK(j["points"][1]["psnr"].is_null());
    const RDResults back = RDResults::from_json(j);
    CHECK(back.to_json() == j);
    CHECK(back.points[1].psnr == kInfinitePsnr);
    CHECK(back.image_curve("img0").size() == 1);
    CHECK(back.image_curve("none").size() == 0);
  }

  TEST_CASE("duplicate rates are stored but do not form a curve") {
    RDResults r = sample();
    r.points[1].bpp = r.points[0].bpp;
    const RDResults back = RDResults::from_json(r.to_json());
    CHECK(back.points.size() == 2);
    CHECK_THROWS_AS(back.curve(), FormatError);
    CHECK(back.to_csv().find("0.0067,0.5") != std::string::npos);
  }

  TEST_CASE("schema violations are format errors") {
    auto j = sample().to_json();
    j.erase("points");
    CHECK_THROWS_AS(RDResults::from_json(j), FormatError);
    auto k = sample().to_json();
    k["jnd"][0]["metric"] = "vmaf";
    CHECK_THROWS_AS(RDResults::from_json(k), FormatError);
  }

  TEST_CASE("files and csv mirror") {
    const auto dir = test::temp_dir("rd");
    save_results(dir / "r.json", sample(), dir / "r.csv");
    CHECK(load_results(dir / "r.json").to_json() == sample().to_json());
    std::ifstream in(dir / "r.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "lambda,bpp,psnr,msssim");
    CHECK_THROWS(load_results(dir / "missing.json"));
  }
}
