#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "jndlc/core/binary_io.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run cli(const std::string& args) {
  static const fs::path dir = jndlc::test::temp_dir("cli_out");
  const fs::path out = dir / "stdout.txt";
  const std::string cmd = std::string("\"") + JNDLC_CLI_PATH + "\" " + args + " > \"" + out.string() + "\" 2>/dev/null";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out);
  std::stringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit with 1") {
    CHECK(cli("").code == 1);
    CHECK(cli("frobnicate").code == 1);
    CHECK(cli("compress -i a.png").code == 1);
    CHECK(cli("train --toy 1 --set bogus=1 --out-dir /tmp/x").code == 1);
    CHECK(cli("train --preset tiny --toy 1 --out-dir /tmp/x").code == 1);
    CHECK(cli("--help").code == 0);
  }

  TEST_CASE("data errors exit with 2") {
    const auto dir = jndlc::test::temp_dir("cli_data");
    CHECK(cli("compress -i " + q(dir / "none.png") + " -c " + q(dir / "none.jndk") + " -o " + q(dir / "o.jlc")).code ==
          2);
    CHECK(cli("plotdata " + q(dir / "none.json")).code == 2);
  }

  TEST_CASE("train, code and report") {
    const auto dir = jndlc::test::temp_dir("cli_flow");
    const std::string tiny =
        "--preset desk --set hidden_channels=8 --set latent_channels=6 --set downsampling=4 --set patch_size=16 "
        "--set batch_size=2 ";
    const Run t = cli("sweep " + tiny + "--set lambdas=0.002,0.01,0.05,0.2 --toy 2 --max-steps 2 --out-dir " + q(dir));
    REQUIRE(t.code == 0);
    CHECK(t.out.find("checkpoint=") != std::string::npos);
    const fs::path ck = dir / "lambda_0.01.jndk";
    REQUIRE(fs::exists(ck));

    REQUIRE(cli("synth-jnd --toy-dir " + q(dir / "toy") + " --labeled 2 --unlabeled 1 --size 24 --level 4").code == 0);
    const fs::path img = dir / "toy" / "orig" / "jnd0000.png";
    REQUIRE(fs::exists(img));

    const Run c = cli("compress -i " + q(img) + " -c " + q(ck) + " -o " + q(dir / "a.jlc"));
    REQUIRE(c.code == 0);
    CHECK(c.out.find("bpp=") != std::string::npos);
    CHECK(cli("decompress -i " + q(dir / "a.jlc") + " -c " + q(ck) + " -o " + q(dir / "a.png")).code == 0);
    CHECK(fs::exists(dir / "a.png"));

    // A bitstream decoded with another model is a data error.
    CHECK(cli("decompress -i " + q(dir / "a.jlc") + " -c " + q(dir / "lambda_0.002.jndk") + " -o " +
              q(dir / "b.png"))
              .code == 2);
    auto bytes = jndlc::read_file(dir / "a.jlc");
    bytes.resize(bytes.size() / 2);
    jndlc::write_file_atomic(dir / "cut.jlc", bytes);
    CHECK(cli("decompress -i " + q(dir / "cut.jlc") + " -c " + q(ck) + " -o " + q(dir / "c.png")).code == 2);

    std::string cks;
    for (const char* l : {"0.002", "0.01", "0.05", "0.2"}) cks += " -c " + q(dir / ("lambda_" + std::string(l) + ".jndk"));
    const fs::path manifest = dir / "toy" / "labeled.jsonl";
    REQUIRE(cli("eval" + cks + " --manifest " + q(manifest) + " --method-id a -o " + q(dir / "a.json") + " --csv " +
                q(dir / "a.csv"))
                .code == 0);
    CHECK(fs::exists(dir / "a.csv"));
    const Run plot = cli("plotdata " + q(dir / "a.json"));
    CHECK(plot.code == 0);
    CHECK(plot.out.find("method,lambda,bpp,psnr,msssim") == 0);
  }

  TEST_CASE("bd-rate and JND saving reports") {
    const auto dir = jndlc::test::temp_dir("cli_reports");
    const auto write = [&](const std::string& name, double scale) {
      std::ofstream out(dir / name);
      out << R"({"dataset_id":"d","method_id":")" << name.substr(0, 1) << R"(","points":[)";
      const double bpp[] = {0.25, 0.5, 1.0, 2.0};
      const double psnr[] = {30, 33, 36, 39};
      for (int i = 0; i < 4; ++i) {
        out << (i ? "," : "") << R"({"lambda":)" << i + 1 << R"(,"bpp":)" << bpp[i] * scale << R"(,"psnr":)"
            << psnr[i] << R"(,"msssim":)" << 0.9 + 0.02 * i << "}";
      }
      out << R"(],"jnd":[{"image_id":"img","metric":"psnr","value":33}]})";
    };
    write("a.json", 1.0);
    write("b.json", 0.9);
    const Run bd = cli("bdrate --anchor " + q(dir / "a.json") + " --test " + q(dir / "b.json") + " --metric psnr");
    REQUIRE(bd.code == 0);
    CHECK(bd.out.rfind("method,metric,bdrate_percent\n", 0) == 0);
    CHECK(bd.out.find("b,psnr,-10") != std::string::npos);
    const Run js = cli("bsjnd --baseline " + q(dir / "a.json") + " --proposed " + q(dir / "b.json"));
    REQUIRE(js.code == 0);
    CHECK(js.out.find("img,-10") != std::string::npos);
  }

  TEST_CASE("numeric errors exit with 3") {
    const auto dir = jndlc::test::temp_dir("cli_numeric");
    std::ofstream(dir / "r.json") << R"({"dataset_id":"d","method_id":"m","points":[)"
                                  << R"({"lambda":1,"bpp":0.5,"psnr":30,"msssim":0.9},)"
                                  << R"({"lambda":2,"bpp":1.0,"psnr":33,"msssim":0.95}],"jnd":[]})";
    CHECK(cli("bdrate --anchor " + q(dir / "r.json") + " --test " + q(dir / "r.json")).code == 3);
  }
}
