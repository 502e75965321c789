#include <doctest.h>

#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"
#include "sphc/analysis.hpp"
#include "sphc/codec.hpp"
#include "sphc/npy.hpp"
#include "sphc/synth.hpp"
#include "test_util.hpp"

using namespace sphc;
using nlohmann::json;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;

  json last_json() const {
    std::istringstream lines(out);
    std::string line;
    std::string last;
    while (std::getline(lines, line))
      if (!line.empty()) last = line;
    return json::parse(last);
  }
};

Outcome sphc_run(std::vector<std::string> args) {
  args.insert(args.begin(), "sphc");
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

Outcome sphc_json(std::vector<std::string> args) {
  args.insert(args.begin(), "--json-style");
  return sphc_run(std::move(args));
}

}  // namespace

TEST_CASE("gen, compress, decompress and verify") {
  sphc::test::TempDir dir("cli");
  const std::string x = (dir / "x.npy").string();
  const std::string c = (dir / "x.sphc").string();
  const std::string y = (dir / "y.npy").string();

  REQUIRE(sphc_json({"gen", "--dist", "uniform", "--n", "300", "--d", "128", "--seed", "4",
                     "--output", x})
              .code == 0);
  CHECK(read_array(x) == gen_uniform(300, 128, 4));

  const Outcome enc = sphc_json({"compress", "--input", x, "--output", c, "--chunk-size", "100"});
  REQUIRE(enc.code == 0);
  const json e = enc.last_json();
  CHECK(e["raw_bytes"].get<double>() == 4.0 * 300 * 128);
  CHECK(e["compressed_bytes"].get<double>() == static_cast<double>(std::filesystem::file_size(c)));
  CHECK(e["ratio"].get<double>() > 1.0);

  REQUIRE(sphc_json({"decompress", "--input", c, "--output", y}).code == 0);
  const Outcome ver = sphc_json({"verify", "--original", x, "--candidate", y});
  REQUIRE(ver.code == 0);
  const json v = ver.last_json();
  CHECK(v["max_abs"].get<double>() < 1.19e-7);
  CHECK(v["cos_max_err"].get<double>() < 3e-7);

  SUBCASE("row range") {
    const std::string part = (dir / "part.npy").string();
    const Outcome dec = sphc_json({"decompress", "--input", c, "--output", part, "--rows", "150..260"});
    REQUIRE(dec.code == 0);
    CHECK(dec.last_json()["first_row"] == 150);
    const EmbeddingMatrix full = read_array(y);
    const EmbeddingMatrix window = read_array(part);
    REQUIRE(window.rows() == 110);
    CHECK(sphc::test::bit_equal(window.values(),
                                std::span<const float>(full.values()).subspan(150 * 128, 110 * 128)));
    CHECK(sphc_run({"decompress", "--input", c, "--output", part, "--rows", "250..400"}).code == 2);
    CHECK(sphc_run({"decompress", "--input", c, "--output", part, "--rows", "5-9"}).code == 1);
  }

  SUBCASE("compress --check reports the error in the same run") {
    const Outcome chk = sphc_json({"compress", "--input", x, "--output", c, "--check"});
    REQUIRE(chk.code == 0);
    CHECK(chk.last_json()["max_abs"].get<double>() < 1.19e-7);
  }

  SUBCASE("baseline mode is lossless") {
    REQUIRE(sphc_json({"compress", "--input", x, "--output", c, "--mode", "baseline"}).code == 0);
    REQUIRE(sphc_json({"decompress", "--input", c, "--output", y}).code == 0);
    const json b = sphc_json({"verify", "--original", x, "--candidate", y}).last_json();
    CHECK(b["max_abs"].get<double>() == 0.0);
    CHECK(b["mean_abs"].get<double>() == 0.0);
  }

  SUBCASE("raw float32 input") {
    const std::string raw = (dir / "x.f32").string();
    write_array(raw, read_array(x));
    CHECK(sphc_run({"compress", "--input", raw, "--output", c}).code == 1);
    REQUIRE(sphc_json({"compress", "--input", raw, "--output", c, "--raw-d", "128"}).code == 0);
    const ErrorReport r = reconstruction_errors(read_array(x), decompress(read_file(c)).matrix);
    CHECK(r.max_abs < 1.19e-7);
  }
}

TEST_CASE("input errors map to exit codes") {
  sphc::test::TempDir dir("cli-err");
  const std::string missing = (dir / "missing.npy").string();
  const std::string out = (dir / "o.sphc").string();

  const Outcome io = sphc_run({"compress", "--input", missing, "--output", out});
  CHECK(io.code == 3);
  CHECK(io.err.find("IoError") != std::string::npos);

  CHECK(sphc_run({"compress", "--input", missing}).code == 1);
  CHECK(sphc_run({"nonsense"}).code == 1);
  CHECK(sphc_run({"compress", "--input", missing, "--output", out, "--mode", "polar"}).code == 1);

  // float64 NPY
  std::vector<std::uint8_t> f8 = {0x93, 'N', 'U', 'M', 'P', 'Y', 1, 0};
  const std::string dict = "{'descr': '<f8', 'fortran_order': False, 'shape': (2, 3), }\n";
  f8.push_back(static_cast<std::uint8_t>(dict.size()));
  f8.push_back(0);
  f8.insert(f8.end(), dict.begin(), dict.end());
  f8.resize(f8.size() + 48, 0);
  const std::string f8_path = (dir / "f8.npy").string();
  write_file(f8_path, f8);
  CHECK(sphc_run({"compress", "--input", f8_path, "--output", out}).code == 2);

  // non-unit rows without renormalize
  const std::string scaled = (dir / "scaled.npy").string();
  write_array(scaled, EmbeddingMatrix(2, 3, {2, 0, 0, 0, 2, 0}));
  const Outcome norm = sphc_run({"compress", "--input", scaled, "--output", out});
  CHECK(norm.code == 2);
  CHECK(norm.err.find("NormViolation") != std::string::npos);
  CHECK(sphc_run({"compress", "--input", scaled, "--output", out, "--renormalize"}).code == 0);

  // corrupt container
  write_file(out, std::vector<std::uint8_t>{'S', 'P', 'H', 'X'});
  CHECK(sphc_run({"decompress", "--input", out, "--output", (dir / "r.npy").string()}).code == 2);
}

TEST_CASE("analyze and verify reports") {
  sphc::test::TempDir dir("cli-an");
  const std::string x = (dir / "x.npy").string();
  write_array(x, gen_uniform(500, 768, 0));

  const Outcome an = sphc_json({"analyze", "--input", x});
  REQUIRE(an.code == 0);
  const json a = an.last_json();
  CHECK(a["spherical_exponent_entropy_bits"].get<double>() < 0.15);
  CHECK(a["cartesian_exponent_entropy_bits"].get<double>() > 2.0);
  CHECK(a["concentration_fraction"].get<double>() >= 0.999);

  const Outcome text = sphc_run({"analyze", "--input", x});
  REQUIRE(text.code == 0);
  CHECK(text.out.find("spherical_exponent_entropy_bits: ") != std::string::npos);

  const json same = sphc_json({"verify", "--original", x, "--candidate", x}).last_json();
  CHECK(same["max_abs"].get<double>() == 0.0);
  CHECK(same["cross_pair_max_err"].get<double>() == 0.0);

  const std::string other = (dir / "other.npy").string();
  write_array(other, gen_uniform(500, 767, 0));
  CHECK(sphc_run({"verify", "--original", x, "--candidate", other}).code == 2);

  const std::string tiny = (dir / "tiny.npy").string();
  write_array(tiny, gen_uniform(10, 2, 0));
  const Outcome warn = sphc_json({"analyze", "--input", tiny});
  CHECK(warn.code == 0);
  CHECK(warn.err.find("warning") != std::string::npos);
  CHECK(warn.last_json()["concentration_fraction"].is_null());
}

TEST_CASE("bench") {
  const Outcome b = sphc_json({"bench", "--d", "768", "--size-mb", "4", "--levels", "1,19",
                               "--repeats", "1"});
  REQUIRE(b.code == 0);
  std::istringstream lines(b.out);
  std::vector<json> rows;
  for (std::string line; std::getline(lines, line);)
    if (!line.empty()) rows.push_back(json::parse(line));
  REQUIRE(rows.size() == 2);
  const double s1 = rows[0]["size_mb"].get<double>();
  const double s19 = rows[1]["size_mb"].get<double>();
  CHECK(std::abs(s1 - s19) / s1 <= 0.02);

  const Outcome table = sphc_run({"bench", "--size-mb", "0.5", "--levels", "3", "--repeats", "1"});
  CHECK(table.code == 0);
  CHECK(table.out.find("level") != std::string::npos);

  CHECK(sphc_run({"bench", "--levels", "0"}).code == 1);
  CHECK(sphc_run({"bench", "--levels", "23"}).code == 1);
  CHECK(sphc_run({"bench", "--levels", "3,x"}).code == 1);
}

TEST_CASE("similarity from a container") {
  sphc::test::TempDir dir("cli-sim");
  const std::string x = (dir / "x.npy").string();
  const std::string c = (dir / "x.sphc").string();
  write_array(x, gen_uniform(100, 768, 9));
  REQUIRE(sphc_run({"compress", "--input", x, "--output", c}).code == 0);

  const json self = sphc_json({"similarity", "--input", c, "--row-a", "7", "--row-b", "7"}).last_json();
  CHECK(self["angle_similarity"].get<double>() == doctest::Approx(1.0).epsilon(1e-6));

  const Outcome chk =
      sphc_json({"similarity", "--input", c, "--row-a", "3", "--row-b", "90", "--check"});
  REQUIRE(chk.code == 0);
  CHECK(chk.last_json()["abs_delta"].get<double>() < 1e-6);

  CHECK(sphc_run({"similarity", "--input", c, "--row-a", "3", "--row-b", "100"}).code == 2);
  CHECK(sphc_run({"similarity", "--input", c, "--row-a", "3"}).code == 1);
}

TEST_CASE("CLI containers byte-equal the buffer entry point") {
  sphc::test::TempDir dir("cli-buf");
  struct Triple {
    EmbeddingMatrix x;
    std::vector<std::string> flags;
    CodecOptions opts;
  };
  CodecOptions spherical;
  CodecOptions baseline_trunc;
  baseline_trunc.mode = Mode::BaselineCartesian;
  baseline_trunc.truncate_bits = 6;
  baseline_trunc.level = 9;
  CodecOptions small_chunks;
  small_chunks.chunk_size = 7;
  small_chunks.level = 1;
  const std::vector<Triple> triples = {
      {gen_uniform(120, 64, 1), {}, spherical},
      {gen_vmf(80, 33, 50.0, 2, 2),
       {"--mode", "baseline", "--truncate-bits", "6", "--level", "9"},
       baseline_trunc},
      {gen_sparse(50, 100, 0.1, 3), {"--chunk-size", "7", "--level", "1"}, small_chunks},
  };
  for (std::size_t t = 0; t < triples.size(); ++t) {
    CAPTURE(t);
    const Triple& tr = triples[t];
    const std::string in = (dir / ("x" + std::to_string(t) + ".npy")).string();
    const std::string out = (dir / ("x" + std::to_string(t) + ".sphc")).string();
    write_array(in, tr.x);
    std::vector<std::string> args = {"compress", "--input", in, "--output", out};
    args.insert(args.end(), tr.flags.begin(), tr.flags.end());
    REQUIRE(sphc_run(args).code == 0);

    const std::vector<std::uint8_t> raw(
        reinterpret_cast<const std::uint8_t*>(tr.x.values().data()),
        reinterpret_cast<const std::uint8_t*>(tr.x.values().data() + tr.x.size()));
    const Bytes from_buffer = compress(ArrayView{raw, tr.x.rows(), tr.x.cols(), DType::Float32LE}, tr.opts);
    CHECK(read_file(out) == from_buffer);
  }
}
