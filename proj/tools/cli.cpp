#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "sphc/analysis.hpp"
#include "sphc/codec.hpp"
#include "sphc/error.hpp"
#include "sphc/npy.hpp"
#include "sphc/report.hpp"
#include "sphc/synth.hpp"
#include "sphc/transform.hpp"

namespace sphc::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double mb_per_s(double bytes, double seconds) {
  return seconds > 0.0 ? bytes / 1e6 / seconds : 0.0;
}

/// Usage problems detected after CLI11 has accepted the flags.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

RowRange parse_rows(const std::string& text) {
  const auto dots = text.find("..");
  if (dots == std::string::npos) throw UsageError("--rows expects A..B, got '" + text + "'");
  try {
    std::size_t used = 0;
    const std::string a = text.substr(0, dots);
    const std::string b = text.substr(dots + 2);
    const unsigned long long begin = std::stoull(a, &used);
    if (used != a.size()) throw std::invalid_argument(a);
    const unsigned long long end = std::stoull(b, &used);
    if (used != b.size()) throw std::invalid_argument(b);
    return {static_cast<std::size_t>(begin), static_cast<std::size_t>(end)};
  } catch (const std::logic_error&) {
    throw UsageError("--rows expects A..B with non-negative integers, got '" + text + "'");
  }
}

std::vector<int> parse_levels(const std::string& text) {
  std::vector<int> levels;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      const int level = std::stoi(item, &used);
      if (used != item.size() || level < 1 || level > 22) throw std::invalid_argument(item);
      levels.push_back(level);
    } catch (const std::logic_error&) {
      throw UsageError("--levels expects comma-separated integers in [1, 22], got '" + text + "'");
    }
  }
  if (levels.empty()) throw UsageError("--levels is empty");
  return levels;
}

EmbeddingMatrix load(const std::string& path, std::size_t raw_d) {
  return read_array(path, raw_d == 0 ? std::nullopt : std::optional<std::size_t>(raw_d));
}

struct Common {
  bool json_style = false;
  unsigned threads = 0;
};

struct CompressArgs {
  std::string input, output, mode = "spherical";
  int level = 3;
  std::uint32_t chunk_size = 1000;
  unsigned truncate_bits = 0;
  bool store_norms = false, renormalize = false, check = false;
  double tolerance = kDefaultNormTolerance;
  std::size_t raw_d = 0;
};

int cmd_compress(const CompressArgs& a, const Common& common, std::ostream& out) {
  EmbeddingMatrix x;
  {
    const std::vector<std::uint8_t> bytes = read_file(a.input);
    static constexpr std::uint8_t kNpyPrefix[] = {0x93, 'N', 'U', 'M', 'P', 'Y'};
    if (bytes.size() >= 6 && std::equal(std::begin(kNpyPrefix), std::end(kNpyPrefix), bytes.begin())) {
      const NpyHeader header = parse_npy_header(bytes);
      if (!header.is_float32_le()) {
        throw Error(ErrorCode::UnsupportedDtype,
                    "input dtype '" + header.descr +
                        "' is not float32; for reduced-precision formats apply the baseline "
                        "byte shuffle directly to the raw bytes");
      }
      x = decode_npy(bytes);
    } else {
      x = load(a.input, a.raw_d);
    }
  }

  CodecOptions opts;
  opts.mode = a.mode == "baseline" ? Mode::BaselineCartesian : Mode::Spherical;
  opts.level = a.level;
  opts.chunk_size = a.chunk_size;
  opts.truncate_bits = a.truncate_bits;
  opts.store_norms = a.store_norms;
  opts.renormalize = a.renormalize;
  opts.norm_tolerance = a.tolerance;
  opts.threads = common.threads;

  const auto start = Clock::now();
  const Bytes container = compress(x, opts);
  const double elapsed = seconds_since(start);
  write_file(a.output, container);

  const double raw = 4.0 * static_cast<double>(x.size());
  Report doc;
  doc["command"] = "compress";
  doc["mode"] = a.mode;
  doc["n"] = x.rows();
  doc["d"] = x.cols();
  doc["level"] = a.level;
  doc["chunk_size"] = a.chunk_size;
  doc["raw_bytes"] = raw;
  doc["compressed_bytes"] = container.size();
  doc["ratio"] = raw / static_cast<double>(container.size());
  doc["seconds"] = elapsed;
  doc["throughput_mb_s"] = mb_per_s(raw, elapsed);
  if (a.check) {
    const DecodedMatrix back = decompress(container, std::nullopt, common.threads);
    append(doc, reconstruction_errors(x, back.matrix));
  }
  print_report(out, doc, common.json_style);
  return kOk;
}

int cmd_decompress(const std::string& input, const std::string& output,
                   const std::string& rows, const Common& common, std::ostream& out) {
  const std::vector<std::uint8_t> container = read_file(input);
  std::optional<RowRange> range;
  if (!rows.empty()) range = parse_rows(rows);

  const auto start = Clock::now();
  const DecodedMatrix decoded = decompress(container, range, common.threads);
  const double elapsed = seconds_since(start);
  write_array(output, decoded.matrix);

  const double raw = 4.0 * static_cast<double>(decoded.matrix.size());
  Report doc;
  doc["command"] = "decompress";
  doc["first_row"] = decoded.first_row;
  doc["n"] = decoded.matrix.rows();
  doc["d"] = decoded.matrix.cols();
  doc["compressed_bytes"] = container.size();
  doc["raw_bytes"] = raw;
  doc["seconds"] = elapsed;
  doc["throughput_mb_s"] = mb_per_s(raw, elapsed);
  doc["norms_restored"] = decoded.norms.has_value();
  print_report(out, doc, common.json_style);
  return kOk;
}

int cmd_analyze(const std::string& input, std::size_t raw_d, std::size_t min_tail,
                const Common& common, std::ostream& out, std::ostream& err) {
  const EmbeddingMatrix x = load(input, raw_d);
  const AngleMatrix theta = to_spherical(x, common.threads);

  Report doc;
  doc["command"] = "analyze";
  doc["n"] = x.rows();
  doc["d"] = x.cols();
  append(doc, entropy_report(x.values()), "cartesian_");
  append(doc, entropy_report(theta.values()), "spherical_");
  doc["min_tail"] = min_tail;
  try {
    doc["concentration_fraction"] = concentration_fraction(theta, min_tail);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoQualifyingColumns) throw;
    err << "warning: " << e.what() << '\n';
    doc["concentration_fraction"] = nullptr;
  }
  print_report(out, doc, common.json_style);
  return kOk;
}

int cmd_verify(const std::string& original, const std::string& candidate, std::size_t raw_d,
               const Common& common, std::ostream& out) {
  const EmbeddingMatrix x = load(original, raw_d);
  const EmbeddingMatrix y = load(candidate, raw_d);
  Report doc;
  doc["command"] = "verify";
  append(doc, reconstruction_errors(x, y));
  print_report(out, doc, common.json_style);
  return kOk;
}

struct GenArgs {
  std::string dist = "uniform", output;
  std::size_t n = 0, d = 0, clusters = 1;
  double kappa = 0.0, density = 0.1;
  std::uint64_t seed = 0;
};

int cmd_gen(const GenArgs& a, const Common& common, std::ostream& out) {
  GenSpec spec;
  if (a.dist == "uniform") {
    spec.distribution = Distribution::UniformSphere;
  } else if (a.dist == "vmf") {
    spec.distribution = Distribution::VonMisesFisher;
  } else if (a.dist == "orthogonal") {
    spec.distribution = Distribution::Orthogonal;
  } else {
    spec.distribution = Distribution::Sparse;
  }
  spec.n = a.n;
  spec.d = a.d;
  spec.kappa = a.kappa;
  spec.clusters = a.clusters;
  spec.density = a.density;
  spec.seed = a.seed;
  const EmbeddingMatrix x = generate(spec);
  write_array(a.output, x);

  Report doc;
  doc["command"] = "gen";
  doc["dist"] = a.dist;
  doc["n"] = x.rows();
  doc["d"] = x.cols();
  doc["seed"] = a.seed;
  doc["output"] = a.output;
  print_report(out, doc, common.json_style);
  return kOk;
}

struct BenchArgs {
  std::size_t d = 768;
  double size_mb = 100.0;
  std::string levels = "1,3,5,7,9,11,13,15,17,19,21";
  std::string mode = "spherical";
  std::uint32_t chunk_size = 0;
  std::uint64_t seed = 0;
  int repeats = 3;
};

int cmd_bench(const BenchArgs& a, const Common& common, std::ostream& out) {
  const std::vector<int> levels = parse_levels(a.levels);
  if (!(a.size_mb > 0.0)) throw UsageError("--size-mb must be positive");
  if (a.repeats < 1) throw UsageError("--repeats must be >= 1");
  const auto n = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(a.size_mb * 1e6 / (4.0 * static_cast<double>(a.d)))));
  const EmbeddingMatrix x = gen_uniform(n, a.d, a.seed);
  const double raw = 4.0 * static_cast<double>(x.size());

  if (!common.json_style) {
    out << "# bench n=" << n << " d=" << a.d << " raw_mb=" << raw / 1e6 << " mode=" << a.mode
        << '\n';
    out << std::setw(6) << "level" << std::setw(12) << "size_mb" << std::setw(9) << "ratio"
        << std::setw(12) << "enc_mb_s" << std::setw(12) << "dec_mb_s" << '\n';
  }
  for (const int level : levels) {
    CodecOptions opts;
    opts.mode = a.mode == "baseline" ? Mode::BaselineCartesian : Mode::Spherical;
    opts.level = level;
    opts.chunk_size = a.chunk_size;
    opts.threads = common.threads;

    Bytes container;
    double enc = 1e300;
    double dec = 1e300;
    for (int r = 0; r < a.repeats; ++r) {
      auto start = Clock::now();
      container = compress(x, opts);
      enc = std::min(enc, seconds_since(start));
      start = Clock::now();
      const DecodedMatrix back = decompress(container, std::nullopt, common.threads);
      dec = std::min(dec, seconds_since(start));
    }
    const double size_mb = static_cast<double>(container.size()) / 1e6;
    const double ratio = raw / static_cast<double>(container.size());
    if (common.json_style) {
      Report row;
      row["level"] = level;
      row["size_mb"] = size_mb;
      row["ratio"] = ratio;
      row["enc_mb_s"] = mb_per_s(raw, enc);
      row["dec_mb_s"] = mb_per_s(raw, dec);
      print_report(out, row, true);
    } else {
      out << std::fixed << std::setw(6) << level << std::setw(12) << std::setprecision(3)
          << size_mb << std::setw(9) << std::setprecision(3) << ratio << std::setw(12)
          << std::setprecision(1) << mb_per_s(raw, enc) << std::setw(12) << mb_per_s(raw, dec)
          << '\n';
      out.unsetf(std::ios::floatfield);
    }
  }
  return kOk;
}

int cmd_similarity(const std::string& input, std::size_t row_a, std::size_t row_b, bool check,
                   const Common& common, std::ostream& out) {
  const std::vector<std::uint8_t> container = read_file(input);
  const AngleMatrix a = decompress_angles(container, RowRange{row_a, row_a + 1});
  const AngleMatrix b = decompress_angles(container, RowRange{row_b, row_b + 1});
  const double sim = angle_similarity(a.row(0), b.row(0));

  Report doc;
  doc["command"] = "similarity";
  doc["row_a"] = row_a;
  doc["row_b"] = row_b;
  doc["angle_similarity"] = sim;
  if (check) {
    const EmbeddingMatrix xa = from_spherical(a);
    const EmbeddingMatrix xb = from_spherical(b);
    double dot = 0.0;
    for (std::size_t j = 0; j < xa.cols(); ++j) dot += static_cast<double>(xa(0, j)) * xb(0, j);
    doc["cartesian_dot"] = dot;
    doc["abs_delta"] = std::abs(sim - dot);
  }
  print_report(out, doc, common.json_style);
  return kOk;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError: return kIoError;
    case ErrorCode::InvalidArgument: return kUsage;
    default: return kDataError;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"sphc: spherical-coordinate compression for unit-norm float32 embeddings"};
  app.require_subcommand(1);
  Common common;
  app.add_flag("--json-style", common.json_style, "Emit reports as one JSON object per line");
  app.add_option("--threads", common.threads, "Worker threads (0 = all cores)");
  app.fallthrough();

  CompressArgs ca;
  auto* compress_cmd = app.add_subcommand("compress", "Compress an NPY/raw float32 matrix");
  compress_cmd->add_option("--input", ca.input)->required();
  compress_cmd->add_option("--output", ca.output)->required();
  compress_cmd->add_option("--level", ca.level, "Zstandard level");
  compress_cmd->add_option("--chunk-size", ca.chunk_size, "Rows per chunk (0 = one chunk)");
  compress_cmd->add_option("--mode", ca.mode)->check(CLI::IsMember({"spherical", "baseline"}));
  compress_cmd->add_option("--truncate-bits", ca.truncate_bits, "Low mantissa bits to zero");
  compress_cmd->add_flag("--store-norms", ca.store_norms);
  compress_cmd->add_flag("--renormalize", ca.renormalize);
  compress_cmd->add_option("--tolerance", ca.tolerance, "Unit-norm tolerance");
  compress_cmd->add_option("--raw-d", ca.raw_d, "Row width of a raw float32 input");
  compress_cmd->add_flag("--check", ca.check, "Decode in memory and report reconstruction error");

  std::string d_input, d_output, d_rows;
  auto* decompress_cmd = app.add_subcommand("decompress", "Decompress a container");
  decompress_cmd->add_option("--input", d_input)->required();
  decompress_cmd->add_option("--output", d_output)->required();
  decompress_cmd->add_option("--rows", d_rows, "Row range A..B (half-open)");

  std::string a_input;
  std::size_t a_raw_d = 0;
  std::size_t a_min_tail = 64;
  auto* analyze_cmd = app.add_subcommand("analyze", "Entropy and exponent concentration report");
  analyze_cmd->add_option("--input", a_input)->required();
  analyze_cmd->add_option("--raw-d", a_raw_d);
  analyze_cmd->add_option("--min-tail", a_min_tail, "Columns with d-k >= min_tail count");

  std::string v_original, v_candidate;
  std::size_t v_raw_d = 0;
  auto* verify_cmd = app.add_subcommand("verify", "Reconstruction error between two arrays");
  verify_cmd->add_option("--original", v_original)->required();
  verify_cmd->add_option("--candidate", v_candidate)->required();
  verify_cmd->add_option("--raw-d", v_raw_d);

  GenArgs ga;
  auto* gen_cmd = app.add_subcommand("gen", "Write a synthetic unit-norm matrix");
  gen_cmd->add_option("--dist", ga.dist)
      ->check(CLI::IsMember({"uniform", "vmf", "orthogonal", "sparse"}));
  gen_cmd->add_option("--n", ga.n)->required();
  gen_cmd->add_option("--d", ga.d)->required();
  gen_cmd->add_option("--kappa", ga.kappa);
  gen_cmd->add_option("--clusters", ga.clusters);
  gen_cmd->add_option("--density", ga.density);
  gen_cmd->add_option("--seed", ga.seed)->required();
  gen_cmd->add_option("--output", ga.output)->required();

  BenchArgs ba;
  auto* bench_cmd = app.add_subcommand("bench", "Size and throughput across levels");
  bench_cmd->add_option("--d", ba.d);
  bench_cmd->add_option("--size-mb", ba.size_mb);
  bench_cmd->add_option("--levels", ba.levels);
  bench_cmd->add_option("--mode", ba.mode)->check(CLI::IsMember({"spherical", "baseline"}));
  bench_cmd->add_option("--chunk-size", ba.chunk_size);
  bench_cmd->add_option("--seed", ba.seed);
  bench_cmd->add_option("--repeats", ba.repeats);

  std::string s_input;
  std::size_t s_a = 0, s_b = 0;
  bool s_check = false;
  auto* similarity_cmd = app.add_subcommand("similarity", "Dot product from compressed angles");
  similarity_cmd->add_option("--input", s_input)->required();
  similarity_cmd->add_option("--row-a", s_a)->required();
  similarity_cmd->add_option("--row-b", s_b)->required();
  similarity_cmd->add_flag("--check", s_check, "Cross-check against the Cartesian dot product");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    if (*compress_cmd) return cmd_compress(ca, common, out);
    if (*decompress_cmd) return cmd_decompress(d_input, d_output, d_rows, common, out);
    if (*analyze_cmd) return cmd_analyze(a_input, a_raw_d, a_min_tail, common, out, err);
    if (*verify_cmd) return cmd_verify(v_original, v_candidate, v_raw_d, common, out);
    if (*gen_cmd) return cmd_gen(ga, common, out);
    if (*bench_cmd) return cmd_bench(ba, common, out);
    if (*similarity_cmd) return cmd_similarity(s_input, s_a, s_b, s_check, common, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

}  // namespace sphc::cli
