#pragma once

// Command-line front end. `run` is the whole program minus `main`, so the
// subcommands can be driven in-process from tests.
//
// Exit codes: 0 success, 1 verification check failed, 2 validation error,
// 3 I/O error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>

#include "subseg/io.hpp"

namespace subseg::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitIo = 3;

// Documented pass thresholds for `verify`.
inline constexpr double kLrrSimTol = 1e-3;
inline constexpr double kOffBlockTol = 1e-8;

inline int exit_code(ErrorKind kind) { return kind == ErrorKind::Io ? kExitIo : kExitValidation; }

/// Flags shared by all subcommands. Every flag is optional; set flags
/// override the same key from --config.
struct Flags {
  std::optional<std::string> config;
  std::optional<std::string> method;
  std::optional<double> lambda;
  std::optional<long long> k;
  std::optional<double> eps;
  std::optional<long long> max_iter;
  std::optional<double> mu0;
  std::optional<double> rho;
  std::optional<long long> seed;
  std::optional<double> rank_tol;
  std::optional<std::string> input;
  std::optional<std::string> truth;
  std::optional<std::string> output_dir;
  bool informational = false;

  void bind(CLI::App& app) {
    app.add_option("--config", config, "key = value config file (flags override it)");
    app.add_option("--method", method, "lrr or rsi");
    app.add_option("--lambda", lambda, "(2,1) tradeoff weight");
    app.add_option("--k", k, "number of subspaces / clusters");
    app.add_option("--eps", eps, "ALM feasibility tolerance (max norm)");
    app.add_option("--max-iter", max_iter, "ALM iteration cap");
    app.add_option("--mu0", mu0, "initial ALM penalty (default 1.25 / |X|_2)");
    app.add_option("--rho", rho, "ALM penalty growth factor");
    app.add_option("--seed", seed, "random seed");
    app.add_option("--rank-tol", rank_tol, "relative numerical rank threshold");
    app.add_option("--input", input, "input matrix (.csv or .mtx) or sequence directory");
    app.add_option("--truth", truth, "ground-truth labels, one per line");
    app.add_option("--output-dir", output_dir, "directory for output files");
  }

  /// Config file (if any) overlaid with explicitly given flags.
  io::KeyValueConfig merged() const {
    io::KeyValueConfig cfg = config ? io::KeyValueConfig::load(*config) : io::KeyValueConfig{};
    auto put = [&](const char* key, const auto& v) {
      if (!v) return;
      if constexpr (std::is_same_v<std::decay_t<decltype(*v)>, std::string>)
        cfg.set(key, *v);
      else if constexpr (std::is_floating_point_v<std::decay_t<decltype(*v)>>)
        cfg.set(key, io::format_double(*v));
      else
        cfg.set(key, std::to_string(*v));
    };
    put("method", method);
    put("lambda", lambda);
    put("k", k);
    put("eps", eps);
    put("max_iter", max_iter);
    put("mu0", mu0);
    put("rho", rho);
    put("seed", seed);
    put("rank_tol", rank_tol);
    put("input", input);
    put("truth", truth);
    put("output_dir", output_dir);
    return cfg;
  }
};

inline const std::set<std::string>& alm_keys() {
  static const std::set<std::string> keys = {"lambda", "mu0", "rho", "mu_max", "eps", "max_iter"};
  return keys;
}

inline AlmConfig read_alm(const io::KeyValueConfig& cfg, AlmConfig alm = {},
                          const std::string& lambda_key = "lambda") {
  if (auto v = cfg.get_double(lambda_key)) alm.lambda = *v;
  if (auto v = cfg.get_double("mu0")) alm.mu0 = *v;
  if (auto v = cfg.get_double("rho")) alm.rho = *v;
  if (auto v = cfg.get_double("mu_max")) alm.mu_max = *v;
  if (auto v = cfg.get_double("eps")) alm.eps = *v;
  if (auto v = cfg.get_int("max_iter")) {
    if (*v < 1 || *v > 100'000'000) fail(ErrorKind::InvalidInput, "field 'max_iter' out of range");
    alm.max_iter = static_cast<int>(*v);
  }
  alm.validate();
  return alm;
}

inline double read_rank_tol(const io::KeyValueConfig& cfg, double fallback) {
  const double tol = cfg.get_double("rank_tol").value_or(fallback);
  if (!(tol > 0.0 && tol < 1.0)) fail(ErrorKind::InvalidInput, "field 'rank_tol' must lie in (0, 1)");
  return tol;
}

inline std::uint64_t read_seed(const io::KeyValueConfig& cfg) {
  auto v = cfg.get_int("seed").value_or(0);
  if (v < 0) fail(ErrorKind::InvalidInput, "field 'seed' must be nonnegative");
  return static_cast<std::uint64_t>(v);
}

inline fs::path prepare_output_dir(const io::KeyValueConfig& cfg) {
  const fs::path dir = cfg.get_string("output_dir").value_or(".");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create output directory '" + dir.string() + "'");
  return dir;
}

/// SUBSEG_THREADS: cap on worker threads, 0 or unset = automatic.
inline unsigned threads_from_env() {
  const char* raw = std::getenv("SUBSEG_THREADS");
  if (!raw || !*raw) return 0;
  const long long v = io::parse_int(raw, "SUBSEG_THREADS");
  if (v < 0 || v > 4096) fail(ErrorKind::InvalidInput, "SUBSEG_THREADS out of range");
  return static_cast<unsigned>(v);
}

struct LoadedInput {
  Matrix X;
  std::optional<Labels> truth;
  std::optional<int> k_hint;
};

inline LoadedInput load_input(const io::KeyValueConfig& cfg) {
  auto input = cfg.get_string("input");
  if (!input) fail(ErrorKind::InvalidInput, "no input given (--input)");
  LoadedInput in;
  if (fs::is_directory(*input)) {
    if (cfg.has("truth"))
      fail(ErrorKind::InvalidInput, "a sequence directory carries its own labels; drop --truth");
    auto seq = io::load_hopkins_sequence(*input);
    in.X = std::move(seq.X);
    in.truth = std::move(seq.truth);
    in.k_hint = seq.k;
    return in;
  }
  in.X = io::read_matrix(*input);
  if (auto t = cfg.get_string("truth")) {
    in.truth = io::read_labels(*t);
    if (static_cast<Eigen::Index>(in.truth->size()) != in.X.cols())
      fail(ErrorKind::InvalidInput, "truth has " + std::to_string(in.truth->size()) +
                                        " labels but the input has " +
                                        std::to_string(in.X.cols()) + " samples");
  }
  return in;
}

// ---------------------------------------------------------------------------

inline int cmd_generate(const Flags& flags, std::ostream& out) {
  auto cfg = flags.merged();
  auto allowed = io::spec_keys();
  allowed.insert("output_dir");
  cfg.reject_unknown(allowed);
  const auto spec = io::apply_spec(cfg);
  const auto dir = prepare_output_dir(cfg);
  const auto data = generate(spec);
  io::write_matrix(dir / "X.csv", data.X);
  io::write_column(dir / "labels.csv", data.truth.labels);
  io::write_column(dir / "outliers.csv", data.truth.outlier_mask);
  out << "wrote " << data.X.rows() << "x" << data.X.cols() << " matrix with "
      << spec.outlier_count() << " outlier columns to " << dir.string() << '\n';
  return kExitOk;
}

inline std::set<std::string> run_keys() {
  auto keys = alm_keys();
  keys.insert({"method", "k", "rank_tol", "seed", "input", "truth", "output_dir"});
  return keys;
}

inline int cmd_cluster(const Flags& flags, std::ostream& out) {
  auto cfg = flags.merged();
  cfg.reject_unknown(run_keys());
  const Method method = parse_method(cfg.get_string("method").value_or("rsi"));
  const AlmConfig alm = read_alm(cfg);
  const std::uint64_t seed = read_seed(cfg);
  auto in = load_input(cfg);

  auto k = cfg.get_int("k");
  if (!k && in.k_hint) k = *in.k_hint;
  if (!k) fail(ErrorKind::InvalidInput, "number of clusters not given (--k)");
  if (*k < 1 || *k > in.X.cols())
    fail(ErrorKind::InvalidInput, "field 'k' must lie in [1, " + std::to_string(in.X.cols()) + "]");
  const double rank_tol = read_rank_tol(cfg, kDenoisedRankTol);
  const auto dir = prepare_output_dir(cfg);

  MethodReport rep = method == Method::Rsi
                         ? run_rsi(in.X, static_cast<int>(*k), alm, seed, in.truth, rank_tol)
                         : run_lrr(in.X, static_cast<int>(*k), alm, seed, in.truth, rank_tol);
  io::write_column(dir / "labels.csv", rep.labels);

  nlohmann::json j;
  j["method"] = to_string(method);
  j["rows"] = in.X.rows();
  j["samples"] = in.X.cols();
  j["k"] = *k;
  j["lambda"] = alm.lambda;
  j["seed"] = seed;
  j["iterations"] = rep.iterations;
  j["converged"] = rep.converged;
  j["residual"] = rep.residual;
  j["rank_D"] = rep.rank_D;
  j["nonzero_E_columns"] = nonzero_columns(rep.E);
  if (rep.accuracy) {
    j["accuracy"] = *rep.accuracy;
    j["error_rate"] = 1.0 - *rep.accuracy;
  }
  {
    auto f = io::open_out(dir / "report.json");
    f << j.dump(2) << '\n';
  }
  std::ostringstream text;
  text << "method      " << to_string(method) << '\n'
       << "samples     " << in.X.cols() << " (dimension " << in.X.rows() << ")\n"
       << "k           " << *k << '\n'
       << "lambda      " << io::format_double(alm.lambda, 6) << '\n'
       << "iterations  " << rep.iterations << (rep.converged ? "" : " (not converged)") << '\n'
       << "residual    " << io::format_double(rep.residual, 6) << '\n'
       << "rank(D)     " << rep.rank_D << '\n'
       << "E columns   " << nonzero_columns(rep.E) << '\n';
  if (rep.accuracy) text << "accuracy    " << io::format_double(*rep.accuracy, 6) << '\n';
  {
    auto f = io::open_out(dir / "report.txt");
    f << text.str();
  }
  out << text.str();
  return kExitOk;
}

inline int cmd_denoise(const Flags& flags, std::ostream& out) {
  auto cfg = flags.merged();
  auto allowed = alm_keys();
  allowed.insert({"method", "input", "output_dir", "seed", "rank_tol", "k"});
  cfg.reject_unknown(allowed);
  const Method method = parse_method(cfg.get_string("method").value_or("rsi"));
  const AlmConfig alm = read_alm(cfg);
  auto in = load_input(cfg);
  const auto dir = prepare_output_dir(cfg);
  const auto dec = denoise(in.X, alm, method);
  io::write_matrix(dir / "D.csv", dec.D);
  io::write_matrix(dir / "E.csv", dec.E);
  out << "method      " << to_string(method) << '\n'
      << "iterations  " << dec.iterations << (dec.converged ? "" : " (not converged)") << '\n'
      << "residual    " << io::format_double(dec.residual, 6) << '\n'
      << "E columns   " << nonzero_columns(dec.E) << '\n'
      << "wrote D.csv and E.csv to " << dir.string() << '\n';
  return kExitOk;
}

inline int cmd_verify(const Flags& flags, std::ostream& out) {
  auto cfg = flags.merged();
  auto allowed = alm_keys();
  allowed.insert({"input", "truth", "rank_tol", "output_dir", "method", "k"});
  for (const auto& key : io::spec_keys()) allowed.insert(key);
  cfg.reject_unknown(allowed);

  Matrix X;
  std::optional<Labels> groups;
  bool informational = flags.informational;
  if (cfg.has("input")) {
    auto in = load_input(cfg);
    X = std::move(in.X);
    groups = std::move(in.truth);
  } else {
    const auto spec = io::apply_spec(cfg);
    auto data = generate(spec);
    X = std::move(data.X);
    groups = std::move(data.truth.labels);
    if (spec.noise_variance_factor > 0.0 || spec.outlier_count() > 0) informational = true;
  }

  AlmConfig alm;
  alm.eps = 1e-8;
  alm = read_alm(cfg, alm);
  const double rank_tol = read_rank_tol(cfg, kCleanRankTol);
  const auto factors = skinny_svd(X, rank_tol);
  if (factors.rank == 0)
    fail(ErrorKind::DegenerateInput, "input has numerical rank 0; the SIM is undefined");
  // Full numerical rank means no low-rank structure to test: noisy data.
  if (factors.rank == std::min(X.rows(), X.cols())) informational = true;

  bool all_pass = true;
  auto verdict = [&](bool ok) {
    if (informational) return std::string("(info)");
    all_pass = all_pass && ok;
    return std::string(ok ? "PASS" : "FAIL");
  };
  auto num = [](double v) { return io::format_double(v, 4); };

  out << "samples " << X.cols() << ", dimension " << X.rows() << ", numerical rank "
      << factors.rank << (informational ? " [informational mode]" : "") << '\n';

  const auto t3 = theorem3_verify(X, alm, rank_tol);
  out << "noiseless LRR: " << t3.iterations << " iterations"
      << (t3.converged ? "" : " (not converged)") << '\n';
  out << "  SIM gap       " << num(t3.sim_gap) << "  (tol " << num(kLrrSimTol) << ")  "
      << verdict(t3.sim_gap <= kLrrSimTol) << '\n';
  out << "  nuclear gap   " << num(t3.nuclear_gap) << "  (tol " << num(kLrrSimTol) << ")  "
      << verdict(t3.nuclear_gap <= kLrrSimTol) << '\n';
  out << "  feasibility   " << num(t3.feasibility) << "  (tol " << num(alm.eps) << ")  "
      << verdict(t3.feasibility < alm.eps) << '\n';

  if (groups) {
    const Matrix S = factors.V * factors.V.transpose();
    const auto blocks = block_structure(S, *groups, kCleanRankTol);
    out << "  off-block max " << num(blocks.max_off_block) << "  (tol " << num(kOffBlockTol)
        << ")  " << verdict(blocks.max_off_block <= kOffBlockTol) << '\n';
    for (std::size_t b = 0; b < blocks.block_labels.size(); ++b) {
      std::vector<Eigen::Index> cols;
      for (std::size_t i = 0; i < groups->size(); ++i)
        if ((*groups)[i] == blocks.block_labels[b]) cols.push_back(static_cast<Eigen::Index>(i));
      const Eigen::Index expected = numerical_rank(X(Eigen::all, cols), rank_tol);
      out << "  block " << blocks.block_labels[b] << " rank " << blocks.block_ranks[b]
          << " (data rank " << expected << ")  " << verdict(blocks.block_ranks[b] == expected)
          << '\n';
    }
  } else {
    out << "  block check skipped (no group labels; pass --truth)\n";
  }
  if (informational) {
    out << "informational: checks are reported without a verdict\n";
    return kExitOk;
  }
  out << (all_pass ? "ALL PASS" : "SOME CHECKS FAILED") << '\n';
  return all_pass ? kExitOk : kExitCheckFailed;
}

inline int cmd_sweep(const Flags& flags, std::ostream& out) {
  auto cfg = flags.merged();
  auto allowed = io::spec_keys();
  allowed.insert({"fractions", "trials", "lambda_lrr", "lambda_rsi", "mu0", "rho", "mu_max", "eps",
                  "max_iter", "output_dir"});
  cfg.reject_unknown(allowed);

  SweepOptions opt;
  const auto spec = io::apply_spec(cfg);
  opt.seed = spec.seed;
  opt.fractions = cfg.get_doubles("fractions").value_or(std::vector<double>{0.0});
  const auto trials = cfg.get_int("trials").value_or(20);
  if (trials < 2 || trials > 1'000'000) fail(ErrorKind::InvalidInput, "field 'trials' must be >= 2");
  opt.trials = static_cast<int>(trials);
  AlmConfig lrr, rsi;
  lrr.lambda = 0.12;
  rsi.lambda = 0.6;
  opt.cfg_lrr = read_alm(cfg, lrr, "lambda_lrr");
  opt.cfg_rsi = read_alm(cfg, rsi, "lambda_rsi");
  opt.threads = threads_from_env();
  const auto dir = prepare_output_dir(cfg);

  const auto result = outlier_sweep(spec, opt);
  {
    auto f = io::open_out(dir / "results.csv");
    io::write_results_csv(f, result);
  }
  {
    auto f = io::open_out(dir / "summary.csv");
    io::write_summary_csv(f, result);
  }
  {
    auto f = io::open_out(dir / "summary.svg");
    io::write_summary_svg(f, result);
  }
  io::write_summary_csv(out, result);
  return kExitOk;
}

/// Whole CLI. Never throws; maps failures onto the exit-code contract.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"subspace segmentation with LRR and robust shape interaction", "subseg"};
  app.require_subcommand(1);

  Flags generate_f, cluster_f, denoise_f, verify_f, sweep_f;
  auto* gen = app.add_subcommand("generate", "write a synthetic union-of-subspaces dataset");
  generate_f.bind(*gen);
  auto* clu = app.add_subcommand("cluster", "segment the columns of a data matrix");
  cluster_f.bind(*clu);
  auto* den = app.add_subcommand("denoise", "split data into corrected and noise parts");
  denoise_f.bind(*den);
  auto* ver = app.add_subcommand("verify", "check SIM block structure and LRR = SIM on clean data");
  verify_f.bind(*ver);
  ver->add_flag("--informational", verify_f.informational, "report values without PASS/FAIL");
  auto* swp = app.add_subcommand("sweep", "accuracy of LRR and RSI over outlier fractions");
  sweep_f.bind(*swp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    if (*gen) return cmd_generate(generate_f, out);
    if (*clu) return cmd_cluster(cluster_f, out);
    if (*den) return cmd_denoise(denoise_f, out);
    if (*ver) return cmd_verify(verify_f, out);
    if (*swp) return cmd_sweep(sweep_f, out);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitValidation;
}

}  // namespace subseg::cli
