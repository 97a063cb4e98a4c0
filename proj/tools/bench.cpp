#include <cstdio>
#include <iostream>

#include "CLI11.hpp"

#include "aarc/bench.hpp"

namespace {

aarc::NormalizeMode parse_normalize(const std::string &s) {
  if (s == "none")
    return aarc::NormalizeMode::none;
  if (s == "scale_to_unit_range")
    return aarc::NormalizeMode::scale_to_unit_range;
  if (s == "standardize")
    return aarc::NormalizeMode::standardize;
  throw aarc::Error("--normalize: expected none, scale_to_unit_range or standardize");
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Accelerated adaptive cubic regularization benchmark harness"};
  app.require_subcommand(1);

  auto *run = app.add_subcommand("run", "run solvers on one problem and write traces");
  std::string data, solvers = "aarc_hybrid,aarc,aarcq,arc,aagd,agd", init = "far_normal:5000", out = "bench_out";
  std::string normalize = "none";
  double lambda = 1e-5;
  std::uint64_t seed = 1;
  std::vector<std::string> overrides;
  bool no_wall_time = false;
  int threads = 0;
  run->add_option("--data", data, "LIBSVM file, or synthetic:<kind>[:key=value,...]")->required();
  run->add_option("--lambda", lambda, "l2 regularization weight")->capture_default_str();
  run->add_option("--solvers", solvers, "comma-separated solver names")->capture_default_str();
  run->add_option("--seed", seed, "seed of the initial point")->capture_default_str();
  run->add_option("--init", init, "far_normal[:variance], zeros or file:<path>")->capture_default_str();
  run->add_option("--out", out, "output directory")->capture_default_str();
  run->add_option("--normalize", normalize, "none, scale_to_unit_range or standardize")->capture_default_str();
  run->add_option("--set", overrides, "config override key=value (repeatable)");
  run->add_option("--threads", threads, "worker threads (default: BENCH_THREADS or all cores)");
  run->add_flag("--no-wall-time", no_wall_time, "write zero timestamps so traces are byte-reproducible");

  auto *report = app.add_subcommand("report", "fit convergence rates from a trace directory");
  std::string traces, fstar = "ref";
  report->add_option("--traces", traces, "directory written by `bench run`")->required();
  report->add_option("--fstar", fstar, "ref (reference run) or meta (problem metadata)")
      ->check(CLI::IsMember({"ref", "meta"}))
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      aarc::bench::BenchSpec spec;
      spec.data = data;
      spec.lambda = lambda;
      spec.normalize = parse_normalize(normalize);
      spec.solvers = aarc::bench::split(solvers, ',');
      spec.seed = seed;
      spec.init = aarc::bench::parse_init(init);
      spec.overrides = overrides;
      spec.output_dir = out;
      spec.record_wall_time = !no_wall_time;
      spec.threads = threads;
      for (const auto &path : aarc::bench::run_bench(spec)) {
        if (path.extension() != ".json")
          continue;
        std::ifstream in(path);
        const auto j = aarc::bench::json::parse(in);
        std::printf("%-12s %-18s f=%.12g |g|=%.3e successes=%ld iterations=%ld time=%.3fs\n",
                    j["solver"].get<std::string>().c_str(), j["status"].get<std::string>().c_str(),
                    j["f_final"].is_null() ? NAN : j["f_final"].get<double>(),
                    j["grad_norm_final"].is_null() ? NAN : j["grad_norm_final"].get<double>(),
                    j["successes"].get<long>(), j["iterations"].get<long>(), j["wall_time_s"].get<double>());
      }
    } else if (*report) {
      const auto r = aarc::bench::emit_rate_report(
          traces, fstar == "meta" ? aarc::bench::FstarSource::metadata : aarc::bench::FstarSource::reference_run);
      std::printf("f* = %.17g (%s)\n", r["fstar"].get<double>(), r["fstar_source"].get<std::string>().c_str());
      std::printf("%-12s %10s %14s %12s %14s %14s\n", "solver", "successes", "final_gap", "tail_slope",
                  "max_gap*l^2", "max_gap*l^3");
      for (const auto &s : r["solvers"])
        std::printf("%-12s %10zu %14.6e %12.4f %14.6e %14.6e\n", s["solver"].get<std::string>().c_str(),
                    s["successes"].get<std::size_t>(), s["final_gap"].get<double>(), s["tail_slope"].get<double>(),
                    s["max_gap_l2"].get<double>(), s["max_gap_l3"].get<double>());
    }
  } catch (const std::exception &e) {
    std::fprintf(stderr, "bench: %s\n", e.what());
    return 1;
  }
  return 0;
}
