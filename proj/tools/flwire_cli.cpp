// flwire: federated learning over a lossy wireless uplink.
//
//   flwire simulate <config> [--output DIR] [--timing]
//   flwire assign   <config> [--seed S]
//   flwire bound    <config> [--runs N]
//   flwire sweep    <config> --axis user_count|rb_count|samples_per_user --values 5 10 ...
//   flwire validate <config>
//
// Exit codes: 0 ok, 1 unexpected, 2 config, 3 io, 4 numerical, 5 validation.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "flwire/fl/training.hpp"
#include "flwire/harness/config.hpp"
#include "flwire/harness/experiment.hpp"
#include "flwire/harness/io.hpp"
#include "flwire/harness/validate.hpp"

namespace fw = flwire::harness;

namespace {

enum Exit { kOk = 0, kUnexpected = 1, kConfig = 2, kIo = 3, kNumerical = 4, kValidation = 5 };

constexpr const char* kOutputEnv = "FLWIRE_OUTPUT_DIR";

struct Options {
  std::string config_path;
  std::string output_dir;
  bool timing = false;
  int threads = 0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int runs = 0;
  std::string axis;
  std::vector<int> values;
};

std::string output_dir(const Options& o, const fw::ExperimentConfig& c) {
  if (!o.output_dir.empty()) return o.output_dir;
  if (const char* env = std::getenv(kOutputEnv); env && *env) return env;
  return c.output_dir;
}

fw::ExperimentConfig load(const Options& o) {
  fw::ExperimentConfig c = fw::load_config(o.config_path);
  if (o.threads > 0) c.threads = o.threads;
  return c;
}

void print_records(const std::vector<fw::RunRecord>& records) {
  std::printf("%-11s %20s %8s %14s %14s\n", "algorithm", "seed", "selected", "objective",
              "final_loss");
  for (const auto& r : records) {
    std::printf("%-11s %20llu %8zu %14.6g %14.8g%s\n", std::string(fw::to_string(r.algorithm)).c_str(),
                static_cast<unsigned long long>(r.seed), r.decision.selected_count(),
                r.decision.objective, r.final_loss(), r.degenerate ? "  (degenerate)" : "");
  }
}

void write_outputs(const std::vector<fw::RunRecord>& records, const Options& o,
                   const fw::ExperimentConfig& c) {
  fw::ExportOptions eo;
  eo.config_json = fw::serialize_config(c);
  eo.include_timing = o.timing;
  const auto dir = output_dir(o, c);
  const auto files = fw::export_records(records, dir, eo);
  std::printf("wrote %zu files to %s\n", files.size(), dir.c_str());
}

int cmd_simulate(const Options& o) {
  const auto c = load(o);
  const auto records = fw::run_experiment(c);
  print_records(records);
  write_outputs(records, o, c);
  return kOk;
}

int cmd_assign(const Options& o) {
  const auto c = load(o);
  const std::uint64_t seed = o.seed_given ? o.seed : c.seeds.front();
  const auto topo = fw::build_topology(c, seed);
  const auto weights = flwire::opt::build_edge_weights(topo);
  for (fw::Algorithm a : c.algorithms) {
    const auto d = fw::allocate(a, topo, weights, seed);
    std::printf("# %s  seed %llu  objective %.6g  selected %zu/%zu\n",
                std::string(fw::to_string(a)).c_str(), static_cast<unsigned long long>(seed),
                d.objective, d.selected_count(), d.user_count());
    std::printf("%4s %9s %4s %3s %11s %9s %9s %11s\n", "user", "dist_m", "K", "rb", "power_w",
                "per", "delay_s", "energy_j");
    for (std::size_t i = 0; i < d.user_count(); ++i) {
      std::printf("%4zu %9.2f %4d %3d %11.4e %9.5f %9.5f %11.4e\n", i, topo.users[i].distance_m,
                  d.sample_counts[i], d.rb[i], d.power_w[i], d.per[i], d.delay_s[i], d.energy_j[i]);
    }
  }
  return kOk;
}

int cmd_bound(const Options& o) {
  auto c = load(o);
  c.bound.enabled = true;
  if (o.runs > 0) c.bound.runs = o.runs;
  const auto records = fw::run_experiment(c);
  std::printf("%-11s %8s %10s %10s %10s %10s %12s %12s %9s\n", "algorithm", "seed", "L", "mu",
              "zeta1", "zeta2", "A", "asym_gap", "dominated");
  for (const auto& r : records) {
    const auto& b = *r.bound;
    bool dominated = true;
    for (std::size_t t = 0; t < b.bound.size(); ++t) dominated = dominated && b.empirical_gap[t] <= b.bound[t];
    std::printf("%-11s %8llu %10.4g %10.4g %10.4g %10.4g %12.8f %12.5g %9s\n",
                std::string(fw::to_string(r.algorithm)).c_str(), static_cast<unsigned long long>(r.seed),
                b.curvature.lipschitz_L, b.curvature.strong_convexity_mu, b.fit.zeta1, b.fit.zeta2, b.A,
                b.asymptotic.value, dominated ? "yes" : "NO");
  }
  write_outputs(records, o, c);
  return kOk;
}

int cmd_sweep(const Options& o) {
  const auto c = load(o);
  const auto axis = fw::parse_sweep_axis(o.axis);
  if (!axis) throw fw::ConfigError("--axis: expected user_count, rb_count or samples_per_user");
  const auto rows = fw::sweep(c, *axis, o.values);
  std::printf("%-16s %6s %-11s %5s %14s %12s %12s\n", "axis", "value", "algorithm", "runs",
              "mean_loss", "sd_loss", "mean_iters");
  for (const auto& r : rows) {
    std::printf("%-16s %6d %-11s %5d %14.8g %12.4g %12.1f\n", std::string(fw::to_string(r.axis)).c_str(),
                r.value, std::string(fw::to_string(r.algorithm)).c_str(), r.runs, r.mean_final_loss,
                r.sd_final_loss, r.mean_iterations);
  }
  const auto path = fw::export_sweep(rows, output_dir(o, c));
  std::printf("wrote %s\n", path.string().c_str());
  return kOk;
}

int cmd_validate(const Options& o) {
  const auto c = load(o);
  const auto results = fw::run_validation(c);
  bool ok = true;
  for (const auto& r : results) {
    std::printf("%-4s %-24s %s\n", r.passed ? "ok" : "FAIL", r.name.c_str(), r.detail.c_str());
    ok = ok && r.passed;
  }
  return ok ? kOk : kValidation;
}

int fail(const char* cls, const std::string& msg, int code) {
  std::fprintf(stderr, "error[%s]: %s\n", cls, msg.c_str());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated learning over a lossy wireless uplink: allocation, training and bounds"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", o.config_path, "JSON experiment config (empty file = defaults)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("-j,--threads", o.threads, "worker threads (overrides config)")
        ->check(CLI::PositiveNumber);
  };
  auto add_output = [&](CLI::App* sub) {
    sub->add_option("-o,--output", o.output_dir,
                    std::string("output directory (overrides ") + kOutputEnv + " and config)");
  };

  auto* simulate = app.add_subcommand("simulate", "run every configured algorithm and seed");
  add_common(simulate);
  add_output(simulate);
  simulate->add_flag("--timing", o.timing, "record wall-clock time in the manifest");

  auto* assign = app.add_subcommand("assign", "print the allocation tables for one seed");
  add_common(assign);
  assign->add_option("--seed", o.seed, "seed (default: first configured seed)")
      ->each([&](const std::string&) { o.seed_given = true; });

  auto* bound = app.add_subcommand("bound", "convergence bound against the empirical gap");
  add_common(bound);
  add_output(bound);
  bound->add_option("--runs", o.runs, "delivery realisations per record")->check(CLI::PositiveNumber);
  bound->add_flag("--timing", o.timing, "record wall-clock time in the manifest");

  auto* sweep = app.add_subcommand("sweep", "aggregate final loss over one swept parameter");
  add_common(sweep);
  add_output(sweep);
  sweep->add_option("--axis", o.axis, "user_count, rb_count or samples_per_user")->required();
  sweep->add_option("--values", o.values, "values to sweep")->required()->expected(1, -1);

  auto* validate = app.add_subcommand("validate", "run the invariant self-test battery");
  add_common(validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*simulate) return cmd_simulate(o);
    if (*assign) return cmd_assign(o);
    if (*bound) return cmd_bound(o);
    if (*sweep) return cmd_sweep(o);
    if (*validate) return cmd_validate(o);
  } catch (const fw::ConfigError& e) {
    return fail("config", e.what(), kConfig);
  } catch (const fw::IoError& e) {
    return fail("io", e.what(), kIo);
  } catch (const flwire::fl::DivergenceError& e) {
    return fail("numerical", e.what(), kNumerical);
  } catch (const std::domain_error& e) {
    return fail("numerical", e.what(), kNumerical);
  } catch (const std::exception& e) {
    return fail("unexpected", e.what(), kUnexpected);
  }
  return kUnexpected;
}
