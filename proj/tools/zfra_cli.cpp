#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "zfra/bench.hpp"
#include "zfra/model.hpp"

namespace {

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kGuard = 3 };

void emit(const std::string& path, const std::vector<zfra::RunRecord>& recs) {
  if (path.empty() || path == "-") {
    zfra::write_csv(std::cout, recs);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  zfra::write_csv(out, recs);
}

std::vector<std::string> split_methods(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ZF-beamforming MISO-OFDMA resource allocation bench"};
  app.require_subcommand(1);

  std::string config, out, methods = "alg1,alg2,maxthr,bound", param = "dmin", in;
  zfra::RunOptions opts;
  zfra::SweepSpec spec;
  bool no_timing = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--trials", opts.trials, "number of channel realizations")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", opts.seed, "base seed");
    sub->add_option("--out", out, "CSV output path (stdout if omitted)");
    sub->add_option("--jobs", opts.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--no-timing", no_timing, "write elapsed_us as 0");
  };

  auto* run = app.add_subcommand("run", "run methods on random channels");
  add_common(run);
  std::vector<std::string> method = {"alg1"};
  run->add_option("--method", method, "alg1|alg2|maxthr|bound, comma-separated")
      ->delimiter(',')
      ->check(CLI::IsMember({"alg1", "alg2", "maxthr", "bound"}));

  auto* sweep = app.add_subcommand("sweep", "rate-constraint, RT-user or user-count sweep");
  add_common(sweep);
  sweep->add_option("--param", param, "dmin|D|K")->check(CLI::IsMember({"dmin", "D", "K"}));
  sweep->add_option("--start", spec.start, "first sweep value")->required();
  sweep->add_option("--stop", spec.stop, "last sweep value")->required();
  sweep->add_option("--step", spec.step, "sweep increment");
  sweep->add_option("--methods", methods, "comma-separated method list");
  sweep->add_option("--delta-r", spec.delta_r, "rate increment of the inner sweep for K");
  sweep->add_option("--max-points", spec.max_points, "inner sweep length for K");

  auto* gaps = app.add_subcommand("gaps", "gap metrics of a dmin sweep CSV");
  gaps->add_option("--in", in, "sweep CSV")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    opts.timing = !no_timing;
    if (*run) {
      const auto cfg = zfra::load_config(config);
      opts.methods = method;
      emit(out, zfra::run_trials(cfg, opts));
    } else if (*sweep) {
      const auto cfg = zfra::load_config(config);
      spec.param = zfra::parse_sweep_param(param);
      opts.methods = split_methods(methods);
      emit(out, zfra::run_sweep(cfg, spec, opts));
    } else if (*gaps) {
      std::cout << zfra::format_gaps(zfra::compute_gaps(zfra::read_csv_file(in)));
    }
  } catch (const zfra::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const zfra::GuardError& e) {
    std::cerr << "guard violation: " << e.what() << '\n';
    return kGuard;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return kOk;
}
