// coupled-mcmc: command-line driver for the example experiments.
//
// Exit codes: 0 success, 1 config/data/runtime error (no outputs written),
// 2 usage error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "unbiased_mcmc/experiments/cut.hpp"
#include "unbiased_mcmc/experiments/meet.hpp"
#include "unbiased_mcmc/experiments/mixture.hpp"
#include "unbiased_mcmc/experiments/pump.hpp"
#include "unbiased_mcmc/experiments/scaling.hpp"
#include "unbiased_mcmc/experiments/varsel.hpp"
#include "unbiased_mcmc/parallel.hpp"

namespace ex = umcmc::experiments;

namespace {

struct Flags {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  std::optional<long long> replicates;
  std::size_t threads = 1;
  std::optional<std::string> kernel;
};

template <class Parse, class Run, class Outputs>
ex::OutputSet execute(const std::string& name, const ex::json& j, const ex::RunOptions& opt, Parse parse, Run run,
                      Outputs outputs) {
  ex::ConfigObject c(j, name);
  const auto cfg = parse(c, opt);
  c.finish();
  ex::OutputSet out = outputs(run(cfg, opt));
  out.resolved_config = c.resolved();
  return out;
}

ex::OutputSet dispatch(const std::string& sub, const ex::json& j, const ex::RunOptions& opt) {
  if (sub == "mixture") return execute(sub, j, opt, ex::parse_mixture_config, ex::run_mixture, ex::mixture_outputs);
  if (sub == "pump") return execute(sub, j, opt, ex::parse_pump_config, ex::run_pump, ex::pump_outputs);
  if (sub == "varsel") return execute(sub, j, opt, ex::parse_varsel_config, ex::run_varsel, ex::varsel_outputs);
  if (sub == "cut") return execute(sub, j, opt, ex::parse_cut_config, ex::run_cut, ex::cut_outputs);
  if (sub == "scaling") return execute(sub, j, opt, ex::parse_scaling_config, ex::run_scaling, ex::scaling_outputs);
  return execute(sub, j, opt, ex::parse_meet_config, ex::run_meet, ex::meet_outputs);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unbiased estimation with coupled Markov chains: example experiments"};
  app.set_version_flag("--version", std::string(umcmc::kVersion));
  app.require_subcommand(1);
  Flags flags;
  const std::pair<const char*, const char*> subs[] = {
      {"mixture", "bimodal mixture: estimates, histogram, inefficiency table"},
      {"pump", "pump-failure Gibbs sampler"},
      {"varsel", "Bayesian variable selection"},
      {"cut", "two-stage estimator for the HPV / cancer cut model"},
      {"scaling", "meeting times against dimension on a Gaussian target"},
      {"meet", "meeting-time diagnostics for one kernel"},
  };
  for (const auto& [name, desc] : subs) {
    auto* s = app.add_subcommand(name, desc);
    s->add_option("--config", flags.config, "JSON config file")->required()->check(CLI::ExistingFile);
    s->add_option("--seed", flags.seed, "master seed (u64)")->capture_default_str();
    s->add_option("--out", flags.out, "output directory")->required();
    s->add_option("--replicates,--R", flags.replicates, "override the main replicate count")
        ->check(CLI::PositiveNumber);
    s->add_option("--threads", flags.threads, "worker threads (0: all cores)")->capture_default_str();
    if (std::string(name) == "scaling" || std::string(name) == "meet") {
      s->add_option("--kernel", flags.kernel,
                    std::string(name) == "scaling" ? "run only the named algorithm" : "kernel to study");
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);  // --help, --version
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  ex::RunOptions opt;
  opt.seed = flags.seed;
  opt.threads = flags.threads == 0 ? umcmc::default_thread_count() : flags.threads;
  opt.replicates = flags.replicates;
  opt.kernel = flags.kernel;
  opt.base_dir = ex::fs::absolute(flags.config).parent_path();
  try {
    const ex::json j = ex::load_config_file(flags.config);
    const ex::OutputSet out = dispatch(sub, j, opt);
    const ex::json manifest = ex::make_manifest(sub, opt, out);
    ex::write_outputs(flags.out, out, manifest);
    std::cout << out.summary.dump(2) << "\n";
  } catch (const umcmc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const umcmc::IngestionError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
