// nwmclust: supervised variable clustering via network-wide metrics
// SPDX-License-Identifier: MIT
//
// Command-line front end. Talks to the library only through the C API.
// Exit codes: 0 success, 2 usage/validation, 3 numerical failure, 4 I/O.
#include "nwmclust/nwmclust.h"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace {

struct ConfigDeleter {
  void operator()(nwmc_config* c) const { nwmc_config_free(c); }
};
using ConfigPtr = std::unique_ptr<nwmc_config, ConfigDeleter>;

struct Common {
  std::string config_file;
  std::vector<std::string> sets;
  std::optional<std::string> out;
  std::optional<unsigned long long> seed;
  std::optional<unsigned long long> threads;
};

std::string take(char* s) {
  std::string r = s ? s : "";
  nwmc_string_free(s);
  return r;
}

// Builds the resolved configuration: defaults, then the file, then flags.
// The output-location flags are applied even when an earlier step fails so
// that the manifest of a failed run lands where the user asked for it.
int resolve(const Common& c, ConfigPtr& cfg, std::string& message) {
  nwmc_config* raw = nullptr;
  int st = c.config_file.empty() ? nwmc_config_create(&raw) : nwmc_config_load(c.config_file.c_str(), &raw);
  if (st != NWMC_OK) {
    message = nwmc_last_error();
    nwmc_config_create(&raw);
  }
  cfg.reset(raw);
  auto set = [&](const std::string& k, const std::string& v) {
    const int s2 = nwmc_config_set(cfg.get(), k.c_str(), v.c_str());
    if (s2 != NWMC_OK && st == NWMC_OK) {
      st = s2;
      message = nwmc_last_error();
    }
  };
  if (st == NWMC_OK) {
    for (const auto& kv : c.sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        st = NWMC_ERR_USAGE;
        message = "--set expects key=value, got '" + kv + "'";
        break;
      }
      set(kv.substr(0, eq), kv.substr(eq + 1));
    }
  }
  if (c.out) set("run.out", *c.out);
  if (c.seed) set("run.seed", std::to_string(*c.seed));
  if (c.threads) set("run.threads", std::to_string(*c.threads));
  return st;
}

std::string out_dir(const nwmc_config* cfg) {
  char* v = nullptr;
  if (nwmc_config_get(cfg, "run.out", &v) != NWMC_OK) return "out";
  return take(v);
}

// Writes the run manifest whatever the outcome; returns the command status.
int finish(const nwmc_config* cfg, const std::string& command, int status, const std::string& message) {
  if (status != NWMC_OK) std::cerr << "error: " << message << '\n';
  const std::string dir = out_dir(cfg);
  if (nwmc_write_manifest(cfg, command.c_str(), status, message.c_str(), dir.c_str()) != NWMC_OK) {
    std::cerr << "error (manifest): " << nwmc_last_error() << '\n';
    if (status == NWMC_OK) status = NWMC_ERR_IO;
  }
  return status;
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_file, "Config file ([section] key = value)");
  app->add_option("--set", c.sets, "Override a config key, e.g. --set clustering.tau=0.1 (repeatable)");
  app->add_option("--out", c.out, "Output directory (run.out)");
  app->add_option("--seed", c.seed, "Random seed (run.seed)");
  app->add_option("--threads", c.threads, "Worker threads, 0 = available parallelism (run.threads)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nwmclust: supervised clustering of regression predictors by network-wide metrics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(nwmc_version()));

  Common common;
  std::string csv, response;
  std::optional<unsigned long long> splits, K;
  std::optional<double> tau, alpha;
  bool auto_k = false;
  auto* analyze = app.add_subcommand("analyze", "Cluster the predictors of one CSV dataset");
  add_common(analyze, common);
  analyze->add_option("--csv", csv, "Input CSV with a header row")->required();
  analyze->add_option("--response", response, "Response column name (data.response)");
  analyze->add_option("--splits", splits, "Number of random splits (clustering.splits)");
  analyze->add_option("--K", K, "Number of clusters (clustering.K)");
  analyze->add_flag("--auto-k", auto_k, "Choose K by the ICC rule (clustering.auto_k)");
  analyze->add_option("--tau", tau, "Equivalence margin of the sequential tests (clustering.tau)");
  analyze->add_option("--alpha", alpha, "Level of the sequential tests (clustering.alpha)");

  std::string experiment;
  std::optional<unsigned long long> replicates, boot_B;
  bool full = false;
  auto* reproduce = app.add_subcommand("reproduce", "Regenerate a published simulation table");
  add_common(reproduce, common);
  reproduce->add_option("experiment", experiment, "Experiment id: unsup-vs-seq, icc-k, smallp-seq, nwm-bias, wrong-k, cov-timing")
      ->required();
  reproduce->add_option("--replicates", replicates, "Monte Carlo replicates (simulate.replicates)");
  reproduce->add_flag("--full", full, "Full-scale run with 5000 replicates");
  reproduce->add_option("--B", boot_B, "Bootstrap replicates per covariance (covariance.B)");

  std::string design = "grouped", data_out;
  unsigned long long sim_n = 0, sim_p = 0;
  double sim_rb = 0.0;
  auto* simulate = app.add_subcommand("simulate", "Draw one dataset from a simulation design");
  add_common(simulate, common);
  simulate->add_option("--design", design, "unsup, icc-strong, icc-weak, grouped, nwm-bias");
  simulate->add_option("--n", sim_n, "Sample size (0 = design default)");
  simulate->add_option("--p", sim_p, "Predictors (grouped design only; 0 = default)");
  simulate->add_option("--rb", sim_rb, "Between-group correlation (unsup design)");
  simulate->add_option("--data", data_out, "CSV path (default <out>/data.csv)");

  auto* selftest = app.add_subcommand("selftest", "Run the built-in oracle/invariant suite");
  add_common(selftest, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return NWMC_ERR_USAGE;
  }

  ConfigPtr cfg;
  std::string message;
  const std::string command = app.get_subcommands().front()->get_name();
  if (analyze->parsed()) {
    if (!response.empty()) common.sets.push_back("data.response=" + response);
    if (splits) common.sets.push_back("clustering.splits=" + std::to_string(*splits));
    if (K) common.sets.push_back("clustering.K=" + std::to_string(*K));
    if (auto_k) common.sets.push_back("clustering.auto_k=true");
    if (tau) common.sets.push_back("clustering.tau=" + std::to_string(*tau));
    if (alpha) common.sets.push_back("clustering.alpha=" + std::to_string(*alpha));
  }
  if (reproduce->parsed()) {
    if (full) common.sets.push_back("simulate.replicates=5000");
    else if (replicates) common.sets.push_back("simulate.replicates=" + std::to_string(*replicates));
    if (boot_B) common.sets.push_back("covariance.B=" + std::to_string(*boot_B));
  }
  int st = resolve(common, cfg, message);
  if (st == NWMC_OK && (st = nwmc_config_validate(cfg.get())) != NWMC_OK) message = nwmc_last_error();
  if (st != NWMC_OK) return finish(cfg.get(), command, st, message);
  const std::string dir = out_dir(cfg.get());

  if (analyze->parsed()) {
    char* resp = nullptr;
    nwmc_config_get(cfg.get(), "data.response", &resp);
    const std::string response_name = take(resp);
    nwmc_dataset* d = nullptr;
    st = nwmc_dataset_load_csv(csv.c_str(), response_name.c_str(), &d);
    if (st != NWMC_OK) return finish(cfg.get(), command, st, std::string("stage load: ") + nwmc_last_error());
    nwmc_result* r = nullptr;
    st = nwmc_analyze(cfg.get(), d, &r);
    nwmc_dataset_free(d);
    if (st != NWMC_OK) return finish(cfg.get(), command, st, nwmc_last_error());
    st = nwmc_result_write(r, dir.c_str());
    char* js = nullptr;
    if (st == NWMC_OK && nwmc_result_json(r, &js) == NWMC_OK) std::cout << take(js);
    nwmc_result_free(r);
    return finish(cfg.get(), command, st, st == NWMC_OK ? "" : nwmc_last_error());
  }
  if (reproduce->parsed()) {
    char* summary = nullptr;
    st = nwmc_reproduce(cfg.get(), experiment.c_str(), 0, dir.c_str(), &summary);
    if (st != NWMC_OK) return finish(cfg.get(), command, st, nwmc_last_error());
    std::cout << take(summary) << "table written to " << dir << '/' << experiment << ".csv\n";
    return finish(cfg.get(), command, st, "");
  }
  if (simulate->parsed()) {
    const std::string path = data_out.empty() ? dir + "/data.csv" : data_out;
    st = nwmc_simulate(cfg.get(), design.c_str(), sim_n, sim_p, sim_rb, path.c_str());
    if (st == NWMC_OK) std::cout << "wrote " << path << '\n';
    return finish(cfg.get(), command, st, st == NWMC_OK ? "" : nwmc_last_error());
  }
  char* rep = nullptr;
  int failures = 0;
  st = nwmc_selftest(cfg.get(), &rep, &failures);
  if (st != NWMC_OK) return finish(cfg.get(), command, st, nwmc_last_error());
  std::cout << take(rep);
  return finish(cfg.get(), command, failures == 0 ? NWMC_OK : NWMC_ERR_NUMERICAL,
                failures == 0 ? "" : std::to_string(failures) + " selftest checks failed");
}
