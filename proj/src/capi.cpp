// nwmclust: supervised variable clustering via network-wide metrics
// SPDX-License-Identifier: MIT
#include "nwmclust/nwmclust.h"

#include "nwmclust/config.hpp"
#include "nwmclust/selftest.hpp"
#include "nwmclust/simulation.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#ifndef NWMC_VERSION_STRING
#define NWMC_VERSION_STRING "1.0.0"
#endif

struct nwmc_config {
  nwmc::RunConfig cfg;
};

struct nwmc_dataset {
  nwmc::Dataset data;
};

struct nwmc_result {
  nwmc::MultiSplitResult ms;
  std::vector<std::string> names;
};

namespace {

thread_local std::string g_last_error;

nwmc_status fail(nwmc_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

// Runs body, mapping library exceptions onto status codes.
template <typename Body>
nwmc_status guarded(Body&& body) {
  try {
    body();
    g_last_error.clear();
    return NWMC_OK;
  } catch (const nwmc::UsageError& e) {
    return fail(NWMC_ERR_USAGE, e.what());
  } catch (const nwmc::NumericalError& e) {
    return fail(NWMC_ERR_NUMERICAL, e.what());
  } catch (const nwmc::IoError& e) {
    return fail(NWMC_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(NWMC_ERR_NUMERICAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(NWMC_ERR_NUMERICAL, std::string("internal error: ") + e.what());
  }
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void need(const void* p, const char* what) {
  if (!p) throw nwmc::UsageError(std::string(what) + " must not be NULL");
}

std::filesystem::path ensure_dir(const char* dir) {
  need(dir, "output directory");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw nwmc::IoError(std::string("cannot create output directory '") + dir + "': " + ec.message());
  return dir;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw nwmc::IoError("cannot write '" + p.string() + "'");
  f << text;
  if (!f) throw nwmc::IoError("write failed for '" + p.string() + "'");
}

std::string nwm_estimates_csv(const nwmc_result& r) {
  const std::size_t p = r.names.size();
  std::vector<double> sum(p, 0.0), sum2(p, 0.0), se(p, 0.0);
  std::vector<std::size_t> cnt(p, 0);
  for (const auto& s : r.ms.splits) {
    if (!s.failure.empty() || s.nwm.values.size() == 0) continue;
    for (std::size_t k = 0; k < s.nwm.vertices.size(); ++k) {
      const std::size_t v = s.nwm.vertices[k];
      const double x = s.nwm.values(static_cast<Eigen::Index>(k));
      sum[v] += x;
      sum2[v] += x * x;
      se[v] += s.se.size() ? s.se(static_cast<Eigen::Index>(k)) : 0.0;
      ++cnt[v];
    }
  }
  std::ostringstream out;
  out.precision(10);
  out << "variable,splits_estimated,mean_nwm,mean_se,sd_across_splits\n";
  for (std::size_t v = 0; v < p; ++v) {
    out << r.names[v] << ',' << cnt[v] << ',';
    if (cnt[v] == 0) {
      out << ",,\n";
      continue;
    }
    const double c = static_cast<double>(cnt[v]), m = sum[v] / c;
    const double var = cnt[v] > 1 ? std::max(0.0, (sum2[v] - c * m * m) / (c - 1)) : 0.0;
    out << m << ',' << se[v] / c << ',' << std::sqrt(var) << '\n';
  }
  return out.str();
}

std::string splits_csv(const nwmc_result& r) {
  std::ostringstream out;
  out << "split,q_hat,K,status\n";
  for (std::size_t s = 0; s < r.ms.splits.size(); ++s) {
    const auto& sp = r.ms.splits[s];
    std::string status = sp.failure.empty() ? (sp.empty_selection ? "empty selection" : "ok") : sp.failure;
    for (auto& ch : status)
      if (ch == ',' || ch == '\n') ch = ';';
    out << s << ',' << sp.active.q_hat() << ',' << sp.K << ',' << status << '\n';
  }
  return out.str();
}

std::string report_json(const nwmc::McReport& rep, std::uint64_t seed) {
  nlohmann::ordered_json j;
  j["experiment"] = nwmc::to_string(rep.id);
  j["replicates"] = rep.replicates;
  j["seed"] = seed;
  j["cells"] = nlohmann::json::array();
  for (const auto& c : rep.cells) {
    nlohmann::ordered_json cj;
    cj["label"] = c.label;
    cj["successes"] = c.successes;
    cj["trials"] = c.trials;
    cj["rate"] = c.rate;
    cj["wilson95"] = {c.lo, c.hi};
    cj["published"] = c.published ? nlohmann::json(*c.published) : nlohmann::json(nullptr);
    j["cells"].push_back(cj);
  }
  j["values"] = rep.values;
  j["failures"] = rep.failures;
  j["timing_seconds"] = rep.timing;
  j["wall_seconds"] = rep.wall_seconds;
  return j.dump(2) + "\n";
}

std::string summary_text(const nwmc::McReport& rep) {
  std::ostringstream out;
  char buf[256];
  out << "experiment " << nwmc::to_string(rep.id) << ", " << rep.replicates << " replicates\n";
  for (const auto& c : rep.cells) {
    std::snprintf(buf, sizeof buf, "  %-48s %.4f  [%.4f, %.4f]", c.label.c_str(), c.rate, c.lo, c.hi);
    out << buf;
    if (c.published) {
      std::snprintf(buf, sizeof buf, "  published %.4f", *c.published);
      out << buf;
    }
    out << '\n';
  }
  for (const auto& [k, v] : rep.values) {
    std::snprintf(buf, sizeof buf, "  %-48s %.6g\n", k.c_str(), v);
    out << buf;
  }
  for (const auto& [k, v] : rep.timing) {
    std::snprintf(buf, sizeof buf, "  %-48s %.6g\n", ("time: " + k).c_str(), v);
    out << buf;
  }
  for (const auto& [k, v] : rep.failures) out << "  failures at " << k << ": " << v << '\n';
  return out.str();
}

}  // namespace

extern "C" {

const char* nwmc_version(void) { return NWMC_VERSION_STRING; }

const char* nwmc_last_error(void) { return g_last_error.c_str(); }

void nwmc_string_free(char* s) { std::free(s); }

nwmc_status nwmc_config_create(nwmc_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new nwmc_config{nwmc::RunConfig::defaults()};
  });
}

nwmc_status nwmc_config_load(const char* path, nwmc_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new nwmc_config{nwmc::RunConfig::load(path)};
  });
}

nwmc_status nwmc_config_set(nwmc_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    need(cfg, "config");
    need(key, "key");
    need(value, "value");
    cfg->cfg.set(key, value);
  });
}

nwmc_status nwmc_config_get(const nwmc_config* cfg, const char* key, char** value) {
  return guarded([&] {
    need(cfg, "config");
    need(key, "key");
    need(value, "value");
    *value = dup(cfg->cfg.get(key));
  });
}

nwmc_status nwmc_config_validate(const nwmc_config* cfg) {
  return guarded([&] {
    need(cfg, "config");
    cfg->cfg.validate();
  });
}

nwmc_status nwmc_config_dump(const nwmc_config* cfg, char** text) {
  return guarded([&] {
    need(cfg, "config");
    need(text, "text");
    *text = dup(cfg->cfg.to_text());
  });
}

void nwmc_config_free(nwmc_config* cfg) { delete cfg; }

nwmc_status nwmc_dataset_load_csv(const char* path, const char* response, nwmc_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(response, "response");
    need(out, "out");
    *out = new nwmc_dataset{nwmc::load_csv(path, response)};
  });
}

nwmc_status nwmc_dataset_from_arrays(const double* y, const double* X, size_t n, size_t p, const char* const* names,
                                     nwmc_dataset** out) {
  return guarded([&] {
    need(y, "y");
    need(X, "X");
    need(out, "out");
    nwmc::Vec yy = Eigen::Map<const nwmc::Vec>(y, static_cast<Eigen::Index>(n));
    nwmc::Mat XX = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        X, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    std::vector<std::string> nm;
    if (names)
      for (size_t j = 0; j < p; ++j) {
        need(names[j], "column name");
        nm.emplace_back(names[j]);
      }
    *out = new nwmc_dataset{nwmc::make_dataset(std::move(yy), std::move(XX), std::move(nm))};
  });
}

nwmc_status nwmc_dataset_dims(const nwmc_dataset* d, size_t* n, size_t* p) {
  return guarded([&] {
    need(d, "dataset");
    if (n) *n = d->data.n();
    if (p) *p = d->data.p();
  });
}

void nwmc_dataset_free(nwmc_dataset* d) { delete d; }

nwmc_status nwmc_analyze(const nwmc_config* cfg, const nwmc_dataset* d, nwmc_result** out) {
  return guarded([&] {
    need(cfg, "config");
    need(d, "dataset");
    need(out, "out");
    cfg->cfg.validate();
    const nwmc::PipelineConfig pc = cfg->cfg.pipeline();
    nwmc::Dataset work;
    try {
      work = pc.standardize ? nwmc::standardize(d->data) : d->data;
    } catch (const nwmc::UsageError& e) {
      throw nwmc::UsageError(std::string("stage standardize: ") + e.what() +
                             " (hint: drop constant columns before analysis)");
    }
    const nwmc::RngStream rng(cfg->cfg.seed(), 0);
    auto res = std::make_unique<nwmc_result>();
    res->ms = nwmc::multiple_split_cluster(work, cfg->cfg.splits(), cfg->cfg.vote_threshold(), pc, rng,
                                          cfg->cfg.threads());
    res->names = d->data.names;
    if (res->ms.failed_splits == res->ms.splits.size()) {
      std::string first;
      for (const auto& s : res->ms.splits)
        if (!s.failure.empty()) {
          first = s.failure;
          break;
        }
      throw nwmc::NumericalError("stage split pipeline: all " + std::to_string(res->ms.splits.size()) +
                                 " splits failed; first failure: " + first +
                                 " (hint: check for collinear predictors, or use covariance.method = bootstrap)");
    }
    *out = res.release();
  });
}

nwmc_status nwmc_result_num_clusters(const nwmc_result* r, size_t* k) {
  return guarded([&] {
    need(r, "result");
    need(k, "k");
    *k = r->ms.result.clusters.size();
  });
}

nwmc_status nwmc_result_cluster_of(const nwmc_result* r, size_t var, long* cluster) {
  return guarded([&] {
    need(r, "result");
    need(cluster, "cluster");
    nwmc::require(var < r->names.size(), "variable index out of range");
    const auto& cl = r->ms.result.clusters;
    for (std::size_t k = 0; k < cl.size(); ++k)
      if (std::find(cl[k].begin(), cl[k].end(), var) != cl[k].end()) {
        *cluster = static_cast<long>(k);
        return;
      }
    const auto& u = r->ms.result.unassigned;
    *cluster = std::find(u.begin(), u.end(), var) != u.end() ? -1 : -2;
  });
}

nwmc_status nwmc_result_json(const nwmc_result* r, char** text) {
  return guarded([&] {
    need(r, "result");
    need(text, "text");
    *text = dup(nwmc::cluster_result_json(r->ms.result, r->names));
  });
}

nwmc_status nwmc_result_write(const nwmc_result* r, const char* out_dir) {
  return guarded([&] {
    need(r, "result");
    const auto dir = ensure_dir(out_dir);
    write_text(dir / "clusters.json", nwmc::cluster_result_json(r->ms.result, r->names));
    write_text(dir / "clusters.csv", nwmc::cluster_result_csv(r->ms, r->names));
    write_text(dir / "nwm_estimates.csv", nwm_estimates_csv(*r));
    write_text(dir / "splits.csv", splits_csv(*r));
  });
}

void nwmc_result_free(nwmc_result* r) { delete r; }

const char* nwmc_experiment_names(void) {
  static const std::string names = [] {
    std::string s;
    for (const auto& n : nwmc::experiment_names()) s += (s.empty() ? "" : ",") + n;
    return s;
  }();
  return names.c_str();
}

nwmc_status nwmc_reproduce(const nwmc_config* cfg, const char* experiment, size_t replicates, const char* out_dir,
                           char** summary) {
  return guarded([&] {
    need(cfg, "config");
    need(experiment, "experiment");
    const auto id = nwmc::parse_experiment(experiment);
    if (!id)
      throw nwmc::UsageError(std::string("unknown experiment '") + experiment + "'; valid ids: " +
                             nwmc_experiment_names());
    cfg->cfg.validate();
    nwmc::ExperimentOptions opt = cfg->cfg.experiment();
    if (replicates > 0) opt.replicates = replicates;
    const auto dir = ensure_dir(out_dir);
    const nwmc::McReport rep = nwmc::run_table(*id, opt);
    const std::string name = nwmc::to_string(*id);
    write_text(dir / (name + ".csv"), rep.table_csv);
    write_text(dir / (name + "_report.json"), report_json(rep, opt.seed));
    if (summary) *summary = dup(summary_text(rep));
  });
}

nwmc_status nwmc_simulate(const nwmc_config* cfg, const char* design, size_t n, size_t p, double r_b,
                          const char* csv_path) {
  return guarded([&] {
    need(cfg, "config");
    need(design, "design");
    need(csv_path, "csv path");
    const std::string d = design;
    nwmc::SimDesign sd;
    if (d == "unsup")
      sd = nwmc::unsup_design(r_b, n ? n : 100);
    else if (d == "icc-strong" || d == "icc-weak")
      sd = nwmc::icc_design(d == "icc-weak", n ? n : 100);
    else if (d == "grouped")
      sd = nwmc::smallp_design(p ? p : 20, n ? n : 200);
    else if (d == "nwm-bias")
      sd = nwmc::nwm_bias_design(n ? n : 300);
    else
      throw nwmc::UsageError("unknown design '" + d + "'; valid designs: unsup, icc-strong, icc-weak, grouped, nwm-bias");
    if (d != "grouped") nwmc::require(p == 0 || p == sd.p, "design '" + d + "' has a fixed p = " + std::to_string(sd.p));
    nwmc::RngStream rng(cfg->cfg.seed(), 0);
    const nwmc::Dataset data = nwmc::generate(sd, rng);
    const std::filesystem::path path(csv_path);
    if (path.has_parent_path()) ensure_dir(path.parent_path().string().c_str());
    nwmc::write_csv(csv_path, data);
  });
}

nwmc_status nwmc_selftest(const nwmc_config* cfg, char** report, int* failures) {
  return guarded([&] {
    const std::uint64_t seed = cfg ? cfg->cfg.seed() : 7;
    const auto cases = nwmc::run_selftest(seed);
    int bad = 0;
    std::ostringstream out;
    for (const auto& c : cases) {
      out << (c.ok ? "PASS  " : "FAIL  ") << c.name << "  (" << c.detail << ")\n";
      bad += c.ok ? 0 : 1;
    }
    out << cases.size() - static_cast<std::size_t>(bad) << "/" << cases.size() << " checks passed\n";
    if (failures) *failures = bad;
    if (report) *report = dup(out.str());
  });
}

nwmc_status nwmc_write_manifest(const nwmc_config* cfg, const char* command, int status, const char* message,
                                const char* out_dir) {
  return guarded([&] {
    need(cfg, "config");
    const auto dir = ensure_dir(out_dir);
    nlohmann::ordered_json j;
    j["tool"] = "nwmclust";
    j["version"] = NWMC_VERSION_STRING;
    j["command"] = command ? command : "";
    j["status"] = status;
    j["message"] = message ? message : "";
    const auto& e = cfg->cfg.entries();
    const auto seed_it = e.find("run.seed");
    j["seed"] = seed_it != e.end() ? seed_it->second : "";
    j["config_hash"] = cfg->cfg.hash();
    nlohmann::ordered_json c;
    for (const auto& [k, v] : e) c[k] = v;
    j["config"] = c;
    write_text(dir / "manifest.json", j.dump(2) + "\n");
  });
}

}  // extern "C"
