// nwmclust: supervised variable clustering via network-wide metrics
// SPDX-License-Identifier: MIT
#include "nwmclust/config.hpp"

#include "nwmclust/parallel.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace nwmc {

namespace {

const std::map<std::string, std::string>& default_entries() {
  static const std::map<std::string, std::string> d = {
      {"run.seed", "7"},
      {"run.threads", "0"},
      {"run.out", "out"},
      {"data.response", "y"},
      {"data.standardize", "true"},
      {"selection.penalty", "scad"},
      {"selection.a", "auto"},
      {"selection.alpha_n", "0.05"},
      {"selection.bonferroni", "true"},
      {"selection.cv_folds", "5"},
      {"selection.grid_size", "50"},
      {"selection.grid_ratio", "0.001"},
      {"network.family", "rho"},
      {"network.f", "f2"},
      {"network.raw_rho", "false"},
      {"nwm.kind", "degree"},
      {"nwm.pairs", "ordered"},
      {"nwm.standardized_degree", "false"},
      {"covariance.method", "bootstrap"},
      {"covariance.B", "500"},
      {"covariance.max_q", "25"},
      {"clustering.K", "3"},
      {"clustering.auto_k", "false"},
      {"clustering.k_max", "0"},
      {"clustering.tau", "0"},
      {"clustering.alpha", "0.05"},
      {"clustering.bonferroni", "true"},
      {"clustering.splits", "20"},
      {"clustering.vote_threshold", "0.6"},
      {"simulate.replicates", "500"},
  };
  return d;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& want) {
  throw UsageError("config key '" + key + "' = '" + value + "': expected " + want);
}

double as_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(x)) bad(key, v, "a finite number");
  return x;
}

std::uint64_t as_u64(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad(key, v, "a non-negative integer");
  return x;
}

bool as_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad(key, v, "true or false");
}

std::string one_of(const std::string& key, const std::string& v, std::initializer_list<const char*> allowed) {
  std::string list;
  for (const char* a : allowed) {
    if (v == a) return v;
    list += (list.empty() ? "" : " | ") + std::string(a);
  }
  bad(key, v, "one of " + list);
}

}  // namespace

RunConfig RunConfig::defaults() {
  RunConfig c;
  c.entries_ = default_entries();
  return c;
}

RunConfig RunConfig::parse(const std::string& text, const std::string& source) {
  RunConfig c = defaults();
  std::istringstream in(text);
  std::string line, section;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    if (t.front() == '[') {
      if (t.back() != ']') throw UsageError(where + "unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw UsageError(where + "expected 'key = value'");
    if (section.empty()) throw UsageError(where + "key outside any [section]");
    try {
      c.set(section + "." + trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    } catch (const UsageError& e) {
      throw UsageError(where + e.what());
    }
  }
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str(), path);
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!default_entries().count(key)) {
    std::string known;
    for (const auto& [k, v] : default_entries()) known += (known.empty() ? "" : ", ") + k;
    throw UsageError("unknown config key '" + key + "' (known keys: " + known + ")");
  }
  entries_[key] = trim(value);
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw UsageError("unknown config key '" + key + "'");
  return it->second;
}

PipelineConfig RunConfig::pipeline() const {
  PipelineConfig p;
  const std::string pen = one_of("selection.penalty", get("selection.penalty"), {"scad", "mcp"});
  p.selection.penalty = PenaltyConfig::defaults(pen == "scad" ? Penalty::SCAD : Penalty::MCP);
  if (get("selection.a") != "auto") p.selection.penalty.a = as_double("selection.a", get("selection.a"));
  p.selection.alpha_n = as_double("selection.alpha_n", get("selection.alpha_n"));
  p.selection.bonferroni = as_bool("selection.bonferroni", get("selection.bonferroni"));
  p.selection.penalty.cv_folds = as_u64("selection.cv_folds", get("selection.cv_folds"));
  p.selection.penalty.grid_size = as_u64("selection.grid_size", get("selection.grid_size"));
  p.selection.penalty.grid_ratio = as_double("selection.grid_ratio", get("selection.grid_ratio"));

  const std::string fam = one_of("network.family", get("network.family"), {"rho", "beta"});
  p.metric.family = fam == "rho" ? WeightFamily::F_ON_RHO : WeightFamily::F_ON_BETA;
  const std::string f = one_of("network.f", get("network.f"), {"f1", "f2"});
  p.metric.f = f == "f1" ? WeightFunction::f1() : WeightFunction::f2();
  p.metric.raw_rho = as_bool("network.raw_rho", get("network.raw_rho"));
  if (f == "f1" && (p.metric.family != WeightFamily::F_ON_RHO || p.metric.raw_rho))
    throw UsageError("config key 'network.f' = 'f1' needs vertex values in [0,1]: use network.family = rho "
                     "with network.raw_rho = false");
  const std::string kind = one_of("nwm.kind", get("nwm.kind"), {"degree", "clustering"});
  p.metric.nwm.kind = kind == "degree" ? NwmKind::DEGREE : NwmKind::CLUSTERING;
  const std::string pairs = one_of("nwm.pairs", get("nwm.pairs"), {"ordered", "unordered"});
  p.metric.nwm.pairs = pairs == "ordered" ? PairCounting::ORDERED : PairCounting::UNORDERED;
  p.metric.nwm.standardized_degree = as_bool("nwm.standardized_degree", get("nwm.standardized_degree"));

  const std::string cov = one_of("covariance.method", get("covariance.method"), {"bootstrap", "plugin"});
  p.cov = cov == "bootstrap" ? CovSource::BOOTSTRAP : CovSource::PLUGIN;
  p.bootstrap_B = as_u64("covariance.B", get("covariance.B"));
  p.plugin.max_q = as_u64("covariance.max_q", get("covariance.max_q"));

  p.seq.K = as_u64("clustering.K", get("clustering.K"));
  p.seq.tau = as_double("clustering.tau", get("clustering.tau"));
  p.seq.alpha = as_double("clustering.alpha", get("clustering.alpha"));
  p.seq.bonferroni = as_bool("clustering.bonferroni", get("clustering.bonferroni"));
  p.auto_k = as_bool("clustering.auto_k", get("clustering.auto_k"));
  p.k_max = as_u64("clustering.k_max", get("clustering.k_max"));
  p.standardize = as_bool("data.standardize", get("data.standardize"));
  return p;
}

std::uint64_t RunConfig::seed() const { return as_u64("run.seed", get("run.seed")); }

std::size_t RunConfig::threads() const {
  const std::uint64_t t = as_u64("run.threads", get("run.threads"));
  return t == 0 ? default_thread_count() : static_cast<std::size_t>(t);
}

std::size_t RunConfig::splits() const { return as_u64("clustering.splits", get("clustering.splits")); }

double RunConfig::vote_threshold() const { return as_double("clustering.vote_threshold", get("clustering.vote_threshold")); }

std::string RunConfig::response() const { return get("data.response"); }

std::string RunConfig::out_dir() const { return get("run.out"); }

ExperimentOptions RunConfig::experiment() const {
  ExperimentOptions o;
  o.replicates = as_u64("simulate.replicates", get("simulate.replicates"));
  o.seed = seed();
  o.threads = threads();
  o.bootstrap_B = as_u64("covariance.B", get("covariance.B"));
  o.cov = pipeline().cov;
  return o;
}

void RunConfig::validate() const {
  const PipelineConfig p = pipeline();
  auto check = [](bool ok, const std::string& key, const std::string& want) {
    if (!ok) throw UsageError("config key '" + key + "': " + want);
  };
  check(p.seq.tau >= 0.0, "clustering.tau", "tau must be >= 0");
  check(p.seq.alpha > 0.0 && p.seq.alpha < 1.0, "clustering.alpha", "alpha must lie in (0,1)");
  check(p.seq.K >= 1, "clustering.K", "K must be >= 1");
  check(p.selection.alpha_n > 0.0 && p.selection.alpha_n <= 1.0, "selection.alpha_n", "alpha_n must lie in (0,1]");
  check(p.bootstrap_B >= 2, "covariance.B", "B must be >= 2");
  check(splits() >= 1, "clustering.splits", "the number of splits must be >= 1");
  const double vt = vote_threshold();
  check(vt > 0.0 && vt <= 1.0, "clustering.vote_threshold", "the vote threshold must lie in (0,1]");
  check(!response().empty(), "data.response", "the response column name must be nonempty");
  check(!out_dir().empty(), "run.out", "the output directory must be nonempty");
  (void)seed();
  (void)threads();
  try {
    p.validate();
    p.selection.penalty.validate();
    experiment().validate();
  } catch (const UsageError& e) {
    throw UsageError(std::string("invalid configuration: ") + e.what());
  }
}

std::string RunConfig::to_text() const {
  std::ostringstream out;
  std::string section;
  for (const auto& [k, v] : entries_) {
    const auto dot = k.find('.');
    const std::string s = k.substr(0, dot);
    if (s != section) {
      out << (section.empty() ? "" : "\n") << '[' << s << "]\n";
      section = s;
    }
    out << k.substr(dot + 1) << " = " << v << '\n';
  }
  return out.str();
}

std::string RunConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_text()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace nwmc
