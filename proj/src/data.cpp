// nwmclust: supervised variable clustering via network-wide metrics
// SPDX-License-Identifier: MIT
#include "nwmclust/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace nwmc {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t stream_id) {
  // Mix the pair into a single SplitMix64 state, then expand it into enough
  // 32-bit words to fill the Twister state via seed_seq.
  std::uint64_t state = seed ^ (0xd1b54a32d192ed03ULL * (stream_id + 1));
  state = splitmix64(state) ^ stream_id;
  std::vector<std::uint32_t> words(16);
  for (std::size_t i = 0; i < words.size(); i += 2) {
    const std::uint64_t w = splitmix64(state);
    words[i] = static_cast<std::uint32_t>(w);
    words[i + 1] = static_cast<std::uint32_t>(w >> 32);
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(seeded_engine(seed, stream_id)) {}

RngStream RngStream::derive(std::uint64_t tag) const {
  std::uint64_t state = seed_ * 0x9e3779b97f4a7c15ULL + stream_id_;
  const std::uint64_t child_seed = splitmix64(state) ^ (tag * 0xbf58476d1ce4e5b9ULL);
  return RngStream(child_seed, tag);
}

double RngStream::uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

double RngStream::normal() { return normal_(engine_); }

std::size_t RngStream::index(std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

std::vector<std::size_t> RngStream::permutation(std::size_t n) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  // Explicit Fisher-Yates so the result does not depend on the library's shuffle.
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[index(i)]);
  return perm;
}

void Dataset::validate() const {
  require(y.size() >= 2, "dataset needs at least 2 rows");
  require(X.cols() >= 1, "dataset needs at least 1 predictor");
  require(X.rows() == y.size(), "X has " + std::to_string(X.rows()) + " rows but y has " +
                                    std::to_string(y.size()));
  require(names.size() == p(), "expected " + std::to_string(p()) + " column names");
  require(y.allFinite(), "response contains non-finite values");
  require(X.allFinite(), "predictors contain non-finite values");
}

Dataset make_dataset(Vec y, Mat X, std::vector<std::string> names) {
  Dataset d;
  d.y = std::move(y);
  d.X = std::move(X);
  if (names.empty())
    for (Eigen::Index j = 0; j < d.X.cols(); ++j) names.push_back("X" + std::to_string(j + 1));
  d.names = std::move(names);
  d.validate();
  return d;
}

Dataset subset_rows(const Dataset& d, const IndexSet& rows) {
  Dataset out;
  out.y.resize(static_cast<Eigen::Index>(rows.size()));
  out.X.resize(static_cast<Eigen::Index>(rows.size()), d.X.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r] < d.n(), "row index out of range");
    out.y(static_cast<Eigen::Index>(r)) = d.y(static_cast<Eigen::Index>(rows[r]));
    out.X.row(static_cast<Eigen::Index>(r)) = d.X.row(static_cast<Eigen::Index>(rows[r]));
  }
  out.names = d.names;
  out.standardized = d.standardized;
  out.transform = d.transform;
  return out;
}

Dataset standardize(const Dataset& d) {
  d.validate();
  const double n = static_cast<double>(d.n());
  Dataset out = d;
  StandardizeInfo info;
  info.x_mean = d.X.colwise().mean().transpose();
  info.x_sd.resize(d.X.cols());
  for (Eigen::Index j = 0; j < d.X.cols(); ++j) {
    const double ss = (d.X.col(j).array() - info.x_mean(j)).square().sum();
    const double sd = std::sqrt(ss / (n - 1.0));
    if (!(sd > 0.0)) throw UsageError("column '" + d.names[static_cast<std::size_t>(j)] + "' is constant");
    info.x_sd(j) = sd;
    out.X.col(j) = (d.X.col(j).array() - info.x_mean(j)) / sd;
  }
  info.y_mean = d.y.mean();
  out.y = d.y.array() - info.y_mean;
  out.standardized = true;
  out.transform = info;
  return out;
}

Vec unstandardize_coefficients(const StandardizeInfo& info, const Vec& beta_std, double* intercept) {
  require(beta_std.size() == info.x_sd.size(), "coefficient length does not match transform");
  Vec raw = beta_std.array() / info.x_sd.array();
  if (intercept) *intercept = info.y_mean - raw.dot(info.x_mean);
  return raw;
}

SplitPair split_half(std::size_t n, RngStream& rng) {
  require(n >= 4, "split_half needs n >= 4, got " + std::to_string(n));
  SplitPair sp;
  sp.seed = rng.seed();
  sp.stream_id = rng.stream_id();
  const auto perm = rng.permutation(n);
  const std::size_t cut = n / 2;
  sp.d1.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(cut));
  sp.d2.assign(perm.begin() + static_cast<std::ptrdiff_t>(cut), perm.end());
  std::sort(sp.d1.begin(), sp.d1.end());
  std::sort(sp.d2.begin(), sp.d2.end());
  return sp;
}

std::vector<std::vector<std::string>> parse_csv_text(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false, field_started = false;
  auto end_field = [&] {
    record.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    // Skip completely blank lines.
    if (!(record.size() == 1 && record[0].empty())) records.push_back(record);
    record.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_record();
    } else if (c == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') continue;
      end_record();
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) throw IoError("unterminated quoted field at end of input");
  if (!field.empty() || !record.empty()) end_record();
  return records;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& response_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const auto records = parse_csv_text(buf.str());
  if (records.empty()) throw IoError("'" + path + "' is empty (header row required)");

  std::vector<std::string> header;
  for (const auto& h : records[0]) header.push_back(trim(h));
  std::unordered_set<std::string> seen;
  for (const auto& h : header)
    if (!seen.insert(h).second) throw IoError("duplicate column '" + h + "' in header of '" + path + "'");
  const auto it = std::find(header.begin(), header.end(), response_column);
  if (it == header.end()) throw UsageError("response column '" + response_column + "' not found in '" + path + "'");
  const std::size_t ycol = static_cast<std::size_t>(it - header.begin());

  const std::size_t n = records.size() - 1, ncol = header.size();
  if (ncol < 2) throw IoError("'" + path + "' needs a response and at least one predictor column");
  Vec y(static_cast<Eigen::Index>(n));
  Mat X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(ncol - 1));
  for (std::size_t r = 0; r < n; ++r) {
    const auto& rec = records[r + 1];
    if (rec.size() != ncol)
      throw IoError("row " + std::to_string(r + 1) + " has " + std::to_string(rec.size()) + " fields, expected " +
                    std::to_string(ncol));
    for (std::size_t c = 0, xc = 0; c < ncol; ++c) {
      const std::string cell = trim(rec[c]);
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v))
        throw IoError("non-numeric cell '" + cell + "' at row " + std::to_string(r + 1) + ", column '" +
                      header[c] + "'");
      if (c == ycol)
        y(static_cast<Eigen::Index>(r)) = v;
      else
        X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(xc++)) = v;
    }
  }
  std::vector<std::string> names;
  for (std::size_t c = 0; c < ncol; ++c)
    if (c != ycol) names.push_back(header[c]);
  if (n < 2) throw IoError("'" + path + "' needs at least 2 data rows");
  return make_dataset(std::move(y), std::move(X), std::move(names));
}

void write_csv(const std::string& path, const Dataset& d, const std::string& response_name) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << response_name;
  for (const auto& nm : d.names) out << ',' << nm;
  out << '\n' << std::setprecision(17);
  for (std::size_t r = 0; r < d.n(); ++r) {
    out << d.y(static_cast<Eigen::Index>(r));
    for (std::size_t c = 0; c < d.p(); ++c)
      out << ',' << d.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    out << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace nwmc
