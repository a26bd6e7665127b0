#include "dadagger/datastore.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dadagger/envs.hpp"
#include "dadagger/error.hpp"

namespace dadagger {

using nlohmann::json;

namespace {

std::optional<EnvKind> known_kind(const std::string& name) {
  if (name == "track") return EnvKind::track;
  if (name == "reacher") return EnvKind::reacher;
  return std::nullopt;
}

}  // namespace

Dataset aggregate(const Dataset& d, const Dataset& d_i) {
  if (d.env_kind != d_i.env_kind) {
    throw InputError("cannot aggregate datasets of env kinds '" + d.env_kind +
                     "' and '" + d_i.env_kind + "'");
  }
  Dataset out;
  out.env_kind = d.env_kind;
  out.pairs.reserve(d.size() + d_i.size());
  out.pairs.insert(out.pairs.end(), d.pairs.begin(), d.pairs.end());
  out.pairs.insert(out.pairs.end(), d_i.pairs.begin(), d_i.pairs.end());
  return out;
}

HistogramReport histogram(const Dataset& d, std::size_t bins) {
  if (bins < 2) throw ConfigError("histogram needs at least 2 bins");
  HistogramReport h;
  h.bin_edges.resize(bins + 1);
  for (std::size_t k = 0; k <= bins; ++k) {
    h.bin_edges[k] = -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(bins);
  }
  std::size_t dims = 0;
  if (!d.empty()) {
    dims = d.pairs.front().act.size();
  } else if (auto kind = known_kind(d.env_kind)) {
    dims = act_dim(*kind);
  }
  h.counts.assign(dims, std::vector<std::size_t>(bins, 0));
  h.entropy_bits.assign(dims, 0.0);
  h.total = d.size();

  for (const Sample& s : d.pairs) {
    if (s.act.size() != dims) throw InputError("dataset has mixed action dimensions");
    for (std::size_t j = 0; j < dims; ++j) {
      const double u = (s.act[j] + 1.0) / 2.0 * static_cast<double>(bins);
      const double f = std::floor(u);
      std::size_t b = 0;
      if (f >= static_cast<double>(bins)) {
        b = bins - 1;
      } else if (f > 0.0) {
        b = static_cast<std::size_t>(f);
      }
      ++h.counts[j][b];
    }
  }
  if (h.total == 0) return h;
  const double n = static_cast<double>(h.total);
  for (std::size_t j = 0; j < dims; ++j) {
    double e = 0.0;
    for (std::size_t c : h.counts[j]) {
      if (c == 0) continue;
      const double p = static_cast<double>(c) / n;
      e -= p * std::log2(p);
    }
    h.entropy_bits[j] = e;
  }
  return h;
}

std::string histogram_csv(const HistogramReport& h) {
  std::ostringstream out;
  out << "dim,bin_lo,bin_hi,count\n";
  char buf[128];
  for (std::size_t j = 0; j < h.counts.size(); ++j) {
    for (std::size_t b = 0; b < h.counts[j].size(); ++b) {
      std::snprintf(buf, sizeof buf, "%zu,%.6g,%.6g,%zu\n", j, h.bin_edges[b],
                    h.bin_edges[b + 1], h.counts[j][b]);
      out << buf;
    }
  }
  return out.str();
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const Sample& s : d.pairs) {
    out << json{{"obs", s.obs}, {"act", s.act}}.dump() << '\n';
  }
}

Dataset load_dataset(const std::filesystem::path& path, const std::string& env_kind) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  Dataset d;
  d.env_kind = env_kind;
  std::optional<std::size_t> want_obs, want_act;
  if (auto kind = known_kind(env_kind)) {
    want_obs = obs_dim(*kind);
    want_act = act_dim(*kind);
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    Sample s;
    try {
      const json j = json::parse(line);
      s.obs = j.at("obs").get<std::vector<double>>();
      s.act = j.at("act").get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw ParseError(line_no, path.string() + ": " + e.what());
    }
    if (!want_obs) {
      want_obs = s.obs.size();
      want_act = s.act.size();
    }
    if (s.obs.size() != *want_obs) {
      throw ParseError(line_no, "obs has " + std::to_string(s.obs.size()) +
                                    " components, expected " + std::to_string(*want_obs));
    }
    if (s.act.size() != *want_act) {
      throw ParseError(line_no, "act has " + std::to_string(s.act.size()) +
                                    " components, expected " + std::to_string(*want_act));
    }
    d.pairs.push_back(std::move(s));
  }
  return d;
}

}  // namespace dadagger
