#include "dadagger/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "dadagger/config.hpp"
#include "dadagger/error.hpp"
#include "dadagger/random.hpp"

namespace dadagger {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kTagOneShot = 0x201;

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string alpha_label(double a) { return fmt("%g", a); }

std::size_t variant_rank(Variant v) {
  switch (v) {
    case Variant::dadagger_dropout: return 0;
    case Variant::dadagger_ensemble: return 1;
    case Variant::random: return 2;
    case Variant::dagger: return 3;
  }
  return 4;
}

}  // namespace

double binomial_errbar(int n_seeds) {
  if (n_seeds < 1) throw ConfigError("binomial_errbar needs n_seeds >= 1");
  return 100.0 * std::sqrt(0.25 / static_cast<double>(n_seeds));
}

void SweepSpec::validate() const {
  if (seeds.empty()) throw ConfigError("sweep: seeds must not be empty");
  if (alphas.empty()) throw ConfigError("sweep: alphas must not be empty");
  if (ms.empty()) throw ConfigError("sweep: ms must not be empty");
  if (variants.empty()) throw ConfigError("sweep: variants must not be empty");
  for (double a : alphas) {
    if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("sweep: alpha out of range");
  }
  for (std::size_t m : ms) {
    if (m < 1) throw ConfigError("sweep: every M must be >= 1");
  }
  for (const SweepCell& c : expand_cells(*this)) {
    cell_config(*this, c, seeds.front()).validate();
  }
}

SweepSpec sweep_spec_from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("sweep spec must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (k != "alphas" && k != "ms" && k != "variants" && k != "seeds" && k != "base") {
      throw ConfigError("unknown sweep field '" + k + "'");
    }
  }
  for (const char* k : {"alphas", "ms", "variants", "seeds", "base"}) {
    if (!j.contains(k)) throw ConfigError(std::string("missing required sweep field '") + k + "'");
  }
  SweepSpec s;
  try {
    s.alphas = j.at("alphas").get<std::vector<double>>();
    for (const json& m : j.at("ms")) {
      if (!m.is_number_integer() || m.get<long long>() < 1) {
        throw ConfigError("sweep: every M must be a positive integer");
      }
      s.ms.push_back(m.get<std::size_t>());
    }
    for (const json& v : j.at("variants")) {
      s.variants.push_back(variant_from_string(v.get<std::string>()));
    }
    s.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed sweep spec: ") + e.what());
  }
  json base = j.at("base");
  if (base.is_object() && !base.contains("variant")) base["variant"] = "dadagger_dropout";
  s.base = run_config_from_json(base);
  s.base.base_dir = base_dir;
  s.validate();
  return s;
}

SweepSpec load_sweep_spec(const fs::path& path) {
  return sweep_spec_from_json(read_json_file(path), path.parent_path());
}

std::vector<SweepCell> expand_cells(const SweepSpec& spec) {
  std::vector<Variant> variants = spec.variants;
  std::stable_sort(variants.begin(), variants.end(),
                   [](Variant a, Variant b) { return variant_rank(a) < variant_rank(b); });
  variants.erase(std::unique(variants.begin(), variants.end()), variants.end());

  std::vector<SweepCell> cells;
  for (Variant v : variants) {
    switch (v) {
      case Variant::dagger:
        cells.push_back({v, 1.0, 1, "dagger"});
        break;
      case Variant::random:
        for (double a : spec.alphas) cells.push_back({v, a, 1, "random"});
        break;
      case Variant::dadagger_dropout:
      case Variant::dadagger_ensemble:
        for (std::size_t m : spec.ms) {
          const std::string label = (v == Variant::dadagger_ensemble ? "ensemble M=" : "M=") +
                                    std::to_string(m);
          for (double a : spec.alphas) cells.push_back({v, a, m, label});
        }
        break;
    }
  }
  return cells;
}

std::uint64_t cell_run_seed(std::uint64_t master_seed, const SweepCell& cell,
                            std::uint64_t seed) {
  return mix_seed({master_seed, static_cast<std::uint64_t>(cell.variant),
                   double_bits(cell.alpha), cell.m, seed});
}

RunConfig cell_config(const SweepSpec& spec, const SweepCell& cell, std::uint64_t seed) {
  RunConfig cfg = spec.base;
  cfg.variant = cell.variant;
  cfg.alpha = cell.alpha;
  cfg.ensemble_m = cell.m;
  cfg.master_seed = cell_run_seed(spec.base.master_seed, cell, seed);
  return cfg;
}

SweepReport run_sweep(const SweepSpec& spec, unsigned jobs, const RunFunction& runner) {
  spec.validate();
  const RunFunction run_one =
      runner ? runner : RunFunction([](const RunConfig& c) { return run(c).report; });

  SweepReport report;
  report.alphas = spec.alphas;
  report.ms = spec.ms;
  for (const SweepCell& c : expand_cells(spec)) {
    CellResult cr;
    cr.cell = c;
    cr.runs.resize(spec.seeds.size());
    report.cells.push_back(std::move(cr));
  }

  struct Task {
    std::size_t cell, seed;
  };
  std::vector<Task> tasks;
  for (std::size_t c = 0; c < report.cells.size(); ++c) {
    for (std::size_t s = 0; s < spec.seeds.size(); ++s) tasks.push_back({c, s});
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      CellResult& cr = report.cells[tasks[t].cell];
      SeedOutcome& out = cr.runs[tasks[t].seed];
      out.seed = spec.seeds[tasks[t].seed];
      const RunConfig cfg = cell_config(spec, cr.cell, out.seed);
      out.run_seed = cfg.master_seed;
      try {
        const RunReport r = run_one(cfg);
        out.ok = true;
        out.converged = r.converged;
        for (const IterationRecord& it : r.iterations) out.total_queries += it.queries_made;
        out.final_dataset =
            r.iterations.empty() ? r.initial_dataset_size : r.iterations.back().dataset_size;
        out.best_success_rate = r.best_success_rate;
        out.best_mean_reward = r.best_mean_reward;
      } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
      }
    }
  };
  const unsigned n_threads =
      std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(tasks.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < n_threads; ++k) pool.emplace_back(worker);
  }

  for (CellResult& cr : report.cells) {
    double q = 0.0, d = 0.0;
    for (const SeedOutcome& o : cr.runs) {
      if (!o.ok) continue;
      ++cr.n_ok;
      cr.n_converged += o.converged ? 1 : 0;
      q += static_cast<double>(o.total_queries);
      d += static_cast<double>(o.final_dataset);
    }
    if (cr.n_ok > 0) {
      const double n = static_cast<double>(cr.n_ok);
      cr.convergence_pct = 100.0 * static_cast<double>(cr.n_converged) / n;
      cr.stddev_pct = binomial_errbar(static_cast<int>(cr.n_ok));
      cr.mean_queries = q / n;
      cr.mean_final_dataset = d / n;
    }
  }
  return report;
}

json sweep_report_to_json(const SweepReport& r) {
  json cells = json::array();
  for (const CellResult& c : r.cells) {
    json runs = json::array();
    for (const SeedOutcome& o : c.runs) {
      json jr{{"seed", o.seed},
              {"run_seed", o.run_seed},
              {"ok", o.ok},
              {"converged", o.converged},
              {"total_queries", o.total_queries},
              {"final_dataset", o.final_dataset},
              {"best_success_rate", o.best_success_rate},
              {"best_mean_reward", o.best_mean_reward}};
      if (!o.ok) jr["error"] = o.error;
      runs.push_back(std::move(jr));
    }
    cells.push_back(json{{"variant", to_string(c.cell.variant)},
                         {"alpha", c.cell.alpha},
                         {"m", c.cell.m},
                         {"row", c.cell.row_label},
                         {"runs", std::move(runs)},
                         {"n_ok", c.n_ok},
                         {"n_converged", c.n_converged},
                         {"convergence_pct", c.convergence_pct},
                         {"stddev_pct", c.stddev_pct},
                         {"mean_queries", c.mean_queries},
                         {"mean_final_dataset", c.mean_final_dataset}});
  }
  return json{{"alphas", r.alphas},
              {"ms", r.ms},
              {"stddev_formula", "100*sqrt(0.25/n_runs)"},
              {"cells", std::move(cells)}};
}

SweepReport sweep_report_from_json(const json& j) {
  SweepReport r;
  try {
    r.alphas = j.at("alphas").get<std::vector<double>>();
    r.ms = j.at("ms").get<std::vector<std::size_t>>();
    for (const json& jc : j.at("cells")) {
      CellResult c;
      c.cell.variant = variant_from_string(jc.at("variant").get<std::string>());
      c.cell.alpha = jc.at("alpha").get<double>();
      c.cell.m = jc.at("m").get<std::size_t>();
      c.cell.row_label = jc.at("row").get<std::string>();
      for (const json& jr : jc.at("runs")) {
        SeedOutcome o;
        o.seed = jr.at("seed").get<std::uint64_t>();
        o.run_seed = jr.at("run_seed").get<std::uint64_t>();
        o.ok = jr.at("ok").get<bool>();
        o.converged = jr.at("converged").get<bool>();
        o.total_queries = jr.at("total_queries").get<std::size_t>();
        o.final_dataset = jr.at("final_dataset").get<std::size_t>();
        o.best_success_rate = jr.value("best_success_rate", 0.0);
        o.best_mean_reward = jr.value("best_mean_reward", 0.0);
        o.error = jr.value("error", std::string{});
        c.runs.push_back(std::move(o));
      }
      c.n_ok = jc.at("n_ok").get<std::size_t>();
      c.n_converged = jc.at("n_converged").get<std::size_t>();
      c.convergence_pct = jc.at("convergence_pct").get<double>();
      c.stddev_pct = jc.at("stddev_pct").get<double>();
      c.mean_queries = jc.at("mean_queries").get<double>();
      c.mean_final_dataset = jc.at("mean_final_dataset").get<double>();
      r.cells.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed sweep report: ") + e.what());
  }
  return r;
}

std::string sweep_cells_csv(const SweepReport& r) {
  std::ostringstream out;
  out << "variant,row,alpha,m,n_runs,n_ok,n_converged,convergence_pct,stddev_pct,"
         "mean_queries,mean_final_dataset\n";
  for (const CellResult& c : r.cells) {
    out << to_string(c.cell.variant) << ',' << c.cell.row_label << ','
        << alpha_label(c.cell.alpha) << ',' << c.cell.m << ',' << c.runs.size() << ','
        << c.n_ok << ',' << c.n_converged << ',' << fmt("%.2f", c.convergence_pct) << ','
        << fmt("%.2f", c.stddev_pct) << ',' << fmt("%.2f", c.mean_queries) << ','
        << fmt("%.2f", c.mean_final_dataset) << '\n';
  }
  return out.str();
}

std::string sweep_table_csv(const SweepReport& r) {
  std::vector<std::string> rows;
  bool has_dagger = false;
  for (const CellResult& c : r.cells) {
    if (c.cell.variant == Variant::dagger) has_dagger = true;
    if (std::find(rows.begin(), rows.end(), c.cell.row_label) == rows.end()) {
      rows.push_back(c.cell.row_label);
    }
  }
  auto cell_text = [](const CellResult& c) {
    if (c.n_ok == 0) return std::string("error");
    std::string s = fmt("%.2f", c.convergence_pct) + " +- " + fmt("%.2f", c.stddev_pct);
    if (c.n_ok < c.runs.size()) s += " (" + std::to_string(c.runs.size() - c.n_ok) + " failed)";
    return s;
  };

  std::ostringstream out;
  out << "# convergence percentage; +- is 100*sqrt(0.25/n_runs), the p=0.5 binomial "
         "standard deviation\n";
  out << "M/alpha";
  for (double a : r.alphas) out << ',' << alpha_label(a);
  if (has_dagger) out << ",1";
  out << '\n';
  for (const std::string& row : rows) {
    out << row;
    for (double a : r.alphas) {
      out << ',';
      for (const CellResult& c : r.cells) {
        if (c.cell.row_label == row && c.cell.variant != Variant::dagger && c.cell.alpha == a) {
          out << cell_text(c);
        }
      }
    }
    if (has_dagger) {
      out << ',';
      for (const CellResult& c : r.cells) {
        if (c.cell.row_label == row && c.cell.variant == Variant::dagger) out << cell_text(c);
      }
    }
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------

RunConfig build_dataset_defaults() {
  RunConfig cfg = default_config(EnvKind::track);
  cfg.variant = Variant::dadagger_dropout;
  cfg.alpha = 0.1;
  cfg.n_iters = 50;
  cfg.ensemble_m = 10;
  cfg.initial_dataset = "none";
  return cfg;
}

OneShotCheck one_shot_check(const RunConfig& cfg, const Dataset& data) {
  OneShotCheck c;
  if (data.empty()) {
    c.note = "dataset is empty; nothing to train on";
    return c;
  }
  PolicyParams p = init_params(cfg.mlp, mix_seed({cfg.master_seed, kTagOneShot}));
  TrainConfig tc = cfg.train;
  tc.seed = mix_seed({cfg.master_seed, kTagOneShot, cfg.train.seed});
  p = train(p, data.pairs, tc);
  c.trained = true;

  const auto seeds = eval_seeds(cfg.master_seed, cfg.eval_episodes);
  const EnvKind kind = cfg.env_kind;
  const double expert =
      evaluate([&](std::span<const double> o, std::size_t) { return query_expert(kind, o); },
               kind, seeds, cfg.horizon)
          .mean_reward;
  const EvalResult e = evaluate(p, kind, seeds, cfg.horizon);
  c.success_rate = e.success_rate;
  c.mean_reward = e.mean_reward;
  c.converged = is_converged(kind, e, expert);
  return c;
}

BuildResult build_dataset(const RunConfig& cfg, std::size_t histogram_bins) {
  if (cfg.initial_dataset != "none") {
    throw ConfigError("build-dataset starts from an empty dataset; set initial_dataset to \"none\"");
  }
  BuildResult b;
  b.run = run(cfg);
  b.histogram = histogram(b.run.dataset, histogram_bins);
  b.one_shot = one_shot_check(cfg, b.run.dataset);
  return b;
}

json one_shot_to_json(const OneShotCheck& c) {
  json j{{"trained", c.trained},
         {"success_rate", c.success_rate},
         {"mean_reward", c.mean_reward},
         {"converged", c.converged}};
  if (!c.note.empty()) j["note"] = c.note;
  return j;
}

// ---------------------------------------------------------------------------

void write_run_outputs(const fs::path& dir, const RunConfig& cfg, const RunResult& result) {
  fs::create_directories(dir);
  json rep = run_report_to_json(result.report);
  rep["config"] = run_config_to_json(cfg);
  write_text_file(dir / "report.json", rep.dump(2) + "\n");
  save_params(result.best_policy, dir / "best_policy.json");
  save_dataset(result.dataset, dir / "dataset.jsonl");
}

void write_build_outputs(const fs::path& dir, const RunConfig& cfg, const BuildResult& result) {
  write_run_outputs(dir, cfg, result.run);
  write_text_file(dir / "histogram.csv", histogram_csv(result.histogram));
  json os = one_shot_to_json(result.one_shot);
  os["dataset_size"] = result.run.dataset.size();
  os["entropy_bits"] = result.histogram.entropy_bits;
  write_text_file(dir / "oneshot.json", os.dump(2) + "\n");
}

void write_sweep_outputs(const fs::path& dir, const SweepReport& report) {
  fs::create_directories(dir);
  write_text_file(dir / "sweep.json", sweep_report_to_json(report).dump(2) + "\n");
  write_text_file(dir / "sweep_cells.csv", sweep_cells_csv(report));
  write_text_file(dir / "sweep_table.csv", sweep_table_csv(report));
}

namespace {

void summarize_run(std::ostringstream& out, const fs::path& dir) {
  const json j = read_json_file(dir / "report.json");
  const RunReport r = run_report_from_json(j);
  out << "== run: " << dir.string() << '\n';
  if (j.contains("config")) {
    const json& c = j.at("config");
    out << "variant " << c.value("variant", "?") << ", env " << c.value("env_kind", "?")
        << ", alpha " << c.value("alpha", 0.0) << ", M " << c.value("ensemble_m", 0) << '\n';
  }
  out << "initial dataset " << r.initial_dataset_size << ", expert reward "
      << fmt("%.2f", r.expert_eval_reward) << '\n';
  out << "iter  pooled  queries  dataset  success  reward\n";
  char buf[128];
  for (const IterationRecord& it : r.iterations) {
    std::snprintf(buf, sizeof buf, "%4d  %6zu  %7zu  %7zu  %7.2f  %.2f\n", it.iteration,
                  it.states_pooled, it.queries_made, it.dataset_size,
                  it.validation_success_rate, it.mean_eval_reward);
    out << buf;
  }
  out << "best iteration " << r.best_iteration << ", converged "
      << (r.converged ? "yes" : "no") << '\n';
  out << "reward curve (csv):\niteration,mean_eval_reward,queries_made\n";
  for (const IterationRecord& it : r.iterations) {
    out << it.iteration << ',' << fmt("%.6g", it.mean_eval_reward) << ','
        << it.queries_made << '\n';
  }
}

void summarize_sweep(std::ostringstream& out, const fs::path& dir) {
  const SweepReport r = sweep_report_from_json(read_json_file(dir / "sweep.json"));
  out << "== sweep: " << dir.string() << '\n' << sweep_table_csv(r);
}

}  // namespace

std::string summarize_outputs(const std::vector<fs::path>& dirs) {
  if (dirs.empty()) throw InputError("report needs at least one output directory");
  std::ostringstream out;
  struct HistRow {
    std::string dir;
    std::size_t size;
    std::vector<double> entropy;
  };
  std::vector<HistRow> hists;
  for (const fs::path& dir : dirs) {
    const bool has_run = fs::exists(dir / "report.json");
    const bool has_sweep = fs::exists(dir / "sweep.json");
    const bool has_data = fs::exists(dir / "dataset.jsonl");
    if (!has_run && !has_sweep && !has_data) {
      throw InputError("no results in '" + dir.string() +
                       "'; expected report.json (run), dataset.jsonl (run/build-dataset) "
                       "or sweep.json (sweep)");
    }
    if (has_run) summarize_run(out, dir);
    if (fs::exists(dir / "oneshot.json")) {
      const json os = read_json_file(dir / "oneshot.json");
      out << "one-shot check: " << (os.value("converged", false) ? "converged" : "not converged")
          << " (success " << fmt("%.2f", os.value("success_rate", 0.0)) << ", reward "
          << fmt("%.2f", os.value("mean_reward", 0.0)) << ")\n";
    }
    if (has_sweep) summarize_sweep(out, dir);
    if (has_data) {
      std::string kind;
      if (has_run) {
        kind = read_json_file(dir / "report.json").value("config", json::object()).value("env_kind", "");
      }
      const Dataset d = load_dataset(dir / "dataset.jsonl", kind);
      hists.push_back({dir.string(), d.size(), histogram(d, 20).entropy_bits});
    }
    out << '\n';
  }
  if (!hists.empty()) {
    out << "== action histograms (20 bins over [-1, 1])\n";
    out << "dataset,size,entropy_bits_per_dim\n";
    for (const HistRow& h : hists) {
      out << h.dir << ',' << h.size << ',';
      for (std::size_t k = 0; k < h.entropy.size(); ++k) {
        out << (k ? " " : "") << fmt("%.3f", h.entropy[k]);
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace dadagger
