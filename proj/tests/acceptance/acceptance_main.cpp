// Acceptance suite: one PASS/FAIL line per criterion.
//
//   dadagger_acceptance            run all criteria
//   dadagger_acceptance 4 8        run a subset

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dadagger/config.hpp"
#include "dadagger/envs.hpp"
#include "dadagger/harness.hpp"
#include "dadagger/random.hpp"
#include "dadagger/uncertainty.hpp"
#include "oracles.hpp"

namespace {

using namespace dadagger;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// 1. Gradient oracle

Outcome gradient_oracle() {
  const auto t0 = Clock::now();
  Rng rng(20240101);
  double worst = 0.0;
  std::size_t checked = 0;
  for (int net = 0; net < 50; ++net) {
    MlpSpec spec;
    const std::size_t n_layers = 1 + rng.below(3);
    spec.layer_sizes.push_back(1 + rng.below(8));
    for (std::size_t l = 0; l < n_layers; ++l) spec.layer_sizes.push_back(1 + rng.below(8));
    spec.hidden_activation = rng.below(3) == 0 ? Activation::relu : Activation::tanh;
    spec.output_activation = rng.below(2) == 0 ? Activation::identity : Activation::tanh;

    std::vector<Sample> batch(1 + rng.below(8));
    for (Sample& s : batch) {
      s.obs.resize(spec.input_dim());
      s.act.resize(spec.output_dim());
      for (double& v : s.obs) v = rng.uniform(-2, 2);
      for (double& v : s.act) v = rng.uniform(-0.9, 0.9);
    }
    for (double p : {0.0, 0.3}) {
      spec.dropout_rate = p;
      PolicyParams params = init_params(spec, rng.next());
      // Random biases keep relu pre-activations off the kink at exactly 0,
      // where a unit fed only zeros would otherwise sit.
      for (auto& l : params.layers) {
        for (double& b : l.biases) b = rng.uniform(-0.5, 0.5);
      }
      const std::uint64_t mask_seed = rng.next();
      const auto analytic = oracle::flatten(loss_and_grad(params, batch, mask_seed).grad);
      // At p = 0 the loss goes through forward() only; with dropout the masks
      // are pinned by the seed.
      const auto numeric = oracle::central_differences(params, [&](const PolicyParams& q) {
        return p == 0.0 ? oracle::mse_via_forward(q, batch)
                        : loss_and_grad(q, batch, mask_seed).loss;
      });
      for (std::size_t k = 0; k < analytic.size(); ++k) {
        worst = std::max(worst, oracle::relative_error(analytic[k], numeric[k]));
        ++checked;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-4 && secs < 30.0,
          std::to_string(checked) + " components over 50 nets x {p=0, p=0.3}, worst rel err " +
              fmt("%.2e", worst) + " (limit 1e-4), " + fmt("%.1f", secs) + " s (limit 30 s)"};
}

// ---------------------------------------------------------------------------
// 2. DAgger equivalence

Outcome dagger_equivalence() {
  bool ok = true;
  std::string detail;
  for (std::uint64_t seed : {0, 1, 2}) {
    RunConfig cfg = default_config(EnvKind::track);
    cfg.variant = Variant::dadagger_dropout;
    cfg.alpha = 1.0;
    cfg.ensemble_m = 1;
    cfg.n_iters = 10;
    cfg.master_seed = seed;
    RunConfig ref = cfg;
    ref.variant = Variant::dagger;
    const RunResult a = run(cfg);
    const RunResult b = run_dagger_reference(ref);
    const bool same = a.selections == b.selections && a.increments == b.increments &&
                      a.dataset == b.dataset;
    ok = ok && same;
    detail += "seed " + std::to_string(seed) + (same ? " identical" : " DIFFERS") + " (|D|=" +
              std::to_string(a.dataset.size()) + "); ";
  }
  return {ok, detail};
}

// ---------------------------------------------------------------------------
// 3 and 5 share one steering sweep: 5 seeds x 10 iterations per cell. Run
// seeds depend only on (cell, seed), so seeds 0..2 are exactly a 3-seed sweep.

struct SweepRun {
  SweepReport report;
  std::map<std::pair<std::string, std::uint64_t>, RunReport> runs;  // key: cell/alpha, run seed
  double seconds = 0.0;
};

SweepSpec steering_sweep_spec() {
  SweepSpec spec;
  spec.alphas = {0.1, 0.2, 0.4};
  spec.ms = {10};
  spec.variants = {Variant::dadagger_dropout, Variant::random};
  spec.seeds = {0, 1, 2, 3, 4};
  spec.base = default_config(EnvKind::track);
  spec.base.n_iters = 10;
  spec.base.initial_dataset = "expert:4";
  return spec;
}

const SweepRun& steering_sweep() {
  static SweepRun result = [] {
    SweepRun out;
    const auto t0 = Clock::now();
    std::mutex mu;
    out.report = run_sweep(steering_sweep_spec(), 1, [&](const RunConfig& cfg) {
      RunReport r = run(cfg).report;
      std::lock_guard lock(mu);
      out.runs[{std::string(to_string(cfg.variant)) + "/" + fmt("%.2f", cfg.alpha),
                cfg.master_seed}] = r;
      return r;
    });
    out.seconds = seconds_since(t0);
    return out;
  }();
  return result;
}

// ceil(alpha * n) for alpha = tenths / 10, in integers.
std::size_t ceil_tenths(std::size_t tenths, std::size_t n) { return (tenths * n + 9) / 10; }

Outcome query_budget_exactness() {
  const SweepRun& sw = steering_sweep();
  std::size_t iterations = 0, mismatches = 0;
  for (const CellResult& c : sw.report.cells) {
    const std::size_t tenths = static_cast<std::size_t>(std::lround(c.cell.alpha * 10));
    for (std::size_t s = 0; s < 3; ++s) {
      const auto key = std::make_pair(
          std::string(to_string(c.cell.variant)) + "/" + fmt("%.2f", c.cell.alpha),
          c.runs[s].run_seed);
      const auto it = sw.runs.find(key);
      if (it == sw.runs.end()) {
        ++mismatches;
        continue;
      }
      for (const IterationRecord& rec : it->second.iterations) {
        ++iterations;
        if (rec.queries_made != ceil_tenths(tenths, rec.states_pooled)) ++mismatches;
      }
    }
  }
  return {mismatches == 0 && iterations == 3 * 6 * 10,
          std::to_string(iterations) + " iterations over 3 seeds x alpha {0.1,0.2,0.4} x " +
              "{dropout M=10, random}, " + std::to_string(mismatches) + " mismatches"};
}

const CellResult& find_cell(const SweepReport& r, Variant v, double alpha) {
  for (const CellResult& c : r.cells) {
    if (c.cell.variant == v && std::abs(c.cell.alpha - alpha) < 1e-12) return c;
  }
  throw std::runtime_error("missing sweep cell");
}

Outcome convergence_ordering() {
  const SweepRun& sw = steering_sweep();
  const auto pct = [&](Variant v, double a) { return find_cell(sw.report, v, a).convergence_pct; };
  const auto all_ok = [&](Variant v, double a) { return find_cell(sw.report, v, a).n_ok == 5; };
  bool complete = true;
  for (double a : {0.1, 0.2, 0.4}) {
    complete = complete && all_ok(Variant::dadagger_dropout, a) && all_ok(Variant::random, a);
  }
  const double d1 = pct(Variant::dadagger_dropout, 0.1), d2 = pct(Variant::dadagger_dropout, 0.2),
               d4 = pct(Variant::dadagger_dropout, 0.4);
  const double r1 = pct(Variant::random, 0.1), r2 = pct(Variant::random, 0.2),
               r4 = pct(Variant::random, 0.4);
  const bool a = d4 >= 80.0;
  const bool b = d2 >= r2;
  const bool c = r1 <= d1 + 20.0;
  const bool fast = sw.seconds < 30 * 60;
  std::string detail = std::string("(a) M=10 a=0.4 ") + fmt("%.0f%%", d4) + (a ? " ok" : " FAIL") +
                       "; (b) a=0.2 dadagger " + fmt("%.0f%%", d2) + " vs random " +
                       fmt("%.0f%%", r2) + (b ? " ok" : " FAIL") + "; (c) a=0.1 random " +
                       fmt("%.0f%%", r1) + " vs dadagger " + fmt("%.0f%%", d1) + " + 20" +
                       (c ? " ok" : " FAIL") + "; random a=0.4 " + fmt("%.0f%%", r4) + "; " +
                       fmt("%.0f", sw.seconds) + " s (limit 1800 s)";
  std::printf("      table:\n");
  std::istringstream table(sweep_table_csv(sw.report));
  for (std::string line; std::getline(table, line);) std::printf("        %s\n", line.c_str());
  return {complete && a && b && c && fast, detail};
}

// ---------------------------------------------------------------------------
// 4. OOD disagreement

TrackSpec constant_track(double curvature) {
  TrackSpec t;
  t.length = TrackEnv::kLength;
  t.half_width = TrackEnv::kHalfWidth;
  t.curvatures.assign(static_cast<std::size_t>(t.length + 100), curvature);
  return t;
}

Observation probe(TrackEnv& env, const TrackSpec& track, double y, double psi) {
  env.reset(track);
  env.place(y, psi);
  return env.observe();
}

Outcome ood_disagreement() {
  const auto t0 = Clock::now();
  const TrackSpec straight = constant_track(0.0);
  int wins = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(mix_seed({0x00d, seed}));
    TrackEnv env;
    Dataset data{"track", {}};
    for (int k = 0; k < 2000; ++k) {
      const Observation obs = probe(env, straight, rng.uniform(-0.5, 0.5), rng.uniform(-0.3, 0.3));
      data.pairs.push_back({obs, query_expert(EnvKind::track, obs)});
    }
    const RunConfig cfg = default_config(EnvKind::track);
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    const PolicyParams policy = train(init_params(cfg.mlp, seed), data.pairs, tc);

    const auto mean_score = [&](double curvature_magnitude) {
      double total = 0.0;
      for (int k = 0; k < 50; ++k) {
        const double kappa = curvature_magnitude * (k % 2 == 0 ? 1.0 : -1.0);
        const Observation obs =
            probe(env, constant_track(kappa), rng.uniform(-0.5, 0.5), rng.uniform(-0.3, 0.3));
        total += disagreement(forward_mc(policy, obs, 10, rng.next()));
      }
      return total / 50.0;
    };
    const double turn = mean_score(TrackEnv::kMaxCurvature);
    const double flat = mean_score(0.0);
    wins += turn > flat ? 1 : 0;
    detail += "seed " + std::to_string(seed) + ": turn " + fmt("%.2e", turn) + " vs straight " +
              fmt("%.2e", flat) + "; ";
  }
  const double secs = seconds_since(t0);
  return {wins >= 4 && secs < 300.0, std::to_string(wins) + "/5 seeds (need 4); " + detail +
                                          fmt("%.1f", secs) + " s (limit 300 s)"};
}

// ---------------------------------------------------------------------------
// 6. Continuous control

Outcome control_analog() {
  const auto t0 = Clock::now();
  double dadagger_reward = 0.0, dagger_reward = 0.0;
  std::size_t dadagger_queries = 0, dagger_queries = 0;
  std::string detail;
  for (std::uint64_t seed : {0, 1, 2}) {
    RunConfig cfg = default_config(EnvKind::reacher);
    cfg.n_iters = 10;
    cfg.master_seed = seed;
    cfg.initial_dataset = "expert:1";
    RunConfig dag = cfg;
    dag.variant = Variant::dagger;
    dag.alpha = 1.0;
    dag.ensemble_m = 1;
    cfg.variant = Variant::dadagger_dropout;
    cfg.alpha = 0.1;
    cfg.ensemble_m = 10;
    const RunReport a = run(cfg).report;
    const RunReport b = run(dag).report;
    dadagger_reward += a.iterations.back().mean_eval_reward / 3.0;
    dagger_reward += b.iterations.back().mean_eval_reward / 3.0;
    for (const auto& it : a.iterations) dadagger_queries += it.queries_made;
    for (const auto& it : b.iterations) dagger_queries += it.queries_made;
    detail += "seed " + std::to_string(seed) + " reward " +
              fmt("%.1f", a.iterations.back().mean_eval_reward) + " vs " +
              fmt("%.1f", b.iterations.back().mean_eval_reward) + "; ";
  }
  const double secs = seconds_since(t0);
  const double query_ratio =
      static_cast<double>(dadagger_queries) / static_cast<double>(dagger_queries);
  const bool close = dadagger_reward >= 0.9 * dagger_reward;
  const bool frugal = query_ratio <= 0.15;
  return {close && frugal && secs < 900.0,
          "iteration-10 reward " + fmt("%.1f", dadagger_reward) + " vs DAgger " +
              fmt("%.1f", dagger_reward) + " (need >= 90%), queries " +
              fmt("%.1f%%", 100.0 * query_ratio) + " of DAgger (need <= 15%); " + detail +
              fmt("%.0f", secs) + " s (limit 900 s)"};
}

// ---------------------------------------------------------------------------
// 7. Dataset construction from scratch

Outcome dataset_construction() {
  const auto t0 = Clock::now();
  bool all_smaller = true;
  int one_shot = 0;
  std::string detail;
  for (std::uint64_t seed : {0, 1, 2}) {
    RunConfig cfg = build_dataset_defaults();
    cfg.env_kind = EnvKind::track;
    cfg.master_seed = seed;
    const BuildResult built = build_dataset(cfg);
    const std::size_t size = built.run.dataset.size();

    // The same-seed DAgger run. Its dataset only grows, so once it holds more
    // pairs than the constructed one the remaining iterations cannot change
    // the comparison.
    RunConfig dag = cfg;
    dag.variant = Variant::dagger;
    dag.alpha = 1.0;
    dag.ensemble_m = 1;
    EngineState st = init_engine(dag, load_initial_dataset(dag));
    int i = 0;
    while (i < dag.n_iters && st.data.size() <= size) dadagger_iteration(st, ++i);
    const bool smaller = size < st.data.size();
    all_smaller = all_smaller && smaller;
    one_shot += built.one_shot.converged ? 1 : 0;
    const double h_built = built.histogram.entropy_bits.at(0);
    const double h_dagger = histogram(st.data).entropy_bits.at(0);
    detail += "seed " + std::to_string(seed) + ": |D| " + std::to_string(size) +
              (smaller ? " < " : " !< ") + std::to_string(st.data.size()) +
              " (DAgger after " + std::to_string(i) + " it), one-shot " +
              (built.one_shot.converged ? "converged" : "failed") + ", entropy " +
              fmt("%.3f", h_built) + " vs DAgger " + fmt("%.3f", h_dagger) + " bits" +
              (h_built >= h_dagger ? "" : " (lower, reported only)") + "; ";
  }
  const double secs = seconds_since(t0);
  return {all_smaller && one_shot >= 2 && secs < 1200.0,
          std::to_string(one_shot) + "/3 one-shot (need 2); " + detail + fmt("%.0f", secs) +
              " s (limit 1200 s)"};
}

// ---------------------------------------------------------------------------
// 8. Error bars

Outcome error_bars() {
  const double e5 = binomial_errbar(5);
  const double e25 = binomial_errbar(25);
  return {std::abs(e5 - 22.36) <= 0.01 && e25 == 10.0,
          "n=5 -> " + fmt("%.6f", e5) + ", n=25 -> " + fmt("%.17g", e25)};
}

// ---------------------------------------------------------------------------
// 9. Determinism

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool same_files(const fs::path& a, const fs::path& b, std::initializer_list<const char*> names,
                std::string& why) {
  for (const char* n : names) {
    if (!fs::exists(a / n) || slurp(a / n) != slurp(b / n)) {
      why += std::string(n) + " differs; ";
      return false;
    }
  }
  return true;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "dadagger_acceptance_determinism";
  fs::remove_all(root);
  std::string why;
  bool ok = true;

  RunConfig cfg = default_config(EnvKind::track);
  cfg.variant = Variant::dadagger_ensemble;
  cfg.alpha = 0.2;
  cfg.ensemble_m = 3;
  cfg.n_iters = 3;
  cfg.initial_dataset = "expert:2";
  for (const char* d : {"run_a", "run_b"}) write_run_outputs(root / d, cfg, run(cfg));
  ok = same_files(root / "run_a", root / "run_b",
                  {"report.json", "best_policy.json", "dataset.jsonl"}, why) && ok;

  RunConfig build = build_dataset_defaults();
  build.n_iters = 4;
  for (const char* d : {"build_a", "build_b"}) write_build_outputs(root / d, build, build_dataset(build));
  ok = same_files(root / "build_a", root / "build_b",
                  {"report.json", "dataset.jsonl", "histogram.csv", "oneshot.json"}, why) && ok;

  SweepSpec spec;
  spec.alphas = {0.1, 0.4};
  spec.ms = {5};
  spec.variants = {Variant::dadagger_dropout, Variant::random, Variant::dagger};
  spec.seeds = {0, 1};
  spec.base = default_config(EnvKind::track);
  spec.base.n_iters = 2;
  spec.base.initial_dataset = "expert:1";
  write_sweep_outputs(root / "sweep_serial", run_sweep(spec, 1));
  write_sweep_outputs(root / "sweep_parallel", run_sweep(spec, 4));
  write_sweep_outputs(root / "sweep_parallel2", run_sweep(spec, 3));
  for (const char* d : {"sweep_parallel", "sweep_parallel2"}) {
    ok = same_files(root / "sweep_serial", root / d,
                    {"sweep.json", "sweep_cells.csv", "sweep_table.csv"}, why) && ok;
  }
  return {ok, ok ? "run, build-dataset and sweep (serial vs 3 and 4 jobs) outputs byte-identical"
                 : why};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> fn;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "gradient oracle", gradient_oracle},
      {2, "DAgger equivalence", dagger_equivalence},
      {3, "query-budget exactness", query_budget_exactness},
      {4, "OOD disagreement", ood_disagreement},
      {5, "convergence ordering", convergence_ordering},
      {6, "continuous control", control_analog},
      {7, "dataset construction", dataset_construction},
      {8, "binomial error bars", error_bars},
      {9, "determinism", determinism},
  };
  std::set<int> wanted;
  for (int k = 1; k < argc; ++k) wanted.insert(std::atoi(argv[k]));

  int failures = 0;
  for (const Criterion& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
