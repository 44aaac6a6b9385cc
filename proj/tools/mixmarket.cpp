// mixmarket: validate scenarios, run certified studies, re-check and compare runs.

#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "mixmarket/model_builder.hpp"
#include "mixmarket/network.hpp"
#include "mixmarket/studio.hpp"

namespace fs = std::filesystem;
using namespace mixmarket;

namespace {

enum Exit { kOk = 0, kFailure = 1, kValidation = 2, kInfeasible = 3, kCertification = 4 };

struct Flags {
  std::optional<double> tol;
  bool force = false;
  int threads = 0;
  std::optional<std::uint64_t> seed;
};

StudyConfig configure(const fs::path& path, const Flags& f) {
  StudyConfig c = load_study_config(path);
  if (f.tol) c.tolerance = *f.tol;
  if (f.seed) c.seed = *f.seed;
  c.force = f.force;
  if (f.threads > 0) c.threads = f.threads;
  return c;
}

int cmd_validate(const fs::path& dir) {
  const Scenario s = load_scenario(dir);
  const PtdfMatrix ptdf = compute_ptdf(s);
  const ModelSize size = expected_size(s);
  fmt::print("ok: {} nodes, {} technologies, {} lines, {} steps\n", s.nodes.size(), s.technologies.size(),
             s.lines.size(), s.timesteps);
  fmt::print("model: {} columns, {} rows; ptdf {}x{}\n", size.columns, size.rows, ptdf.num_lines, ptdf.num_nodes);
  return kOk;
}

void print_outcome(const StudyConfig& c, const RunOutcome& o) {
  const Report& r = o.report;
  fmt::print("{} [{}]: objective {:.6g}, {} iterations\n", c.output.string(), r.mode, r.objective, r.iterations);
  fmt::print("  solver certificate: primal {:.2g}, dual {:.2g}, compl {:.2g}, gap {:.2g}\n",
             o.certificate.primal_residual, o.certificate.dual_residual, o.certificate.complementarity,
             o.certificate.relative_gap);
  fmt::print("  max KKT residual {:.2g}, max best-response gap {:.2g}, ledger {}\n", r.max_kkt_residual, r.max_gap,
             o.ledger.ok ? "balanced" : "IMBALANCED");
  for (const CapacityShare& s : r.capacity_mix) fmt::print("  {:<10} {:>12.2f} MW  {:6.2f} %\n", s.technology, s.mw, 100 * s.share);
  fmt::print("  bilateral volume {:.2f} MWh, emissions {:.2f} t, carbon price {:.4g}\n", r.total_volume(),
             r.total_emissions, r.carbon_price);
  if (r.forced) fmt::print("  WARNING: not certified, artifacts watermarked (--force)\n");
}

int cmd_run(const std::vector<fs::path>& configs, const Flags& f) {
  std::vector<StudyConfig> cs;
  for (const fs::path& p : configs) cs.push_back(configure(p, f));
  const auto outcomes = run_studies(cs);
  for (std::size_t k = 0; k < cs.size(); ++k) print_outcome(cs[k], outcomes[k]);
  return kOk;
}

int cmd_kkt(const fs::path& run_dir, const Flags& f) {
  const RecheckResult r = recheck_run(run_dir, f.tol.value_or(1e-6), f.threads);
  const double tol = r.kkt.tolerance;
  for (const KktCondition& c : r.kkt.conditions) {
    fmt::print("{:<5} {:9.2e} {:4} {}{}\n", c.id, c.residual, c.residual <= tol ? "ok" : "FAIL", c.description,
               c.worst_at.empty() ? "" : "  @ " + c.worst_at);
  }
  fmt::print("literal A.1 reading: {:.2e} (informational)\n", r.kkt.literal_a1_residual);
  bool gaps_ok = true;
  for (const ActorGap& g : r.gaps) {
    const bool ok = g.gap <= tol;
    gaps_ok = gaps_ok && ok;
    fmt::print("gap {:<8} {:9.2e} {:4} (slice {:.6g}, best response {:.6g}, {})\n", g.actor, g.gap, ok ? "ok" : "FAIL",
               g.slice_cost, g.optimal_cost, to_string(g.status));
  }
  fmt::print("ledger: reconciliation {:.2e}, operator imbalance {:.2e}, carbon revenue {:.2e}\n",
             r.ledger.reconciliation_error, r.ledger.operator_imbalance, r.ledger.carbon_revenue_error);
  write_kkt_json(r.kkt, r.gaps, run_dir / "kkt_recheck.json");
  const bool pass = r.certificate.accepted(tol, 1e-8) && r.kkt.pass && gaps_ok;
  fmt::print("{}\n", pass ? "certified" : "NOT certified");
  return pass ? kOk : kCertification;
}

int cmd_export_mps(const fs::path& config, const fs::path& out, const Flags& f) {
  const StudyConfig c = configure(config, f);
  const Scenario s = prepare_scenario(c);
  const ModelInstance m = build_centralized(s, compute_ptdf(s));
  fs::path names = out;
  names += ".names.csv";
  export_mps(m.lp, out, {}, names);
  fmt::print("wrote {} ({} columns, {} rows) and {}\n", out.string(), m.lp.num_cols(), m.lp.num_rows(), names.string());
  return kOk;
}

int cmd_compare(const fs::path& a, const fs::path& b, const std::optional<fs::path>& out) {
  const Report ra = read_report_json(a / "report.json");
  const Report rb = read_report_json(b / "report.json");
  const auto tables = compare_reports(ra, rb);
  for (const DeltaTable& t : tables) {
    fmt::print("{}\n", t.name);
    for (const DeltaRow& r : t.rows) fmt::print("  {:<16} {:>14.4f} {:>14.4f} {:>+14.4f}\n", r.key, r.a, r.b, r.delta);
  }
  if (out) write_delta_tables(tables, *out);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed pool/bilateral electricity market planning and equilibrium certification"};
  app.require_subcommand(1);
  Flags flags;
  app.add_option("--tol", flags.tol, "certification tolerance (default 1e-6)")->check(CLI::PositiveNumber);
  app.add_flag("--force", flags.force, "emit reports for uncertified solutions, watermarked");
  app.add_option("--threads", flags.threads, "worker threads for best-response solves (0 = all cores)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--seed", flags.seed, "seed for 'scenario = random' study configs");

  fs::path dir, run_dir, config, out, run_a, run_b;
  std::vector<fs::path> configs;
  std::optional<fs::path> compare_out;

  auto* validate = app.add_subcommand("validate", "check a scenario directory");
  validate->add_option("dir", dir)->required();
  auto* run = app.add_subcommand("run", "solve and certify one or more study configs");
  run->add_option("config", configs)->required();
  auto* kkt = app.add_subcommand("kkt", "re-check a run directory's KKT system and best responses");
  kkt->add_option("run-dir", run_dir)->required();
  auto* mps = app.add_subcommand("export-mps", "write the centralized LP of a study config as MPS");
  mps->add_option("config", config)->required();
  mps->add_option("out", out)->required();
  auto* compare = app.add_subcommand("compare", "delta tables between two run directories");
  compare->add_option("run-a", run_a)->required();
  compare->add_option("run-b", run_b)->required();
  compare->add_option("--out", compare_out, "directory for delta_*.csv");
  for (auto* sub : {validate, run, kkt, mps, compare}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) return cmd_validate(dir);
    if (*run) return cmd_run(configs, flags);
    if (*kkt) return cmd_kkt(run_dir, flags);
    if (*mps) return cmd_export_mps(config, out, flags);
    if (*compare) return cmd_compare(run_a, run_b, compare_out);
  } catch (const InputError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kValidation;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const CertificationError& e) {
    std::cerr << e.what() << '\n';
    return kCertification;
  } catch (const SolverError& e) {
    std::cerr << "solver: " << e.what() << '\n';
    return kCertification;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}
