#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "hemvsa/config.hpp"
#include "hemvsa/error.hpp"
#include "hemvsa/extequiv.hpp"
#include "hemvsa/germ.hpp"
#include "hemvsa/hem.hpp"
#include "hemvsa/netmodel.hpp"
#include "hemvsa/oracle.hpp"
#include "hemvsa/pade.hpp"
#include "hemvsa/report_io.hpp"
#include "hemvsa/scenario.hpp"
#include "hemvsa/textio.hpp"
#include "hemvsa/vsa.hpp"

using namespace hemvsa;

namespace {

constexpr int kExitNumeric = 1;
constexpr int kExitInput = 2;

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void add_config_flags(CLI::App* cmd, RunConfig& c) {
  cmd->add_option("--tol-germ", c.tol_germ, "germ stopping tolerance");
  cmd->add_option("--tol-pfe", c.tol_pfe, "power-flow mismatch tolerance");
  cmd->add_option("--eps-th", c.eps_th, "continuation mismatch threshold");
  cmd->add_option("--max-terms-germ", c.max_terms_germ, "germ term cap");
  cmd->add_option("--max-terms-ps", c.max_terms_ps, "series term cap");
  cmd->add_option("--continuation-terms", c.continuation_terms, "series length kept for continuation");
  cmd->add_option("--scan-step", c.scan_step, "series scan step in s");
  cmd->add_option("--s-cap", c.s_cap, "largest loading scale searched");
  cmd->add_option("--alert-threshold", c.alert_threshold_percent, "VSM alert threshold, percent");
  cmd->add_option("--cadence", c.cadence_seconds, "snapshot cadence, seconds");
  cmd->add_option("--window", c.window_k, "measurement instants per identification window");
  cmd->add_option("--w-e", c.w_e, "identification data weight");
  cmd->add_option("--w-z", c.w_z, "resistance regularization weight");
  cmd->add_option("--w-x", c.w_x, "reactance regularization weight");
  cmd->add_option("--seed", c.seed, "seed for synthetic scenarios");
}

void check_config(const RunConfig& c) {
  const auto p = c.problems();
  if (p.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& s : p) msg += " " + s + ";";
  throw InputError(msg);
}

Network load_case(const std::string& name) { return parse_case(resolve_case_path(name)); }

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << std::setprecision(12);
  return out;
}

// Writes to `path`, or stdout when empty.
void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  auto out = open_out(path);
  out << text;
}

double deg(Complex v) { return std::arg(v) * 180.0 / std::numbers::pi; }

int cmd_solve(const std::string& case_name, double s, const RunConfig& cfg) {
  const Network net = load_case(case_name);
  const GermSolution germ = physical_germ(net, {cfg.tol_germ, cfg.max_terms_germ});
  const HemSolution hem = hem_expand(net, germ, {cfg.tol_pfe, cfg.max_terms_ps, 0});
  const auto v = hem.voltages_at(s);
  const auto q = hem.q_at(s);
  const double mis = pf_mismatch(net, v, s, q);

  std::cout << std::setprecision(10);
  std::cout << "case " << net.name() << "\ns " << s << "\n";
  std::cout << "n_germ " << germ.n_germ << "\nn_ps " << hem.n_ps << "\n";
  std::cout << "t_germ_s " << germ.seconds << "\nt_ps_s " << hem.seconds << "\n";
  std::cout << "mismatch " << mis << "\n";
  std::cout << "bus,kind,v_mag_pu,v_ang_deg,q_pv_pu\n";
  for (std::size_t i = 0; i < net.size(); ++i) {
    const Bus& b = net.bus(i);
    std::cout << b.id << ',' << to_string(b.kind) << ',' << std::abs(v[i]) << ',' << deg(v[i]) << ',';
    if (b.kind == BusKind::PV) std::cout << q[i];
    std::cout << '\n';
  }
  if (!(mis < cfg.tol_pfe)) {
    std::cerr << "hem: mismatch " << mis << " at s = " << s << " exceeds tolerance " << cfg.tol_pfe << "\n";
    return kExitNumeric;
  }
  return 0;
}

int cmd_trace(const std::string& case_name, int bus, double step, const std::string& out_path,
              const RunConfig& cfg) {
  const Network net = load_case(case_name);
  CycleDetail detail;
  const VsaReport rep = assess_network(net, cfg, 0.0, &detail);
  const CollapseResult* collapse = detail.collapse ? &*detail.collapse : nullptr;
  const PvCurve curve = sample_pv_curve(net, detail.hem, collapse, rep.s_m, step, bus);
  emit(out_path, write_pv_curve(curve));
  if (rep.pade_failed) std::cerr << "warning: " << rep.note << "; curve ends at s_m\n";
  return 0;
}

int cmd_check_curve(const std::string& path) {
  const PvCurve c = parse_pv_curve(read_text_file(path), path);
  std::cout << "ok " << c.samples.size() << " samples, " << c.bus_ids.size() << " buses, sc " << c.sc << "\n";
  return 0;
}

int cmd_assess(const std::string& case_name, const std::string& area_path, const std::string& meas_path,
               const std::string& snap_path, const std::string& out_path, const RunConfig& cfg) {
  std::ostringstream text;
  bool any_alert = false;
  if (!case_name.empty()) {
    if (!area_path.empty() || !meas_path.empty() || !snap_path.empty())
      throw InputError("give either a case or --area/--measurements/--snapshots, not both");
    const VsaReport rep = assess_network(load_case(case_name), cfg);
    text << report_json(rep) << '\n';
    any_alert = rep.alert;
  } else {
    if (area_path.empty() || meas_path.empty() || snap_path.empty())
      throw InputError("replay needs --area, --measurements and --snapshots");
    const Network area = load_case(area_path);
    const auto reports = replay(area, read_measurements(meas_path), read_snapshots(snap_path), cfg);
    for (const auto& r : reports) {
      text << report_json(r) << '\n';
      any_alert = any_alert || r.alert;
    }
  }
  emit(out_path, text.str());
  if (any_alert) std::cerr << "alert: VSM below " << cfg.alert_threshold_percent << "%\n";
  return 0;
}

int cmd_identify(const std::string& meas_path, std::optional<double> t_end, const RunConfig& cfg) {
  const auto rows = read_measurements(meas_path);
  if (rows.empty()) throw InputError(meas_path + ": no measurement rows");
  double t = rows.front().t;
  for (const auto& r : rows) t = std::max(t, r.t);
  if (t_end) t = *t_end;
  const MeasurementWindow w(window_rows(rows, t, cfg.window_k));
  const IdentifyResult res = identify(w, std::nullopt, {cfg.w_e, cfg.w_z, cfg.w_x});
  std::cout << std::setprecision(10);
  std::cout << "window_end " << t << "\ninstants " << w.instants() << "\n";
  std::cout << "e_pu " << res.equivalent.e << "\nobjective " << res.objective << "\nkkt " << res.kkt_residual
            << "\niterations " << res.iterations << "\ndegraded " << (res.degraded ? "true" : "false") << "\n";
  std::cout << "bus,r_pu,x_pu\n";
  for (const auto& b : res.equivalent.z) std::cout << b.bus_id << ',' << b.r << ',' << b.x << '\n';
  return res.degraded ? kExitNumeric : 0;
}

int cmd_compare(const std::string& case_name, const RunConfig& cfg) {
  const Network net = load_case(case_name);
  const auto t0 = std::chrono::steady_clock::now();
  const VsaReport rep = assess_network(net, cfg);
  const double t_hem = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  oracle::CpfOptions copt;
  copt.s_cap = cfg.s_cap;
  const auto cpf = oracle::cpf_nose(net, 0.0, copt);
  if (!cpf.started) throw NumericError("oracle", "Newton-Raphson did not converge at s = 0");

  std::cout << std::setprecision(8);
  std::cout << "case " << net.name() << "\n";
  std::cout << "method,terms_or_steps,wall_s,collapse_scale\n";
  std::cout << "hem," << rep.timing.n_germ << "+" << rep.timing.n_ps << ',' << t_hem << ',' << rep.sc << '\n';
  std::cout << "cpf," << cpf.steps << ',' << cpf.seconds << ',' << cpf.nose_scale << '\n';
  std::cout << "n_germ " << rep.timing.n_germ << "\nn_ps " << rep.timing.n_ps << "\nn_step " << cpf.steps
            << "\nnewton_iterations " << cpf.newton_iterations << "\n";
  std::cout << "t_germ_s " << rep.timing.t_germ << "\nt_ps_s " << rep.timing.t_ps << "\nt_pade_s "
            << rep.timing.t_pade << "\nt_m_s " << rep.timing.t_m() << "\n";
  std::cout << "s_m " << rep.s_m << "\nsc_coarse " << rep.sc_coarse << "\nsc " << rep.sc << "\nnose "
            << cpf.nose_scale << "\nrelative_error " << std::abs(rep.sc - cpf.nose_scale) / cpf.nose_scale
            << "\n";
  return rep.pade_failed ? kExitNumeric : 0;
}

int cmd_scenario(const std::string& case_name, const std::string& dir, double rate, double random_max,
                 const RunConfig& cfg) {
  RampOptions opt;
  opt.uniform_rate = rate;
  opt.random_max_rate = random_max;
  opt.cadence_seconds = cfg.cadence_seconds;
  opt.measurement_step = cfg.cadence_seconds / 10.0;
  opt.seed = cfg.seed;
  const Scenario sc = make_ramp_scenario(load_case(case_name), opt);
  std::filesystem::create_directories(dir);
  const std::filesystem::path d(dir);
  emit((d / "area.json").string(), write_case(sc.area));
  emit((d / "measurements.csv").string(), write_measurements(sc.measurements));
  emit((d / "snapshots.csv").string(), write_snapshots(sc.snapshots));
  std::cout << std::setprecision(10) << "snapshots " << sc.snapshots.size() << "\n";
  if (sc.infeasible_time) std::cout << "infeasible_at_s " << *sc.infeasible_time << "\n";
  std::cout << "true_e " << sc.truth.e << "\n";
  for (const auto& z : sc.truth.z) std::cout << "true_z " << z.bus_id << ',' << z.r << ',' << z.x << "\n";
  return 0;
}

int cmd_grid(std::size_t n, const std::string& out_path, const RunConfig& cfg) {
  emit(out_path, write_case(synthetic_grid(n, cfg.seed)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Holomorphic-embedding power flow and voltage stability assessment"};
  app.require_subcommand(1);
  RunConfig cfg;

  std::string case_name, out_path, area_path, meas_path, snap_path, dir;
  double s = 1.0, step = 0.01, rate = 0.02, random_max = 0.0;
  int bus = -1;
  double t_end = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_buses = 140;

  auto* solve = app.add_subcommand("solve", "power flow at loading scale s");
  solve->add_option("case", case_name, "case file or bundled name")->required();
  solve->add_option("--s", s, "loading scale");
  add_config_flags(solve, cfg);

  auto* trace = app.add_subcommand("trace", "P-V curves up to the collapse point");
  trace->alias("pvcurve");
  trace->add_option("case", case_name, "case file or bundled name")->required();
  trace->add_option("--bus", bus, "single bus id");
  trace->add_option("--step", step, "sampling step in s");
  trace->add_option("--out", out_path, "output file (stdout if omitted)");
  add_config_flags(trace, cfg);

  auto* check = app.add_subcommand("check-curve", "validate a P-V curve file");
  check->add_option("file", out_path, "curve file")->required();

  auto* assess = app.add_subcommand("assess", "voltage stability assessment (single shot or replay)");
  assess->add_option("case", case_name, "case for a single cycle");
  assess->add_option("--area", area_path, "load area case for replay");
  assess->add_option("--measurements", meas_path, "boundary measurement file");
  assess->add_option("--snapshots", snap_path, "load snapshot file");
  assess->add_option("--out", out_path, "report file (stdout if omitted)");
  add_config_flags(assess, cfg);

  auto* ident = app.add_subcommand("identify", "external equivalent from boundary measurements");
  ident->add_option("--measurements", meas_path, "boundary measurement file")->required();
  ident->add_option("--t", t_end, "window end time (default: last instant)");
  add_config_flags(ident, cfg);

  auto* compare = app.add_subcommand("compare", "series pipeline against the continuation oracle");
  compare->add_option("case", case_name, "case file or bundled name")->required();
  add_config_flags(compare, cfg);

  auto* scen = app.add_subcommand("scenario", "synthetic load ramp with boundary measurements");
  scen->add_option("case", case_name, "case with a single slack bus")->required();
  scen->add_option("--out-dir", dir, "output directory")->required();
  scen->add_option("--rate", rate, "uniform load increase per interval, fraction of base");
  scen->add_option("--random-max", random_max, "per-bus random rate upper bound (0: uniform)");
  add_config_flags(scen, cfg);

  auto* grid = app.add_subcommand("grid", "synthetic meshed test grid");
  grid->add_option("--buses", n_buses, "bus count");
  grid->add_option("--out", out_path, "case file (stdout if omitted)");
  add_config_flags(grid, cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    check_config(cfg);
    if (solve->parsed()) return cmd_solve(case_name, s, cfg);
    if (trace->parsed()) return cmd_trace(case_name, bus, step, out_path, cfg);
    if (check->parsed()) return cmd_check_curve(out_path);
    if (assess->parsed()) return cmd_assess(case_name, area_path, meas_path, snap_path, out_path, cfg);
    if (ident->parsed()) return cmd_identify(meas_path, std::isnan(t_end) ? std::nullopt : std::optional<double>(t_end), cfg);
    if (compare->parsed()) return cmd_compare(case_name, cfg);
    if (scen->parsed()) return cmd_scenario(case_name, dir, rate, random_max, cfg);
    if (grid->parsed()) return cmd_grid(n_buses, out_path, cfg);
  } catch (const NumericError& e) {
    std::cerr << "error [" << e.stage() << "]: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ValidationError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return 0;
}
