// Experiment runner: every library module behind one subcommand, with a JSON
// config, mandatory seed, and deterministic outputs (timestamps live in a
// separate run_meta.json so primary outputs are byte-stable under one seed).

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <json.hpp>

#include "gsmix/efficiency.hpp"
#include "gsmix/hermite.hpp"
#include "gsmix/io.hpp"
#include "gsmix/losses.hpp"
#include "gsmix/mixture.hpp"
#include "gsmix/parallel.hpp"
#include "gsmix/poincare.hpp"
#include "gsmix/schedule.hpp"
#include "gsmix/sde.hpp"
#include "gsmix/stats.hpp"

using nlohmann::json;
using namespace gsmix;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = 0;
};

json load_config(const CommonArgs& a) {
  if (a.config_path.empty()) return json::object();
  return json::parse(read_file(a.config_path));
}

void write_manifest(const CommonArgs& a, const std::string& subcommand, const json& resolved) {
  json manifest;
  manifest["version"] = kVersionString;
  manifest["subcommand"] = subcommand;
  manifest["seed"] = a.seed;
  manifest["workers"] = a.workers;
  manifest["config"] = resolved;
  ensure_dir(a.out_dir);
  write_file(a.out_dir + "/manifest.json", manifest.dump(2) + "\n");
  json meta;
  meta["wall_clock"] = std::chrono::duration_cast<std::chrono::seconds>(
                           std::chrono::system_clock::now().time_since_epoch())
                           .count();
  write_file(a.out_dir + "/run_meta.json", meta.dump(2) + "\n");
}

void write_error_record(const CommonArgs& a, const std::string& sub, const std::string& what) {
  json err;
  err["subcommand"] = sub;
  err["error"] = what;
  ensure_dir(a.out_dir);
  write_file(a.out_dir + "/error.json", err.dump(2) + "\n");
}

SharedCovMixture demo_model(const json& cfg) {
  if (cfg.contains("model")) return model_from_json(cfg.at("model"));
  // bundled demo: symmetric 1d bimodal pair
  Eigen::VectorXd w(2);
  w << 0.5, 0.5;
  std::vector<Eigen::VectorXd> mus(2, Eigen::VectorXd(1));
  mus[0][0] = -2.0;
  mus[1][0] = 2.0;
  return SharedCovMixture(w, mus, Eigen::MatrixXd::Identity(1, 1), 2.0);
}

int run_fit(const CommonArgs& a, const json& cfg) {
  SharedCovMixture model = demo_model(cfg);
  std::string loss = cfg.value("loss", "mle");
  long n = cfg.value("n", 10000L);
  Rng rng(a.seed);

  TemperatureSchedule sched = schedule_from_json(cfg, &model);
  std::vector<Eigen::VectorXd> xs = model.sample(rng, int(n));

  // init: data mean replicated with small deterministic spread, then an EM
  // warm start for the gradient losses
  Eigen::VectorXd init = Eigen::VectorXd::Zero(model.num_components() * model.dim());
  Eigen::VectorXd data_mean = Eigen::VectorXd::Zero(model.dim());
  for (const auto& x : xs) data_mean += x;
  data_mean /= double(n);
  for (int j = 0; j < model.num_components(); ++j) {
    Eigen::VectorXd jitter = Eigen::VectorXd::Zero(model.dim());
    jitter[0] = 0.5 * (j - 0.5 * (model.num_components() - 1));
    init.segment(j * model.dim(), model.dim()) = data_mean + jitter;
  }
  if (cfg.contains("init")) {
    auto iv = cfg.at("init");
    for (int i = 0; i < init.size(); ++i) init[i] = iv.at(i).get<double>();
  }

  FitConfig fc;
  fc.record_trajectory = true;
  FitResult mle = fit_mle(xs, init, model, fc);
  FitResult res;
  if (loss == "mle") {
    res = mle;
  } else if (loss == "sm") {
    res = fit_sm(xs, mle.theta, model, fc);
  } else if (loss == "gsm") {
    std::vector<TemperedSample> ts(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) ts[i] = sched.noise_channel(xs[i], rng);
    res = fit_gsm(ts, mle.theta, model, sched, fc);
  } else {
    throw std::invalid_argument("fit: unknown loss kind " + loss);
  }

  json out;
  out["loss"] = loss;
  out["theta"] = std::vector<double>(res.theta.data(), res.theta.data() + res.theta.size());
  out["iterations"] = res.iterations;
  out["converged"] = res.converged;
  out["final_grad_norm"] = res.final_grad_norm;
  out["final_change"] = res.final_change;
  out["permutation_resolved_error"] = permutation_distance(model, res.theta);
  write_file(a.out_dir + "/fit.json", out.dump(2) + "\n");

  CsvWriter trace({"iteration", "loss"});
  for (std::size_t i = 0; i < res.trajectory.size(); ++i)
    trace.add_row({std::to_string(i), format_double(res.trajectory[i])});
  write_file(a.out_dir + "/fit_trace.csv", trace.content());
  if (!res.converged && loss != "mle") {
    std::cerr << "fit: optimizer returned a non-converged iterate\n";
  }
  return 0;
}

int run_sweep(const CommonArgs& a, const json& cfg, bool resume) {
  SweepConfig sc;
  if (cfg.contains("diameters")) sc.diameters = cfg.at("diameters").get<std::vector<double>>();
  sc.mc = cfg.value("mc", 400000L);
  sc.seed = a.seed;
  sc.workers = a.workers;
  sc.oracle_nx = cfg.value("oracle_nx", 97);
  sc.oracle_nb = cfg.value("oracle_nb", 97);

  std::vector<EfficiencyRow> rows(sc.diameters.size());
  std::vector<bool> have(sc.diameters.size(), false);
  if (resume) {
    for (std::size_t i = 0; i < sc.diameters.size(); ++i) {
      std::string cell = a.out_dir + "/cell_" + std::to_string(i) + ".json";
      if (file_exists(cell)) {
        json j = json::parse(read_file(cell));
        if (j.value("ok", false)) {
          EfficiencyRow r;
          r.diameter = j["D"];
          r.n = j["n"];
          r.ratio_sm = j["ratio_sm"];
          r.ratio_gsm = j["ratio_gsm"];
          r.cp_oracle = j["cp_oracle"];
          r.cp_bound = j["cp_bound"];
          r.rhs_thm31 = j["rhs_thm31"];
          r.seed = j["seed"];
          r.ok = true;
          rows[i] = r;
          have[i] = true;
        }
      }
    }
  }
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < sc.diameters.size(); ++i)
    if (!have[i]) todo.push_back(i);

  if (!todo.empty()) {
    SweepConfig one = sc;
    one.diameters.clear();
    for (auto i : todo) one.diameters.push_back(sc.diameters[i]);
    auto got = separation_sweep(one);
    for (std::size_t t = 0; t < todo.size(); ++t) rows[todo[t]] = got[t];
  }

  ensure_dir(a.out_dir);
  CsvWriter csv({"D", "n", "ratio_sm", "ratio_gsm", "cp_oracle", "cp_bound", "rhs_thm31", "seed"});
  json cells = json::array();
  int n_ok = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    json j;
    j["D"] = r.diameter;
    j["n"] = r.n;
    j["ok"] = r.ok;
    if (r.ok) {
      ++n_ok;
      j["ratio_sm"] = r.ratio_sm;
      j["ratio_gsm"] = r.ratio_gsm;
      j["cp_oracle"] = r.cp_oracle;
      j["cp_bound"] = r.cp_bound;
      j["rhs_thm31"] = r.rhs_thm31;
      j["seed"] = r.seed;
      // schedule diameter is D/2 (means at +/- D/2)
      j["beta_max"] = 14.0 * (r.diameter / 2.0) * (r.diameter / 2.0) - 1.0;
      csv.add_row({format_double(r.diameter), std::to_string(r.n), format_double(r.ratio_sm),
                   format_double(r.ratio_gsm), format_double(r.cp_oracle),
                   format_double(r.cp_bound), format_double(r.rhs_thm31),
                   std::to_string(r.seed)});
    } else {
      j["error"] = r.error;
      std::cerr << "sweep cell D=" << r.diameter << " failed: " << r.error << "\n";
    }
    write_file(a.out_dir + "/cell_" + std::to_string(i) + ".json", j.dump(2) + "\n");
    cells.push_back(j);
  }
  write_file(a.out_dir + "/sweep.csv", csv.content());
  // long-format plot data
  CsvWriter longf({"D", "metric", "value"});
  for (const auto& r : rows) {
    if (!r.ok) continue;
    longf.add_row({format_double(r.diameter), "ratio_sm", format_double(r.ratio_sm)});
    longf.add_row({format_double(r.diameter), "ratio_gsm", format_double(r.ratio_gsm)});
    longf.add_row({format_double(r.diameter), "cp_oracle", format_double(r.cp_oracle)});
  }
  write_file(a.out_dir + "/sweep_long.csv", longf.content());
  return n_ok >= 1 ? 0 : kExitNumeric;
}

int run_poincare_bound(const CommonArgs& a, const json& cfg) {
  SharedCovMixture model = demo_model(cfg);
  TemperatureSchedule sched = schedule_from_json(cfg, &model);
  PoincareBoundBreakdown br = total_bound(model, sched);
  if (cfg.value("with_oracle", false) && model.dim() == 1) {
    OracleResult orc = spectral_oracle_joint(model, sched, cfg.value("oracle_nx", 97),
                                             cfg.value("oracle_nb", 97));
    br.oracle_value = orc.value;
  }
  json out;
  out["c_beta"] = br.c_beta;
  out["c_x_given_beta"] = br.c_x_given_beta;
  out["rate_of_change_sup"] = br.rate_of_change_sup;
  out["rate_of_change_closed"] = br.rate_of_change_closed;
  out["c_component"] = br.c_component;
  out["c_projected"] = br.c_projected;
  out["c_total"] = br.c_total;
  out["collapsed_reference"] = br.collapsed_reference;
  if (br.oracle_value) out["oracle_value"] = *br.oracle_value;
  std::vector<std::vector<double>> chi(model.num_components(),
                                       std::vector<double>(model.num_components()));
  for (int i = 0; i < model.num_components(); ++i)
    for (int j = 0; j < model.num_components(); ++j) chi[i][j] = br.chisq_joint_matrix(i, j);
  out["chisq_joint"] = chi;
  write_file(a.out_dir + "/poincare_bound.json", out.dump(2) + "\n");
  return 0;
}

int run_poincare_oracle(const CommonArgs& a, const json& cfg) {
  SharedCovMixture model = demo_model(cfg);
  json out;
  if (cfg.value("joint", true)) {
    TemperatureSchedule sched = schedule_from_json(cfg, &model);
    OracleResult r = spectral_oracle_joint(model, sched, cfg.value("oracle_nx", 97),
                                           cfg.value("oracle_nb", 97));
    out["kind"] = "joint";
    out["value"] = r.value;
    out["coarse"] = r.coarse;
    out["fine"] = r.fine;
  } else {
    OracleResult r = spectral_oracle_mixture(model, cfg.value("grid_n", 513));
    out["kind"] = "langevin_x";
    out["value"] = r.value;
    out["coarse"] = r.coarse;
    out["fine"] = r.fine;
  }
  write_file(a.out_dir + "/poincare_oracle.json", out.dump(2) + "\n");
  return 0;
}

int run_decomp_verify(const CommonArgs& a, const json& cfg) {
  int states = cfg.value("states", 5);
  int comps = cfg.value("components", 2);
  int trials = cfg.value("trials", 100);
  Rng rng(a.seed);
  DiscreteMixtureInstance inst;
  inst.weights = Eigen::VectorXd::Constant(comps, 1.0 / comps);
  for (int j = 0; j < comps; ++j) {
    Eigen::VectorXd dist(states);
    double center = (states - 1) * (comps == 1 ? 0.5 : double(j) / (comps - 1));
    for (int i = 0; i < states; ++i)
      dist[i] = std::exp(-0.5 * (i - center) * (i - center) / 1.5);
    dist /= dist.sum();
    inst.components.push_back(dist);
    inst.generators.push_back(metropolis_path_generator(dist));
  }
  DecompositionReport rep = decomposition_check(inst, trials, rng);
  json out;
  out["trials"] = rep.trials;
  out["violations"] = rep.violations;
  out["min_slack"] = rep.min_slack;
  out["c_component"] = rep.c_component;
  out["c_projected"] = rep.c_projected;
  out["adversarial_slack"] = rep.adversarial_slack;
  write_file(a.out_dir + "/decomp_verify.json", out.dump(2) + "\n");
  return rep.violations == 0 ? 0 : kExitNumeric;
}

int run_hermite_verify(const CommonArgs& a, const json& cfg) {
  int max_order = cfg.value("max_order", 3);
  long mc = cfg.value("mc", 200000L);
  Rng rng(a.seed);
  json out;
  bool all_ok = true;

  // parity + Rodrigues-vs-integral agreement per order
  Eigen::MatrixXd sigma(2, 2);
  sigma << 1.3, 0.4, 0.4, 0.9;
  Eigen::VectorXd x(2);
  x << 0.7, -0.3;
  json orders = json::array();
  for (int k = 1; k <= max_order; ++k) {
    HermiteTensor exact = hermite_tensor(k, x, sigma);
    HermiteTensor neg = hermite_tensor(k, -x, sigma);
    double parity_err = 0.0;
    for (long f = 0; f < exact.entries.size(); ++f)
      parity_err = std::max(parity_err,
                            std::fabs(neg.entries[f] - (k % 2 ? -1.0 : 1.0) * exact.entries[f]));
    Eigen::VectorXd se;
    double imag_t = 0.0;
    HermiteTensor mc_t = hermite_tensor_mc(k, x, sigma, mc, rng, &se, &imag_t);
    double max_t = 0.0;
    for (long f = 0; f < exact.entries.size(); ++f)
      max_t = std::max(max_t, std::fabs(mc_t.entries[f] - exact.entries[f]) /
                                  std::max(se[f], 1e-12));
    bool ok = parity_err == 0.0 && max_t <= 4.0 && imag_t <= 4.0;
    all_ok = all_ok && ok;
    json jo;
    jo["order"] = k;
    jo["parity_error"] = parity_err;
    jo["mc_max_t"] = max_t;
    jo["imag_max_t"] = imag_t;
    jo["ok"] = ok;
    orders.push_back(jo);
  }
  out["orders"] = orders;

  // moment-bound profile table
  CsvWriter tab({"k1", "k2", "k", "d", "lambda_min", "lhs", "rhs", "ratio"});
  for (int d : {1, 2, 3}) {
    for (double lam : {0.5, 1.0, 2.0}) {
      Eigen::MatrixXd sig = lam * Eigen::MatrixXd::Identity(d, d);
      Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
      for (auto [k1, k2] : std::vector<std::pair<int, int>>{{1, 0}, {0, 1}, {1, 1}}) {
        auto rep = moment_bound_report(k1, k2, 1, sig, mu, mc / 10, rng);
        tab.add_row({std::to_string(k1), std::to_string(k2), "1", std::to_string(d),
                     format_double(lam), format_double(rep.lhs), format_double(rep.rhs),
                     format_double(rep.ratio)});
        all_ok = all_ok && rep.ratio < 10.0;
      }
    }
  }
  write_file(a.out_dir + "/moment_bounds.csv", tab.content());
  out["ok"] = all_ok;
  write_file(a.out_dir + "/hermite_verify.json", out.dump(2) + "\n");
  return all_ok ? 0 : kExitNumeric;
}

int run_ctld_sample(const CommonArgs& a, const json& cfg) {
  SharedCovMixture model = demo_model(cfg);
  TemperatureSchedule sched = schedule_from_json(cfg, &model);
  long steps = cfg.value("steps", 100000L);
  double dt = cfg.value("dt", 1e-2);
  long thin = cfg.value("thin", 10L);
  Rng rng(a.seed);
  ChainState init;
  init.x = model.means()[0];
  init.beta = 0.0;
  if (cfg.contains("x0")) {
    auto xv = cfg.at("x0");
    for (int i = 0; i < init.x.size(); ++i) init.x[i] = xv.at(i).get<double>();
  }
  ChainResult res = run_chain(init, steps, dt, thin, model, sched, rng);

  std::vector<std::string> header{"step", "beta"};
  for (int i = 0; i < model.dim(); ++i) header.push_back("x" + std::to_string(i));
  CsvWriter csv(header);
  for (const auto& st : res.trajectory) {
    std::vector<std::string> row{std::to_string(st.step_count), format_double(st.beta)};
    for (int i = 0; i < model.dim(); ++i) row.push_back(format_double(st.x[i]));
    csv.add_row(row);
  }
  write_file(a.out_dir + "/trajectory.csv", csv.content());

  json rep;
  rep["mode_occupancy"] = std::vector<double>(res.report.mode_occupancy.data(),
                                              res.report.mode_occupancy.data() +
                                                  res.report.mode_occupancy.size());
  rep["autocorrelation_time"] = res.report.autocorrelation_time;
  rep["histogram_chisq"] = res.report.histogram_chisq;
  rep["histogram_pvalue"] = res.report.histogram_pvalue;
  rep["histogram_bins"] = res.report.histogram_bins;
  rep["dt"] = dt;
  rep["steps"] = steps;
  write_file(a.out_dir + "/mixing_report.json", rep.dump(2) + "\n");
  return 0;
}

int run_loss_check(const CommonArgs& a, const json& cfg) {
  SharedCovMixture p = demo_model(cfg);
  TemperatureSchedule sched = schedule_from_json(cfg, &p);
  long mc = cfg.value("mc", 200000L);
  Rng rng(a.seed);

  // q: p with means nudged
  Eigen::VectorXd theta = p.stacked_means();
  Eigen::VectorXd theta_q = theta;
  for (int i = 0; i < theta_q.size(); ++i) theta_q[i] += (i % 2 ? -0.25 : 0.3);
  SharedCovMixture q = p.with_means(theta_q);

  LossReport rep_sm = sm_population(p, q, mc, rng);
  LossReport rep_gsm = gsm_ctld_population(p, q, sched, mc, rng);
  // IBP-form sample means of the same losses (offset by the data constant)
  LossReport rep_sm_ibp, rep_gsm_ibp;
  {
    std::vector<double> vs(mc), vg(mc);
    for (long i = 0; i < mc; ++i) {
      Eigen::VectorXd x = p.sample(rng);
      vs[i] = sm_per_sample(q, x);
      PerSampleLoss l = gsm_ctld_per_sample(q, sched, sched.noise_channel(x, rng));
      vg[i] = l.l1 + l.l2;
    }
    MeanStderr ms = mean_stderr(vs), mg = mean_stderr(vg);
    rep_sm_ibp = LossReport{ms.mean, ms.stderr_, mc, LossKind::SM_ibp};
    rep_gsm_ibp = LossReport{mg.mean, mg.stderr_, mc, LossKind::GSM_ibp};
  }
  json out;
  auto dump = [&a](const LossReport& r) {
    json j;
    j["kind"] = loss_kind_name(r.kind);
    j["value"] = r.value;
    j["std_error"] = r.std_error;
    j["n_points"] = r.n_points;
    j["seed"] = a.seed;
    return j;
  };
  out["sm_population"] = dump(rep_sm);
  out["gsm_population"] = dump(rep_gsm);
  out["sm_ibp"] = dump(rep_sm_ibp);
  out["gsm_ibp"] = dump(rep_gsm_ibp);
  write_file(a.out_dir + "/loss_check.json", out.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"generalized score matching experiments on shared-covariance Gaussian mixtures"};
  app.require_subcommand(1);

  CommonArgs common;
  app.add_option("--config", common.config_path, "JSON config file");
  app.add_option("--seed", common.seed, "RNG seed (mandatory)")->required();
  app.add_option("--out", common.out_dir, "output directory");
  app.add_option("--workers", common.workers, "worker threads (0 = hardware)");

  auto* fit = app.add_subcommand("fit", "fit means by MLE / SM / GSM");
  std::string fit_loss;
  fit->add_option("--loss", fit_loss, "loss kind: mle | sm | gsm");
  auto* sweep = app.add_subcommand("sweep", "efficiency separation sweep over D");
  bool resume = false;
  sweep->add_flag("--resume", resume, "re-run only failed cells");
  auto* pb = app.add_subcommand("poincare-bound", "bound pipeline breakdown");
  auto* po = app.add_subcommand("poincare-oracle", "grid spectral oracle");
  auto* dv = app.add_subcommand("decomp-verify", "discrete decomposition inequality check");
  auto* hv = app.add_subcommand("hermite-verify", "hermite identity checks");
  int hv_max_order = 3;
  hv->add_option("--max-order", hv_max_order, "largest tensor order to verify");
  auto* cs = app.add_subcommand("ctld-sample", "run the tempered chain");
  long cs_steps = 0;
  cs->add_option("--steps", cs_steps, "number of steps");
  auto* lc = app.add_subcommand("loss-check", "population loss reports for a perturbed model");

  CLI11_PARSE(app, argc, argv);
  if (common.workers == 0) common.workers = default_workers();

  std::string sub;
  try {
    json cfg = load_config(common);
    int rc = 0;
    if (app.got_subcommand(fit)) {
      sub = "fit";
      if (!fit_loss.empty()) cfg["loss"] = fit_loss;
      write_manifest(common, sub, cfg);
      rc = run_fit(common, cfg);
    } else if (app.got_subcommand(sweep)) {
      sub = "sweep";
      write_manifest(common, sub, cfg);
      rc = run_sweep(common, cfg, resume);
    } else if (app.got_subcommand(pb)) {
      sub = "poincare-bound";
      write_manifest(common, sub, cfg);
      rc = run_poincare_bound(common, cfg);
    } else if (app.got_subcommand(po)) {
      sub = "poincare-oracle";
      write_manifest(common, sub, cfg);
      rc = run_poincare_oracle(common, cfg);
    } else if (app.got_subcommand(dv)) {
      sub = "decomp-verify";
      write_manifest(common, sub, cfg);
      rc = run_decomp_verify(common, cfg);
    } else if (app.got_subcommand(hv)) {
      sub = "hermite-verify";
      cfg["max_order"] = hv_max_order;
      write_manifest(common, sub, cfg);
      rc = run_hermite_verify(common, cfg);
    } else if (app.got_subcommand(cs)) {
      sub = "ctld-sample";
      if (cs_steps > 0) cfg["steps"] = cs_steps;
      write_manifest(common, sub, cfg);
      rc = run_ctld_sample(common, cfg);
    } else if (app.got_subcommand(lc)) {
      sub = "loss-check";
      write_manifest(common, sub, cfg);
      rc = run_loss_check(common, cfg);
    }
    return rc;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    write_error_record(common, sub, e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    write_error_record(common, sub, e.what());
    return kExitNumeric;
  }
}
