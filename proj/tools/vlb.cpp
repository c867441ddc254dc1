#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vlb/io.hpp"
#include "vlb/vlb.hpp"

namespace fs = std::filesystem;
using namespace vlb;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitUsage = 2;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string join(const std::vector<std::string>& v, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

std::string b2s(bool b) { return b ? "true" : "false"; }

// Flags shared by the subcommands; each is applied only if given on the command line.
struct Flags {
  std::string config, out, schedule, family, noise, proposals, dequant, check, density, ckpt, predictor, proposal,
      embedding, hidden;
  std::uint64_t seed = 0;
  double eta0 = 0, eta1 = 0, a = 1, lr = 0, sigma0 = 0;
  std::size_t steps = 0, batch = 0, samples = 0, repeats = 0, points = 0, T = 0, n = 0;
  bool reuse_noise = false;
  std::vector<std::string> inputs;
};

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "JSON config file; flags override its fields")->check(CLI::ExistingFile);
  app->add_option("--out", f.out, "artifact directory")->required();
  app->add_option("--seed", f.seed, "master seed");
  app->add_option("--schedule", f.schedule, "schedule name, e.g. vp-sigmoid, sp-tanh, vp-gsig0.5, ve");
  app->add_option("--eta0", f.eta0, "lower log-SNR endpoint (eta = -log SNR)");
  app->add_option("--eta1", f.eta1, "upper endpoint");
  app->add_option("--family", f.family, "variance family: sigmoid, gsig, tanh, exp");
  app->add_option("--a", f.a, "generalized sigmoid exponent");
}

bool given(const CLI::App* app, const std::string& flag) { return app->count(flag) > 0; }

json schedule_defaults() { return to_json(ScheduleSpec{}); }

void apply_schedule_flags(json& sched, const CLI::App* app, const Flags& f) {
  if (given(app, "--schedule")) sched = to_json(parse_schedule_name(f.schedule));
  if (given(app, "--family")) sched["family"] = f.family;
  if (given(app, "--a")) sched["a"] = f.a;
  if (given(app, "--eta0")) sched["eta0"] = f.eta0;
  if (given(app, "--eta1")) sched["eta1"] = f.eta1;
}

json load_config_file(const std::string& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse config " + path + ": " + e.what());
  }
}

// defaults <- config file <- flags; unknown top-level keys in the file are rejected.
json merge_config(json defaults, const Flags& f) {
  if (f.config.empty()) return defaults;
  json file = load_config_file(f.config);
  if (!file.is_object()) throw ConfigError("config must be a JSON object");
  for (auto it = file.begin(); it != file.end(); ++it)
    if (!defaults.contains(it.key())) throw ConfigError("unknown config field '" + it.key() + "'");
  defaults.merge_patch(file);
  return defaults;
}

// Artifact directory, run log and config hash of one invocation.
class Run {
 public:
  Run(const std::string& out, json cfg) : dir_(out), cfg_(std::move(cfg)) {
    fs::create_directories(dir_);
    hash_ = config_hash(cfg_);
    write_text(path("resolved_config.json"), cfg_.dump(2) + "\n");
    log_.open(path("run.log"), std::ios::binary);
    if (!log_) throw ConfigError("cannot write run.log in " + out);
    line("command=" + cfg_.at("command").get<std::string>());
    line("config_hash=" + hash_);
    line("seed=" + std::to_string(cfg_.at("seed").get<std::uint64_t>()));
    line("resolved_config=" + cfg_.dump());
  }

  const json& cfg() const { return cfg_; }
  const std::string& hash() const { return hash_; }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::uint64_t seed() const { return cfg_.at("seed").get<std::uint64_t>(); }
  std::uint64_t stream(std::uint64_t k) const { return derive_seed(seed(), k); }

  void line(const std::string& s) {
    log_ << s << "\n";
    log_.flush();
    std::cout << s << "\n";
  }

  CsvWriter csv(const std::string& name, const std::string& schema, const std::vector<std::string>& header) const {
    return CsvWriter(path(name), schema, hash_, header);
  }

  void write_json(const std::string& name, json j) const {
    j["config_hash"] = hash_;
    write_text(path(name), j.dump(2) + "\n");
  }

  int finish(bool ok) {
    line(std::string("status=") + (ok ? "ok" : "violation"));
    return ok ? kExitOk : kExitViolation;
  }

 private:
  fs::path dir_;
  json cfg_;
  std::string hash_;
  std::ofstream log_;
};

ChannelSchedule schedule_from(const json& j) { return make_schedule(schedule_spec_from_json(j)); }

std::string short_num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string schedule_label(const json& j) {
  auto s = schedule_spec_from_json(j);
  std::string fam = s.family == "gsig" ? "gsig" + short_num(s.a) : s.family;
  return s.regime + "-" + fam + "[" + short_num(s.eta0) + "," + short_num(s.eta1) + "]";
}

std::vector<NoiseFamily> noises_from(const json& j) {
  std::vector<NoiseFamily> out;
  for (const auto& name : j.get<std::vector<std::string>>()) {
    if (name == "all") {
      for (const auto& n : NoiseFamily::all()) out.push_back(n);
    } else {
      out.push_back(NoiseFamily::parse(name));
    }
  }
  if (out.empty()) throw ConfigError("no noise family selected");
  return out;
}

std::shared_ptr<Proposal> make_proposal(const std::string& id, const ChannelSchedule& s) {
  if (id == "uniform-t") return std::make_shared<UniformTProposal>(s);
  if (id == "designed") return std::make_shared<DesignedProposal>(s);
  if (id == "designed-alpha2") return std::make_shared<DesignedProposal>(s, DesignedTarget::AlphaSquared);
  throw ConfigError("unknown proposal '" + id + "'");
}

LossWeighting parse_weighting(const std::string& s) {
  if (s == "likelihood") return LossWeighting::Likelihood;
  if (s == "alpha2") return LossWeighting::AlphaSquared;
  if (s == "unit") return LossWeighting::Unit;
  throw ConfigError("unknown loss weighting '" + s + "'");
}

// sigma^2(eta) = target by bisection on the unchecked schedule.
double eta_for_sigma2(const ChannelSchedule& s, double target) {
  double lo = -60.0, hi = 30.0;
  for (int i = 0; i < 300; ++i) {
    double m = 0.5 * (lo + hi);
    double v = s.coefficients_unchecked(m).sigma;
    (v * v < target ? lo : hi) = m;
  }
  return 0.5 * (lo + hi);
}

std::shared_ptr<NoisePredictor> analytic_predictor(const std::string& kind, const ToyDensity& d,
                                                   const ChannelSchedule& s, const json& perturb) {
  auto exact = std::make_shared<ExactScorePredictor>(d, s);
  if (kind == "exact") return exact;
  if (kind == "zero") return std::make_shared<ZeroPredictor>(dim_of(d));
  if (kind == "perturbed")
    return std::make_shared<PerturbedPredictor>(exact, perturb.at("amplitude").get<double>(),
                                                perturb.at("frequency").get<double>(), perturb.at("phase").get<double>());
  throw ConfigError("unknown predictor '" + kind + "'");
}

json perturb_defaults() { return {{"amplitude", 0.3}, {"frequency", 1.7}, {"phase", 0.4}}; }

// ---------------------------------------------------------------- verify

json verify_defaults() {
  return {{"command", "verify"},
          {"seed", 0},
          {"check", "theorem1"},
          {"densities", {"gauss", "gmm2"}},
          {"noise", {"all"}},
          {"schedule", schedule_defaults()},
          {"tolerance", 1e-3},
          {"second_order_sigma2", {0.04, 0.02, 0.01}},
          {"decomposition_sigma0_sq", {1e-2, 1e-3, 1e-4}},
          {"decomposition_min_slope", 0.9},
          {"points", 100},
          {"regimes", {"vp", "sp"}},
          {"pointwise_tolerance", 1e-6},
          {"perturbation", perturb_defaults()}};
}

bool verify_theorem1(Run& run) {
  const auto& cfg = run.cfg();
  double tol = cfg.at("tolerance").get<double>();
  auto w = run.csv("verify_theorem1.csv", "vlb-verify-theorem1/1",
                   {"check", "density", "partner", "noise", "fd_slope", "fisher_half", "abs_gap", "pass"});
  json rows = json::array();
  bool ok = true;
  for (const auto& name : cfg.at("densities").get<std::vector<std::string>>()) {
    auto p = density_preset(name);
    auto partner = partner_preset(name);
    auto q = density_preset(partner);
    for (const auto& noise : noises_from(cfg.at("noise"))) {
      auto r = theorem1_check(p, q, noise);
      bool pass = r.abs_gap < tol;
      ok = ok && pass;
      w.row({"theorem1", name, partner, noise.name(), fmt(r.fd_slope), fmt(r.fisher_half), fmt(r.abs_gap), b2s(pass)});
      rows.push_back({{"check", "theorem1"}, {"density", name}, {"partner", partner}, {"noise", noise.name()},
                      {"fd_slope", r.fd_slope}, {"fisher_half", r.fisher_half}, {"abs_gap", r.abs_gap}, {"pass", pass}});
      run.line("theorem1 " + name + "|" + partner + " " + noise.name() + " abs_gap=" + fmt(r.abs_gap));
    }
  }
  run.write_json("verify_theorem1.json", {{"rows", rows}, {"tolerance", tol}, {"pass", ok}});
  return ok;
}

bool verify_second_order(Run& run) {
  const auto& cfg = run.cfg();
  auto probes = cfg.at("second_order_sigma2").get<std::vector<double>>();
  auto w = run.csv("verify_second_order.csv", "vlb-verify-second-order/1",
                   {"check", "density", "partner", "noise", "sigma2", "lhs", "rhs", "residual", "residual_over_sigma2"});
  json rows = json::array();
  bool ok = true;
  for (const auto& name : cfg.at("densities").get<std::vector<std::string>>()) {
    auto p = density_preset(name);
    auto partner = partner_preset(name);
    auto q = density_preset(partner);
    for (const auto& noise : noises_from(cfg.at("noise"))) {
      double prev = kInf;
      bool shrinking = true;
      for (double s2 : probes) {
        auto r = second_order_expansion_check(p, q, noise, s2);
        double ratio = std::abs(r.residual) / s2;
        shrinking = shrinking && ratio < prev;
        prev = ratio;
        w.row({"second-order", name, partner, noise.name(), fmt(s2), fmt(r.lhs), fmt(r.rhs), fmt(r.residual), fmt(ratio)});
        rows.push_back({{"density", name}, {"noise", noise.name()}, {"sigma2", s2}, {"residual", r.residual}});
      }
      ok = ok && shrinking;
      run.line("second-order " + name + " " + noise.name() + " residual/sigma2 shrinking=" + b2s(shrinking));
    }
  }
  run.write_json("verify_second_order.json", {{"rows", rows}, {"pass", ok}});
  return ok;
}

bool verify_debruijn(Run& run) {
  const auto& cfg = run.cfg();
  double tol = cfg.at("tolerance").get<double>();
  auto w = run.csv("verify_debruijn.csv", "vlb-verify-debruijn/1",
                   {"check", "density", "noise", "fd_slope", "fisher_half", "abs_gap", "pass"});
  json rows = json::array(), spreads = json::object();
  bool ok = true;
  for (const auto& name : cfg.at("densities").get<std::vector<std::string>>()) {
    auto p = density_preset(name);
    double lo = kInf, hi = -kInf;
    for (const auto& noise : noises_from(cfg.at("noise"))) {
      auto r = debruijn_check(p, noise);
      bool pass = r.abs_gap < tol;
      ok = ok && pass;
      lo = std::min(lo, r.fd_slope);
      hi = std::max(hi, r.fd_slope);
      w.row({"debruijn", name, noise.name(), fmt(r.fd_slope), fmt(r.fisher_half), fmt(r.abs_gap), b2s(pass)});
      rows.push_back({{"density", name}, {"noise", noise.name()}, {"fd_slope", r.fd_slope},
                      {"fisher_half", r.fisher_half}, {"abs_gap", r.abs_gap}, {"pass", pass}});
      run.line("debruijn " + name + " " + noise.name() + " abs_gap=" + fmt(r.abs_gap));
    }
    spreads[name] = hi - lo;
    ok = ok && hi - lo < tol;
    run.line("debruijn " + name + " cross_family_spread=" + fmt(hi - lo));
  }
  run.write_json("verify_debruijn.json", {{"rows", rows}, {"cross_family_spread", spreads}, {"tolerance", tol}, {"pass", ok}});
  return ok;
}

bool verify_decomposition(Run& run) {
  const auto& cfg = run.cfg();
  auto base = schedule_spec_from_json(cfg.at("schedule"));
  auto ladder = cfg.at("decomposition_sigma0_sq").get<std::vector<double>>();
  double min_slope = cfg.at("decomposition_min_slope").get<double>();
  auto w = run.csv("verify_decomposition.csv", "vlb-verify-decomposition/1",
                   {"check", "density", "schedule", "sigma0_sq", "eta0", "lhs", "prior_ce", "dsm_term",
                    "channel_fisher_term", "gap", "endpoint_kl", "endpoint_warning"});
  json out = json::object();
  bool ok = true;
  for (const auto& name : cfg.at("densities").get<std::vector<std::string>>()) {
    auto p = density_preset(name);
    auto q = make_density(p);
    std::vector<double> lx, ly;
    for (double s0 : ladder) {
      ScheduleSpec spec = base;
      spec.eta0 = eta_for_sigma2(make_schedule(base), s0);
      auto s = make_schedule(spec);
      ExactScorePredictor score(p, s);
      auto r = thermo_decomposition_check(p, s, score, *q);
      w.row({"decomposition", name, schedule_label(to_json(spec)), fmt(s0), fmt(spec.eta0), fmt(r.lhs), fmt(r.prior_ce),
             fmt(r.dsm_term), fmt(r.channel_fisher_term), fmt(r.gap), fmt(r.endpoint_kl), b2s(r.endpoint_warning)});
      lx.push_back(std::log(s0));
      ly.push_back(std::log(std::abs(r.gap)));
      run.line("decomposition " + name + " sigma0_sq=" + fmt(s0) + " gap=" + fmt(r.gap));
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      mx += lx[i] / lx.size();
      my += ly[i] / ly.size();
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    double slope = sxx > 0 ? sxy / sxx : 0.0;
    bool pass = slope >= min_slope;
    ok = ok && pass;
    out[name] = {{"loglog_slope", slope}, {"pass", pass}};
    run.line("decomposition " + name + " loglog_slope=" + fmt(slope) + " pass=" + b2s(pass));
  }
  run.write_json("verify_decomposition.json", {{"densities", out}, {"min_slope", min_slope}, {"pass", ok}});
  return ok;
}

bool verify_pointwise(Run& run) {
  const auto& cfg = run.cfg();
  auto base = schedule_spec_from_json(cfg.at("schedule"));
  std::size_t points = cfg.at("points").get<std::size_t>();
  PointwiseOptions po;
  po.tolerance = cfg.at("pointwise_tolerance").get<double>();
  po.throw_on_violation = false;
  auto w = run.csv("verify_pointwise.csv", "vlb-verify-pointwise/1",
                   {"check", "density", "schedule", "predictor", "index", "x0", "neg_log_q", "prior_ce", "dsm", "bound", "slack"});
  json summary = json::array();
  bool ok = true;
  std::uint64_t task = 0;
  for (const auto& name : cfg.at("densities").get<std::vector<std::string>>()) {
    auto p = density_preset(name);
    auto q = make_density(p);
    for (const auto& regime : cfg.at("regimes").get<std::vector<std::string>>()) {
      ScheduleSpec spec = base;
      spec.regime = regime;
      auto s = make_schedule(spec);
      for (const std::string kind : {"exact", "perturbed"}) {
        auto pred = analytic_predictor(kind, p, s, cfg.at("perturbation"));
        auto xs = draw_samples(p, points, run.stream(task++));
        std::vector<PointwiseReport> rep(xs.rows);
        parallel_for_chunks(xs.rows, [&](std::size_t i) { rep[i] = pointwise_bound_check(xs.row(i), s, *pred, *q, po); });
        double min_slack = kInf, mean_slack = 0.0;
        for (std::size_t i = 0; i < xs.rows; ++i) {
          const auto& r = rep[i];
          min_slack = std::min(min_slack, r.slack);
          mean_slack += r.slack / xs.rows;
          w.row({"pointwise", name, schedule_label(to_json(spec)), kind, std::to_string(i), fmt(xs(i, 0)), fmt(r.neg_log_q),
                 fmt(r.prior_ce), fmt(r.dsm), fmt(r.bound), fmt(r.slack)});
        }
        bool pass = min_slack >= -po.tolerance;
        ok = ok && pass;
        summary.push_back({{"density", name}, {"regime", regime}, {"predictor", kind}, {"min_slack", min_slack},
                           {"mean_slack", mean_slack}, {"pass", pass}});
        run.line("pointwise " + name + " " + regime + " " + kind + " min_slack=" + fmt(min_slack));
      }
    }
  }
  run.write_json("verify_pointwise.json", {{"rows", summary}, {"tolerance", po.tolerance}, {"pass", ok}});
  return ok;
}

int cmd_verify(const json& cfg) {
  Run run(cfg.at("out_dir").get<std::string>(), cfg.at("resolved"));
  std::string check = run.cfg().at("check").get<std::string>();
  std::vector<std::string> checks =
      check == "all" ? std::vector<std::string>{"theorem1", "second-order", "debruijn", "decomposition", "pointwise"}
                     : split_list(check);
  bool ok = true;
  for (const auto& c : checks) {
    if (c == "theorem1") ok = verify_theorem1(run) && ok;
    else if (c == "second-order") ok = verify_second_order(run) && ok;
    else if (c == "debruijn") ok = verify_debruijn(run) && ok;
    else if (c == "decomposition") ok = verify_decomposition(run) && ok;
    else if (c == "pointwise") ok = verify_pointwise(run) && ok;
    else throw ConfigError("unknown check '" + c + "'");
  }
  return run.finish(ok);
}

// ---------------------------------------------------------------- ablate-schedule

json ablate_schedule_defaults() {
  json names = {"vp-sigmoid", "vp-gsig0.5", "vp-gsig2", "vp-tanh", "sp-sigmoid", "sp-tanh", "ve"};
  json specs = json::array();
  for (const auto& n : names) specs.push_back(to_json(parse_schedule_name(n)));
  return {{"command", "ablate-schedule"}, {"seed", 0},         {"schedules", specs},
          {"density", "gauss"},           {"samples", 100000}, {"data_size", 100000}};
}

int cmd_ablate_schedule(const json& in) {
  Run run(in.at("out_dir").get<std::string>(), in.at("resolved"));
  const auto& cfg = run.cfg();
  std::string dname = cfg.at("density").get<std::string>();
  auto p = density_preset(dname);
  if (!std::holds_alternative<GaussianMixture>(p)) throw ConfigError("ablate-schedule needs a Gaussian mixture density");
  std::size_t n = cfg.at("samples").get<std::size_t>();
  auto data = draw_samples(p, cfg.at("data_size").get<std::size_t>(), run.stream(0));
  double second_moment = 0.0;
  for (double v : data.data) second_moment += v * v / data.rows;
  const double D = static_cast<double>(data.cols);
  auto w = run.csv("ablate_schedule.csv", "vlb-ablate-schedule/1",
                   {"schedule", "regime", "family", "a", "eta0", "eta1", "dsm_exact", "dsm_zero", "prior_ce",
                    "bound_nats", "bound_bits_per_dim", "designed_normalizer", "mean_uniform_t", "var_uniform_t",
                    "mean_designed", "var_designed", "ratio_designed"});
  std::uint64_t task = 1;
  for (const auto& sj : cfg.at("schedules")) {
    auto spec = schedule_spec_from_json(sj);
    auto s = make_schedule(spec);
    ExactScorePredictor exact(p, s);
    ZeroPredictor zero(dim_of(p));
    double floor = loss_quadrature(s, p, exact);
    double zloss = loss_quadrature(s, p, zero);
    double prior = kNaN;
    if (s.regime() != Regime::VE) {
      auto c = s.coefficients_at(s.eta1());
      prior = 0.5 * (D * (kLn2Pi + c.sigma * c.sigma) + c.alpha * c.alpha * second_moment);
    }
    double bound = prior + floor;
    UniformTProposal uni(s);
    DesignedProposal des(s);
    auto eu = loss_mc(s, data, exact, uni, n, run.stream(task));
    auto ed = loss_mc(s, data, exact, des, n, run.stream(task));
    ++task;
    w.row({schedule_label(sj), spec.regime, spec.family, fmt(spec.a), fmt(spec.eta0), fmt(spec.eta1), fmt(floor),
           fmt(zloss), fmt(prior), fmt(bound), fmt(bound / (D * std::numbers::ln2)), fmt(des.normalizer()), fmt(eu.mean),
           fmt(eu.variance), fmt(ed.mean), fmt(ed.variance), fmt(ed.variance / eu.variance)});
    run.line("ablate-schedule " + schedule_label(sj) + " dsm_exact=" + fmt(floor) + " ratio_designed=" +
             fmt(ed.variance / eu.variance));
  }
  return run.finish(true);
}

// ---------------------------------------------------------------- ablate-is

json learned_defaults() {
  return {{"steps", 500}, {"batch", 256}, {"hidden", 256}, {"lr", 1e-2}, {"init_seed", 0}};
}

json ablate_is_defaults() {
  return {{"command", "ablate-is"},
          {"seed", 0},
          {"schedule", schedule_defaults()},
          {"density", "gauss"},
          {"predictor", "exact"},
          {"perturbation", perturb_defaults()},
          {"proposals", {"uniform-t", "designed", "learned"}},
          {"samples", 100000},
          {"repeats", 20},
          {"data_size", 100000},
          {"learned", learned_defaults()}};
}

int cmd_ablate_is(const json& in) {
  Run run(in.at("out_dir").get<std::string>(), in.at("resolved"));
  const auto& cfg = run.cfg();
  auto s = schedule_from(cfg.at("schedule"));
  auto p = density_preset(cfg.at("density").get<std::string>());
  auto pred = analytic_predictor(cfg.at("predictor").get<std::string>(), p, s, cfg.at("perturbation"));
  auto data = draw_samples(p, cfg.at("data_size").get<std::size_t>(), run.stream(0));
  std::vector<ProposalHandle> props;
  std::vector<double> trace;
  for (const auto& id : cfg.at("proposals").get<std::vector<std::string>>()) {
    if (id != "learned") {
      props.push_back(make_proposal(id, s));
      continue;
    }
    const auto& lc = cfg.at("learned");
    MonotoneNet net(s.eta0(), s.eta1(), lc.at("hidden").get<std::size_t>(), lc.at("init_seed").get<std::uint64_t>());
    LearnedFitOptions fit;
    fit.steps = lc.at("steps").get<std::size_t>();
    fit.batch = lc.at("batch").get<std::size_t>();
    fit.seed = run.stream(1);
    fit.adam.lr = lc.at("lr").get<double>();
    trace = fit_learned_proposal(net, s, data, *pred, fit);
    props.push_back(std::make_shared<LearnedProposal>(net));
    run.line("learned proposal fitted: steps=" + std::to_string(fit.steps) + " min_increment=" +
             fmt(net.min_increment(10000)));
  }
  auto rep = estimator_variance_report(props, s, data, *pred, cfg.at("samples").get<std::size_t>(),
                                       cfg.at("repeats").get<std::size_t>(), run.stream(2));
  auto w = run.csv("is_variance.csv", "vlb-ablate-is/1",
                   {"proposal", "mean", "variance", "std_error", "ratio_vs_uniform_t", "ratio_upper95", "n_samples",
                    "n_repeats"});
  json rows = json::array();
  for (const auto& r : rep.rows) {
    w.row({r.proposal, fmt(r.mean), fmt(r.variance), fmt(r.std_error), fmt(r.ratio_vs_uniform_t), fmt(r.ratio_upper95),
           std::to_string(r.n_samples), std::to_string(r.n_repeats)});
    rows.push_back({{"proposal", r.proposal}, {"mean", r.mean}, {"variance", r.variance}, {"std_error", r.std_error},
                    {"ratio_vs_uniform_t", r.ratio_vs_uniform_t}, {"ratio_upper95", r.ratio_upper95}});
    run.line("ablate-is " + r.proposal + " mean=" + fmt(r.mean) + " ratio=" + fmt(r.ratio_vs_uniform_t) +
             " upper95=" + fmt(r.ratio_upper95));
  }
  if (!trace.empty()) {
    auto t = run.csv("learned_trace.csv", "vlb-learned-trace/1", {"step", "objective"});
    for (std::size_t i = 0; i < trace.size(); ++i) t.row({std::to_string(i), fmt(trace[i])});
  }
  run.write_json("is_variance.json", {{"rows", rows}, {"means_agree", rep.means_agree}, {"worst_z", rep.worst_z}});
  run.line("means_agree=" + b2s(rep.means_agree) + " worst_z=" + fmt(rep.worst_z));
  return run.finish(rep.means_agree);
}

// ---------------------------------------------------------------- train

json train_defaults() {
  NetworkConfig net;
  return {{"command", "train"},
          {"seed", 0},
          {"schedule", schedule_defaults()},
          {"density", "gauss"},
          {"data_size", 100000},
          {"steps", 5000},
          {"batch", 256},
          {"proposal", "designed"},
          {"weighting", "likelihood"},
          {"network", to_json(net)},
          {"adam", {{"lr", 2e-4}, {"beta1", 0.9}, {"beta2", 0.99}, {"eps", 1e-8}, {"weight_decay", 0.01}}},
          {"ema", {{"rate", 0.9999}, {"warmup", true}}},
          {"warm_start", to_json(WarmStartRecord{})},
          {"resume", ""},
          {"quadrature", {{"eta_nodes", 128}, {"gh_nodes", 32}}}};
}

int cmd_train(const json& in) {
  Run run(in.at("out_dir").get<std::string>(), in.at("resolved"));
  const auto& cfg = run.cfg();
  auto spec = schedule_spec_from_json(cfg.at("schedule"));
  auto s = make_schedule(spec);
  std::string dname = cfg.at("density").get<std::string>();
  auto p = density_preset(dname);
  auto ncfg = network_config_from_json(cfg.at("network"));
  if (ncfg.input_dim != dim_of(p)) throw ConfigError("network.input_dim must match the density dimension");
  auto net = std::make_shared<ScoreNetwork>(ncfg, s);
  auto ws_rec = warm_start_from_json(cfg.at("warm_start"));
  auto data = draw_samples(p, cfg.at("data_size").get<std::size_t>(), run.stream(0));
  auto ds = warm_start(data, NoiseFamily::parse(ws_rec.noise), ws_rec.alpha0, ws_rec.sigma0, ws_rec.seed);
  auto prop = make_proposal(cfg.at("proposal").get<std::string>(), s);

  TrainOptions o;
  o.steps = cfg.at("steps").get<std::size_t>();
  o.batch = cfg.at("batch").get<std::size_t>();
  o.seed = run.stream(1);
  const auto& a = cfg.at("adam");
  o.adam = {a.at("lr").get<double>(), a.at("beta1").get<double>(), a.at("beta2").get<double>(), a.at("eps").get<double>(),
            a.at("weight_decay").get<double>()};
  o.ema_rate = cfg.at("ema").at("rate").get<double>();
  o.ema_warmup = cfg.at("ema").at("warmup").get<bool>();
  o.weighting = parse_weighting(cfg.at("weighting").get<std::string>());

  std::optional<TrainState> resume;
  std::string resume_path = cfg.at("resume").get<std::string>();
  if (!resume_path.empty()) {
    auto ck = load_checkpoint(resume_path);
    if (to_json(ck.network) != to_json(ncfg) || to_json(ck.schedule) != to_json(spec))
      throw ConfigError("resume checkpoint does not match the network or schedule config");
    resume = ck.state;
    run.line("resumed from step " + std::to_string(ck.state.step));
  }
  auto res = train(*net, s, ds, *prop, o, resume ? &*resume : nullptr);

  Checkpoint ck{ncfg, spec, ws_rec, res.state, {{"density", dname}, {"config_hash", run.hash()}, {"adam", a},
                                                {"weighting", cfg.at("weighting")}, {"proposal", cfg.at("proposal")}}};
  save_checkpoint(run.path("checkpoint.json"), ck);
  auto t = run.csv("loss_trace.csv", "vlb-train-trace/1", {"step", "loss"});
  std::uint64_t first = res.state.step - res.loss_trace.size();
  for (std::size_t i = 0; i < res.loss_trace.size(); ++i) t.row({std::to_string(first + i), fmt(res.loss_trace[i])});

  json summary = {{"steps", res.state.step}, {"final_batch_loss", res.loss_trace.empty() ? kNaN : res.loss_trace.back()}};
  if (std::holds_alternative<GaussianMixture>(p) && ws_rec.sigma0 == 0.0) {
    LossQuadratureOptions q;
    q.eta_nodes = cfg.at("quadrature").at("eta_nodes").get<int>();
    q.gh_nodes = cfg.at("quadrature").at("gh_nodes").get<int>();
    NetworkPredictor ema(net, res.state.ema.shadow);
    ExactScorePredictor exact(p, s);
    double le = loss_quadrature(s, p, ema, q), lf = loss_quadrature(s, p, exact, q);
    summary["quadrature_loss_ema"] = le;
    summary["quadrature_loss_optimal"] = lf;
    summary["relative_excess"] = (le - lf) / lf;
    run.line("train quadrature_loss_ema=" + fmt(le) + " optimal=" + fmt(lf) + " relative_excess=" + fmt((le - lf) / lf));
  }
  run.write_json("train_summary.json", summary);
  return run.finish(true);
}

// ---------------------------------------------------------------- eval-nll

json eval_defaults() {
  return {{"command", "eval-nll"},
          {"seed", 0},
          {"ckpt", ""},
          {"predictor", "network"},
          {"perturbation", perturb_defaults()},
          {"density", "uniform256"},
          {"schedule", schedule_defaults()},
          {"points", 1000},
          {"samples", 100},
          {"dequant", "auto"},
          {"proposal", "designed"},
          {"levels", 256},
          {"warm_start", nullptr},
          {"reuse_training_noise", false}};
}

struct LoadedModel {
  std::shared_ptr<NoisePredictor> predictor;
  ScheduleSpec schedule;
  std::string density;
};

LoadedModel load_model(const json& cfg) {
  LoadedModel m;
  std::string kind = cfg.at("predictor").get<std::string>();
  if (kind == "network") {
    std::string path = cfg.at("ckpt").get<std::string>();
    if (path.empty()) throw ConfigError("predictor 'network' needs --ckpt");
    auto ck = load_checkpoint(path);
    m.schedule = ck.schedule;
    m.density = ck.training.value("density", std::string("gauss"));
    auto net = std::make_shared<ScoreNetwork>(ck.network, make_schedule(ck.schedule));
    std::optional<WarmStartRecord> ws;
    if (ck.warm_start.sigma0 > 0.0) ws = ck.warm_start;
    m.predictor = std::make_shared<NetworkPredictor>(net, ck.state.ema.shadow, ws);
    return m;
  }
  m.schedule = schedule_spec_from_json(cfg.at("schedule"));
  m.density = cfg.at("density").get<std::string>();
  m.predictor = analytic_predictor(kind, density_preset(m.density), make_schedule(m.schedule), cfg.at("perturbation"));
  return m;
}

int cmd_eval_nll(const json& in) {
  json cfg = in.at("resolved");
  auto model = load_model(cfg);
  // Record the model's schedule and density so the resolved config is self-describing.
  cfg["schedule"] = to_json(model.schedule);
  cfg["density"] = model.density;
  if (cfg.at("dequant") == "auto")
    cfg["dequant"] = std::holds_alternative<QuantizedGrid>(density_preset(model.density)) ? "tn" : "none";
  if (cfg.at("warm_start").is_null()) {
    auto ws = model.predictor->warm_start();
    if (ws) cfg["warm_start"] = to_json(*ws);
  }
  Run run(in.at("out_dir").get<std::string>(), cfg);
  auto s = make_schedule(model.schedule);
  auto p = density_preset(model.density);
  NllOptions opt;
  opt.n_samples = cfg.at("samples").get<std::size_t>();
  opt.seed = run.stream(1);
  opt.dequant = parse_dequant(cfg.at("dequant").get<std::string>());
  opt.levels = cfg.at("levels").get<int>();
  if (!cfg.at("warm_start").is_null()) opt.warm_start = warm_start_from_json(cfg.at("warm_start"));
  opt.reuse_training_noise = cfg.at("reuse_training_noise").get<bool>();
  opt.dataset_id = model.density;

  std::size_t points = cfg.at("points").get<std::size_t>();
  Matrix data;
  if (opt.dequant != DequantMode::None) {
    const auto* g = std::get_if<QuantizedGrid>(&p);
    if (!g) throw ConfigError("dequantization needs a quantized density");
    if (g->levels != opt.levels) throw ConfigError("levels must match the quantized density");
    data = draw_codes(*g, points, run.stream(0));
  } else {
    data = draw_samples(p, points, run.stream(0));
  }
  auto prop = make_proposal(cfg.at("proposal").get<std::string>(), s);
  auto rep = nll_bound(data, s, *model.predictor, *prop, opt);

  const double D = static_cast<double>(rep.dim);
  auto w = run.csv("nll_points.csv", "vlb-eval-nll/1", {"index", "nats", "bits_per_dim"});
  for (std::size_t i = 0; i < rep.per_point_nats.size(); ++i)
    w.row({std::to_string(i), fmt(rep.per_point_nats[i]),
           fmt((rep.per_point_nats[i] + rep.dequant_offset_nats) / (D * std::numbers::ln2))});
  json j = {{"dataset_id", rep.dataset_id},
            {"seed", rep.seed},
            {"dim", rep.dim},
            {"dequant_mode", to_string(rep.dequant_mode)},
            {"prior_term_nats", rep.prior_term_nats},
            {"dsm_term", {{"mean", rep.dsm_term.mean}, {"variance", rep.dsm_term.variance},
                          {"std_error", rep.dsm_term.std_error}, {"n_samples", rep.dsm_term.n_samples},
                          {"proposal_id", rep.dsm_term.proposal_id}}},
            {"dequant_offset_nats", rep.dequant_offset_nats},
            {"mean_nats", rep.mean_nats},
            {"bits_per_dim", rep.bits_per_dim}};
  run.write_json("nll_report.json", j);
  run.line("eval-nll bits_per_dim=" + fmt(rep.bits_per_dim) + " mean_nats=" + fmt(rep.mean_nats));
  return run.finish(true);
}

// ---------------------------------------------------------------- sample

json sample_defaults() {
  return {{"command", "sample"},
          {"seed", 0},
          {"ckpt", ""},
          {"predictor", "exact"},
          {"perturbation", perturb_defaults()},
          {"density", "gmm2"},
          {"schedule", schedule_defaults()},
          {"T", 1000},
          {"n", 1000}};
}

int cmd_sample(const json& in) {
  json cfg = in.at("resolved");
  auto model = load_model(cfg);
  cfg["schedule"] = to_json(model.schedule);
  cfg["density"] = model.density;
  Run run(in.at("out_dir").get<std::string>(), cfg);
  auto s = make_schedule(model.schedule);
  auto x = ancestral_sample(s, *model.predictor, cfg.at("T").get<std::size_t>(), cfg.at("n").get<std::size_t>(),
                            run.stream(0));
  std::vector<std::string> header;
  for (std::size_t d = 0; d < x.cols; ++d) header.push_back("x" + std::to_string(d));
  auto w = run.csv("samples.csv", "vlb-sample/1", header);
  json mean = json::array(), var = json::array();
  for (std::size_t d = 0; d < x.cols; ++d) {
    RunningStats r;
    for (std::size_t i = 0; i < x.rows; ++i) r.push(x(i, d));
    mean.push_back(r.mean);
    var.push_back(r.variance());
  }
  std::vector<std::string> cells(x.cols);
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t d = 0; d < x.cols; ++d) cells[d] = fmt(x(i, d));
    w.row(cells);
  }
  run.write_json("sample_summary.json", {{"n", x.rows}, {"mean", mean}, {"variance", var}});
  run.line("sample n=" + std::to_string(x.rows) + " mean0=" + fmt(mean[0].get<double>()) +
           " var0=" + fmt(var[0].get<double>()));
  return run.finish(true);
}

// ---------------------------------------------------------------- report

json report_defaults() { return {{"command", "report"}, {"seed", 0}, {"runs", json::array()}}; }

int cmd_report(const json& in) {
  Run run(in.at("out_dir").get<std::string>(), in.at("resolved"));
  auto w = run.csv("report.csv", "vlb-report/1", {"run", "command", "config_hash", "status", "artifacts"});
  bool ok = true;
  json rows = json::array();
  for (const auto& dir : run.cfg().at("runs").get<std::vector<std::string>>()) {
    fs::path d(dir);
    std::string log = read_text((d / "run.log").string());
    std::string command, hash, status = "incomplete";
    std::istringstream ls(log);
    for (std::string l; std::getline(ls, l);) {
      if (l.rfind("command=", 0) == 0) command = l.substr(8);
      if (l.rfind("config_hash=", 0) == 0) hash = l.substr(12);
      if (l.rfind("status=", 0) == 0) status = l.substr(7);
    }
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(d))
      if (e.is_regular_file()) files.push_back(e.path().filename().string());
    std::sort(files.begin(), files.end());
    ok = ok && status == "ok";
    w.row({d.filename().string(), command, hash, status, join(files, ";")});
    rows.push_back({{"run", d.filename().string()}, {"command", command}, {"config_hash", hash}, {"status", status},
                    {"artifacts", files}});
    run.line("report " + d.filename().string() + " " + command + " " + status);
  }
  run.write_json("report.json", {{"runs", rows}});
  return run.finish(ok);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vlb: diffusion likelihood bounds, identities and toy experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "vlb 1.0.0");

  struct Entry {
    std::string name;
    std::string help;
    json (*defaults)();
    int (*run)(const json&);
    CLI::App* app = nullptr;
    Flags f;
  };
  std::vector<std::unique_ptr<Entry>> entries;
  auto add = [&](std::string name, std::string help, json (*d)(), int (*r)(const json&)) {
    auto e = std::make_unique<Entry>();
    e->name = std::move(name);
    e->help = std::move(help);
    e->defaults = d;
    e->run = r;
    e->app = app.add_subcommand(e->name, e->help);
    add_common(e->app, e->f);
    entries.push_back(std::move(e));
    return entries.back().get();
  };

  auto* v = add("verify", "identity batteries: theorem1, second-order, debruijn, decomposition, pointwise", verify_defaults,
                cmd_verify);
  v->app->add_option("--check", v->f.check, "check name, comma list, or all");
  v->app->add_option("--density", v->f.density, "comma list of density presets");
  v->app->add_option("--noise", v->f.noise, "comma list of noise families or all");
  v->app->add_option("--samples,--points", v->f.points, "datapoints for the pointwise check");

  auto* as = add("ablate-schedule", "loss floors and estimator variance across schedules", ablate_schedule_defaults,
                 cmd_ablate_schedule);
  as->app->add_option("--density", as->f.density, "density preset");
  as->app->add_option("--samples", as->f.samples, "Monte Carlo samples per estimate");

  auto* ai = add("ablate-is", "importance-sampling variance report", ablate_is_defaults, cmd_ablate_is);
  ai->app->add_option("--density", ai->f.density, "density preset");
  ai->app->add_option("--proposals", ai->f.proposals, "comma list: uniform-t, designed, designed-alpha2, learned");
  ai->app->add_option("--samples", ai->f.samples, "Monte Carlo samples per repeat");
  ai->app->add_option("--repeats", ai->f.repeats, "paired repeats");
  ai->app->add_option("--steps", ai->f.steps, "learned-proposal fitting steps");
  ai->app->add_option("--batch", ai->f.batch, "learned-proposal batch");
  ai->app->add_option("--predictor", ai->f.predictor, "exact, perturbed or zero");

  auto* tr = add("train", "train the toy score network", train_defaults, cmd_train);
  tr->app->add_option("--density", tr->f.density, "density preset");
  tr->app->add_option("--steps", tr->f.steps, "optimizer steps");
  tr->app->add_option("--batch", tr->f.batch, "minibatch size");
  tr->app->add_option("--samples", tr->f.samples, "training set size");
  tr->app->add_option("--proposal", tr->f.proposal, "eta proposal: uniform-t, designed, designed-alpha2");
  tr->app->add_option("--lr", tr->f.lr, "Adam learning rate");
  tr->app->add_option("--hidden", tr->f.hidden, "comma list of hidden widths");
  tr->app->add_option("--embedding", tr->f.embedding, "raw, fourier or reverse-cdf");
  tr->app->add_option("--noise", tr->f.noise, "warm-start noise family");
  tr->app->add_option("--sigma0", tr->f.sigma0, "warm-start noise scale");
  tr->app->add_option("--ckpt", tr->f.ckpt, "checkpoint to resume from");

  auto* ev = add("eval-nll", "per-datapoint likelihood bound and bits/dim", eval_defaults, cmd_eval_nll);
  ev->app->add_option("--ckpt", ev->f.ckpt, "trained checkpoint");
  ev->app->add_option("--predictor", ev->f.predictor, "network, exact, perturbed or zero");
  ev->app->add_option("--density", ev->f.density, "density preset for analytic predictors");
  ev->app->add_option("--dequant", ev->f.dequant, "auto, none, uniform or tn; auto picks tn for quantized data")->check(CLI::IsMember({"auto", "none", "uniform", "tn"}));
  ev->app->add_option("--samples", ev->f.samples, "Monte Carlo samples per datapoint");
  ev->app->add_option("--points", ev->f.points, "datapoints");
  ev->app->add_option("--proposal", ev->f.proposal, "eta proposal");
  ev->app->add_flag("--reuse-training-noise", ev->f.reuse_noise, "regenerate the training warm-up draw");

  auto* sa = add("sample", "ancestral sampling", sample_defaults, cmd_sample);
  sa->app->add_option("--ckpt", sa->f.ckpt, "trained checkpoint");
  sa->app->add_option("--predictor", sa->f.predictor, "network, exact, perturbed or zero");
  sa->app->add_option("--density", sa->f.density, "density preset for analytic predictors");
  sa->app->add_option("--T", sa->f.T, "reverse steps");
  sa->app->add_option("--n", sa->f.n, "number of samples");

  auto* rp = add("report", "summarize run directories", report_defaults, cmd_report);
  rp->app->add_option("runs", rp->f.inputs, "run directories");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  for (auto& e : entries) {
    if (!e->app->parsed()) continue;
    const auto* a = e->app;
    const auto& f = e->f;
    json cfg;
    try {
      cfg = merge_config(e->defaults(), f);
      if (given(a, "--seed")) cfg["seed"] = f.seed;
      if (cfg.contains("schedule")) apply_schedule_flags(cfg["schedule"], a, f);
      if (cfg.contains("schedules")) {
        if (given(a, "--schedule")) {
          cfg["schedules"] = json::array();
          for (const auto& n : split_list(f.schedule)) cfg["schedules"].push_back(to_json(parse_schedule_name(n)));
        }
        for (auto& sj : cfg["schedules"]) {
          if (given(a, "--family")) sj["family"] = f.family;
          if (given(a, "--a")) sj["a"] = f.a;
          if (given(a, "--eta0")) sj["eta0"] = f.eta0;
          if (given(a, "--eta1")) sj["eta1"] = f.eta1;
        }
      }
      if (e->name == "verify") {
        if (given(a, "--check")) cfg["check"] = f.check;
        if (given(a, "--density")) cfg["densities"] = split_list(f.density);
        if (given(a, "--noise")) cfg["noise"] = split_list(f.noise);
        if (given(a, "--samples")) cfg["points"] = f.points;
      } else if (e->name == "ablate-schedule") {
        if (given(a, "--density")) cfg["density"] = f.density;
        if (given(a, "--samples")) cfg["samples"] = f.samples;
      } else if (e->name == "ablate-is") {
        if (given(a, "--density")) cfg["density"] = f.density;
        if (given(a, "--proposals")) cfg["proposals"] = split_list(f.proposals);
        if (given(a, "--samples")) cfg["samples"] = f.samples;
        if (given(a, "--repeats")) cfg["repeats"] = f.repeats;
        if (given(a, "--steps")) cfg["learned"]["steps"] = f.steps;
        if (given(a, "--batch")) cfg["learned"]["batch"] = f.batch;
        if (given(a, "--predictor")) cfg["predictor"] = f.predictor;
      } else if (e->name == "train") {
        if (given(a, "--density")) cfg["density"] = f.density;
        if (given(a, "--steps")) cfg["steps"] = f.steps;
        if (given(a, "--batch")) cfg["batch"] = f.batch;
        if (given(a, "--samples")) cfg["data_size"] = f.samples;
        if (given(a, "--proposal")) cfg["proposal"] = f.proposal;
        if (given(a, "--lr")) cfg["adam"]["lr"] = f.lr;
        if (given(a, "--hidden")) {
          std::vector<std::size_t> h;
          for (const auto& t : split_list(f.hidden)) h.push_back(std::stoul(t));
          cfg["network"]["hidden"] = h;
        }
        if (given(a, "--embedding")) cfg["network"]["embedding"] = f.embedding;
        if (given(a, "--noise")) cfg["warm_start"]["noise"] = f.noise;
        if (given(a, "--sigma0")) cfg["warm_start"]["sigma0"] = f.sigma0;
        if (given(a, "--ckpt")) cfg["resume"] = f.ckpt;
        cfg["network"]["input_dim"] = dim_of(density_preset(cfg.at("density").get<std::string>()));
        if (!given(a, "--seed") && f.config.empty()) cfg["network"]["seed"] = 0;
        cfg["warm_start"]["seed"] = derive_seed(cfg.at("seed").get<std::uint64_t>(), 7);
      } else if (e->name == "eval-nll" || e->name == "sample") {
        if (given(a, "--ckpt")) cfg["ckpt"] = f.ckpt;
        if (given(a, "--predictor")) cfg["predictor"] = f.predictor;
        if (given(a, "--density")) cfg["density"] = f.density;
        if (e->name == "eval-nll") {
          if (given(a, "--dequant")) cfg["dequant"] = f.dequant;
          if (given(a, "--samples")) cfg["samples"] = f.samples;
          if (given(a, "--points")) cfg["points"] = f.points;
          if (given(a, "--proposal")) cfg["proposal"] = f.proposal;
          if (f.reuse_noise) cfg["reuse_training_noise"] = true;
          if (cfg.at("predictor") == "network" && cfg.at("ckpt") == "" && !given(a, "--ckpt"))
            throw ConfigError("eval-nll with the network predictor needs --ckpt");
        } else {
          if (given(a, "--T")) cfg["T"] = f.T;
          if (given(a, "--n")) cfg["n"] = f.n;
        }
      } else if (e->name == "report") {
        cfg["runs"] = f.inputs;
      }
      if (cfg.contains("schedule")) make_schedule(schedule_spec_from_json(cfg["schedule"]));
    } catch (const Error& err) {
      std::cerr << "usage error: " << err.what() << "\n" << a->help();
      return kExitUsage;
    } catch (const std::exception& err) {
      std::cerr << "usage error: " << err.what() << "\n" << a->help();
      return kExitUsage;
    }

    json in = {{"out_dir", f.out}, {"resolved", cfg}};
    try {
      return e->run(in);
    } catch (const ConfigError& err) {
      std::cerr << "configuration error: " << err.what() << "\n";
      return kExitUsage;
    } catch (const BoundViolation& err) {
      std::cerr << "bound violation: " << err.what() << "\n";
      return kExitViolation;
    } catch (const Error& err) {
      std::cerr << "error: " << err.what() << "\n";
      return kExitViolation;
    } catch (const json::exception& err) {
      std::cerr << "configuration error: " << err.what() << "\n";
      return kExitUsage;
    }
  }
  return kExitUsage;
}
