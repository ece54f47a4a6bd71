// Command-line front end. Every command prints one JSON report on stdout and
// writes constructed systems and CSV data under --out when given.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "pontryagin/pontryagin.hpp"
#include "system_io.h"

namespace pontryagin {
namespace {

using io::Json;
using io::ReportDocument;

struct Globals {
  double metric_tol = -1.0;
  double rank_tol = -1.0;
  double psd_tol = -1.0;
  int samples = -1;
  long long seed = -1;
  std::string out;
};

class Context {
 public:
  Context(const std::string& command, const Globals& g) : g_(g), report_(command) {
    apply_flags();
  }

  /// Loads a system file; tolerance overrides in its metadata apply unless a
  /// flag sets the same field.
  Colligation load(const std::string& path) {
    const std::string text = io::read_text(path);
    report_.add_input(path, text);
    const io::SystemFile f = io::system_from_json(io::parse_json(text, path), path);
    io::apply_overrides(tol_, f.tolerance_overrides);
    apply_flags();
    return f.system;
  }

  std::vector<Matrix> load_taylor(const std::string& path) {
    report_.add_input(path, io::read_text(path));
    return io::load_taylor(path);
  }

  void save(const std::string& file, const Colligation& s, const std::string& name) {
    if (g_.out.empty()) {
      report_.certificates()["systems"][name] = io::system_to_json(s, name);
      return;
    }
    std::filesystem::create_directories(g_.out);
    const std::string path = (std::filesystem::path(g_.out) / file).string();
    io::save_system(path, s, name);
    report_.add_output(path);
  }

  void save_csv(const std::string& file, const BoundaryReport& b) {
    if (g_.out.empty()) {
      report_.add_note("boundary samples not written; pass --out to get " + file);
      return;
    }
    std::filesystem::create_directories(g_.out);
    const std::string path = (std::filesystem::path(g_.out) / file).string();
    std::ofstream os(path);
    if (!os) throw InputError(path + ": cannot write file");
    write_boundary_csv(b, os);
    report_.add_output(path);
  }

  const Tolerances& tol() const { return tol_; }
  ReportDocument& report() { return report_; }

  std::string finish() {
    report_.set_tolerances(tol_);
    report_.doc["status"] = "ok";
    const std::string text = report_.doc.dump(2) + "\n";
    if (!g_.out.empty()) {
      std::filesystem::create_directories(g_.out);
      io::write_text((std::filesystem::path(g_.out) / "report.json").string(), text);
    }
    return text;
  }

 private:
  void apply_flags() {
    if (g_.metric_tol > 0) tol_.metric_tol = g_.metric_tol;
    if (g_.rank_tol > 0) tol_.rank_tol = g_.rank_tol;
    if (g_.psd_tol > 0) tol_.psd_tol = g_.psd_tol;
    if (g_.samples > 0) {
      tol_.disc_samples = g_.samples;
      tol_.boundary_samples = g_.samples;
    }
    if (g_.seed >= 0) tol_.seed = static_cast<std::uint64_t>(g_.seed);
    tol_.validate();
  }

  Globals g_;
  Tolerances tol_;
  ReportDocument report_;
};

Json negsq_json(const NegativeSquaresEstimate& e) {
  return {{"kappa_hat", e.kappa_hat},   {"pole_multiplicity", e.pole_multiplicity},
          {"stabilized", e.stabilized}, {"agreement", e.agreement},
          {"history", e.history},       {"samples", e.samples}};
}

Json obstruction_json(const ObstructionReport& r) {
  return {{"dimension", r.dimension},
          {"principal_angle_sine", r.agreement},
          {"taylor_orders", r.taylor_orders},
          {"basis", io::to_json(r.basis)}};
}

void cmd_classify(Context& ctx, const std::string& path) {
  const Colligation s = ctx.load(path);
  const Tolerances& tol = ctx.tol();
  const SystemClass c = classify(s, tol);
  const KrylovReport k = krylov_report(s, tol);
  Json& v = ctx.report().verdicts();
  v["kind"] = to_string(c.kind);
  v["passive"] = c.passive();
  v["isometric"] = c.isometric();
  v["coisometric"] = c.coisometric();
  v["conservative"] = c.conservative();
  v["controllable"] = k.controllable;
  v["observable"] = k.observable;
  v["simple"] = k.simple;
  v["minimal"] = k.minimal();
  v["Xc_perp"] = to_string(k.Xc_perp_class);
  v["Xo_perp"] = to_string(k.Xo_perp_class);
  v["Xs_perp"] = to_string(k.Xs_perp_class);
  Json& r = ctx.report().residuals();
  r["isometry"] = c.metric.isometry_residual;
  r["coisometry"] = c.metric.coisometry_residual;
  r["defect_min_eigenvalue"] = c.metric.defect_min_eigenvalue;
  r["dual_min_eigenvalue"] = c.metric.dual_min_eigenvalue;
  ctx.report().certificates()["state"] = {{"pos", s.state().pos}, {"neg", s.state().neg}};
  if (c.passive()) {
    const SimpKarReport sk = simp_kar_check(s, tol);
    v["index_preserving"] = sk.index_preserving;
    v["index_cross_validated"] = sk.cross_validated;
    ctx.report().certificates()["negative_squares"] = negsq_json(sk.negsq);
    if (!sk.cross_validated) {
      throw ConsistencyError("classify: index preservation and negative squares disagree");
    }
  } else {
    v["index_preserving"] = nullptr;
    ctx.report().add_note("index preservation is defined for passive systems only");
  }
}

void cmd_factor_kl(Context& ctx, const std::string& path, const std::string& mode_name) {
  const Colligation s = ctx.load(path);
  const Tolerances& tol = ctx.tol();
  const FactorMode mode = mode_name == "left" ? FactorMode::left : FactorMode::right;
  const SystemFactorization f = kl_factorize_system(s, mode, tol);
  ctx.save("theta.json", f.theta, "theta");
  ctx.save("blaschke_inverse.json", f.blaschke_inverse, "blaschke_inverse");
  ctx.save("product.json", f.product, "product");
  Json& r = ctx.report().residuals();
  r["A"] = f.residual_a;
  r["B"] = f.residual_b;
  r["C"] = f.residual_c;
  r["metric"] = f.residual_metric;
  r["block"] = f.block_residual;
  r["completion"] = f.completion_residual;
  const NegativeSquaresEstimate ns = negative_squares_estimate(TransferFunction(f.theta), tol);
  Json& c = ctx.report().certificates();
  c["mode"] = to_string(mode);
  c["kappa"] = s.kappa();
  c["blaschke_degree"] = f.blaschke_inverse.state_dim();
  c["theta_state_dim"] = f.theta.state_dim();
  c["theta_negative_squares"] = negsq_json(ns);
  c["Z"] = io::to_json(f.Z);
  ctx.report().verdicts()["theta_schur_class"] = ns.stabilized && ns.kappa_hat == 0;
  ctx.report().verdicts()["degree_matches_kappa"] = f.blaschke_inverse.state_dim() == s.kappa();
}

void cmd_product(Context& ctx, const std::string& first, const std::string& second,
                 const std::string& check) {
  const Colligation s1 = ctx.load(first);
  const Colligation s2 = ctx.load(second);
  const Tolerances& tol = ctx.tol();
  const Colligation p = cascade(s1, s2);
  ctx.save("product.json", p, "product");
  ObstructionReport ob;
  if (check == "obs") {
    ob = obstruction_observable(s1, s2, tol);
    ctx.report().verdicts()["observable"] = ob.dimension == 0;
  } else if (check == "cont") {
    ob = obstruction_controllable(s1, s2, tol);
    ctx.report().verdicts()["controllable"] = ob.dimension == 0;
  } else {
    ob = obstruction_simple(s1, s2, tol);
    ctx.report().verdicts()["simple"] = ob.dimension == 0;
  }
  ctx.report().certificates()["obstruction"] = obstruction_json(ob);
  ctx.report().residuals()["transfer_multiplicativity"] = [&] {
    double worst = 0.0;
    const TransferFunction f(p);
    for (cplx z : disc_sample_points(f, std::max(1, tol.disc_samples / 3), tol.seed, tol)) {
      const Matrix t = transfer_eval(s2, z, tol) * transfer_eval(s1, z, tol);
      worst = std::max(worst, spectral_norm(f(z, tol) - t) / std::max(1.0, spectral_norm(t)));
    }
    return worst;
  }();
}

void cmd_negsq(Context& ctx, const std::string& path) {
  const Colligation s = ctx.load(path);
  const NegativeSquaresEstimate e = negative_squares_estimate(TransferFunction(s), ctx.tol());
  ctx.report().certificates()["negative_squares"] = negsq_json(e);
  ctx.report().verdicts()["kappa_hat"] = e.kappa_hat;
  ctx.report().verdicts()["agrees_with_pole_count"] = e.agreement;
  if (e.stabilized && !e.agreement) {
    ctx.report().add_note(
        "kernel inertia and disc-pole multiplicity differ; the function may not be a "
        "generalized Schur function");
  }
}

void cmd_julia_embed(Context& ctx, const std::string& path) {
  const Colligation s = ctx.load(path);
  const Tolerances& tol = ctx.tol();
  JuliaParts parts;
  const Colligation u = julia_embedding(s, tol, &parts);
  ctx.save("embedding.json", u, "julia_embedding");
  const SystemClass c = classify(u, tol);
  ctx.report().verdicts()["embedding_kind"] = to_string(c.kind);
  ctx.report().verdicts()["conservative"] = c.conservative();
  double corner = 0.0;
  const TransferFunction f(s);
  for (cplx z : disc_sample_points(f, std::max(1, tol.disc_samples / 3), tol.seed, tol)) {
    const Matrix big = transfer_eval(u, z, tol);
    const Matrix small = f(z, tol);
    corner = std::max(corner, spectral_norm(big.topLeftCorner(small.rows(), small.cols()) - small));
  }
  ctx.report().residuals()["corner_transfer"] = corner;
  ctx.report().residuals()["julia_unitarity"] = parts.unitarity_residual;
  ctx.report().residuals()["link"] = parts.link_residual;
  ctx.report().certificates()["defect_dim"] = parts.defect_dim();
  ctx.report().certificates()["defect_star_dim"] = parts.defect_star_dim();
  if (!c.conservative() || corner > 1e-9) {
    throw ConsistencyError("julia-embed: embedding is not a conservative extension");
  }
}

Json scalar_rational_json(const ScalarRational& f) {
  Json num = Json::array(), den = Json::array();
  for (Eigen::Index i = 0; i < f.num.size(); ++i) num.push_back({f.num(i).real(), f.num(i).imag()});
  for (Eigen::Index i = 0; i < f.den.size(); ++i) den.push_back({f.den(i).real(), f.den(i).imag()});
  return {{"numerator", num}, {"denominator", den}};
}

void cmd_defect(Context& ctx, const std::string& path) {
  const Colligation s = ctx.load(path);
  const Tolerances& tol = ctx.tol();
  const TransferFunction f(s);
  const BoundaryReport b = boundary_behavior(f, tol);
  ctx.save_csv("boundary.csv", b);
  const DefectResult d = defect(f, tol);
  Json& v = ctx.report().verdicts();
  v["contractive"] = b.contractive;
  v["inner"] = b.inner;
  v["co_inner"] = b.co_inner;
  v["phi_zero"] = d.phi_zero;
  v["psi_zero"] = d.psi_zero;
  Json& r = ctx.report().residuals();
  r["max_sigma"] = b.max_sigma;
  r["max_defect_right"] = d.max_defect_right;
  r["max_defect_left"] = d.max_defect_left;
  if (d.phi) {
    ctx.report().certificates()["phi"] = scalar_rational_json(*d.phi);
    r["phi_fejer_riesz"] = d.phi_residual;
    ctx.report().certificates()["phi_min_root_modulus"] = d.phi_min_root_modulus;
  }
  if (d.psi) {
    ctx.report().certificates()["psi"] = scalar_rational_json(*d.psi);
    r["psi_fejer_riesz"] = d.psi_residual;
    ctx.report().certificates()["psi_min_root_modulus"] = d.psi_min_root_modulus;
  }
  ctx.report().add_note(d.note);
}

void cmd_stability(Context& ctx, const std::string& path) {
  const Colligation s = ctx.load(path);
  const Tolerances& tol = ctx.tol();
  const StabilityClass c = stability_classify(s, tol);
  const BoundaryReport b = boundary_behavior(TransferFunction(s), tol);
  Json& v = ctx.report().verdicts();
  v["classes"] = c.classes();
  v["primary"] = c.primary();
  v["inner"] = b.inner;
  v["co_inner"] = b.co_inner;
  v["bi_inner"] = b.bi_inner;
  ctx.report().certificates()["kappa"] = c.kappa;
  ctx.report().residuals()["rho_plus"] = c.rho_plus;
  ctx.report().residuals()["rho_star_plus"] = c.rho_star_plus;
}

void cmd_realize(Context& ctx, const std::string& path, int order) {
  const std::vector<Matrix> h = ctx.load_taylor(path);
  const Tolerances& tol = ctx.tol();
  const BareRealization r = realize_from_taylor(h, order, tol);
  // The Ho-Kalman output carries no metric; it is saved with a Hilbert state
  // label and classified as such.
  const Colligation s(SignatureSpace(static_cast<int>(r.state_dim()), 0), r.A, r.B, r.C, r.D);
  ctx.save("realization.json", s, "realization");
  double worst = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    worst = std::max(worst, spectral_norm(markov(r, static_cast<int>(k)) - h[k]));
  }
  ctx.report().residuals()["taylor"] = worst;
  ctx.report().certificates()["state_dim"] = r.state_dim();
  ctx.report().verdicts()["hilbert_passive"] = classify(s, tol).passive();
  ctx.report().add_note("state metric of the realization is not identified; the file uses a "
                        "Hilbert label");
}

void cmd_similar(Context& ctx, const std::string& a, const std::string& b,
                 const std::string& kind) {
  const Colligation s1 = ctx.load(a);
  const Colligation s2 = ctx.load(b);
  const Tolerances& tol = ctx.tol();
  std::optional<SimilarityResult> r;
  if (kind == "weak") {
    r = weak_similarity(s1, s2, tol);
  } else {
    SimilarityFailure why;
    r = unitary_similarity(s1, s2, tol, &why);
    if (!r) ctx.report().add_note(why.reason);
  }
  ctx.report().verdicts()[kind] = r.has_value() && r->invertible;
  if (r) {
    Json& res = ctx.report().residuals();
    res["A"] = r->residual_a;
    res["B"] = r->residual_b;
    res["C"] = r->residual_c;
    res["metric_or_condition"] = r->residual_metric;
    ctx.report().certificates()["Z"] = io::to_json(r->Z);
    ctx.report().certificates()["condition"] = r->condition;
  }
}

Colligation inner_from_spec(Context& ctx, const std::string& spec) {
  if (spec == "z") return shift_system();
  const std::string prefix = "blaschke:";
  if (spec.rfind(prefix, 0) == 0) {
    std::istringstream is(spec.substr(prefix.size()));
    double re = 0.0, im = 0.0;
    char comma = 0;
    is >> re;
    if (is.peek() == ',') is >> comma >> im;
    if (!is || std::abs(cplx(re, im)) >= 1.0) {
      throw InputError("--a: expected blaschke:<re>[,<im>] with a zero in the disc");
    }
    return scalar_blaschke(cplx(re, im));
  }
  return ctx.load(spec);
}

void cmd_example_counter(Context& ctx, double alpha, const std::string& a_spec) {
  const Tolerances& tol = ctx.tol();
  if (!(std::abs(alpha) < 1.0)) throw InputError("--alpha must lie in the open disc");
  const Colligation a = inner_from_spec(ctx, a_spec);
  require(a.input_dim() == 1 && a.output_dim() == 1 && a.kappa() == 0,
          "--a must be a scalar Hilbert-state system");
  if (!boundary_behavior(TransferFunction(a), tol).inner) {
    throw InputError("--a must realize an inner function");
  }
  const Colligation s = counterexample_system(alpha, a, tol);
  const CounterexampleReport r = run_counterexample(alpha, a, tol);
  ctx.save("S.json", s, "S");
  ctx.save("sigma_S_l.json", r.sigma_sl, "sigma_S_l");
  ctx.save("sigma_b_inverse.json", r.sigma_binv, "sigma_b_inverse");
  ctx.save("cascade.json", cascade(r.sigma_sl, r.sigma_binv), "cascade");
  Json& c = ctx.report().certificates();
  c["alpha"] = alpha;
  c["a"] = a_spec;
  c["observability_obstruction"] = obstruction_json(r.observable);
  c["controllability_obstruction"] = obstruction_json(r.controllable);
  c["sigma_S_l_state"] = {{"pos", r.sigma_sl.state().pos}, {"neg", r.sigma_sl.state().neg}};
  c["sigma_b_inverse_state"] = {{"pos", r.sigma_binv.state().pos},
                                {"neg", r.sigma_binv.state().neg}};
  c["kernel_rank_S"] = r.rank_s;
  const BoundaryReport b = boundary_behavior(TransferFunction(s), tol);
  Json& v = ctx.report().verdicts();
  v["S_co_inner"] = b.co_inner;
  v["S_inner"] = b.inner;
  v["cascade_observable"] = r.observable.dimension == 0;
  v["adjoint_cascade_controllable"] = r.controllable.dimension == 0;
  v["reproduces_example"] = r.observable.dimension >= 1 && r.controllable.dimension >= 1;
}

int exit_code_for(const std::exception& e) {
  return dynamic_cast<const ConsistencyError*>(&e) ? 1 : 2;
}

std::string error_type(const std::exception& e) {
  if (dynamic_cast<const ConsistencyError*>(&e)) return "ConsistencyError";
  if (dynamic_cast<const DegenerateSubspaceError*>(&e)) return "DegenerateSubspaceError";
  if (dynamic_cast<const InputError*>(&e)) return "InputError";
  if (dynamic_cast<const AmbiguityError*>(&e)) return "AmbiguityError";
  if (dynamic_cast<const PoleProximityError*>(&e)) return "PoleProximityError";
  if (dynamic_cast<const UnsupportedError*>(&e)) return "UnsupportedError";
  return "Error";
}

}  // namespace
}  // namespace pontryagin

int main(int argc, char** argv) {
  using namespace pontryagin;
  CLI::App app{"Passive systems with Pontryagin state spaces"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--tol", g.metric_tol, "operator classification slack (metric_tol)");
  app.add_option("--rank-tol", g.rank_tol, "relative singular-value cutoff");
  app.add_option("--psd-tol", g.psd_tol, "eigenvalue negativity slack");
  app.add_option("--samples", g.samples, "disc and boundary sample count");
  app.add_option("--seed", g.seed, "sample-plan seed");
  app.add_option("--out", g.out, "directory for constructed systems, CSV and report.json");

  std::string path, path2, mode = "right", check = "obs", kind = "unitary", a_spec = "z";
  int order = 0;
  double alpha = 0.5;
  std::string command;

  auto sub = [&](const char* name, const char* help) {
    CLI::App* s = app.add_subcommand(name, help);
    s->callback([&command, name] { command = name; });
    return s;
  };
  CLI::App* c = sub("classify", "metric class, Krylov flags and index preservation");
  c->add_option("system", path)->required();
  c = sub("factor-kl", "Krein-Langer factorization of a system");
  c->add_option("system", path)->required();
  c->add_option("--mode", mode)->check(CLI::IsMember({"right", "left"}));
  c = sub("product", "cascade of two systems (first acts first) with an obstruction check");
  c->add_option("first", path)->required();
  c->add_option("second", path2)->required();
  c->add_option("--check", check)->check(CLI::IsMember({"obs", "cont", "simple"}));
  c = sub("negsq", "negative squares of the transfer function");
  c->add_option("system", path)->required();
  c = sub("julia-embed", "conservative embedding through the Julia operator");
  c->add_option("system", path)->required();
  c = sub("defect", "boundary behavior and defect functions");
  c->add_option("system", path)->required();
  c = sub("stability", "stability classes of a conservative system");
  c->add_option("system", path)->required();
  c = sub("realize", "Ho-Kalman realization from Taylor coefficients");
  c->add_option("taylor", path)->required();
  c->add_option("--order", order, "a-priori order bound")->required();
  c = sub("similar", "unitary or weak similarity of two systems");
  c->add_option("first", path)->required();
  c->add_option("second", path2)->required();
  c->add_option("--kind", kind)->check(CLI::IsMember({"unitary", "weak"}));
  c = sub("example-counter", "non-observable cascade of canonical factors");
  c->add_option("--alpha", alpha);
  c->add_option("--a", a_spec, "z, blaschke:<re>[,<im>] or a system file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    Context ctx(command, g);
    if (command == "classify") cmd_classify(ctx, path);
    else if (command == "factor-kl") cmd_factor_kl(ctx, path, mode);
    else if (command == "product") cmd_product(ctx, path, path2, check);
    else if (command == "negsq") cmd_negsq(ctx, path);
    else if (command == "julia-embed") cmd_julia_embed(ctx, path);
    else if (command == "defect") cmd_defect(ctx, path);
    else if (command == "stability") cmd_stability(ctx, path);
    else if (command == "realize") cmd_realize(ctx, path, order);
    else if (command == "similar") cmd_similar(ctx, path, path2, kind);
    else if (command == "example-counter") cmd_example_counter(ctx, alpha, a_spec);
    std::cout << ctx.finish();
    return 0;
  } catch (const std::exception& e) {
    io::Json err;
    err["command"] = command;
    err["status"] = "error";
    err["error"] = {{"type", error_type(e)}, {"reason", e.what()}};
    std::cout << err.dump(2) << "\n";
    std::cerr << "pontryagin " << command << ": " << e.what() << "\n";
    return exit_code_for(e);
  }
}
