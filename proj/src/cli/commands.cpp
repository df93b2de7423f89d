#include "subdrift/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <variant>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <yaml-cpp/yaml.h>

#include "subdrift/domproc.hpp"
#include "subdrift/drift.hpp"
#include "subdrift/kernels.hpp"
#include "subdrift/moments.hpp"
#include "subdrift/planner.hpp"
#include "subdrift/wnorm.hpp"

namespace subdrift::cli {

namespace {

using Int = std::int64_t;
using IntKernel = std::variant<BirthDeathKernel, FiniteKernel, IdentityKernel<Int>>;

const std::string kPass = "PASS";
const std::string kFail = "FAIL";
const std::string kInconclusive = "INCONCLUSIVE";
const std::string kOutOfScope = "OUT_OF_SCOPE";
const std::string kDone = "DONE";

double number_in_or(Section& s, const std::string& key, double fallback, double lo, double hi,
                    bool lo_open, bool hi_open) {
  if (!s.has(key)) return s.number(key, fallback);
  return s.number_in(key, lo, hi, lo_open, hi_open);
}

std::string status_of(Verdict v) { return to_string(v); }

std::string status_of(bool pass) { return pass ? kPass : kFail; }

// ---------------------------------------------------------------------------
// Kernels

struct KernelSpec {
  std::string type;
  std::optional<IntKernel> integer;
  std::optional<DomParams> dom;
  json echo;
};

DomParams parse_dom_params(Section s) {
  DomParams p;
  p.beta = s.number_in("beta", 0.0, std::exp(-1.0), true, true);
  p.kappa = s.number_in("kappa", 1.0, INFINITY, false, true);
  if (auto ns = s.maybe_sub("n_star")) {
    const auto family = ns->text("family");
    if (family == "power") {
      p.n_star = NStar::power(ns->number_in("gamma", 0.0, INFINITY, false, true));
    } else if (family == "log-power") {
      p.n_star = NStar::log_power(ns->number_in("gamma", 0.0, INFINITY, true, true));
    } else if (family == "constant") {
      const auto c = ns->integer("value", 1);
      if (c < 1) ns->fail("value", "must be >= 1");
      p.n_star = NStar::constant(c);
    } else {
      ns->fail("family", "expected power, log-power or constant");
    }
    ns->finish();
  }
  s.finish();
  return p;
}

KernelSpec parse_kernel(Section s, const std::string& dir) {
  KernelSpec k;
  k.type = s.text("type");
  if (k.type == "birth-death") {
    const double d = s.number_in("d", 0.0, INFINITY, false, true);
    const double shift = s.number_in("s", 0.0, INFINITY, true, true);
    if (!(shift > 2.0 * d)) s.fail("s", "must exceed 2d so that p(0) > 0");
    std::optional<Int> upper;
    if (s.has("upper")) {
      upper = s.integer("upper");
      if (*upper < 1) s.fail("upper", "must be >= 1");
    } else {
      s.integer("upper", 0);
    }
    k.integer = BirthDeathKernel(d, shift, upper);
  } else if (k.type == "finite") {
    auto file = s.text("file");
    std::filesystem::path p(file);
    if (p.is_relative()) p = std::filesystem::path(dir) / p;
    k.integer = FiniteKernel::from_csv(p.string());
  } else if (k.type == "lazy-birth-death") {
    const Int n = s.integer("states");
    if (n < 2) s.fail("states", "must be >= 2");
    const double up = s.number_in("p_up", 0.0, 1.0, false, false);
    const double down = s.number_in("p_down", 0.0, 1.0, false, false);
    if (up + down > 1.0) s.fail("p_down", "p_up + p_down must be <= 1");
    k.integer = lazy_birth_death(n, up, down);
  } else if (k.type == "swap") {
    k.integer = swap_kernel();
  } else if (k.type == "identity") {
    k.integer = IdentityKernel<Int>{};
  } else if (k.type == "domproc") {
    k.dom = parse_dom_params(std::move(s));
    return k;
  } else {
    s.fail("type", "expected birth-death, finite, lazy-birth-death, swap, identity or domproc");
  }
  s.finish();
  return k;
}

const IntKernel& need_integer(const KernelSpec& k, Section& s, const std::string& key) {
  if (!k.integer) s.fail(key, "this command needs an integer-state kernel, got " + k.type);
  return *k.integer;
}

const FiniteKernel& need_finite(const KernelSpec& k, Section& s, const std::string& key) {
  const auto& ik = need_integer(k, s, key);
  if (!std::holds_alternative<FiniteKernel>(ik)) {
    s.fail(key, "this command needs a finite matrix kernel (finite, lazy-birth-death or swap)");
  }
  return std::get<FiniteKernel>(ik);
}

// ---------------------------------------------------------------------------
// Scale functions, sets, grids, schedules and rates on integer states.

ScaleFunction<Int> parse_int_scale(Section& parent, const std::string& key) {
  auto node = parent.raw(key);
  if (node.IsScalar()) {
    const double c = parent.number(key);
    if (!(c >= 1.0)) parent.fail(key, "a constant scale function must be >= 1");
    return ScaleFunction<Int>::constant(c);
  }
  Section s = parent.sub(key);
  const auto form = s.text("form");
  ScaleFunction<Int> f;
  if (form == "power") {
    const double scale = s.number_in("scale", 0.0, INFINITY, true, true);
    const double shift = s.number("shift", 1.0);
    const double e = s.number_in("exponent", 0.0, INFINITY, false, true);
    if (!(shift >= 1.0)) s.fail("shift", "must be >= 1 so the base is >= 1 on {0, 1, ...}");
    const double ls = std::log(scale);
    f = ScaleFunction<Int>::from_log(
        [ls, shift, e](const Int& x) { return ls + e * std::log(static_cast<double>(x) + shift); },
        describe(scale) + "*(x+" + describe(shift) + ")^" + describe(e));
  } else if (form == "exp") {
    const double scale = s.number_in("scale", 0.0, INFINITY, true, true);
    const double rate = s.number_in("rate", 0.0, INFINITY, false, true);
    const double ls = std::log(scale);
    f = ScaleFunction<Int>::from_log(
        [ls, rate](const Int& x) { return ls + rate * static_cast<double>(x); },
        describe(scale) + "*exp(" + describe(rate) + "x)");
  } else if (form == "table") {
    const auto values = s.numbers("values");
    for (double v : values) {
      if (!(v >= 1.0)) s.fail("values", "every entry must be >= 1");
    }
    f = ScaleFunction<Int>::from_value(
        [values](const Int& x) {
          if (x < 0 || x >= static_cast<Int>(values.size())) {
            throw contract_error("scale table has no entry for state " + std::to_string(x));
          }
          return values[static_cast<std::size_t>(x)];
        },
        "table");
  } else if (form == "constant") {
    const double c = s.number_in("value", 1.0, INFINITY, false, true);
    f = ScaleFunction<Int>::constant(c);
  } else {
    s.fail("form", "expected power, exp, table or constant");
  }
  s.finish();
  return f;
}

Eigen::VectorXd tabulate(const ScaleFunction<Int>& f, Int n) {
  Eigen::VectorXd v(n);
  for (Int i = 0; i < n; ++i) v(i) = f(i);
  return v;
}

StateSet<Int> parse_int_set(Section& parent, const std::string& key) {
  Section s = parent.sub(key);
  StateSet<Int> c;
  int forms = 0;
  if (s.has("upto")) {
    ++forms;
    const Int hi = s.integer("upto");
    c = {[hi](const Int& x) { return x <= hi; }, "{x <= " + std::to_string(hi) + "}"};
  }
  if (s.has("interval")) {
    ++forms;
    const auto iv = s.integers("interval");
    if (iv.size() != 2 || iv[0] > iv[1]) s.fail("interval", "expected [lo, hi] with lo <= hi");
    c = StateSet<Int>::interval(static_cast<double>(iv[0]), static_cast<double>(iv[1]));
  }
  if (s.has("states")) {
    ++forms;
    const auto st = s.integers("states");
    std::set<Int> members(st.begin(), st.end());
    std::string label = "{";
    for (auto x : members) label += (label.size() > 1 ? "," : "") + std::to_string(x);
    c = {[members](const Int& x) { return members.count(x) > 0; }, label + "}"};
  }
  if (s.has("all")) {
    ++forms;
    if (s.flag("all", false)) c = StateSet<Int>::all();
    else c = StateSet<Int>::none();
  }
  if (forms != 1) s.fail_here("give exactly one of upto, interval, states, all");
  s.finish();
  return c;
}

std::vector<Int> parse_int_grid(Section s) {
  std::vector<Int> g;
  if (s.has("states")) {
    g = s.integers("states");
  } else {
    const Int lo = s.integer("lo");
    const Int hi = s.integer("hi");
    if (lo < 0 || hi < lo) s.fail("hi", "need 0 <= lo <= hi");
    const Int per_decade = s.integer("per_decade", 32);
    if (per_decade < 1) s.fail("per_decade", "must be >= 1");
    const Int dense = s.integer("dense_upto", -1);
    std::set<Int> pts;
    for (Int x = lo; x <= std::min(dense, hi); ++x) pts.insert(x);
    // Log-spaced in x + 1.
    const double a = std::log10(static_cast<double>(lo) + 1.0);
    const double b = std::log10(static_cast<double>(hi) + 1.0);
    const Int n = std::max<Int>(2, static_cast<Int>(std::ceil((b - a) * per_decade)) + 1);
    for (Int i = 0; i < n; ++i) {
      const double v = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1)) - 1.0;
      pts.insert(std::clamp<Int>(static_cast<Int>(std::llround(v)), lo, hi));
    }
    g.assign(pts.begin(), pts.end());
  }
  if (g.empty()) s.fail_here("grid is empty");
  s.finish();
  return g;
}

NFn<Int> parse_int_n(Section& parent, const std::string& key) {
  auto node = parent.raw(key);
  if (node.IsScalar()) {
    const Int c = parent.integer(key);
    if (c < 1) parent.fail(key, "must be >= 1");
    return [c](const Int&) { return c; };
  }
  Section s = parent.sub(key);
  const auto form = s.text("form");
  NFn<Int> n;
  if (form == "power") {
    const double scale = s.number_in("scale", 0.0, INFINITY, true, true);
    const double shift = s.number("shift", 1.0);
    const double e = s.number_in("exponent", 0.0, INFINITY, false, true);
    n = [scale, shift, e](const Int& x) {
      return ceil_count(scale * std::pow(static_cast<double>(x) + shift, e));
    };
  } else {
    s.fail("form", "expected power (or give an integer for a constant schedule)");
  }
  s.finish();
  return n;
}

RateSeq parse_seq(Section s) {
  const auto family = s.text("family");
  RateSeq r = RateSeq::constant(1.0);
  if (family == "linear") {
    r = RateSeq::linear(s.number_in("offset", 0.0, INFINITY, false, true));
  } else if (family == "polynomial") {
    r = RateSeq::polynomial(s.number_in("exponent", 0.0, INFINITY, true, true));
  } else if (family == "log-power") {
    r = RateSeq::log_power(s.number_in("alpha", 0.0, INFINITY, true, true));
  } else if (family == "constant") {
    r = RateSeq::constant(s.number_in("value", 0.0, INFINITY, true, true));
  } else {
    s.fail("family", "expected linear, polynomial, log-power or constant");
  }
  s.finish();
  return r;
}

RateFn parse_rate(Section s) {
  const auto family = s.text("family");
  RateFn r = RateFn::power(1.0);
  if (family == "geometric") {
    r = RateFn::geometric(s.number_in("kappa", 1.0, INFINITY, true, true));
  } else if (family == "subgeometric") {
    const double c = s.number_in("c", 0.0, INFINITY, true, true);
    r = RateFn::subgeometric(c, s.number_in("alpha", 0.0, INFINITY, true, true));
  } else if (family == "polynomial") {
    r = make_R({RateFamily::polynomial, 0.0, 0.0, s.number_in("alpha", 0.0, 1.0, true, false)});
  } else if (family == "power") {
    r = RateFn::power(s.number_in("exponent", 0.0, INFINITY, true, true));
  } else if (family == "logarithmic") {
    r = RateFn::logarithmic(s.number_in("alpha", 0.0, INFINITY, true, true));
  } else {
    s.fail("family", "expected geometric, subgeometric, polynomial, power or logarithmic");
  }
  s.finish();
  return r;
}

PhiFamily parse_phi_family(Section& s, const std::string& key) {
  const auto f = s.text(key);
  if (f == "poly") return PhiFamily::poly;
  if (f == "log-power") return PhiFamily::log_power;
  if (f == "near-linear") return PhiFamily::near_linear;
  s.fail(key, "expected poly, log-power or near-linear");
}

McOptions parse_mc(std::optional<Section> s, std::uint64_t seed, int workers) {
  McOptions mc;
  mc.master_seed = seed;
  mc.workers = workers;
  if (!s) return mc;
  mc.replicates = static_cast<std::uint64_t>(s->integer("replicates", 10'000));
  if (mc.replicates < 2) s->fail("replicates", "must be >= 2");
  mc.replicate_budget = static_cast<std::uint64_t>(s->integer("budget", 1'000'000));
  mc.step_budget = s->integer("step_budget", 10'000'000);
  mc.z = s->number("z", 3.0);
  s->finish();
  return mc;
}

EvalMode parse_mode(Section& s) {
  const auto m = s.text("mode", "exact");
  if (m == "exact") return EvalMode::exact;
  if (m == "mc") return EvalMode::mc;
  s.fail("mode", "expected exact or mc");
}

MomentOptions parse_moment_options(Section& s, std::uint64_t seed, int workers) {
  MomentOptions o;
  o.master_seed = seed;
  o.workers = workers;
  o.replicates = static_cast<std::uint64_t>(s.integer("replicates", 10'000));
  if (o.replicates < 2) s.fail("replicates", "must be >= 2");
  const Int cap = s.integer("cap", 0);
  if (cap < 0) s.fail("cap", "must be >= 1 (or 0 for the default)");
  o.cap = static_cast<std::uint64_t>(cap);
  o.stabilization_tol = number_in_or(s, "tolerance", o.stabilization_tol, 0.0, INFINITY, false, true);
  return o;
}

json int_states(std::span<const Int> g) { return json(std::vector<Int>(g.begin(), g.end())); }

// ---------------------------------------------------------------------------
// Plans on integer states

SubsamplePlan<Int> parse_int_plan(Section s) {
  const auto source = s.text("source");
  SubsamplePlan<Int> p;
  if (source == "rate") {
    auto r = parse_seq(s.sub("r"));
    auto v = parse_int_scale(s, "V");
    auto w = parse_int_scale(s, "W");
    const double cc = s.number_in("C_const", 0.0, INFINITY, true, true);
    const double beta = s.number_in("beta", 0.0, 1.0, true, true);
    const double beta_prime = s.number_in("beta_prime", beta, 1.0, true, true);
    const double b = s.number_in("b", 0.0, INFINITY, false, true);
    p = plan_from_rate<Int>(r, v, w, cc, beta, beta_prime, b);
  } else if (source == "catalog") {
    const auto family = parse_phi_family(s, "phi_family");
    const double alpha = s.number_in("alpha", 0.0, INFINITY, true, true);
    auto v = parse_int_scale(s, "V");
    const double c_prime = s.number("c_prime", 1.0);
    const double beta = s.number_in("beta", 0.0, 1.0, true, true);
    const double beta_prime = s.number_in("beta_prime", beta, 1.0, true, true);
    std::optional<double> b;
    if (s.has("b")) b = s.number_in("b", 0.0, INFINITY, false, true);
    else s.number("b", 0.0);
    auto c = parse_int_set(s, "C");
    p = plan_from_catalog<Int>(family, alpha, v, c_prime, beta, beta_prime, b, std::move(c));
  } else if (source == "manual") {
    p.n = parse_int_n(s, "n");
    p.W = parse_int_scale(s, "W");
    p.beta_prime = s.number_in("beta", 0.0, 1.0, true, true);
    p.beta = p.beta_prime;
    if (s.has("b")) p.b = s.number_in("b", 0.0, INFINITY, false, true);
    else s.number("b", 0.0);
    p.C = parse_int_set(s, "C");
    p.provenance.source = PlanSource::manual;
  } else {
    s.fail("source", "expected rate, catalog or manual");
  }
  s.finish();
  return p;
}

json plan_json(const SubsamplePlan<Int>& p, std::span<const Int> grid, json& table) {
  json rows = json::array();
  for (Int x : grid) {
    json r = {{"state", x},
              {"n", detail::checked_count(p.n, x)},
              {"W", number(p.W(x))},
              {"in_C", p.C(x)}};
    rows.push_back(r);
    table.push_back(r);
  }
  return {{"W", p.W.label()},
          {"beta", p.beta},
          {"beta_prime", p.beta_prime},
          {"b", p.b ? json(*p.b) : json(nullptr)},
          {"C", p.C.label},
          {"provenance", to_json(p.provenance)},
          {"rows", rows}};
}

void certificate_table(const DriftCertificate& c, json& table) {
  for (const auto& s : c.checks) table.push_back(to_json(s));
}

// ---------------------------------------------------------------------------
// Commands

struct Ctx {
  const Document& doc;
  Section& root;
  std::uint64_t seed;
  int workers;
};

CommandResult cmd_verify_drift(Ctx& ctx) {
  auto& root = ctx.root;
  auto kernel = parse_kernel(root.sub("kernel"), ctx.doc.directory);
  const EvalMode mode = parse_mode(root);
  const auto mc = parse_mc(root.maybe_sub("mc"), ctx.seed, ctx.workers);
  Section d = root.sub("drift");
  const auto variant = d.text("variant");
  CommandResult out;

  if (kernel.dom) {
    // Dominating process: subsampled drift of W(z, m) = s z^a along the countdown n(z, m) = m.
    if (variant != "subsampled") d.fail("variant", "the dominating process supports the subsampled variant");
    const DomKernel dk(*kernel.dom);
    Section w = d.sub("W");
    const double scale = w.number_in("scale", 1.0, INFINITY, false, true);
    const double alpha = w.number_in("exponent", 0.0, 1.0, true, true);
    w.finish();
    const auto n_form = d.text("n", "countdown");
    if (n_form != "countdown") d.fail("n", "only the countdown schedule n(z,m) = m is supported");
    const auto dc = drift_constants(alpha, dk.params());
    SubsampledDrift<DomState> spec;
    spec.W = ScaleFunction<DomState>::from_log(
        [ls = std::log(scale), alpha](const DomState& x) { return ls + alpha * std::log(x.z); },
        describe(scale) + "*z^" + describe(alpha));
    spec.n = [](const DomState& x) { return x.m; };
    spec.beta = d.has("beta") ? d.number_in("beta", 0.0, 1.0, true, true) : d.number("beta", dc.beta_prime);
    spec.b = d.has("b") ? d.number_in("b", 0.0, INFINITY, false, true) : d.number("b", scale * dc.b_prime);
    spec.C = dk.small_set();
    d.finish();
    Section g = root.sub("grid");
    const auto zs = g.numbers("z");
    const auto m_rule = g.text("m", "fresh");
    if (m_rule != "fresh" && m_rule != "one") g.fail("m", "expected fresh or one");
    g.finish();
    std::vector<DomState> grid;
    for (double z : zs) {
      if (!(z >= dk.params().kappa)) root.fail("grid", "every z must be >= kappa");
      grid.push_back(m_rule == "fresh" ? dk.fresh(z) : DomState{z, 1});
    }
    DriftCertificate cert;
    if (mode == EvalMode::exact) {
      cert = verify_subsampled_closed_form<DomState>(spec, grid, [&](const DomState& x, Int) {
        return scale * jump_power_moment(x.z, alpha, dk.params());
      });
    } else {
      cert = verify_subsampled(dk, spec, std::span<const DomState>(grid), mode, mc);
    }
    out.results = {{"kernel", "domproc"},
                   {"beta_prime", dc.beta_prime},
                   {"b_prime", dc.b_prime},
                   {"certificate", to_json(cert)}};
    certificate_table(cert, out.table);
    out.status = status_of(cert.verdict);
    return out;
  }

  const auto& ik = need_integer(kernel, root, "kernel");
  const auto grid = parse_int_grid(root.sub("grid"));
  DriftCertificate cert;
  json extra = json::object();
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if (variant == "geometric") {
          GeometricDrift<Int> spec{parse_int_scale(d, "V"), d.number_in("beta", 0.0, 1.0, true, true),
                                   d.number_in("b", 0.0, INFINITY, false, true), parse_int_set(d, "C")};
          cert = verify_onestep(k, spec, std::span<const Int>(grid), mode, mc);
        } else if (variant == "phi") {
          PhiDrift<Int> spec;
          spec.V = parse_int_scale(d, "V");
          Section phi = d.sub("phi");
          const double c = phi.number_in("c", 0.0, INFINITY, true, true);
          const double e = phi.number_in("exponent", 0.0, 1.0, true, false);
          phi.finish();
          spec.phi = [c, e](double t) { return c * std::pow(t, e); };
          extra["phi"] = describe(c) + "*t^" + describe(e);
          if (d.has("b")) {
            spec.b = d.number_in("b", 0.0, INFINITY, false, true);
            spec.C = parse_int_set(d, "C");
          } else {
            // Calibrate b and C = {x <= L} with the exact verifier.
            d.number("b", 0.0);
            if constexpr (FiniteSupportKernel<K>) {
              if (mode != EvalMode::exact) d.fail("b", "calibration needs mode exact");
              const auto cal = calibrate_phi_drift(k, spec.V, spec.phi, std::span<const Int>(grid));
              if (!cal) d.fail("b", "the drift fails at the top of the grid; no calibration exists");
              spec.b = cal->b;
              const double level = cal->level;
              spec.C = {[level](const Int& x) { return static_cast<double>(x) <= level; },
                        "{x <= " + describe(level) + "}"};
              extra["calibrated"] = {{"b", cal->b}, {"C_level", cal->level}};
            } else {
              d.fail("b", "calibration needs a kernel with exact expectations");
            }
          }
          cert = verify_onestep(k, spec, std::span<const Int>(grid), mode, mc);
        } else if (variant == "double-control") {
          DoubleControlDrift<Int> spec{parse_int_scale(d, "V"), parse_int_scale(d, "W"),
                                       d.number_in("b", 0.0, INFINITY, false, true),
                                       parse_int_set(d, "C")};
          cert = verify_double_control(k, spec, std::span<const Int>(grid), mode, mc);
        } else if (variant == "subsampled") {
          SubsampledDrift<Int> spec;
          spec.W = parse_int_scale(d, "W");
          spec.n = parse_int_n(d, "n");
          spec.beta = d.number_in("beta", 0.0, 1.0, true, true);
          spec.b = d.number_in("b", 0.0, INFINITY, false, true);
          spec.C = parse_int_set(d, "C");
          cert = verify_subsampled(k, spec, std::span<const Int>(grid), mode, mc);
        } else {
          d.fail("variant", "expected geometric, phi, double-control or subsampled");
        }
      },
      ik);
  d.finish();
  out.results = {{"kernel", kernel.type}, {"grid", int_states(grid)}};
  for (const auto& [k, v] : extra.items()) out.results[k] = v;
  out.results["certificate"] = to_json(cert);
  certificate_table(cert, out.table);
  out.status = status_of(cert.verdict);
  return out;
}

CommandResult cmd_plan_subsample(Ctx& ctx) {
  auto& root = ctx.root;
  auto plan = parse_int_plan(root.sub("plan"));
  const auto grid = parse_int_grid(root.sub("grid"));
  CommandResult out;
  out.results["plan"] = plan_json(plan, grid, out.table);
  out.status = kDone;
  if (auto c = root.maybe_sub("check")) {
    auto r = parse_rate(c->sub("R"));
    CheckOptions opt;
    opt.min_W = number_in_or(*c, "min_W", 1.0, 1.0, INFINITY, false, true);
    const auto which = c->text("case");
    CheckReport rep;
    if (which == "i") {
      rep = check_case_i(r, plan.n, plan.W, std::span<const Int>(grid), opt);
    } else if (which == "ii") {
      rep = check_case_ii(r, plan.n, plan.W, plan.drift_beta(), std::span<const Int>(grid), opt);
    } else {
      c->fail("case", "expected i or ii");
    }
    c->finish();
    out.results["admissibility"] = to_json(rep);
    out.status = status_of(rep.pass);
  }
  if (auto v = root.maybe_sub("verify")) {
    auto kernel = parse_kernel(v->sub("kernel"), ctx.doc.directory);
    const auto& ik = need_integer(kernel, *v, "kernel");
    const EvalMode mode = parse_mode(*v);
    const auto mc = parse_mc(v->maybe_sub("mc"), ctx.seed, ctx.workers);
    if (!plan.b) v->fail_here("the plan needs b to be verified");
    v->finish();
    SubsampledDrift<Int> spec{plan.W, plan.n, plan.drift_beta(), *plan.b, plan.C};
    DriftCertificate cert;
    std::visit([&](const auto& k) { cert = verify_subsampled(k, spec, std::span<const Int>(grid), mode, mc); }, ik);
    out.results["certificate"] = to_json(cert);
    const auto s = status_of(cert.verdict);
    out.status = out.status == kFail || s != kPass ? (out.status == kFail ? kFail : s) : kPass;
  }
  return out;
}

CommandResult cmd_classify_tame(Ctx& ctx) {
  auto& root = ctx.root;
  auto plan = parse_int_plan(root.sub("plan"));
  const double delta = root.number_in("delta", 0.0, 1.0, true, true);
  const auto grid = parse_int_grid(root.sub("grid"));
  const auto v = classify_tame(plan, delta, std::span<const Int>(grid));
  CommandResult out;
  json table = json::array();
  out.results = {{"plan", plan_json(plan, grid, table)}, {"verdict", to_json(v)}};
  for (const auto& w : v.witnesses) out.table.push_back({{"state", w.state}, {"n", w.n}, {"margin", number(w.margin)}});
  out.status = v.is_tame ? kPass : kFail;
  return out;
}

CommandResult cmd_construct_tame(Ctx& ctx) {
  auto& root = ctx.root;
  const double alpha = root.number_in("alpha", 0.0, 1.0, true, true);
  auto v = parse_int_scale(root, "V");
  const double c_scale = root.number_in("c_scale", 0.0, INFINITY, true, true);
  const auto grid = parse_int_grid(root.sub("grid"));
  CommandResult out;
  try {
    auto [plan, verdict] = construct_tame_from_phi<Int>(alpha, v, std::span<const Int>(grid), c_scale);
    json table = json::array();
    out.results = {{"plan", plan_json(plan, grid, out.table)}, {"verdict", to_json(verdict)}};
    out.status = verdict.is_tame ? kPass : kFail;
  } catch (const scope_error& e) {
    out.results = {{"alpha", alpha}, {"out_of_scope", e.what()}};
    out.status = kOutOfScope;
  }
  return out;
}

CommandResult cmd_estimate_moment(Ctx& ctx) {
  auto& root = ctx.root;
  auto kernel = parse_kernel(root.sub("kernel"), ctx.doc.directory);
  auto r = parse_rate(root.sub("R"));
  auto opt = parse_moment_options(root, ctx.seed, ctx.workers);
  CommandResult out;
  MomentEstimate m;
  if (kernel.dom) {
    const DomKernel dk(*kernel.dom);
    Section x = root.sub("x0");
    const double z = x.number_in("z", dk.params().kappa, INFINITY, false, true);
    const Int mm = x.integer("m", 1);
    x.finish();
    const DomState x0{z, mm};
    if (!dk.contains(x0)) root.fail("x0", "not a state of the dominating process");
    root.text("target", "small-set");
    m = estimate_R_moment(dk, x0, dk.small_set(), r, opt);
    out.results = {{"x0", describe(x0)}, {"target", dk.small_set().label}};
  } else {
    const Int x0 = root.integer("x0");
    auto c = parse_int_set(root, "target");
    std::visit([&](const auto& k) {
      if (!k.contains(x0)) root.fail("x0", "outside the state space");
      m = estimate_R_moment(k, x0, c, r, opt);
    }, *kernel.integer);
    out.results = {{"x0", x0}, {"target", c.label}};
  }
  out.results["rate"] = r.label();
  out.results["estimate"] = to_json(m);
  out.table.push_back(to_json(m));
  out.status = m.flagged ? kInconclusive : kDone;
  return out;
}

CommandResult cmd_bound_sweep(Ctx& ctx) {
  auto& root = ctx.root;
  auto kernel = parse_kernel(root.sub("kernel"), ctx.doc.directory);
  const auto& ik = need_integer(kernel, root, "kernel");
  auto plan = parse_int_plan(root.sub("plan"));
  auto r = parse_rate(root.sub("R"));
  auto opt = parse_moment_options(root, ctx.seed, ctx.workers);
  CheckOptions check;
  check.min_W = number_in_or(root, "min_W", 1.0, 1.0, INFINITY, false, true);
  const auto grid = parse_int_grid(root.sub("grid"));
  std::optional<StateSet<Int>> accessible;
  if (root.has("accessible_set")) accessible = parse_int_set(root, "accessible_set");
  else root.flag("accessible_set", false);
  CommandResult out;
  try {
    MomentReport rep;
    std::visit([&](const auto& k) {
      rep = accessible ? accessible_set_experiment(k, plan, r, *accessible, std::span<const Int>(grid), opt, check)
                       : bound_sweep(k, plan, r, std::span<const Int>(grid), opt, check);
    }, ik);
    out.results = {{"report", to_json(rep)}};
    out.table = out.results["report"]["rows"];
    out.status = status_of(rep.verdict);
  } catch (const scope_error& e) {
    out.results = {{"out_of_scope", e.what()}};
    out.status = kOutOfScope;
  }
  return out;
}

std::vector<double> parse_z(Section& s, const std::string& key, double kappa) {
  auto z = s.numbers(key);
  if (z.empty()) s.fail(key, "must not be empty");
  for (double v : z) {
    if (!(v >= kappa)) s.fail(key, "every z must be >= kappa");
  }
  return z;
}

CommandResult cmd_domproc(Ctx& ctx) {
  auto& root = ctx.root;
  const auto params = parse_dom_params(root.sub("params"));
  const auto experiment = root.text("experiment");
  CommandResult out;
  if (experiment == "alpha-beta") {
    const auto betas = root.numbers("betas");
    json rows = json::array();
    std::vector<double> in_domain;
    bool ok = true;
    double prev = INFINITY;
    std::vector<std::pair<double, double>> sorted;
    for (double b : betas) {
      json r = {{"beta", b}};
      try {
        const double a = alpha_beta(b);
        const double residual = std::log1p(-a) - a * std::log(b);
        const double lo = a - 1e-10;
        const double hi = a + 1e-10;
        const bool bracket = (std::log1p(-lo) - lo * std::log(b)) > 0 && (std::log1p(-hi) - hi * std::log(b)) < 0;
        r["alpha_beta"] = a;
        r["residual"] = residual;
        r["bracket_verified"] = bracket;
        ok = ok && std::abs(residual) <= 1e-10 && bracket;
        sorted.push_back({b, a});
      } catch (const scope_error& e) {
        r["domain_error"] = e.what();
      }
      rows.push_back(r);
      out.table.push_back(r);
    }
    std::sort(sorted.begin(), sorted.end());
    bool monotone = true;
    for (const auto& [b, a] : sorted) {
      monotone = monotone && a < prev;
      prev = a;
    }
    out.results = {{"rows", rows}, {"monotone_decreasing", monotone}};
    out.status = status_of(ok && monotone);
  } else if (experiment == "y-tail") {
    const auto us = root.numbers("u");
    const auto samples = static_cast<std::uint64_t>(root.integer("samples", 1'000'000));
    const int points = static_cast<int>(root.integer("v_points", 20));
    const double z = root.number("z", 3.0);
    json checks = json::array();
    bool pass = true;
    std::uint64_t tag = 0;
    for (double u : us) {
      if (!(u >= params.kappa)) root.fail("u", "every u must be >= kappa");
      const auto c = y_tail_check(params, u, samples, points, derive_seed(ctx.seed, tag++), ctx.workers, z);
      json pts = json::array();
      for (const auto& p : c.points) {
        json row = {{"u", u}, {"v", p.v}, {"empirical", p.empirical}, {"exact", p.exact},
                    {"std_error", p.std_error}, {"within", p.within}};
        pts.push_back(row);
        out.table.push_back(row);
      }
      json j = {{"u", u}, {"regime", params.beta * u >= params.kappa ? "beta u >= kappa" : "beta u < kappa"},
                {"samples", c.samples}, {"pass", c.pass}, {"points", pts}};
      if (c.atom) {
        j["atom"] = {{"empirical", c.atom->empirical}, {"exact", c.atom->exact},
                     {"std_error", c.atom->std_error}, {"within", c.atom->within}};
      }
      pass = pass && c.pass;
      checks.push_back(j);
    }
    out.results = {{"checks", checks}};
    out.status = status_of(pass);
  } else if (experiment == "drift") {
    const double alpha = root.number_in("alpha", 0.0, 1.0, true, true);
    const auto zs = parse_z(root, "z", params.kappa);
    const auto reps = static_cast<std::uint64_t>(root.integer("replicates", 100'000));
    const double zt = root.number("z_tolerance", 3.0);
    const auto dc = drift_constants(alpha, params);
    const DomKernel dk(params);
    std::vector<DomState> starts;
    for (double z : zs) starts.push_back(dk.fresh(z));
    const auto rows = drift_sharpness(params, alpha, starts, reps, ctx.seed, ctx.workers, zt);
    json jr = json::array();
    bool pass = true;
    for (const auto& r : rows) {
      json row = {{"z", r.z}, {"m", r.m}, {"in_C", r.in_C}, {"estimate", to_json(r.estimate)},
                  {"exact", r.exact}, {"beta_prime_z_alpha", dc.beta_prime * std::pow(r.z, alpha)},
                  {"z_score", number(r.z_score)}, {"within", r.within}};
      jr.push_back(row);
      out.table.push_back(row);
      pass = pass && r.within;
    }
    out.results = {{"alpha", alpha}, {"beta_prime", dc.beta_prime}, {"b_prime", dc.b_prime}, {"rows", jr}};
    out.status = status_of(pass);
  } else if (experiment == "moments") {
    DomMomentSetup setup;
    setup.params = params;
    const auto which = root.text("case");
    if (which == "i") setup.which = DomMomentCase::polynomial;
    else if (which == "ii") setup.which = DomMomentCase::stretched;
    else if (which == "iii") setup.which = DomMomentCase::geometric;
    else root.fail("case", "expected i, ii or iii");
    if (root.has("alpha")) setup.alpha = root.number("alpha");
    else root.number("alpha", 0.0);
    if (root.has("eta")) setup.eta = root.number("eta");
    else root.number("eta", 0.0);
    const auto zs = parse_z(root, "z", params.kappa);
    auto opt = parse_moment_options(root, ctx.seed, ctx.workers);
    const double max_slope = root.number("max_slope", INFINITY);
    try {
      const auto rep = dom_moment_experiment(setup, zs, opt);
      out.results = to_json(rep);
      out.table = out.results["moments"]["rows"];
      const bool slope_ok = !std::isfinite(max_slope) ||
                            (rep.moments.loglog_slope && *rep.moments.loglog_slope <= max_slope);
      out.results["max_slope"] = number(max_slope);
      out.results["slope_ok"] = slope_ok;
      const bool censor_ok = rep.moments.max_censored_fraction < 0.01;
      out.results["censoring_below_1pct"] = censor_ok;
      out.status = !slope_ok ? kFail : status_of(rep.moments.verdict);
      if (out.status == kPass && !censor_ok) out.status = kInconclusive;
    } catch (const scope_error& e) {
      out.results = {{"out_of_scope", e.what()}};
      out.status = kOutOfScope;
    }
  } else if (experiment == "pathwise") {
    const double alpha = root.number_in("alpha", 0.0, 1.0, true, true);
    const double eta = root.number_in("eta", 0.0, INFINITY, true, true);
    const double w_scale = root.number_in("W_scale", 1.0, INFINITY, false, true);
    const auto zs = parse_z(root, "z", params.kappa);
    const auto paths = static_cast<std::uint64_t>(root.integer("paths", 200));
    const auto cap = static_cast<std::uint64_t>(root.integer("cap", 10'000'000));
    const DomKernel dk(params);
    SubsamplePlan<DomState> plan;
    plan.n = [](const DomState& x) { return x.m; };
    plan.W = ScaleFunction<DomState>::from_log(
        [ls = std::log(w_scale), alpha](const DomState& x) { return ls + alpha * std::log(x.z); },
        describe(w_scale) + "*z^" + describe(alpha));
    plan.C = dk.small_set();
    const auto r = RateFn::power(1.0 / eta);
    std::vector<DomState> starts;
    for (double z : zs) starts.push_back(dk.fresh(z));
    // Case (i) shape and R(n) <= W on the start states and their countdowns.
    std::vector<DomState> grid;
    for (const auto& s : starts) {
      for (Int m = 1; m <= s.m; m = m < 8 ? m + 1 : m * 2) grid.push_back({s.z, m});
      grid.push_back(s);
    }
    const auto adm = check_case_i(r, plan.n, plan.W, std::span<const DomState>(grid));
    const auto rep = pathwise_subadditivity(dk, plan, r, std::span<const DomState>(starts), paths, cap,
                                            ctx.seed, ctx.workers);
    out.results = {{"rate", r.label()}, {"W", plan.W.label()}, {"admissibility", to_json(adm)},
                   {"pathwise", to_json(rep)}};
    out.table.push_back(to_json(rep));
    out.status = rep.violations == 0 && rep.censored == 0 ? kPass
                 : rep.violations > 0                     ? kFail
                                                          : kInconclusive;
  } else {
    root.fail("experiment", "expected alpha-beta, y-tail, drift, moments or pathwise");
  }
  return out;
}

CommandResult cmd_wnorm(Ctx& ctx) {
  auto& root = ctx.root;
  auto kernel = parse_kernel(root.sub("kernel"), ctx.doc.directory);
  const auto& fk = need_finite(kernel, root, "kernel");
  const auto w = tabulate(parse_int_scale(root, "W"), fk.size());
  const auto v = tabulate(parse_int_scale(root, "V"), fk.size());
  const Int n_max = root.integer("n_max");
  if (n_max < 2) root.fail("n_max", "must be >= 2");
  std::vector<std::pair<Int, Int>> pairs;
  {
    auto node = root.raw("pairs");
    if (!node.IsSequence()) root.fail("pairs", "expected a list of [x, x'] pairs");
    for (const auto& p : node) {
      if (!p.IsSequence() || p.size() != 2) root.fail("pairs", "expected a list of [x, x'] pairs");
      pairs.push_back({p[0].as<Int>(), p[1].as<Int>()});
    }
  }
  const bool series = root.flag("include_series", false);
  CommandResult out;
  bool premise = true;
  if (auto dc = root.maybe_sub("double_control")) {
    DoubleControlDrift<Int> spec{ScaleFunction<Int>::from_value([v](const Int& x) { return v(x); }, "V"),
                                 ScaleFunction<Int>::from_value([w](const Int& x) { return w(x); }, "W"),
                                 dc->number_in("b", 0.0, INFINITY, false, true), parse_int_set(*dc, "C")};
    dc->finish();
    std::vector<Int> all(static_cast<std::size_t>(fk.size()));
    std::iota(all.begin(), all.end(), Int{0});
    const auto cert = verify_double_control(fk, spec, std::span<const Int>(all), EvalMode::exact);
    out.results["double_control"] = to_json(cert);
    premise = cert.verdict == Verdict::pass;
  }
  const auto diag = wnorm_difference_diagnostic(fk, w, v, n_max, pairs);
  out.results["diagnostic"] = to_json(diag, series);
  if (root.has("running_sup_x0")) {
    const auto rs = running_sup_diagnostic(fk, w, root.integer("running_sup_x0"), n_max);
    out.results["running_sup"] = {{"x0", rs.x0}, {"sup", rs.sup}, {"growing", rs.growing}};
  } else {
    root.integer("running_sup_x0", 0);
  }
  for (const auto& s : diag.series) {
    out.table.push_back({{"x", s.x}, {"x_prime", s.x_prime}, {"sup_ratio", number(s.sup_ratio)},
                         {"early_max", number(s.early_max)}, {"late_max", number(s.late_max)},
                         {"stabilized", s.stabilized}});
  }
  out.status = !premise ? kFail : status_of(diag.pass);
  return out;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {
      "verify-drift",    "plan-subsample", "classify-tame",      "construct-tame",
      "estimate-moment", "bound-sweep",    "domproc-experiment", "wnorm-diagnostic"};
  return names;
}

int exit_code(const std::string& status) {
  if (status == kPass || status == kDone) return kExitPass;
  return kExitNegative;
}

CommandResult execute(const std::string& command, const Document& doc, int workers) {
  Section root(doc.root, "");
  if (root.has("command")) {
    const auto c = root.text("command");
    if (c != command) root.fail("command", "config is for '" + c + "', not '" + command + "'");
  } else {
    root.text("command", command);
  }
  const auto seed = root.seed("master_seed");
  Ctx ctx{doc, root, seed, workers};
  CommandResult r;
  if (command == "verify-drift") r = cmd_verify_drift(ctx);
  else if (command == "plan-subsample") r = cmd_plan_subsample(ctx);
  else if (command == "classify-tame") r = cmd_classify_tame(ctx);
  else if (command == "construct-tame") r = cmd_construct_tame(ctx);
  else if (command == "estimate-moment") r = cmd_estimate_moment(ctx);
  else if (command == "bound-sweep") r = cmd_bound_sweep(ctx);
  else if (command == "domproc-experiment") r = cmd_domproc(ctx);
  else if (command == "wnorm-diagnostic") r = cmd_wnorm(ctx);
  else throw config_error("unknown command '" + command + "'");
  root.finish();
  return r;
}

namespace {

json versions() {
  return {{"tool", kToolVersion},
          {"compiler", __VERSION__},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"boost", std::to_string(BOOST_VERSION / 100000) + "." + std::to_string(BOOST_VERSION / 100 % 1000)},
          {"json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                       std::to_string(NLOHMANN_JSON_VERSION_MINOR)}};
}

json yaml_to_json(const YAML::Node& n) {
  if (n.IsMap()) {
    json j = json::object();
    for (const auto& kv : n) j[kv.first.as<std::string>()] = yaml_to_json(kv.second);
    return j;
  }
  if (n.IsSequence()) {
    json j = json::array();
    for (const auto& x : n) j.push_back(yaml_to_json(x));
    return j;
  }
  if (n.IsScalar()) {
    if (n.Tag() == "!") return n.Scalar();  // quoted
    std::int64_t i;
    double d;
    bool b;
    if (YAML::convert<std::int64_t>::decode(n, i)) return i;
    if (YAML::convert<double>::decode(n, d)) return number(d);
    if (YAML::convert<bool>::decode(n, b)) return b;
    return n.Scalar();
  }
  return nullptr;
}

}  // namespace

int run(const std::string& command, const RunOptions& opt, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (opt.format != "json" && opt.format != "csv") throw config_error("--format must be json or csv");
    const auto doc = load_document(opt.config_path);
    const auto result = execute(command, doc, opt.workers);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string text;
    if (opt.format == "json") {
      json report = {{"command", command},
                     {"status", result.status},
                     {"config", {{"hash", config_hash(doc.source)},
                                 {"path", opt.config_path},
                                 {"source", doc.source},
                                 {"parsed", yaml_to_json(doc.root)}}},
                     {"results", result.results},
                     {"versions", versions()},
                     {"run", {{"workers", resolve_workers(opt.workers)}, {"wall_seconds", seconds}}}};
      text = report.dump(2) + "\n";
    } else {
      text = to_csv(result.table);
    }
    if (opt.out.empty()) {
      out << text;
    } else {
      std::ofstream f(opt.out, std::ios::binary);
      if (!f) throw config_error("cannot write " + opt.out);
      f << text;
    }
    err << command << ": " << result.status << "\n";
    return exit_code(result.status);
  } catch (const config_error& e) {
    err << "config error: " << e.what() << "\n";
  } catch (const YAML::Exception& e) {
    err << "config error: line " << e.mark.line + 1 << ": " << e.msg << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return kExitError;
}

}  // namespace subdrift::cli
