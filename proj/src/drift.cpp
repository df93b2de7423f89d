#include "subdrift/drift.hpp"

namespace subdrift {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "PASS";
    case Verdict::fail: return "FAIL";
    case Verdict::inconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

const char* to_string(EvalMode m) { return m == EvalMode::exact ? "exact" : "mc"; }

Verdict combine(Verdict a, Verdict b) {
  if (a == Verdict::fail || b == Verdict::fail) return Verdict::fail;
  if (a == Verdict::inconclusive || b == Verdict::inconclusive) return Verdict::inconclusive;
  return Verdict::pass;
}

namespace {

std::vector<std::string> states_with(const DriftCertificate& c, Verdict v) {
  std::vector<std::string> out;
  for (const auto* track : {&c.checks, &c.secondary}) {
    for (const auto& s : *track) {
      if (s.verdict == v) out.push_back(s.state);
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> DriftCertificate::failing_states() const {
  return states_with(*this, Verdict::fail);
}

std::vector<std::string> DriftCertificate::inconclusive_states() const {
  return states_with(*this, Verdict::inconclusive);
}

void require_concave_increasing_positive(const std::function<double(double)>& phi, double t_max) {
  if (!phi) throw contract_error("phi is not set");
  const double hi = std::max(t_max, 10.0);
  const int n = std::max(8, static_cast<int>(std::ceil(std::log10(hi) * 32.0)) + 1);
  std::vector<double> t(static_cast<std::size_t>(n));
  std::vector<double> f(t.size());
  for (int i = 0; i < n; ++i) {
    t[static_cast<std::size_t>(i)] = std::pow(hi, static_cast<double>(i) / (n - 1));
    f[static_cast<std::size_t>(i)] = phi(t[static_cast<std::size_t>(i)]);
  }
  if (!(f[0] > 0.0)) throw contract_error("phi must be positive on [1, inf): phi(1) = " + describe(f[0]));
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double tol = 1e-8 * std::max(1.0, std::abs(f[i]));
    if (!std::isfinite(f[i]) || f[i] < f[i - 1] - tol) {
      throw contract_error("phi must be increasing: fails near t = " + describe(t[i]));
    }
    if (i + 1 < t.size()) {
      const double s0 = (f[i] - f[i - 1]) / (t[i] - t[i - 1]);
      const double s1 = (phi(t[i + 1]) - f[i]) / (t[i + 1] - t[i]);
      if (s1 > s0 + 1e-8 * std::max({std::abs(s0), std::abs(s1), 1e-300})) {
        throw contract_error("phi must be concave: fails near t = " + describe(t[i]));
      }
    }
  }
}

}  // namespace subdrift
