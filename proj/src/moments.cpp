#include "subdrift/moments.hpp"

#include <sstream>

namespace subdrift {

std::uint64_t default_cap(const RateFn& r) {
  constexpr double kMaxCap = 1e7;
  const double t = r.inverse_log(std::log(1e300));
  if (!(t < kMaxCap)) return static_cast<std::uint64_t>(kMaxCap);
  const auto cap = static_cast<std::uint64_t>(std::floor(t));
  if (cap < 1) throw contract_error("rate " + r.label() + " exceeds 1e300 before t = 1");
  return cap;
}

namespace detail {

MomentEstimate summarize_moment(const std::vector<TauDraw>& draws, const RateFn& r,
                                std::uint64_t cap, double flag_censoring) {
  MomentEstimate m;
  m.cap = cap;
  Moments values;
  double tau_sum = 0.0;
  std::uint64_t censored = 0;
  for (const auto& d : draws) {
    if (d.censored) {
      ++censored;
      continue;
    }
    values.push(r(static_cast<double>(d.tau)));
    tau_sum += static_cast<double>(d.tau);
  }
  m.truncated = values.to_estimate();
  m.truncated.replicates = draws.size();
  m.truncated.censored_count = censored;
  const double n = static_cast<double>(draws.size());
  const double observed = n - static_cast<double>(censored);
  m.censored_fraction = static_cast<double>(censored) / n;
  m.mean_tau = observed > 0 ? tau_sum / observed : NAN;
  const double observed_mean = observed > 0 ? m.truncated.mean : 0.0;
  m.censor_lower_bound = (observed_mean * observed + static_cast<double>(censored) *
                                                          r(static_cast<double>(cap))) / n;
  if (m.censored_fraction > flag_censoring) {
    m.flagged = true;
    std::ostringstream os;
    os << "censored fraction " << m.censored_fraction << " exceeds " << flag_censoring
       << " at cap " << cap;
    m.warnings.push_back(os.str());
  }
  if (m.truncated.non_finite_count > 0) {
    m.flagged = true;
    m.warnings.push_back(std::to_string(m.truncated.non_finite_count) +
                         " non-finite R values excluded");
  }
  if (std::abs(m.truncated.mean) > 0 && m.truncated.std_error / std::abs(m.truncated.mean) > 0.5) {
    m.warnings.push_back("heavy tail: std_error exceeds half the mean");
  }
  return m;
}

}  // namespace detail

std::optional<double> loglog_slope(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (x[i] > 0 && y[i] > 0 && std::isfinite(x[i]) && std::isfinite(y[i])) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  if (lx.size() < 2) return std::nullopt;
  const double n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx == 0.0) return std::nullopt;
  return sxy / sxx;
}

void finish_report(MomentReport& rep, double tol) {
  rep.stabilization_tol = tol;
  rep.max_censored_fraction = 0.0;
  bool flagged = false;
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& row : rep.rows) {
    rep.max_censored_fraction = std::max(rep.max_censored_fraction, row.estimate.censored_fraction);
    flagged = flagged || row.estimate.flagged;
    xs.push_back(row.coordinate);
    ys.push_back(row.estimate.truncated.mean);
  }
  rep.loglog_slope = loglog_slope(xs, ys);
  const std::size_t inner = (rep.rows.size() + 1) / 2;
  rep.inner_max_ratio = 0.0;
  rep.outer_max_ratio = 0.0;
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    double& slot = i < inner ? rep.inner_max_ratio : rep.outer_max_ratio;
    slot = std::max(slot, rep.rows[i].bound_ratio);
  }
  if (rep.rows.size() < 2) {
    rep.verdict = Verdict::inconclusive;
    rep.notes.push_back("stabilization needs at least two grid states");
  } else if (flagged) {
    rep.verdict = Verdict::inconclusive;
    rep.notes.push_back("censoring or non-finite values forbid a bound claim");
  } else {
    rep.verdict = rep.outer_max_ratio <= rep.inner_max_ratio * (1.0 + tol) ? Verdict::pass
                                                                          : Verdict::fail;
  }
}

}  // namespace subdrift
