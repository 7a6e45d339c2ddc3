#include "pulse/stats.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "pulse/error.hpp"

namespace pulse {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace {

// Lower regularized incomplete gamma by series expansion (x < a + 1).
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized incomplete gamma by modified Lentz continued fraction
// (x >= a + 1).
double gamma_q_cf(double a, double x) {
  constexpr double kTiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_q(double a, double x) {
  if (a <= 0.0) raise(ErrorCode::invalid_argument, "gamma_q requires a > 0");
  if (x < 0.0) raise(ErrorCode::invalid_argument, "gamma_q requires x >= 0");
  if (x == 0.0) return 1.0;
  return x < a + 1.0 ? 1.0 - gamma_p_series(a, x) : gamma_q_cf(a, x);
}

double chi_square_sf(double x, int dof) {
  if (dof < 1) raise(ErrorCode::invalid_argument, "chi_square_sf requires dof >= 1");
  if (x <= 0.0) return 1.0;
  return gamma_q(dof / 2.0, x / 2.0);
}

MwuResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b) {
  MwuResult r;
  const std::size_t n1 = a.size(), n2 = b.size();
  if (n1 == 0 || n2 == 0) {
    r.degenerate = true;
    return r;
  }
  if (n1 < 2 || n2 < 2) r.degenerate = true;

  struct Obs {
    double value;
    bool first_group;
  };
  std::vector<Obs> pool;
  pool.reserve(n1 + n2);
  for (double v : a) pool.push_back({v, true});
  for (double v : b) pool.push_back({v, false});
  std::sort(pool.begin(), pool.end(), [](const Obs& x, const Obs& y) { return x.value < y.value; });

  const double n = static_cast<double>(n1 + n2);
  double rank_sum_a = 0.0;
  double tie_term = 0.0;  // sum of t^3 - t over tie groups
  std::size_t i = 0;
  while (i < pool.size()) {
    std::size_t j = i;
    while (j < pool.size() && pool[j].value == pool[i].value) ++j;
    const double t = static_cast<double>(j - i);
    // Average rank of positions i..j-1, 1-based.
    const double avg_rank = (static_cast<double>(i) + 1.0 + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (pool[k].first_group) rank_sum_a += avg_rank;
    }
    tie_term += t * t * t - t;
    i = j;
  }

  const double dn1 = static_cast<double>(n1), dn2 = static_cast<double>(n2);
  const double u = rank_sum_a - dn1 * (dn1 + 1.0) / 2.0;
  r.u = u;
  r.rank_biserial_r = 1.0 - 2.0 * u / (dn1 * dn2);

  const double mean_u = dn1 * dn2 / 2.0;
  double variance = dn1 * dn2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (variance <= 0.0) {
    // Every pooled value tied: no ordering information.
    r.degenerate = true;
    r.p_two_sided = 1.0;
    return r;
  }
  const double z = std::max(0.0, std::abs(u - mean_u) - 0.5) / std::sqrt(variance);
  r.p_two_sided = std::min(1.0, 2.0 * (1.0 - normal_cdf(z)));
  return r;
}

ChiSquareResult chi_square(const std::vector<double>& counts_a,
                           const std::vector<double>& counts_b) {
  if (counts_a.size() != counts_b.size()) {
    raise(ErrorCode::invalid_argument, "chi_square category lists differ in length");
  }
  ChiSquareResult r;
  double total_a = 0, total_b = 0;
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < counts_a.size(); ++i) {
    if (counts_a[i] < 0 || counts_b[i] < 0) {
      raise(ErrorCode::invalid_argument, "chi_square counts must be non-negative");
    }
    if (counts_a[i] + counts_b[i] > 0) {
      kept.push_back(i);
    } else {
      r.degenerate = true;  // pooled-empty category dropped
    }
  }
  for (std::size_t i : kept) {
    total_a += counts_a[i];
    total_b += counts_b[i];
  }
  if (kept.size() < 2 || total_a == 0 || total_b == 0) {
    r.degenerate = true;
    return r;
  }
  const double total = total_a + total_b;
  double chi2 = 0;
  for (std::size_t i : kept) {
    const double cat_total = counts_a[i] + counts_b[i];
    const double ea = cat_total * total_a / total;
    const double eb = cat_total * total_b / total;
    chi2 += (counts_a[i] - ea) * (counts_a[i] - ea) / ea;
    chi2 += (counts_b[i] - eb) * (counts_b[i] - eb) / eb;
  }
  r.chi2 = chi2;
  r.dof = static_cast<int>(kept.size()) - 1;
  r.p = chi_square_sf(chi2, r.dof);
  return r;
}

json representativeness(const GroupSamples& a, const GroupSamples& b) {
  json out;
  out["continuous"] = json::object();
  out["categorical"] = json::object();

  std::set<std::string> continuous_keys;
  for (const auto& [k, v] : a.continuous) continuous_keys.insert(k);
  for (const auto& [k, v] : b.continuous) continuous_keys.insert(k);
  static const std::vector<double> kEmpty;
  for (const auto& key : continuous_keys) {
    const auto ia = a.continuous.find(key);
    const auto ib = b.continuous.find(key);
    const auto& sa = ia == a.continuous.end() ? kEmpty : ia->second;
    const auto& sb = ib == b.continuous.end() ? kEmpty : ib->second;
    const MwuResult m = mann_whitney_u(sa, sb);
    out["continuous"][key] = {{"u", m.u},
                              {"p", m.p_two_sided},
                              {"rank_biserial_r", m.rank_biserial_r},
                              {"n_a", sa.size()},
                              {"n_b", sb.size()},
                              {"degenerate", m.degenerate}};
  }

  std::set<std::string> categorical_keys;
  for (const auto& [k, v] : a.categorical) categorical_keys.insert(k);
  for (const auto& [k, v] : b.categorical) categorical_keys.insert(k);
  for (const auto& key : categorical_keys) {
    std::set<std::string> categories;
    const auto ia = a.categorical.find(key);
    const auto ib = b.categorical.find(key);
    if (ia != a.categorical.end()) {
      for (const auto& [cat, cnt] : ia->second) categories.insert(cat);
    }
    if (ib != b.categorical.end()) {
      for (const auto& [cat, cnt] : ib->second) categories.insert(cat);
    }
    std::vector<double> counts_a, counts_b;
    std::vector<std::string> order(categories.begin(), categories.end());
    for (const auto& cat : order) {
      auto count_of = [&](const std::map<std::string, std::map<std::string, double>>& side,
                          auto it) {
        if (it == side.end()) return 0.0;
        const auto c = it->second.find(cat);
        return c == it->second.end() ? 0.0 : c->second;
      };
      counts_a.push_back(count_of(a.categorical, ia));
      counts_b.push_back(count_of(b.categorical, ib));
    }
    const ChiSquareResult c = chi_square(counts_a, counts_b);
    out["categorical"][key] = {{"chi2", c.chi2},
                               {"dof", c.dof},
                               {"p", c.p},
                               {"categories", order},
                               {"degenerate", c.degenerate}};
  }
  return out;
}

}  // namespace pulse
