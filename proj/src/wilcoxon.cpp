#include "spinex/wilcoxon.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace spinex {

std::vector<double> average_ranks(std::span<const double> abs_values) {
  const std::size_t n = abs_values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return abs_values[i] < abs_values[j]; });

  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && abs_values[order[j + 1]] == abs_values[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j + 1); // 1-based run [i, j]
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("wilcoxon: length mismatch");
  if (a.size() < 6) throw std::invalid_argument("wilcoxon: need at least 6 pairs");

  std::vector<double> diffs;
  diffs.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d != 0.0) diffs.push_back(d);
  }

  WilcoxonResult res;
  res.n_effective = static_cast<int>(diffs.size());
  if (diffs.empty()) {
    res.exact = true;
    return res; // no evidence against the null
  }

  std::vector<double> absd(diffs.size());
  for (std::size_t i = 0; i < diffs.size(); ++i) absd[i] = std::abs(diffs[i]);
  const std::vector<double> ranks = average_ranks(absd);

  double w_plus = 0.0;
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    if (diffs[i] > 0.0) w_plus += ranks[i];
  }
  res.w_plus = w_plus;

  const int n = res.n_effective;
  const double total = 0.5 * n * (n + 1);
  const double w_min = std::min(w_plus, total - w_plus);

  if (n <= 25) {
    res.exact = true;
    // Ranks with averaged ties are multiples of 1/2, so doubled ranks are
    // integers and the exact distribution is a small subset-sum count.
    std::vector<std::int64_t> doubled(ranks.size());
    std::int64_t sum2 = 0;
    for (std::size_t i = 0; i < ranks.size(); ++i) {
      doubled[i] = std::llround(2.0 * ranks[i]);
      sum2 += doubled[i];
    }
    std::vector<std::uint64_t> count(static_cast<std::size_t>(sum2) + 1, 0);
    count[0] = 1;
    for (const std::int64_t d : doubled) {
      for (std::int64_t s = sum2; s >= d; --s) count[s] += count[s - d];
    }
    const std::int64_t threshold = std::llround(2.0 * w_min);
    std::uint64_t below = 0;
    for (std::int64_t s = 0; s <= threshold; ++s) below += count[s];
    const double p = 2.0 * static_cast<double>(below) / std::ldexp(1.0, n);
    res.p_value = std::min(1.0, p);
  } else {
    const double mu = total / 2.0;
    double tie_term = 0.0;
    std::size_t i = 0;
    std::vector<double> sorted_abs = absd;
    std::sort(sorted_abs.begin(), sorted_abs.end());
    while (i < sorted_abs.size()) {
      std::size_t j = i;
      while (j + 1 < sorted_abs.size() && sorted_abs[j + 1] == sorted_abs[i]) ++j;
      const double t = static_cast<double>(j - i + 1);
      tie_term += t * t * t - t;
      i = j + 1;
    }
    const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if (var <= 0.0) {
      res.p_value = 1.0;
      return res;
    }
    const double z = std::max(0.0, std::abs(w_plus - mu) - 0.5) / std::sqrt(var);
    res.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  }
  if (res.p_value <= 0.0) res.p_value = std::numeric_limits<double>::min();
  return res;
}

} // namespace spinex
