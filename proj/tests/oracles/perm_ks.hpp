#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace oracle {

// Sup distance between the empirical distribution functions of a and b,
// measured after every tie group of the pooled sample.
inline double two_sample_d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("two_sample_d: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() || j < b.size()) {
    double t;
    if (i < a.size() && (j >= b.size() || a[i] <= b[j]))
      t = a[i];
    else
      t = b[j];
    while (i < a.size() && a[i] <= t)
      ++i;
    while (j < b.size() && b[j] <= t)
      ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

namespace detail {

inline double labeled_d(const std::vector<double>& pool, const std::vector<char>& is_a,
                        std::size_t m, std::size_t n) {
  const double dm = static_cast<double>(m);
  const double dn = static_cast<double>(n);
  std::size_t i = 0, ca = 0, cb = 0;
  double d = 0.0;
  while (i < pool.size()) {
    const double t = pool[i];
    while (i < pool.size() && pool[i] == t) {
      if (is_a[i])
        ++ca;
      else
        ++cb;
      ++i;
    }
    d = std::max(d, std::abs(static_cast<double>(ca) / dm - static_cast<double>(cb) / dn));
  }
  return d;
}

inline double binomial_capped(std::size_t n, std::size_t k, double cap) {
  if (k > n)
    return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    r *= static_cast<double>(n - k + i) / static_cast<double>(i);
    if (r > cap)
      return cap * 2.0;
  }
  return r;
}

} // namespace detail

struct PermKsResult {
  double d = 0.0;
  double p = 1.0;
  bool exact = false;
};

// Permutation p-value for the two-sample sup statistic: the fraction of
// label assignments whose D is at least the observed one. Enumerates every
// C(m+n, m) split when that count is small enough, otherwise falls back to
// seeded Monte-Carlo shuffles.
inline PermKsResult permutation_ks(const std::vector<double>& a, const std::vector<double>& b,
                                   std::size_t permutations, std::uint64_t seed = 1) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("permutation_ks: empty sample");
  const std::size_t m = a.size();
  const std::size_t n = b.size();
  const std::size_t N = m + n;
  std::vector<std::pair<double, char>> tagged;
  tagged.reserve(N);
  for (double v : a)
    tagged.emplace_back(v, 1);
  for (double v : b)
    tagged.emplace_back(v, 0);
  std::sort(tagged.begin(), tagged.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  std::vector<double> pool(N);
  std::vector<char> labels(N);
  for (std::size_t i = 0; i < N; ++i) {
    pool[i] = tagged[i].first;
    labels[i] = tagged[i].second;
  }
  PermKsResult out;
  out.d = detail::labeled_d(pool, labels, m, n);
  const double threshold = out.d - 1e-12;
  const double total = detail::binomial_capped(N, m, 250000.0);
  if (total <= 250000.0) {
    out.exact = true;
    std::vector<std::size_t> idx(m);
    for (std::size_t i = 0; i < m; ++i)
      idx[i] = i;
    std::vector<char> lab(N);
    std::size_t hits = 0, count = 0;
    while (true) {
      std::fill(lab.begin(), lab.end(), 0);
      for (std::size_t i : idx)
        lab[i] = 1;
      if (detail::labeled_d(pool, lab, m, n) >= threshold)
        ++hits;
      ++count;
      std::size_t k = m;
      while (k > 0 && idx[k - 1] == N - m + (k - 1))
        --k;
      if (k == 0)
        break;
      ++idx[k - 1];
      for (std::size_t i = k; i < m; ++i)
        idx[i] = idx[i - 1] + 1;
    }
    out.p = static_cast<double>(hits) / static_cast<double>(count);
    return out;
  }
  if (permutations == 0)
    throw std::invalid_argument("permutation_ks: split count too large for exact enumeration");
  std::mt19937_64 rng(seed);
  std::vector<char> lab = labels;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < permutations; ++r) {
    std::shuffle(lab.begin(), lab.end(), rng);
    if (detail::labeled_d(pool, lab, m, n) >= threshold)
      ++hits;
  }
  out.p = static_cast<double>(hits) / static_cast<double>(permutations);
  return out;
}

} // namespace oracle
