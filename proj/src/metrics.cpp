#include "vqsel/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vqsel {

namespace {

bool is_constant(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(n);
  double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(n);
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double da = a[i] - mean_a;
    double db = b[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a == 0.0 || var_b == 0.0) {
    throw Error("correlation undefined: a series has zero variance");
  }
  return cov / std::sqrt(var_a * var_b);
}

}  // namespace

PairedSeries::PairedSeries(std::vector<double> a_in, std::vector<double> b_in)
    : a(std::move(a_in)), b(std::move(b_in)) {
  if (a.size() != b.size()) throw Error("paired series: lengths differ");
  if (a.size() < 2) throw Error("paired series: need at least 2 points");
  for (double v : a) {
    if (!std::isfinite(v)) throw Error("paired series: non-finite value in series a");
  }
  for (double v : b) {
    if (!std::isfinite(v)) throw Error("paired series: non-finite value in series b");
  }
}

std::vector<double> midranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });

  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    // 1-based ranks i+1 .. j+1 averaged over the tie group
    double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double srcc(const PairedSeries& s) {
  if (is_constant(s.a) || is_constant(s.b)) {
    throw Error("srcc undefined: constant series");
  }
  return pearson(midranks(s.a), midranks(s.b));
}

double plcc(const PairedSeries& s) {
  if (is_constant(s.a) || is_constant(s.b)) {
    throw Error("plcc undefined: zero-variance series");
  }
  return pearson(s.a, s.b);
}

}  // namespace vqsel
