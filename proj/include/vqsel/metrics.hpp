#pragma once
// Rank and linear correlation used by every evaluation.

#include <vector>

#include "vqsel/types.hpp"

namespace vqsel {

// Two aligned series of n >= 2 finite reals.
struct PairedSeries {
  std::vector<double> a;
  std::vector<double> b;

  PairedSeries(std::vector<double> a_in, std::vector<double> b_in);
};

// Average ranks (midranks), 1-based; ties within a group share the mean rank.
std::vector<double> midranks(const std::vector<double>& v);

// Spearman rank correlation with midrank tie handling, computed as the
// Pearson correlation of the two rank vectors. Constant input is an error.
double srcc(const PairedSeries& s);

// Sample Pearson correlation. Zero variance in either series is an error.
double plcc(const PairedSeries& s);

inline double srcc(const std::vector<double>& a, const std::vector<double>& b) {
  return srcc(PairedSeries(a, b));
}
inline double plcc(const std::vector<double>& a, const std::vector<double>& b) {
  return plcc(PairedSeries(a, b));
}

}  // namespace vqsel
