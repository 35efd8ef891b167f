#include "vqsel/diversity.hpp"

#include <cmath>

namespace vqsel {

double chamfer_distance(const FeatureMatrix& fx, const FeatureMatrix& fy) {
  if (fx.rows() == 0 || fy.rows() == 0) throw Error("chamfer: empty frame set");
  if (fx.cols() != fy.cols()) {
    throw Error("chamfer: dimension mismatch (" + std::to_string(fx.cols()) + " vs " +
                std::to_string(fy.cols()) + ")");
  }
  const std::size_t d = fx.cols();

  auto sq_dist = [d](const float* u, const float* v) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      double diff = static_cast<double>(u[k]) - static_cast<double>(v[k]);
      s += diff * diff;
    }
    return s;
  };

  double forward = 0.0;
  for (std::size_t i = 0; i < fx.rows(); ++i) {
    double best = sq_dist(fx.row(i), fy.row(0));
    for (std::size_t j = 1; j < fy.rows(); ++j) best = std::min(best, sq_dist(fx.row(i), fy.row(j)));
    forward += best;
  }
  forward /= static_cast<double>(fx.rows());

  double backward = 0.0;
  for (std::size_t j = 0; j < fy.rows(); ++j) {
    double best = sq_dist(fy.row(j), fx.row(0));
    for (std::size_t i = 1; i < fx.rows(); ++i) best = std::min(best, sq_dist(fy.row(j), fx.row(i)));
    backward += best;
  }
  backward /= static_cast<double>(fy.rows());

  return forward + backward;
}

FeatureMatrix l2_normalized_rows(const FeatureMatrix& m) {
  FeatureMatrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double norm_sq = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) {
      norm_sq += static_cast<double>(m.at(r, c)) * static_cast<double>(m.at(r, c));
    }
    double inv = norm_sq > 0.0 ? 1.0 / std::sqrt(norm_sq) : 1.0;
    for (std::size_t c = 0; c < m.cols(); ++c) {
      out.at(r, c) = static_cast<float>(m.at(r, c) * inv);
    }
  }
  return out;
}

double set_diversity(const std::vector<std::string>& ids, const FeatureStore& store,
                     DistanceCache* cache) {
  if (ids.size() < 2) throw Error("set diversity: need at least 2 ids");
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      if (ids[i] == ids[j]) throw Error("set diversity: duplicate id '" + ids[i] + "'");
    }
  }
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const FeatureMatrix& fi = store.at(ids[i]).features;
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      const FeatureMatrix& fj = store.at(ids[j]).features;
      double dist = cache ? cache->get_or_compute(ids[i], ids[j],
                                                  [&] { return chamfer_distance(fi, fj); })
                          : chamfer_distance(fi, fj);
      sum += dist;
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

}  // namespace vqsel
