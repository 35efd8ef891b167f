#include "vqsel/types.hpp"

#include <cmath>

namespace vqsel {

Pooling parse_pooling(const std::string& name) {
  if (name == "mean") return Pooling::kMean;
  if (name == "max") return Pooling::kMax;
  throw Error("unknown pooling method '" + name + "' (expected mean or max)");
}

const char* pooling_name(Pooling p) {
  return p == Pooling::kMean ? "mean" : "max";
}

void FeatureStore::add(VideoRecord rec) {
  if (dim_ == 0) throw Error("feature store: dimension not set");
  if (rec.id.empty()) throw Error("feature store: empty record id");
  if (rec.features.rows() < 1) throw Error("feature store: record '" + rec.id + "' has no frames");
  if (rec.features.cols() != dim_) {
    throw Error("feature store: record '" + rec.id + "' has dimension " +
                std::to_string(rec.features.cols()) + ", store expects " + std::to_string(dim_));
  }
  for (std::size_t i = 0; i < rec.features.data().size(); ++i) {
    if (!std::isfinite(rec.features.data()[i])) {
      throw Error("feature store: non-finite feature value in record '" + rec.id + "'");
    }
  }
  if (rec.mos && !std::isfinite(*rec.mos)) {
    throw Error("feature store: non-finite mos for record '" + rec.id + "'");
  }
  if (rec.base_pred && !std::isfinite(*rec.base_pred)) {
    throw Error("feature store: non-finite base_pred for record '" + rec.id + "'");
  }
  if (!index_.emplace(rec.id, records_.size()).second) {
    throw Error("feature store: duplicate id '" + rec.id + "'");
  }
  records_.push_back(std::move(rec));
}

const VideoRecord* FeatureStore::find(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &records_[it->second];
}

const VideoRecord& FeatureStore::at(const std::string& id) const {
  const VideoRecord* rec = find(id);
  if (!rec) throw Error("feature store: unknown id '" + id + "'");
  return *rec;
}

VideoRecord& FeatureStore::mutable_at(const std::string& id) {
  auto it = index_.find(id);
  if (it == index_.end()) throw Error("feature store: unknown id '" + id + "'");
  return records_[it->second];
}

void FeatureStore::set_mos(const std::string& id, std::optional<double> v) {
  if (v && !std::isfinite(*v)) throw Error("feature store: non-finite mos for record '" + id + "'");
  mutable_at(id).mos = v;
}

void FeatureStore::set_base_pred(const std::string& id, std::optional<double> v) {
  if (v && !std::isfinite(*v)) {
    throw Error("feature store: non-finite base_pred for record '" + id + "'");
  }
  mutable_at(id).base_pred = v;
}

std::vector<double> pool_features(const VideoRecord& rec, Pooling method) {
  const FeatureMatrix& m = rec.features;
  std::vector<double> out(m.cols(), 0.0);
  if (method == Pooling::kMean) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      double sum = 0.0;
      for (std::size_t r = 0; r < m.rows(); ++r) sum += m.at(r, c);
      out[c] = sum / static_cast<double>(m.rows());
    }
  } else {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      double best = m.at(0, c);
      for (std::size_t r = 1; r < m.rows(); ++r) best = std::max(best, static_cast<double>(m.at(r, c)));
      out[c] = best;
    }
  }
  return out;
}

}  // namespace vqsel
