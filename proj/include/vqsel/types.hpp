#pragma once
// Core domain types: frame-level feature matrices, video records, and the
// validated feature store every other module works against.

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace vqsel {

// Domain error; surfaces as a nonzero CLI exit with the message on stderr.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Per-id score map. std::map so iteration order is always deterministic.
using ScoreMap = std::map<std::string, double>;

// Row-major T x d matrix of 32-bit floats; rows are frames.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0f) {}
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<float> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) throw Error("feature matrix: data size does not match shape");
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  float& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  float at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  const float* row(std::size_t r) const { return data_.data() + r * cols_; }

  std::vector<float>& data() { return data_; }
  const std::vector<float>& data() const { return data_; }

  bool operator==(const FeatureMatrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

// One video: identity, frame features, optional human score, optional base
// model prediction.
struct VideoRecord {
  std::string id;
  FeatureMatrix features;            // T x d, T >= 1
  std::optional<double> mos;         // mean opinion score, any finite scale
  std::optional<double> base_pred;   // base model output f(x)

  bool operator==(const VideoRecord& o) const {
    return id == o.id && features == o.features && mos == o.mos && base_pred == o.base_pred;
  }
};

enum class Pooling { kMean, kMax };

Pooling parse_pooling(const std::string& name);
const char* pooling_name(Pooling p);

// Ordered collection of records with unique ids and a common feature
// dimension. Immutable in spirit after loading; score attachment is the one
// sanctioned mutation.
class FeatureStore {
 public:
  FeatureStore() = default;
  explicit FeatureStore(std::size_t dim) : dim_(dim) {
    if (dim_ == 0) throw Error("feature store: dimension must be >= 1");
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  // Validates shape, finiteness and id uniqueness.
  void add(VideoRecord rec);

  const VideoRecord& operator[](std::size_t i) const { return records_[i]; }
  const VideoRecord* find(const std::string& id) const;
  const VideoRecord& at(const std::string& id) const;
  bool contains(const std::string& id) const { return index_.count(id) != 0; }

  void set_mos(const std::string& id, std::optional<double> v);
  void set_base_pred(const std::string& id, std::optional<double> v);

  std::vector<VideoRecord>::const_iterator begin() const { return records_.begin(); }
  std::vector<VideoRecord>::const_iterator end() const { return records_.end(); }

  bool operator==(const FeatureStore& o) const {
    return dim_ == o.dim_ && records_ == o.records_;
  }

 private:
  VideoRecord& mutable_at(const std::string& id);

  std::size_t dim_ = 0;
  std::vector<VideoRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Per-dimension mean or max over the frame axis; returns a d-vector.
std::vector<double> pool_features(const VideoRecord& rec, Pooling method);

}  // namespace vqsel
