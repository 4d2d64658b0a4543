#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace biagree {

using Vec = Eigen::VectorXd;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense row-major array of doubles with an explicit shape. Rank 0..2 is all
// the model needs; no broadcasting.
class Array {
 public:
  Array() = default;
  explicit Array(std::vector<int> shape);

  static Array zeros(std::vector<int> shape);
  static Array full(std::vector<int> shape, double v);
  static Array scalar(double v);
  static Array from_vec(const Vec& v);
  static Array from_mat(const Mat& m);

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int size() const { return static_cast<int>(data_.size()); }
  bool is_scalar() const { return size() == 1; }
  bool same_shape(const Array& o) const { return shape_ == o.shape_; }

  // rank-2 accessors
  int rows() const { return shape_.at(0); }
  int cols() const { return shape_.at(1); }

  double& operator[](int i) { return data_[i]; }
  double operator[](int i) const { return data_[i]; }
  double as_scalar() const;

  Eigen::ArrayXd& data() { return data_; }
  const Eigen::ArrayXd& data() const { return data_; }

  Eigen::Map<Vec> vec() { return {data_.data(), data_.size()}; }
  Eigen::Map<const Vec> vec() const { return {data_.data(), data_.size()}; }
  Eigen::Map<Mat> mat();
  Eigen::Map<const Mat> mat() const;

  bool all_finite() const { return data_.isFinite().all(); }
  std::string shape_str() const;

 private:
  std::vector<int> shape_;
  Eigen::ArrayXd data_;
};

}  // namespace biagree
