#include "biagree/array.hpp"

#include <numeric>
#include <sstream>
#include <stdexcept>

namespace biagree {

namespace {
int shape_size(const std::vector<int>& shape) {
  int n = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("negative extent in shape");
    n *= d;
  }
  return n;
}
}  // namespace

Array::Array(std::vector<int> shape) : shape_(std::move(shape)) {
  data_ = Eigen::ArrayXd::Zero(shape_size(shape_));
}

Array Array::zeros(std::vector<int> shape) { return Array(std::move(shape)); }

Array Array::full(std::vector<int> shape, double v) {
  Array a(std::move(shape));
  a.data_.setConstant(v);
  return a;
}

Array Array::scalar(double v) {
  Array a(std::vector<int>{});
  a.data_[0] = v;
  return a;
}

Array Array::from_vec(const Vec& v) {
  Array a({static_cast<int>(v.size())});
  a.data_ = v.array();
  return a;
}

Array Array::from_mat(const Mat& m) {
  Array a({static_cast<int>(m.rows()), static_cast<int>(m.cols())});
  a.mat() = m;
  return a;
}

double Array::as_scalar() const {
  if (!is_scalar()) throw std::invalid_argument("as_scalar on shape " + shape_str());
  return data_[0];
}

Eigen::Map<Mat> Array::mat() {
  if (rank() != 2) throw std::invalid_argument("mat() on shape " + shape_str());
  return {data_.data(), shape_[0], shape_[1]};
}

Eigen::Map<const Mat> Array::mat() const {
  if (rank() != 2) throw std::invalid_argument("mat() on shape " + shape_str());
  return {data_.data(), shape_[0], shape_[1]};
}

std::string Array::shape_str() const {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << ",";
    os << shape_[i];
  }
  os << ")";
  return os.str();
}

}  // namespace biagree
