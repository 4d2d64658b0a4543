#include "biagree/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace biagree {

namespace {
[[noreturn]] void shape_error(const char* op, const Array& a, const Array& b) {
  throw std::invalid_argument(std::string("shape mismatch in ") + op + ": " +
                              a.shape_str() + " vs " + b.shape_str());
}
[[noreturn]] void shape_error(const char* op, const Array& a) {
  throw std::invalid_argument(std::string("bad shape in ") + op + ": " +
                              a.shape_str());
}
}  // namespace

int ParamStore::add(const std::string& name, Array value) {
  if (index_.count(name))
    throw std::invalid_argument("duplicate parameter name: " + name);
  int i = static_cast<int>(values_.size());
  index_[name] = i;
  names_.push_back(name);
  values_.push_back(std::move(value));
  return i;
}

int ParamStore::index(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end())
    throw std::invalid_argument("unknown parameter: " + name);
  return it->second;
}

int ParamStore::total_scalars() const {
  int n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

GradMap::GradMap(const ParamStore& store) {
  for (int i = 0; i < store.count(); ++i) {
    names_.push_back(store.name(i));
    index_[store.name(i)] = i;
    values_.push_back(Array::zeros(store.at(i).shape()));
  }
}

const Array& GradMap::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end())
    throw std::invalid_argument("unknown gradient entry: " + name);
  return values_[it->second];
}

void GradMap::add_scaled(const GradMap& other, double scale) {
  if (other.count() != count())
    throw std::invalid_argument("gradient map size mismatch");
  for (int i = 0; i < count(); ++i)
    values_[i].data() += scale * other.values_[i].data();
}

double GradMap::max_abs() const {
  double m = 0;
  for (const auto& v : values_)
    if (v.size() > 0) m = std::max(m, v.data().abs().maxCoeff());
  return m;
}

bool GradMap::all_finite() const {
  for (const auto& v : values_)
    if (!v.all_finite()) return false;
  return true;
}

int Tape::push(Node n) {
  if (!n.value.all_finite())
    throw std::runtime_error("non-finite value produced by tape op");
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::leaf(Array value) {
  Node n;
  n.op = Op::kLeaf;
  n.value = std::move(value);
  return push(std::move(n));
}

int Tape::param(const ParamStore& store, const std::string& name) {
  auto it = param_nodes_.find(name);
  if (it != param_nodes_.end()) return it->second;
  int idx = store.index(name);
  int id = leaf(store.at(idx));
  param_nodes_[name] = id;
  param_leaves_.emplace_back(id, idx);
  return id;
}

int Tape::add(int a, int b) {
  const Array& va = nodes_[a].value;
  const Array& vb = nodes_[b].value;
  if (!va.same_shape(vb)) shape_error("add", va, vb);
  Node n{Op::kAdd, a, b};
  n.value = va;
  n.value.data() += vb.data();
  return push(std::move(n));
}

int Tape::mul(int a, int b) {
  const Array& va = nodes_[a].value;
  const Array& vb = nodes_[b].value;
  if (!va.same_shape(vb)) shape_error("multiply", va, vb);
  Node n{Op::kMul, a, b};
  n.value = va;
  n.value.data() *= vb.data();
  return push(std::move(n));
}

int Tape::matmul(int a, int b) {
  const Array& va = nodes_[a].value;
  const Array& vb = nodes_[b].value;
  if (va.rank() != 2) shape_error("matrix-multiply", va, vb);
  Node n{Op::kMatMul, a, b};
  if (vb.rank() == 2) {
    if (va.cols() != vb.rows()) shape_error("matrix-multiply", va, vb);
    n.value = Array::from_mat(va.mat() * vb.mat());
  } else if (vb.rank() == 1) {
    if (va.cols() != vb.size()) shape_error("matrix-multiply", va, vb);
    n.value = Array::from_vec(va.mat() * vb.vec());
  } else {
    shape_error("matrix-multiply", va, vb);
  }
  return push(std::move(n));
}

int Tape::concat(int a, int b) {
  const Array& va = nodes_[a].value;
  const Array& vb = nodes_[b].value;
  if (va.rank() > 1 || vb.rank() > 1) shape_error("concatenate", va, vb);
  Node n{Op::kConcat, a, b};
  n.value = Array::zeros({va.size() + vb.size()});
  n.value.data().head(va.size()) = va.data();
  n.value.data().tail(vb.size()) = vb.data();
  return push(std::move(n));
}

int Tape::embed_row(int matrix, int row) {
  const Array& vm = nodes_[matrix].value;
  if (vm.rank() != 2 || row < 0 || row >= vm.rows())
    shape_error("embedding-lookup", vm);
  Node n{Op::kEmbedRow, matrix, -1, row};
  n.value = Array::from_vec(vm.mat().row(row).transpose());
  return push(std::move(n));
}

int Tape::tanh_(int a) {
  Node n{Op::kTanh, a};
  n.value = nodes_[a].value;
  n.value.data() = n.value.data().tanh();
  return push(std::move(n));
}

int Tape::sigmoid_(int a) {
  Node n{Op::kSigmoid, a};
  n.value = nodes_[a].value;
  n.value.data() = 1.0 / (1.0 + (-n.value.data()).exp());
  return push(std::move(n));
}

int Tape::softmax(int a) {
  const Array& va = nodes_[a].value;
  if (va.rank() > 2) shape_error("softmax", va);
  Node n{Op::kSoftmax, a};
  n.value = va;
  int ncols = va.rank() == 2 ? va.cols() : va.size();
  int nrows = va.size() / std::max(1, ncols);
  for (int r = 0; r < nrows; ++r) {
    auto seg = n.value.data().segment(r * ncols, ncols);
    seg = (seg - seg.maxCoeff()).exp();
    // Eigen's vectorized exp bottoms out at a denormal instead of 0; flush so
    // heavily masked logits carry exactly zero probability.
    seg = (seg < 1e-300).select(0.0, seg);
    seg /= seg.sum();
  }
  return push(std::move(n));
}

int Tape::log_(int a) {
  Node n{Op::kLog, a};
  n.value = nodes_[a].value;
  n.value.data() = n.value.data().log();
  return push(std::move(n));
}

int Tape::pick(int a, int index) {
  const Array& va = nodes_[a].value;
  if (va.rank() > 1 || index < 0 || index >= va.size())
    shape_error("pick-index", va);
  Node n{Op::kPick, a, -1, index};
  n.value = Array::scalar(va[index]);
  return push(std::move(n));
}

int Tape::sum(int a) {
  Node n{Op::kSum, a};
  n.value = Array::scalar(nodes_[a].value.data().sum());
  return push(std::move(n));
}

int Tape::scale(int x, int s) {
  const Array& vx = nodes_[x].value;
  const Array& vs = nodes_[s].value;
  if (!vs.is_scalar()) shape_error("scalar-scale", vs, vx);
  Node n{Op::kScale, x, s};
  n.value = vx;
  n.value.data() *= vs.as_scalar();
  return push(std::move(n));
}

int Tape::one_minus(int x) {
  int ones = leaf(Array::full(nodes_[x].value.shape(), 1.0));
  return add(ones, scale_const(x, -1.0));
}

GradMap Tape::backward(int root, const ParamStore& store) {
  if (root < 0 || root >= num_nodes())
    throw std::invalid_argument("backward: bad root id");
  if (!nodes_[root].value.is_scalar())
    throw std::invalid_argument("backward: root is not scalar-shaped, shape " +
                                nodes_[root].value.shape_str());
  for (auto& n : nodes_) n.adjoint = Array::zeros(n.value.shape());
  nodes_[root].adjoint.data()[0] = 1.0;

  for (int id = root; id >= 0; --id) {
    Node& n = nodes_[id];
    const Eigen::ArrayXd& g = n.adjoint.data();
    if ((g == 0.0).all()) continue;
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kAdd:
        nodes_[n.a].adjoint.data() += g;
        nodes_[n.b].adjoint.data() += g;
        break;
      case Op::kMul:
        nodes_[n.a].adjoint.data() += g * nodes_[n.b].value.data();
        nodes_[n.b].adjoint.data() += g * nodes_[n.a].value.data();
        break;
      case Op::kMatMul: {
        const Array& va = nodes_[n.a].value;
        const Array& vb = nodes_[n.b].value;
        if (vb.rank() == 2) {
          Eigen::Map<const Mat> G(g.data(), va.rows(), vb.cols());
          nodes_[n.a].adjoint.mat() += G * vb.mat().transpose();
          nodes_[n.b].adjoint.mat() += va.mat().transpose() * G;
        } else {
          Eigen::Map<const Vec> G(g.data(), va.rows());
          nodes_[n.a].adjoint.mat() += G * vb.vec().transpose();
          nodes_[n.b].adjoint.vec() += va.mat().transpose() * G;
        }
        break;
      }
      case Op::kConcat: {
        int na = nodes_[n.a].value.size();
        int nb = nodes_[n.b].value.size();
        nodes_[n.a].adjoint.data() += g.head(na);
        nodes_[n.b].adjoint.data() += g.tail(nb);
        break;
      }
      case Op::kEmbedRow:
        nodes_[n.a].adjoint.mat().row(n.index) += g.matrix().transpose();
        break;
      case Op::kTanh:
        nodes_[n.a].adjoint.data() += g * (1.0 - n.value.data().square());
        break;
      case Op::kSigmoid:
        nodes_[n.a].adjoint.data() +=
            g * n.value.data() * (1.0 - n.value.data());
        break;
      case Op::kSoftmax: {
        const Array& s = n.value;
        int ncols = s.rank() == 2 ? s.cols() : s.size();
        int nrows = s.size() / std::max(1, ncols);
        for (int r = 0; r < nrows; ++r) {
          auto sr = s.data().segment(r * ncols, ncols);
          auto gr = g.segment(r * ncols, ncols);
          double dot = (gr * sr).sum();
          nodes_[n.a].adjoint.data().segment(r * ncols, ncols) +=
              sr * (gr - dot);
        }
        break;
      }
      case Op::kLog:
        nodes_[n.a].adjoint.data() += g / nodes_[n.a].value.data();
        break;
      case Op::kPick:
        nodes_[n.a].adjoint.data()[n.index] += g[0];
        break;
      case Op::kSum:
        nodes_[n.a].adjoint.data() += g[0];
        break;
      case Op::kScale: {
        double s = nodes_[n.b].value.as_scalar();
        nodes_[n.a].adjoint.data() += s * g;
        nodes_[n.b].adjoint.data()[0] += (g * nodes_[n.a].value.data()).sum();
        break;
      }
    }
  }

  GradMap grads(store);
  for (auto [node_id, store_idx] : param_leaves_)
    grads.at(store_idx).data() += nodes_[node_id].adjoint.data();
  return grads;
}

double finite_diff_check(const std::function<double(const ParamStore&)>& fn,
                         const ParamStore& params, const GradMap& analytic,
                         double step) {
  if (step <= 0) throw std::invalid_argument("finite_diff_check: step <= 0");
  ParamStore p = params;
  double max_err = 0;
  for (int i = 0; i < p.count(); ++i) {
    for (int j = 0; j < p.at(i).size(); ++j) {
      double orig = p.at(i)[j];
      p.at(i)[j] = orig + step;
      double fp = fn(p);
      p.at(i)[j] = orig - step;
      double fm = fn(p);
      p.at(i)[j] = orig;
      if (!std::isfinite(fp) || !std::isfinite(fm))
        throw std::runtime_error("finite_diff_check: non-finite function value");
      double central = (fp - fm) / (2 * step);
      double a = analytic.at(i)[j];
      double err = std::abs(a - central) /
                   (std::abs(a) + std::abs(central) + 1e-12);
      max_err = std::max(max_err, err);
    }
  }
  return max_err;
}

}  // namespace biagree
