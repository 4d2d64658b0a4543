#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "biagree/array.hpp"

namespace biagree {

// Named parameter arrays. Names are unique; shapes are fixed at add().
class ParamStore {
 public:
  int add(const std::string& name, Array value);
  bool has(const std::string& name) const { return index_.count(name) > 0; }
  int index(const std::string& name) const;
  int count() const { return static_cast<int>(values_.size()); }
  int total_scalars() const;

  Array& at(int i) { return values_[i]; }
  const Array& at(int i) const { return values_[i]; }
  Array& at(const std::string& name) { return values_[index(name)]; }
  const Array& at(const std::string& name) const { return values_[index(name)]; }
  const std::string& name(int i) const { return names_[i]; }

 private:
  std::vector<std::string> names_;
  std::vector<Array> values_;
  std::map<std::string, int> index_;
};

// Gradient (or any per-parameter quantity) aligned with a ParamStore's order.
class GradMap {
 public:
  GradMap() = default;
  explicit GradMap(const ParamStore& store);

  Array& at(int i) { return values_[i]; }
  const Array& at(int i) const { return values_[i]; }
  const Array& at(const std::string& name) const;
  int count() const { return static_cast<int>(values_.size()); }
  const std::string& name(int i) const { return names_[i]; }

  void add_scaled(const GradMap& other, double scale);
  double max_abs() const;
  bool all_finite() const;

 private:
  std::vector<std::string> names_;
  std::vector<Array> values_;
  std::map<std::string, int> index_;
};

enum class Op {
  kLeaf,
  kAdd,
  kMul,        // elementwise, same shape
  kMatMul,     // (m,k)x(k,n) or (m,k)x(k)
  kConcat,     // rank-1 vectors
  kEmbedRow,   // row of a rank-2 leaf, selected by a fixed index
  kTanh,
  kSigmoid,
  kSoftmax,    // over last axis, rank 1 or 2
  kLog,
  kPick,       // fixed-index element of a rank-1 array
  kSum,
  kScale,      // scalar node times array node
};

// Define-by-run graph. Nodes are created in topological order; backward walks
// the creation order in reverse.
class Tape {
 public:
  struct Node {
    Op op = Op::kLeaf;
    int a = -1, b = -1;
    int index = 0;  // EmbedRow / Pick
    Array value;
    Array adjoint;  // allocated lazily in backward
  };

  int leaf(Array value);
  int constant(double v) { return leaf(Array::scalar(v)); }
  // Leaf bound to a named parameter; cached so each parameter appears once.
  int param(const ParamStore& store, const std::string& name);

  int add(int a, int b);
  int mul(int a, int b);
  int matmul(int a, int b);
  int concat(int a, int b);
  int embed_row(int matrix, int row);
  int tanh_(int a);
  int sigmoid_(int a);
  int softmax(int a);
  int log_(int a);
  int pick(int a, int index);
  int sum(int a);
  int scale(int x, int s);

  int scale_const(int x, double c) { return scale(x, constant(c)); }
  int one_minus(int x);
  int add3(int a, int b, int c) { return add(add(a, b), c); }

  const Array& value(int id) const { return nodes_[id].value; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }

  // d(root)/d(params). root must be scalar-shaped. Parameters not reachable
  // from root get zero gradient.
  GradMap backward(int root, const ParamStore& store);

 private:
  int push(Node n);
  std::vector<Node> nodes_;
  std::map<std::string, int> param_nodes_;  // name -> node id
  std::vector<std::pair<int, int>> param_leaves_;  // (node id, store index)
};

// Max over parameter scalars of |analytic - central difference| relative
// error, with the central difference of fn taken at the given step.
double finite_diff_check(const std::function<double(const ParamStore&)>& fn,
                         const ParamStore& params, const GradMap& analytic,
                         double step);

}  // namespace biagree
