// Copyright 2026 The sdvsum Authors
// SPDX-License-Identifier: Apache-2.0

// Dense matrices with tape-based reverse-mode differentiation.
//
// Everything is templated on the scalar type. Production code runs in float;
// gradient checks instantiate the same code in double so central differences
// are not drowned by rounding.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sdvsum/errors.hpp"

namespace sdvsum {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Matrix = Mat<float>;

std::string shape_str(Eigen::Index rows, Eigen::Index cols);

template <typename Derived>
std::string shape_str(const Eigen::EigenBase<Derived>& m) {
  return shape_str(m.rows(), m.cols());
}

// Seeded generator. Streams for distinct purposes are derived from one master
// seed by label ("init", "dropout", "data", "shuffle"), so e.g. changing the
// batch order never perturbs initialization.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  static Rng stream(std::uint64_t master_seed, std::string_view label);

  Rng derive(std::string_view label) const;
  Rng derive(std::uint64_t index) const;

  std::uint64_t seed() const noexcept { return seed_; }

  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  double normal();
  bool bernoulli(double p);
  // Uniform integer in [lo, hi].
  std::int64_t integer(std::int64_t lo, std::int64_t hi);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

template <typename Scalar>
class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
template <typename Scalar>
class Var {
 public:
  Var() = default;

  Tape<Scalar>& tape() const { return *tape_; }
  std::size_t index() const noexcept { return index_; }
  bool valid() const noexcept { return tape_ != nullptr; }

  const Mat<Scalar>& value() const { return tape_->value(index_); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }

 private:
  friend class Tape<Scalar>;
  Var(Tape<Scalar>* tape, std::size_t index) : tape_(tape), index_(index) {}

  Tape<Scalar>* tape_ = nullptr;
  std::size_t index_ = 0;
};

// Result of a backward pass: d(loss)/d(parameter), keyed by the parameter
// storage that was registered with Tape::param.
template <typename Scalar>
class Gradients {
 public:
  const Mat<Scalar>* find(const Mat<Scalar>& param) const {
    auto it = grads_.find(&param);
    return it == grads_.end() ? nullptr : &it->second;
  }

  const Mat<Scalar>& of(const Mat<Scalar>& param) const {
    const auto* g = find(param);
    if (g == nullptr) throw std::out_of_range("parameter was not recorded on the tape");
    return *g;
  }

  std::size_t size() const noexcept { return grads_.size(); }

 private:
  friend class Tape<Scalar>;
  std::unordered_map<const Mat<Scalar>*, Mat<Scalar>> grads_;
};

template <typename Scalar>
class Tape {
 public:
  using MatrixType = Mat<Scalar>;
  using VarType = Var<Scalar>;
  // Called during the reverse sweep with the index of the node being
  // differentiated; reads tape.grad(self) and accumulates into its inputs.
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  VarType constant(MatrixType value) {
    Node n;
    n.owned = std::move(value);
    nodes_.push_back(std::move(n));
    return VarType(this, nodes_.size() - 1);
  }

  // Registers trainable storage by reference; `value` must outlive the tape.
  VarType param(const MatrixType& value) {
    Node n;
    n.external = &value;
    n.requires_grad = true;
    n.is_param = true;
    nodes_.push_back(std::move(n));
    return VarType(this, nodes_.size() - 1);
  }

  // Appends an operation node. `backward` is dropped when no input needs a
  // gradient.
  VarType record(MatrixType value, std::initializer_list<VarType> inputs, BackwardFn backward) {
    return record(std::move(value), std::span<const VarType>(inputs.begin(), inputs.size()),
                  std::move(backward));
  }

  VarType record(MatrixType value, std::span<const VarType> inputs, BackwardFn backward) {
    Node n;
    n.owned = std::move(value);
    for (const auto& in : inputs) {
      if (in.tape_ != this) throw std::invalid_argument("operand belongs to a different tape");
      n.requires_grad = n.requires_grad || nodes_[in.index_].requires_grad;
    }
    if (n.requires_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return VarType(this, nodes_.size() - 1);
  }

  const MatrixType& value(std::size_t i) const {
    const Node& n = nodes_[i];
    return n.external != nullptr ? *n.external : n.owned;
  }

  bool requires_grad(std::size_t i) const { return nodes_[i].requires_grad; }

  // Gradient accumulator of node i. Only meaningful during/after backward.
  MatrixType& grad(std::size_t i) { return nodes_[i].grad; }
  const MatrixType& grad(VarType v) const { return nodes_[v.index_].grad; }

  std::size_t size() const noexcept { return nodes_.size(); }

  // Reverse sweep from a 1x1 loss. Accumulators are zeroed first, so calling
  // this twice yields the same result.
  Gradients<Scalar> backward(VarType loss) {
    if (loss.tape_ != this) throw std::invalid_argument("loss belongs to a different tape");
    const MatrixType& lv = value(loss.index_);
    if (lv.rows() != 1 || lv.cols() != 1) {
      throw DimensionError("backward needs a 1x1 loss, got " + shape_str(lv));
    }
    if (!std::isfinite(static_cast<double>(lv(0, 0)))) {
      throw NumericError("loss is not finite");
    }
    for (std::size_t i = 0; i <= loss.index_; ++i) {
      Node& n = nodes_[i];
      if (n.requires_grad) {
        const MatrixType& v = value(i);
        n.grad.setZero(v.rows(), v.cols());
      } else {
        n.grad.resize(0, 0);
      }
    }
    Gradients<Scalar> out;
    if (!nodes_[loss.index_].requires_grad) return out;
    nodes_[loss.index_].grad(0, 0) = Scalar(1);
    for (std::size_t i = loss.index_ + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.requires_grad) continue;
      if (n.backward) n.backward(*this, i);
      if (n.is_param) {
        auto [it, inserted] = out.grads_.try_emplace(n.external, n.grad);
        if (!inserted) it->second += n.grad;
      }
    }
    return out;
  }

 private:
  friend class Var<Scalar>;

  struct Node {
    MatrixType owned;
    const MatrixType* external = nullptr;
    MatrixType grad;
    BackwardFn backward;
    bool requires_grad = false;
    bool is_param = false;
  };

  std::vector<Node> nodes_;
};

namespace detail {

template <typename Scalar>
void require_same_tape(const Var<Scalar>& a, const Var<Scalar>& b) {
  if (&a.tape() != &b.tape()) throw std::invalid_argument("operands belong to different tapes");
}

}  // namespace detail

template <typename Scalar>
Var<Scalar> matmul(Var<Scalar> a, Var<Scalar> b) {
  detail::require_same_tape(a, b);
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw DimensionError("matmul: " + shape_str(av) + " x " + shape_str(bv));
  }
  Mat<Scalar> c = av * bv;
  const std::size_t ia = a.index(), ib = b.index();
  return a.tape().record(std::move(c), {a, b}, [ia, ib](Tape<Scalar>& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (t.requires_grad(ia)) t.grad(ia).noalias() += g * t.value(ib).transpose();
    if (t.requires_grad(ib)) t.grad(ib).noalias() += t.value(ia).transpose() * g;
  });
}

template <typename Scalar>
Var<Scalar> transpose(Var<Scalar> a) {
  const std::size_t ia = a.index();
  return a.tape().record(a.value().transpose(), {a}, [ia](Tape<Scalar>& t, std::size_t self) {
    t.grad(ia) += t.grad(self).transpose();
  });
}

// Elementwise sum. `b` may also be a 1 x cols row that is broadcast over rows.
template <typename Scalar>
Var<Scalar> add(Var<Scalar> a, Var<Scalar> b) {
  detail::require_same_tape(a, b);
  const auto& av = a.value();
  const auto& bv = b.value();
  const std::size_t ia = a.index(), ib = b.index();
  if (av.rows() == bv.rows() && av.cols() == bv.cols()) {
    return a.tape().record(av + bv, {a, b}, [ia, ib](Tape<Scalar>& t, std::size_t self) {
      if (t.requires_grad(ia)) t.grad(ia) += t.grad(self);
      if (t.requires_grad(ib)) t.grad(ib) += t.grad(self);
    });
  }
  if (bv.rows() == 1 && bv.cols() == av.cols()) {
    Mat<Scalar> c = av.rowwise() + bv.row(0);
    return a.tape().record(std::move(c), {a, b}, [ia, ib](Tape<Scalar>& t, std::size_t self) {
      if (t.requires_grad(ia)) t.grad(ia) += t.grad(self);
      if (t.requires_grad(ib)) t.grad(ib) += t.grad(self).colwise().sum();
    });
  }
  throw DimensionError("add: " + shape_str(av) + " + " + shape_str(bv));
}

template <typename Scalar>
Var<Scalar> scale(Var<Scalar> a, Scalar s) {
  const std::size_t ia = a.index();
  return a.tape().record(a.value() * s, {a}, [ia, s](Tape<Scalar>& t, std::size_t self) {
    t.grad(ia) += t.grad(self) * s;
  });
}

template <typename Scalar>
Var<Scalar> operator+(Var<Scalar> a, Var<Scalar> b) {
  return add(a, b);
}

template <typename Scalar>
Var<Scalar> operator*(Var<Scalar> a, Scalar s) {
  return scale(a, s);
}

// max(x, 0); the subgradient at exactly 0 is 0.
template <typename Scalar>
Var<Scalar> relu(Var<Scalar> a) {
  const std::size_t ia = a.index();
  return a.tape().record(a.value().cwiseMax(Scalar(0)), {a},
                         [ia](Tape<Scalar>& t, std::size_t self) {
                           const auto& x = t.value(ia);
                           t.grad(ia).array() +=
                               (x.array() > Scalar(0)).template cast<Scalar>() * t.grad(self).array();
                         });
}

template <typename Scalar>
Var<Scalar> sigmoid(Var<Scalar> a) {
  Mat<Scalar> y = a.value().unaryExpr([](Scalar x) {
    // Split by sign so exp never overflows.
    if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
    const Scalar e = std::exp(x);
    return e / (Scalar(1) + e);
  });
  const std::size_t ia = a.index();
  return a.tape().record(std::move(y), {a}, [ia](Tape<Scalar>& t, std::size_t self) {
    const auto& y = t.value(self);
    t.grad(ia).array() += t.grad(self).array() * y.array() * (Scalar(1) - y.array());
  });
}

template <typename Scalar>
Var<Scalar> concat_cols(std::span<const Var<Scalar>> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no operands");
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    detail::require_same_tape(parts[0], p);
    if (p.rows() != rows) {
      throw DimensionError("concat_cols: row mismatch " + shape_str(parts[0].value()) + " vs " +
                           shape_str(p.value()));
    }
    cols += p.cols();
  }
  Mat<Scalar> out(rows, cols);
  std::vector<std::pair<std::size_t, Eigen::Index>> blocks;  // (node, width)
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
    blocks.emplace_back(p.index(), p.cols());
  }
  return parts[0].tape().record(std::move(out), parts,
                                [blocks](Tape<Scalar>& t, std::size_t self) {
                                  Eigen::Index at = 0;
                                  for (auto [node, width] : blocks) {
                                    if (t.requires_grad(node)) {
                                      t.grad(node) += t.grad(self).middleCols(at, width);
                                    }
                                    at += width;
                                  }
                                });
}

template <typename Scalar>
Var<Scalar> concat_cols(std::initializer_list<Var<Scalar>> parts) {
  return concat_cols(std::span<const Var<Scalar>>(parts.begin(), parts.size()));
}

// Columns [start, start + width) of a.
template <typename Scalar>
Var<Scalar> col_block(Var<Scalar> a, Eigen::Index start, Eigen::Index width) {
  if (start < 0 || width < 1 || start + width > a.cols()) {
    throw DimensionError("col_block: columns [" + std::to_string(start) + ", " +
                         std::to_string(start + width) + ") of " + shape_str(a.value()));
  }
  const std::size_t ia = a.index();
  return a.tape().record(a.value().middleCols(start, width), {a},
                         [ia, start, width](Tape<Scalar>& t, std::size_t self) {
                           t.grad(ia).middleCols(start, width) += t.grad(self);
                         });
}

template <typename Scalar>
Var<Scalar> softmax_rows(Var<Scalar> a) {
  const auto& x = a.value();
  if (x.cols() < 1) throw DimensionError("softmax_rows: no columns");
  Mat<Scalar> y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const Scalar m = x.row(r).maxCoeff();
    y.row(r) = (x.row(r).array() - m).exp();
    const double s = y.row(r).template cast<double>().sum();
    y.row(r) /= static_cast<Scalar>(s);
  }
  const std::size_t ia = a.index();
  return a.tape().record(std::move(y), {a}, [ia](Tape<Scalar>& t, std::size_t self) {
    const auto& y = t.value(self);
    const auto& g = t.grad(self);
    auto& ga = t.grad(ia);
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      const Scalar dot = g.row(r).dot(y.row(r));
      ga.row(r).array() += y.row(r).array() * (g.row(r).array() - dot);
    }
  });
}

// Row-wise normalization over the feature dimension followed by an affine map.
// gain and bias are 1 x cols.
template <typename Scalar>
Var<Scalar> layer_norm(Var<Scalar> a, Var<Scalar> gain, Var<Scalar> bias, double eps = 1e-5) {
  detail::require_same_tape(a, gain);
  detail::require_same_tape(a, bias);
  const auto& x = a.value();
  const Eigen::Index rows = x.rows(), cols = x.cols();
  if (gain.rows() != 1 || gain.cols() != cols || bias.rows() != 1 || bias.cols() != cols) {
    throw DimensionError("layer_norm: input " + shape_str(x) + ", gain " + shape_str(gain.value()) +
                         ", bias " + shape_str(bias.value()));
  }
  if (!(eps > 0)) throw std::invalid_argument("layer_norm: eps must be positive");
  Mat<Scalar> xhat(rows, cols);
  std::vector<Scalar> inv_std(static_cast<std::size_t>(rows));
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto row = x.row(r).template cast<double>();
    const double mean = row.mean();
    const double var = (row.array() - mean).square().mean();
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[static_cast<std::size_t>(r)] = static_cast<Scalar>(is);
    xhat.row(r) = ((row.array() - mean) * is).matrix().template cast<Scalar>();
  }
  Mat<Scalar> y = (xhat.array().rowwise() * gain.value().row(0).array()).matrix();
  y.rowwise() += bias.value().row(0);

  const std::size_t ia = a.index(), ig = gain.index(), ib = bias.index();
  return a.tape().record(
      std::move(y), {a, gain, bias},
      [ia, ig, ib, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape<Scalar>& t,
                                                                          std::size_t self) {
        const auto& g = t.grad(self);
        if (t.requires_grad(ig)) t.grad(ig) += (g.array() * xhat.array()).colwise().sum().matrix();
        if (t.requires_grad(ib)) t.grad(ib) += g.colwise().sum();
        if (!t.requires_grad(ia)) return;
        const auto& gain_row = t.value(ig).row(0);
        auto& ga = t.grad(ia);
        const double n = static_cast<double>(g.cols());
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
          const auto dxhat = (g.row(r).array() * gain_row.array()).template cast<double>().eval();
          const auto xh = xhat.row(r).array().template cast<double>();
          const double mean_d = dxhat.sum() / n;
          const double mean_dx = (dxhat * xh).sum() / n;
          ga.row(r).array() +=
              ((dxhat - mean_d - xh * mean_dx) * inv_std[static_cast<std::size_t>(r)])
                  .template cast<Scalar>();
        }
      });
}

// Inverted dropout: survivors are scaled by 1/(1-rate) at training time so that
// inference is the identity. The sampled mask is kept for the backward pass.
template <typename Scalar>
Var<Scalar> dropout(Var<Scalar> a, double rate, Rng& rng, bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw std::invalid_argument("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return a;
  const auto& x = a.value();
  const Scalar keep_scale = static_cast<Scalar>(1.0 / (1.0 - rate));
  Mat<Scalar> mask(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = rng.bernoulli(rate) ? Scalar(0) : keep_scale;
  }
  Mat<Scalar> y = x.cwiseProduct(mask);
  const std::size_t ia = a.index();
  return a.tape().record(std::move(y), {a},
                         [ia, mask = std::move(mask)](Tape<Scalar>& t, std::size_t self) {
                           t.grad(ia) += t.grad(self).cwiseProduct(mask);
                         });
}

// Sum of all elements as a 1x1 node.
template <typename Scalar>
Var<Scalar> sum(Var<Scalar> a) {
  Mat<Scalar> s(1, 1);
  s(0, 0) = static_cast<Scalar>(a.value().template cast<double>().sum());
  const std::size_t ia = a.index();
  return a.tape().record(std::move(s), {a}, [ia](Tape<Scalar>& t, std::size_t self) {
    t.grad(ia).array() += t.grad(self)(0, 0);
  });
}

template <typename Scalar>
Var<Scalar> mean(Var<Scalar> a) {
  return scale(sum(a), Scalar(1) / static_cast<Scalar>(a.value().size()));
}

// ---------------------------------------------------------------------------
// Finite-difference gradient checking.

class NonDeterministicError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
struct NamedParam {
  std::string name;
  Mat<Scalar>* value;
};

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

// Elementwise relative error |a - n| / max(|a|, |n|, floor). The floor keeps
// structurally-zero gradients from dividing by roundoff.
inline constexpr double kGradCheckFloor = 1e-6;

// Compares the analytic gradient of `f` against central differences
// (f(θ+eps) - f(θ-eps)) / (2 eps) for every element of every parameter.
// `f` builds the scalar loss on the tape it is given, reading parameters by
// reference; it must be deterministic (dropout off or mask frozen).
template <typename Scalar, typename Fn>
GradCheckReport grad_check(Fn&& f, std::span<const NamedParam<Scalar>> params, double eps = 1e-3,
                           double tol = 1e-3) {
  if (!(eps >= 1e-5 && eps <= 1e-2)) {
    throw std::invalid_argument("grad_check: eps must lie in [1e-5, 1e-2]");
  }
  auto evaluate = [&f]() {
    Tape<Scalar> tape;
    Var<Scalar> loss = f(tape);
    if (loss.rows() != 1 || loss.cols() != 1) throw DimensionError("grad_check: loss is not 1x1");
    return static_cast<double>(loss.value()(0, 0));
  };

  Tape<Scalar> tape;
  Var<Scalar> loss = f(tape);
  const Gradients<Scalar> grads = tape.backward(loss);
  const double base = static_cast<double>(loss.value()(0, 0));
  if (evaluate() != base) {
    throw NonDeterministicError("grad_check: two forward passes disagree");
  }

  GradCheckReport report;
  report.tolerance = tol;
  for (const auto& p : params) {
    Mat<Scalar>& theta = *p.value;
    const Mat<Scalar>* analytic = grads.find(theta);
    GradCheckEntry entry{p.name, 0.0};
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      Scalar& x = theta.data()[i];
      const Scalar saved = x;
      x = static_cast<Scalar>(saved + eps);
      const double up = evaluate();
      x = static_cast<Scalar>(saved - eps);
      const double down = evaluate();
      x = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic != nullptr ? static_cast<double>(analytic->data()[i]) : 0.0;
      const double denom = std::max({std::abs(a), std::abs(numeric), kGradCheckFloor});
      entry.max_rel_error = std::max(entry.max_rel_error, std::abs(a - numeric) / denom);
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.entries.push_back(std::move(entry));
  }
  report.passed = report.max_rel_error <= tol;
  return report;
}

template <typename Scalar, typename Fn>
GradCheckReport grad_check(Fn&& f, const std::vector<NamedParam<Scalar>>& params, double eps = 1e-3,
                           double tol = 1e-3) {
  return grad_check<Scalar>(std::forward<Fn>(f), std::span<const NamedParam<Scalar>>(params), eps,
                            tol);
}

}  // namespace sdvsum
