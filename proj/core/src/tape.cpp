// Copyright 2026 the cagat authors
// SPDX-License-Identifier: Apache-2.0
#include "cagat/tape.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace cagat {

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || v.id >= static_cast<int>(nodes_.size()))
    throw ShapeError("tape: invalid var handle");
  return nodes_[v.id];
}

Tape::Node& Tape::node(Var v) {
  if (!v.valid() || v.id >= static_cast<int>(nodes_.size()))
    throw ShapeError("tape: invalid var handle");
  return nodes_[v.id];
}

// Gradient buffers are not allocated here: backward() zero-fills them on
// demand, so a forward-only tape never pays for them.
Var Tape::push_dense(int rows, int cols, bool requires_grad, const char*) {
  Node n;
  n.rows = rows;
  n.cols = cols;
  n.value.assign(static_cast<std::size_t>(rows) * cols, 0.0);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::push_pattern(PatternPtr pat, bool requires_grad, const char*) {
  Node n;
  n.rows = pat->rows;
  n.cols = pat->cols;
  n.pat = std::move(pat);
  n.value.assign(n.pat->cols_idx.size(), 0.0);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

void Tape::finite_check(Var v, const char* op) const {
  if (!opts_.check_finite) return;
  for (double x : nodes_[v.id].value)
    if (!std::isfinite(x)) throw NumericError(std::string(op) + ": non-finite value produced");
}

bool Tape::any_grad(std::initializer_list<Var> vs) const {
  for (Var v : vs)
    if (node(v).requires_grad) return true;
  return false;
}

// --- leaves -----------------------------------------------------------------

Var Tape::dense_leaf(const DenseMatrix& value, bool requires_grad) {
  Var v = push_dense(value.rows, value.cols, requires_grad, "dense_leaf");
  node(v).value = value.data;
  finite_check(v, "dense_leaf");
  return v;
}

Var Tape::pattern_leaf(const SparseMatrix& value, bool requires_grad) {
  Var v = push_pattern(value.pattern, requires_grad, "pattern_leaf");
  node(v).value = value.values;
  finite_check(v, "pattern_leaf");
  return v;
}

// --- dense ops ----------------------------------------------------------------

Var Tape::matmul(Var a, Var b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  if (na.pat || nb.pat) throw ShapeError("matmul: expects dense operands");
  if (na.cols != nb.rows)
    throw ShapeError("matmul: " + std::to_string(na.rows) + "x" + std::to_string(na.cols) +
                     " * " + std::to_string(nb.rows) + "x" + std::to_string(nb.cols));
  const int m = na.rows, kk = na.cols, n = nb.cols;
  Var out = push_dense(m, n, any_grad({a, b}), "matmul");
  {
    const auto& va = node(a).value;
    const auto& vb = node(b).value;
    auto& vo = node(out).value;
    for (int i = 0; i < m; ++i) {
      const double* arow = &va[static_cast<std::size_t>(i) * kk];
      double* orow = &vo[static_cast<std::size_t>(i) * n];
      for (int k = 0; k < kk; ++k) {
        const double aik = arow[k];
        if (aik == 0.0) continue;
        const double* brow = &vb[static_cast<std::size_t>(k) * n];
        for (int j = 0; j < n; ++j) orow[j] += aik * brow[j];
      }
    }
  }
  finite_check(out, "matmul");
  if (node(out).requires_grad) {
    const int aid = a.id, bid = b.id, oid = out.id;
    node(out).backward = [aid, bid, oid, m, kk, n](Tape& t) {
      const auto& g = t.nodes_[oid].grad;
      Node& na2 = t.nodes_[aid];
      Node& nb2 = t.nodes_[bid];
      if (na2.requires_grad) {
        // ga += g * b^T
        for (int i = 0; i < m; ++i) {
          double* garow = &na2.grad[static_cast<std::size_t>(i) * kk];
          const double* grow = &g[static_cast<std::size_t>(i) * n];
          for (int k = 0; k < kk; ++k) {
            const double* brow = &nb2.value[static_cast<std::size_t>(k) * n];
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
            garow[k] += acc;
          }
        }
      }
      if (nb2.requires_grad) {
        // gb += a^T * g
        for (int i = 0; i < m; ++i) {
          const double* arow = &na2.value[static_cast<std::size_t>(i) * kk];
          const double* grow = &g[static_cast<std::size_t>(i) * n];
          for (int k = 0; k < kk; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            double* gbrow = &nb2.grad[static_cast<std::size_t>(k) * n];
            for (int j = 0; j < n; ++j) gbrow[j] += aik * grow[j];
          }
        }
      }
    };
  }
  return out;
}

Var Tape::transpose(Var a) {
  const Node& na = node(a);
  if (na.pat) throw ShapeError("transpose: expects dense operand");
  const int r = na.rows, c = na.cols;
  Var out = push_dense(c, r, na.requires_grad, "transpose");
  {
    const auto& va = node(a).value;
    auto& vo = node(out).value;
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j)
        vo[static_cast<std::size_t>(j) * r + i] = va[static_cast<std::size_t>(i) * c + j];
  }
  if (node(out).requires_grad) {
    const int aid = a.id, oid = out.id;
    node(out).backward = [aid, oid, r, c](Tape& t) {
      const auto& g = t.nodes_[oid].grad;
      auto& ga = t.nodes_[aid].grad;
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
          ga[static_cast<std::size_t>(i) * c + j] += g[static_cast<std::size_t>(j) * r + i];
    };
  }
  return out;
}

namespace {
void require_same_layout(const char* op, const Tape& t, Var a, Var b) {
  const bool pa = t.is_pattern(a), pb = t.is_pattern(b);
  if (pa != pb) throw ShapeError(std::string(op) + ": dense/masked mode mismatch");
  if (pa) {
    if (t.pattern(a) != t.pattern(b))
      throw ShapeError(std::string(op) + ": operands on different patterns");
  } else if (t.rows(a) != t.rows(b) || t.cols(a) != t.cols(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch");
  }
}
}  // namespace

Var Tape::axpby(Var a, Var b, double ca, double cb) {
  require_same_layout("axpby", *this, a, b);
  Var out = is_pattern(a) ? push_pattern(pattern(a), any_grad({a, b}), "axpby")
                          : push_dense(rows(a), cols(a), any_grad({a, b}), "axpby");
  {
    const auto& va = node(a).value;
    const auto& vb = node(b).value;
    auto& vo = node(out).value;
    for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = ca * va[i] + cb * vb[i];
  }
  finite_check(out, "axpby");
  if (node(out).requires_grad) {
    const int aid = a.id, bid = b.id, oid = out.id;
    node(out).backward = [aid, bid, oid, ca, cb](Tape& t) {
      const auto& g = t.nodes_[oid].grad;
      if (t.nodes_[aid].requires_grad) {
        auto& ga = t.nodes_[aid].grad;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += ca * g[i];
      }
      if (t.nodes_[bid].requires_grad) {
        auto& gb = t.nodes_[bid].grad;
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += cb * g[i];
      }
    };
  }
  return out;
}

Var Tape::add3(Var a, Var b, Var c, double ca, double cb, double cc) {
  return axpby(axpby(a, b, ca, cb), c, 1.0, cc);
}

Var Tape::scale(Var a, double c) {
  const Node& na = node(a);
  Var out = na.pat ? push_pattern(na.pat, na.requires_grad, "scale")
                   : push_dense(na.rows, na.cols, na.requires_grad, "scale");
  {
    const auto& va = node(a).value;
    auto& vo = node(out).value;
    for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = c * va[i];
  }
  finite_check(out, "scale");
  if (node(out).requires_grad) {
    const int aid = a.id, oid = out.id;
    node(out).backward = [aid, oid, c](Tape& t) {
      const auto& g = t.nodes_[oid].grad;
      auto& ga = t.nodes_[aid].grad;
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
    };
  }
  return out;
}

Var Tape::unary(Var a, Unary kind, double slope) {
  const Node& na = node(a);
  if (kind == Unary::kLog) {
    for (double x : na.value)
      if (x <= 0.0) throw DomainError("log: input must be strictly positive");
  }
  Var out = na.pat ? push_pattern(na.pat, na.requires_grad, "unary")
                   : push_dense(na.rows, na.cols, na.requires_grad, "unary");
  {
    const auto& va = node(a).value;
    auto& vo = node(out).value;
    switch (kind) {
      case Unary::kLeakyRelu:
        for (std::size_t i = 0; i < vo.size(); ++i)
          vo[i] = va[i] >= 0.0 ? va[i] : slope * va[i];
        break;
      case Unary::kElu:
        for (std::size_t i = 0; i < vo.size(); ++i)
          vo[i] = va[i] > 0.0 ? va[i] : std::expm1(va[i]);
        break;
      case Unary::kRelu:
        for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = va[i] > 0.0 ? va[i] : 0.0;
        break;
      case Unary::kExp:
        for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = std::exp(va[i]);
        break;
      case Unary::kLog:
        for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = std::log(va[i]);
        break;
    }
  }
  finite_check(out, "unary");
  if (node(out).requires_grad) {
    const int aid = a.id, oid = out.id;
    const bool corrupt = opts_.corrupt_backward;
    node(out).backward = [aid, oid, kind, slope, corrupt](Tape& t) {
      const auto& g = t.nodes_[oid].grad;
      const auto& y = t.nodes_[oid].value;
      const auto& x = t.nodes_[aid].value;
      auto& ga = t.nodes_[aid].grad;
      switch (kind) {
        case Unary::kLeakyRelu: {
          // subgradient at 0 is the positive-side slope 1
          const double s = corrupt ? slope * 1.5 : slope;
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (x[i] >= 0.0 ? 1.0 : s);
          break;
        }
        case Unary::kElu:
          for (std::size_t i = 0; i < g.size(); ++i)
            ga[i] += g[i] * (x[i] > 0.0 ? 1.0 : y[i] + 1.0);
          break;
        case Unary::kRelu:
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (x[i] >= 0.0 ? 1.0 : 0.0);
          break;
        case Unary::kExp:
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
          break;
        case Unary::kLog:
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / x[i];
          break;
      }
    };
  }
  return out;
}

Var Tape::slice_rows(Var a, int r0, int r1) {
  const Node& na = node(a);
  if (na.pat) throw ShapeError("slice_rows: expects dense operand");
  if (r0 < 0 || r1 > na.rows || r0 >= r1) throw ShapeError("slice_rows: bad row range");
  const int c = na.cols;
  Var out = push_dense(r1 - r0, c, na.requires_grad, "slice_rows");
  {
    const auto& va = node(a).value;
    auto& vo = node(out).value;
    std::copy(va.begin() + static_cast<std::size_t>(r0) * c,
              va.begin() + static_cast<std::size_t>(r1) * c, vo.begin());
  }
  if (node(out).requires_grad) {
    const int aid = a.id, oid = out.id;
    node(out).backward = [aid, oid, r0, c](Tape& t) {
      const auto& g = t.nodes_[oid].grad;
      auto& ga = t.nodes_[aid].grad;
      for (std::size_t i = 0; i < g.size(); ++i) ga[static_cast<std::size_t>(r0) * c + i] += g[i];
    };
  }
  return out;
}

Var Tape::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const int r = rows(parts[0]);
  int total = 0;
  bool rg = false;
  for (Var p : parts) {
    if (is_pattern(p) || rows(p) != r) throw ShapeError("concat_cols: incompatible inputs");
    total += cols(p);
    rg = rg || node(p).requires_grad;
  }
  Var out = push_dense(r, total, rg, "concat_cols");
  {
    auto& vo = node(out).value;
    int base = 0;
    for (Var p : parts) {
      const Node& np = node(p);
      for (int i = 0; i < r; ++i)
        std::copy(np.value.begin() + static_cast<std::size_t>(i) * np.cols,
                  np.value.begin() + static_cast<std::size_t>(i + 1) * np.cols,
                  vo.begin() + static_cast<std::size_t>(i) * total + base);
      base += np.cols;
    }
  }
  if (rg) {
    std::vector<int> ids;
    for (Var p : parts) ids.push_back(p.id);
    const int oid = out.id;
    node(out).backward = [ids, oid, r, total](Tape& t) {
      const auto& g = t.nodes_[oid].grad;
      int base = 0;
      for (int id : ids) {
        Node& np = t.nodes_[id];
        if (np.requires_grad) {
          for (int i = 0; i < r; ++i)
            for (int j = 0; j < np.cols; ++j)
              np.grad[static_cast<std::size_t>(i) * np.cols + j] +=
                  g[static_cast<std::size_t>(i) * total + base + j];
        }
        base += np.cols;
      }
    };
  }
  return out;
}

Var Tape::average(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("average: no inputs");
  const int r = rows(parts[0]), c = cols(parts[0]);
  bool rg = false;
  for (Var p : parts) {
    if (is_pattern(p) || rows(p) != r || cols(p) != c)
      throw ShapeError("average: incompatible inputs");
    rg = rg || node(p).requires_grad;
  }
  Var out = push_dense(r, c, rg, "average");
  {
    auto& vo = node(out).value;
    const double inv = 1.0 / static_cast<double>(parts.size());
    for (Var p : parts) {
      const auto& vp = node(p).value;
      for (std::size_t i = 0; i < vo.size(); ++i) vo[i] += vp[i];
    }
    for (double& v : vo) v *= inv;
  }
  if (rg) {
    std::vector<int> ids;
    for (Var p : parts) ids.push_back(p.id);
    const int oid = out.id;
    const double inv = 1.0 / static_cast<double>(parts.size());
    node(out).backward = [ids, oid, inv](Tape& t) {
      const auto& g = t.nodes_[oid].grad;
      for (int id : ids) {
        Node& np = t.nodes_[id];
        if (!np.requires_grad) continue;
        for (std::size_t i = 0; i < g.size(); ++i) np.grad[i] += inv * g[i];
      }
    };
  }
  return out;
}

Var Tape::sum(Var a) {
  const Node& na = node(a);
  Var out = push_dense(1, 1, na.requires_grad, "sum");
  {
    double s = 0.0;
    for (double v : node(a).value) s += v;
    node(out).value[0] = s;
  }
  finite_check(out, "sum");
  if (node(out).requires_grad) {
    const int aid = a.id, oid = out.id;
    node(out).backward = [aid, oid](Tape& t) {
      const double g = t.nodes_[oid].grad[0];
      for (double& v : t.nodes_[aid].grad) v += g;
    };
  }
  return out;
}

Var Tape::row_normalize(Var a) {
  const Node& na = node(a);
  if (na.pat) return segment_normalize(a);
  const int r = na.rows, c = na.cols;
  Var out = push_dense(r, c, na.requires_grad, "row_normalize");
  {
    const auto& va = node(a).value;
    auto& vo = node(out).value;
    for (int i = 0; i < r; ++i) {
      double s = 0.0;
      for (int j = 0; j < c; ++j) s += va[static_cast<std::size_t>(i) * c + j];
      if (s == 0.0) throw NumericError("row_normalize: zero row sum");
      for (int j = 0; j < c; ++j)
        vo[static_cast<std::size_t>(i) * c + j] = va[static_cast<std::size_t>(i) * c + j] / s;
    }
  }
  finite_check(out, "row_normalize");
  if (node(out).requires_grad) {
    const int aid = a.id, oid = out.id;
    node(out).backward = [aid, oid, r, c](Tape& t) {
      const auto& g = t.nodes_[oid].grad;
      const auto& y = t.nodes_[oid].value;
      const auto& x = t.nodes_[aid].value;
      auto& ga = t.nodes_[aid].grad;
      for (int i = 0; i < r; ++i) {
        const std::size_t off = static_cast<std::size_t>(i) * c;
        double s = 0.0, dot = 0.0;
        for (int j = 0; j < c; ++j) {
          s += x[off + j];
          dot += g[off + j] * y[off + j];
        }
        for (int j = 0; j < c; ++j) ga[off + j] += (g[off + j] - dot) / s;
      }
    };
  }
  return out;
}

// --- sparse / pattern ops -------------------------------------------------

Var Tape::spmm(Var s, Var d) {
  const Node& ns = node(s);
  const Node& nd = node(d);
  if (!ns.pat || nd.pat) throw ShapeError("spmm: expects (pattern, dense) operands");
  if (ns.cols != nd.rows)
    throw ShapeError("spmm: " + std::to_string(ns.rows) + "x" + std::to_string(ns.cols) + " * " +
                     std::to_string(nd.rows) + "x" + std::to_string(nd.cols));
  const int p = nd.cols;
  const PatternPtr pat = ns.pat;
  Var out = push_dense(ns.rows, p, any_grad({s, d}), "spmm");
  {
    const auto& vs = node(s).value;
    const auto& vd = node(d).value;
    auto& vo = node(out).value;
    for (int i = 0; i < pat->rows; ++i) {
      double* orow = &vo[static_cast<std::size_t>(i) * p];
      for (int k = pat->row_begin(i); k < pat->row_end(i); ++k) {
        const double v = vs[k];
        const double* drow = &vd[static_cast<std::size_t>(pat->cols_idx[k]) * p];
        for (int j = 0; j < p; ++j) orow[j] += v * drow[j];
      }
    }
  }
  finite_check(out, "spmm");
  if (node(out).requires_grad) {
    const int sid = s.id, did = d.id, oid = out.id;
    node(out).backward = [sid, did, oid, pat, p](Tape& t) {
      const auto& g = t.nodes_[oid].grad;
      Node& nsn = t.nodes_[sid];
      Node& ndn = t.nodes_[did];
      for (int i = 0; i < pat->rows; ++i) {
        const double* grow = &g[static_cast<std::size_t>(i) * p];
        for (int k = pat->row_begin(i); k < pat->row_end(i); ++k) {
          const int h = pat->cols_idx[k];
          if (nsn.requires_grad) {
            const double* drow = &ndn.value[static_cast<std::size_t>(h) * p];
            double acc = 0.0;
            for (int j = 0; j < p; ++j) acc += grow[j] * drow[j];
            nsn.grad[k] += acc;
          }
          if (ndn.requires_grad) {
            const double v = nsn.value[k];
            double* gdrow = &ndn.grad[static_cast<std::size_t>(h) * p];
            for (int j = 0; j < p; ++j) gdrow[j] += v * grow[j];
          }
        }
      }
    };
  }
  return out;
}

Var Tape::spmm_const(const SparseMatrix& s, Var d) {
  return spmm(pattern_leaf(s, /*requires_grad=*/false), d);
}

Var Tape::gather_pair_sum(Var a, Var b, PatternPtr pat) {
  const Node& na = node(a);
  const Node& nb = node(b);
  if (na.pat || nb.pat || na.cols != 1 || nb.cols != 1)
    throw ShapeError("gather_pair_sum: expects dense column vectors");
  if (na.rows != pat->rows || nb.rows != pat->cols)
    throw ShapeError("gather_pair_sum: vector lengths vs pattern");
  Var out = push_pattern(pat, any_grad({a, b}), "gather_pair_sum");
  {
    const auto& va = node(a).value;
    const auto& vb = node(b).value;
    auto& vo = node(out).value;
    for (int i = 0; i < pat->rows; ++i)
      for (int k = pat->row_begin(i); k < pat->row_end(i); ++k)
        vo[k] = va[i] + vb[pat->cols_idx[k]];
  }
  finite_check(out, "gather_pair_sum");
  if (node(out).requires_grad) {
    const int aid = a.id, bid = b.id, oid = out.id;
    const PatternPtr pp = pattern(out);
    node(out).backward = [aid, bid, oid, pp](Tape& t) {
      const auto& g = t.nodes_[oid].grad;
      Node& na2 = t.nodes_[aid];
      Node& nb2 = t.nodes_[bid];
      for (int i = 0; i < pp->rows; ++i)
        for (int k = pp->row_begin(i); k < pp->row_end(i); ++k) {
          if (na2.requires_grad) na2.grad[i] += g[k];
          if (nb2.requires_grad) nb2.grad[pp->cols_idx[k]] += g[k];
        }
    };
  }
  return out;
}

Var Tape::segment_softmax(Var pv) {
  const Node& np = node(pv);
  if (!np.pat) throw ShapeError("segment_softmax: expects pattern values");
  const PatternPtr pat = np.pat;
  for (int i = 0; i < pat->rows; ++i)
    if (pat->row_size(i) == 0)
      throw DomainError("segment_softmax: empty segment at row " + std::to_string(i) +
                        " (isolated node; add self-loops first)");
  Var out = push_pattern(pat, np.requires_grad, "segment_softmax");
  {
    const auto& x = node(pv).value;
    auto& y = node(out).value;
    for (int i = 0; i < pat->rows; ++i) {
      const int b = pat->row_begin(i), e = pat->row_end(i);
      double m = x[b];
      for (int k = b + 1; k < e; ++k) m = std::max(m, x[k]);
      double z = 0.0;
      for (int k = b; k < e; ++k) {
        y[k] = std::exp(x[k] - m);
        z += y[k];
      }
      const double inv = 1.0 / z;
      for (int k = b; k < e; ++k) y[k] *= inv;
    }
  }
  finite_check(out, "segment_softmax");
  if (node(out).requires_grad) {
    const int pid = pv.id, oid = out.id;
    node(out).backward = [pid, oid, pat](Tape& t) {
      const auto& g = t.nodes_[oid].grad;
      const auto& y = t.nodes_[oid].value;
      auto& gx = t.nodes_[pid].grad;
      for (int i = 0; i < pat->rows; ++i) {
        const int b = pat->row_begin(i), e = pat->row_end(i);
        double dot = 0.0;
        for (int k = b; k < e; ++k) dot += g[k] * y[k];
        for (int k = b; k < e; ++k) gx[k] += y[k] * (g[k] - dot);
      }
    };
  }
  return out;
}

Var Tape::segment_normalize(Var pv) {
  const Node& np = node(pv);
  if (!np.pat) throw ShapeError("segment_normalize: expects pattern values");
  const PatternPtr pat = np.pat;
  Var out = push_pattern(pat, np.requires_grad, "segment_normalize");
  {
    const auto& x = node(pv).value;
    auto& y = node(out).value;
    for (int i = 0; i < pat->rows; ++i) {
      const int b = pat->row_begin(i), e = pat->row_end(i);
      double s = 0.0;
      for (int k = b; k < e; ++k) s += x[k];
      if (s == 0.0) throw NumericError("segment_normalize: zero row sum");
      for (int k = b; k < e; ++k) y[k] = x[k] / s;
    }
  }
  finite_check(out, "segment_normalize");
  if (node(out).requires_grad) {
    const int pid = pv.id, oid = out.id;
    node(out).backward = [pid, oid, pat](Tape& t) {
      const auto& g = t.nodes_[oid].grad;
      const auto& y = t.nodes_[oid].value;
      const auto& x = t.nodes_[pid].value;
      auto& gx = t.nodes_[pid].grad;
      for (int i = 0; i < pat->rows; ++i) {
        const int b = pat->row_begin(i), e = pat->row_end(i);
        double s = 0.0, dot = 0.0;
        for (int k = b; k < e; ++k) {
          s += x[k];
          dot += g[k] * y[k];
        }
        for (int k = b; k < e; ++k) gx[k] += (g[k] - dot) / s;
      }
    };
  }
  return out;
}

Var Tape::masked_triple(Var s, const TripleProductPlan& plan) {
  const Node& ns = node(s);
  if (!ns.pat) throw ShapeError("masked_triple: expects pattern values");
  if (ns.pat != plan.pattern) throw ShapeError("masked_triple: plan built for different pattern");
  Var out = push_pattern(ns.pat, ns.requires_grad, "masked_triple");
  plan.apply(node(s).value.data(), node(out).value.data());
  finite_check(out, "masked_triple");
  if (node(out).requires_grad) {
    const int sid = s.id, oid = out.id;
    const TripleProductPlan* pp = &plan;  // plan outlives the tape (owned by graph context)
    node(out).backward = [sid, oid, pp](Tape& t) {
      pp->apply_adjoint(t.nodes_[oid].grad.data(), t.nodes_[sid].grad.data());
    };
  }
  return out;
}

Var Tape::masked_gram(Var h, PatternPtr pat) {
  const Node& nh = node(h);
  if (nh.pat) throw ShapeError("masked_gram: expects dense operand");
  if (nh.rows != pat->rows || pat->rows != pat->cols)
    throw ShapeError("masked_gram: rows vs pattern mismatch");
  const int k = nh.cols;
  Var out = push_pattern(pat, nh.requires_grad, "masked_gram");
  {
    const auto& vh = node(h).value;
    auto& vo = node(out).value;
    for (int i = 0; i < pat->rows; ++i) {
      const double* hi = &vh[static_cast<std::size_t>(i) * k];
      for (int e = pat->row_begin(i); e < pat->row_end(i); ++e) {
        const double* hj = &vh[static_cast<std::size_t>(pat->cols_idx[e]) * k];
        double acc = 0.0;
        for (int t = 0; t < k; ++t) acc += hi[t] * hj[t];
        vo[e] = acc;
      }
    }
  }
  finite_check(out, "masked_gram");
  if (node(out).requires_grad) {
    const int hid = h.id, oid = out.id;
    node(out).backward = [hid, oid, pat, k](Tape& t) {
      const auto& g = t.nodes_[oid].grad;
      const auto& vh = t.nodes_[hid].value;
      auto& gh = t.nodes_[hid].grad;
      for (int i = 0; i < pat->rows; ++i) {
        for (int e = pat->row_begin(i); e < pat->row_end(i); ++e) {
          const double ge = g[e];
          if (ge == 0.0) continue;
          const int j = pat->cols_idx[e];
          const double* hi = &vh[static_cast<std::size_t>(i) * k];
          const double* hj = &vh[static_cast<std::size_t>(j) * k];
          double* gi = &gh[static_cast<std::size_t>(i) * k];
          double* gj = &gh[static_cast<std::size_t>(j) * k];
          for (int t = 0; t < k; ++t) {
            gi[t] += ge * hj[t];
            gj[t] += ge * hi[t];
          }
        }
      }
    };
  }
  return out;
}

Var Tape::to_dense(Var pv) {
  const Node& np = node(pv);
  if (!np.pat) throw ShapeError("to_dense: expects pattern values");
  const PatternPtr pat = np.pat;
  Var out = push_dense(pat->rows, pat->cols, np.requires_grad, "to_dense");
  {
    const auto& x = node(pv).value;
    auto& y = node(out).value;
    for (int i = 0; i < pat->rows; ++i)
      for (int k = pat->row_begin(i); k < pat->row_end(i); ++k)
        y[static_cast<std::size_t>(i) * pat->cols + pat->cols_idx[k]] = x[k];
  }
  if (node(out).requires_grad) {
    const int pid = pv.id, oid = out.id;
    node(out).backward = [pid, oid, pat](Tape& t) {
      const auto& g = t.nodes_[oid].grad;
      auto& gx = t.nodes_[pid].grad;
      for (int i = 0; i < pat->rows; ++i)
        for (int k = pat->row_begin(i); k < pat->row_end(i); ++k)
          gx[k] += g[static_cast<std::size_t>(i) * pat->cols + pat->cols_idx[k]];
    };
  }
  return out;
}

Var Tape::project(Var d, PatternPtr pat) {
  const Node& nd = node(d);
  if (nd.pat) throw ShapeError("project: expects dense operand");
  if (nd.rows != pat->rows || nd.cols != pat->cols)
    throw ShapeError("project: dense shape vs pattern mismatch");
  Var out = push_pattern(pat, nd.requires_grad, "project");
  {
    const auto& x = node(d).value;
    auto& y = node(out).value;
    for (int i = 0; i < pat->rows; ++i)
      for (int k = pat->row_begin(i); k < pat->row_end(i); ++k)
        y[k] = x[static_cast<std::size_t>(i) * pat->cols + pat->cols_idx[k]];
  }
  if (node(out).requires_grad) {
    const int did = d.id, oid = out.id;
    node(out).backward = [did, oid, pat](Tape& t) {
      const auto& g = t.nodes_[oid].grad;
      auto& gx = t.nodes_[did].grad;
      for (int i = 0; i < pat->rows; ++i)
        for (int k = pat->row_begin(i); k < pat->row_end(i); ++k)
          gx[static_cast<std::size_t>(i) * pat->cols + pat->cols_idx[k]] += g[k];
    };
  }
  return out;
}

// --- model-level ops ---------------------------------------------------------

Var Tape::masked_cross_entropy(Var logits, std::span<const int> labels,
                               std::span<const int> mask) {
  const Node& nl = node(logits);
  if (nl.pat) throw ShapeError("masked_cross_entropy: expects dense logits");
  const int n = nl.rows, c = nl.cols;
  if (static_cast<int>(labels.size()) != n)
    throw ShapeError("masked_cross_entropy: labels size vs logits rows");
  if (mask.empty()) throw DomainError("masked_cross_entropy: empty mask");
  for (int i : mask) {
    if (i < 0 || i >= n) throw DomainError("masked_cross_entropy: mask id out of range");
    if (labels[i] < 0 || labels[i] >= c)
      throw DomainError("masked_cross_entropy: label out of range at node " + std::to_string(i));
  }
  Var out = push_dense(1, 1, nl.requires_grad, "masked_cross_entropy");
  {
    const auto& x = node(logits).value;
    double loss = 0.0;
    for (int i : mask) {
      const double* row = &x[static_cast<std::size_t>(i) * c];
      double m = row[0];
      for (int t = 1; t < c; ++t) m = std::max(m, row[t]);
      double z = 0.0;
      for (int t = 0; t < c; ++t) z += std::exp(row[t] - m);
      loss += m + std::log(z) - row[labels[i]];
    }
    node(out).value[0] = loss / static_cast<double>(mask.size());
  }
  finite_check(out, "masked_cross_entropy");
  if (node(out).requires_grad) {
    const int lid = logits.id, oid = out.id;
    std::vector<int> labels_copy(labels.begin(), labels.end());
    std::vector<int> mask_copy(mask.begin(), mask.end());
    node(out).backward = [lid, oid, c, labels_copy, mask_copy](Tape& t) {
      const double g = t.nodes_[oid].grad[0] / static_cast<double>(mask_copy.size());
      const auto& x = t.nodes_[lid].value;
      auto& gx = t.nodes_[lid].grad;
      std::vector<double> p(c);
      for (int i : mask_copy) {
        const double* row = &x[static_cast<std::size_t>(i) * c];
        double m = row[0];
        for (int t2 = 1; t2 < c; ++t2) m = std::max(m, row[t2]);
        double z = 0.0;
        for (int t2 = 0; t2 < c; ++t2) {
          p[t2] = std::exp(row[t2] - m);
          z += p[t2];
        }
        double* grow = &gx[static_cast<std::size_t>(i) * c];
        for (int t2 = 0; t2 < c; ++t2) {
          grow[t2] += g * (p[t2] / z - (t2 == labels_copy[i] ? 1.0 : 0.0));
        }
      }
    };
  }
  return out;
}

Var Tape::dropout(Var a, double rate, Rng& rng, bool enabled) {
  if (!enabled || rate == 0.0) return a;
  if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout: rate must be in [0, 1)");
  const Node& na = node(a);
  const double keep = 1.0 - rate;
  const double inv_keep = 1.0 / keep;
  std::vector<std::uint8_t> mask(na.value.size());
  for (auto& m : mask) m = rng.uniform() < keep ? 1 : 0;

  Var out = na.pat ? push_pattern(na.pat, na.requires_grad, "dropout")
                   : push_dense(na.rows, na.cols, na.requires_grad, "dropout");
  {
    const auto& x = node(a).value;
    auto& y = node(out).value;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = mask[i] ? x[i] * inv_keep : 0.0;
  }
  if (node(out).requires_grad) {
    const int aid = a.id, oid = out.id;
    node(out).backward = [aid, oid, mask = std::move(mask), inv_keep](Tape& t) {
      const auto& g = t.nodes_[oid].grad;
      auto& ga = t.nodes_[aid].grad;
      for (std::size_t i = 0; i < g.size(); ++i)
        if (mask[i]) ga[i] += g[i] * inv_keep;
    };
  }
  return out;
}

// --- access / backward ------------------------------------------------------

DenseMatrix Tape::dense_value(Var v) const {
  const Node& n = node(v);
  if (n.pat) throw ShapeError("dense_value: node holds pattern values");
  DenseMatrix m(n.rows, n.cols);
  m.data = n.value;
  return m;
}

SparseMatrix Tape::sparse_value(Var v) const {
  const Node& n = node(v);
  if (!n.pat) throw ShapeError("sparse_value: node is dense");
  return SparseMatrix(n.pat, n.value);
}

const std::vector<double>& Tape::grad(Var v) const {
  const Node& n = node(v);
  if (!n.requires_grad) throw ShapeError("grad: node does not require gradients");
  return n.grad;
}

DenseMatrix Tape::dense_grad(Var v) const {
  const Node& n = node(v);
  if (n.pat) throw ShapeError("dense_grad: node holds pattern values");
  if (!n.requires_grad) throw ShapeError("dense_grad: node does not require gradients");
  DenseMatrix m(n.rows, n.cols);
  if (!n.grad.empty()) m.data = n.grad;  // all zeros before the first backward
  return m;
}

double Tape::scalar_value(Var v) const {
  const Node& n = node(v);
  if (n.pat || n.rows != 1 || n.cols != 1) throw ShapeError("scalar_value: node is not 1x1");
  return n.value[0];
}

void Tape::backward(Var loss) {
  Node& nl = node(loss);
  if (nl.pat || nl.rows != 1 || nl.cols != 1)
    throw ShapeError("backward: loss must be a 1x1 dense node");
  if (!nl.requires_grad)
    throw ShapeError("backward: loss does not depend on any differentiable leaf");
  for (Node& n : nodes_)
    if (n.requires_grad) n.grad.assign(n.value.size(), 0.0);
  nl.grad[0] = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.requires_grad && n.backward) n.backward(*this);
  }
  if (opts_.check_finite) {
    for (const Node& n : nodes_)
      if (n.requires_grad)
        for (double gv : n.grad)
          if (!std::isfinite(gv)) throw NumericError("backward: non-finite gradient");
  }
}

}  // namespace cagat
