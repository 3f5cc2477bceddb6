// SPDX-License-Identifier: Apache-2.0
#ifndef DOCLAB_NUMCORE_TAPE_HPP_
#define DOCLAB_NUMCORE_TAPE_HPP_

#include <cmath>
#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "doclab/numcore/tensor.hpp"
#include "doclab/util/error.hpp"

namespace doclab::num {

// Define-by-run reverse-mode tape. Each primitive records one closure; the
// backward pass replays them in exact reverse execution order, once each.
// A non-recording tape runs the identical forward arithmetic with no closure
// or gradient bookkeeping, which is how inference-mode forwards are done.
template <class Real>
class Tape {
public:
    explicit Tape(bool recording = true) : recording_(recording) {}

    bool recording() const { return recording_; }
    size_t size() const { return ops_.size(); }

    Var<Real> make(Tensor<Real> t, bool needs_grad) {
        auto node = std::make_shared<Tensor<Real>>(std::move(t));
        node->needs_grad = recording_ && needs_grad;
        if (node->needs_grad) node->ensure_grad();
        if (recording_) produced_.insert(node.get());
        return node;
    }

    void push(std::function<void()> op) {
        if (recording_) ops_.push_back(std::move(op));
    }

    bool produced(const Var<Real>& v) const { return produced_.count(v.get()) > 0; }

    // Seeds loss.grad = 1 and replays the tape backward. The loss must be a
    // scalar produced on this tape.
    void backward(const Var<Real>& loss) {
        if (!recording_) throw UsageError("backward on a non-recording tape");
        if (!loss || !loss->is_scalar()) throw UsageError("backward requires a scalar loss");
        if (!produced(loss)) throw UsageError("loss was not produced on this tape");
        loss->ensure_grad();
        loss->grad[0] = Real(1);
        for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
    }

private:
    bool recording_;
    std::vector<std::function<void()>> ops_;
    std::unordered_set<const Tensor<Real>*> produced_;
};

namespace detail {

// out[m x n] += a[m x k] . b[k x n]. For each output element the reduction
// runs over k in ascending order; the j-inner loop vectorizes without
// reassociation, so results are bit-stable across builds.
template <class Real>
inline void mm_nn_acc(const Real* a, const Real* b, Real* out, int64_t m, int64_t k, int64_t n) {
    for (int64_t i = 0; i < m; ++i) {
        const Real* ai = a + i * k;
        Real* oi = out + i * n;
        for (int64_t kk = 0; kk < k; ++kk) {
            const Real av = ai[kk];
            const Real* bk = b + kk * n;
            for (int64_t j = 0; j < n; ++j) oi[j] += av * bk[j];
        }
    }
}

// out[m x n2] += a[m x k] . b^T where b is [n2 x k] (row dot products).
template <class Real>
inline void mm_nt_acc(const Real* a, const Real* b, Real* out, int64_t m, int64_t k, int64_t n2) {
    for (int64_t i = 0; i < m; ++i) {
        const Real* ai = a + i * k;
        for (int64_t j = 0; j < n2; ++j) {
            const Real* bj = b + j * k;
            Real s = 0;
            for (int64_t kk = 0; kk < k; ++kk) s += ai[kk] * bj[kk];
            out[i * n2 + j] += s;
        }
    }
}

// out[k x n] += a^T . g where a is [m x k], g is [m x n].
template <class Real>
inline void mm_tn_acc(const Real* a, const Real* g, Real* out, int64_t m, int64_t k, int64_t n) {
    for (int64_t i = 0; i < m; ++i) {
        const Real* ai = a + i * k;
        const Real* gi = g + i * n;
        for (int64_t kk = 0; kk < k; ++kk) {
            const Real av = ai[kk];
            Real* ok = out + kk * n;
            for (int64_t j = 0; j < n; ++j) ok[j] += av * gi[j];
        }
    }
}

template <class Real>
inline std::vector<Real> transposed(const Real* src, int64_t m, int64_t n) {
    std::vector<Real> t(static_cast<size_t>(m * n));
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) t[static_cast<size_t>(j * m + i)] = src[i * n + j];
    return t;
}

template <class Real>
inline void require_2d(const Var<Real>& v, const char* what) {
    if (!v || v->shape.size() != 2) throw ShapeError(std::string(what) + " must be 2-D");
}

}  // namespace detail

// --------------------------------------------------------------------------
// Primitive operations. Each returns a fresh node and records its backward.
// --------------------------------------------------------------------------

template <class Real>
Var<Real> matmul(Tape<Real>& tape, const Var<Real>& a, const Var<Real>& b) {
    detail::require_2d(a, "matmul lhs");
    detail::require_2d(b, "matmul rhs");
    const int64_t m = a->shape[0], k = a->shape[1], n = b->shape[1];
    if (b->shape[0] != k)
        throw ShapeError("matmul inner dimensions disagree: " + a->shape_str() + " vs " +
                         b->shape_str());
    auto out = tape.make(Tensor<Real>({m, n}), a->needs_grad || b->needs_grad);
    detail::mm_nn_acc(a->data.data(), b->data.data(), out->data.data(), m, k, n);
    tape.push([a, b, out, m, k, n]() {
        if (a->needs_grad) {
            a->ensure_grad();
            const auto bt = detail::transposed(b->data.data(), k, n);
            detail::mm_nn_acc(out->grad.data(), bt.data(), a->grad.data(), m, n, k);
        }
        if (b->needs_grad) {
            b->ensure_grad();
            detail::mm_tn_acc(a->data.data(), out->grad.data(), b->grad.data(), m, k, n);
        }
    });
    return out;
}

// a . b^T with b stored [n x k]; the layout low-rank adapters use.
template <class Real>
Var<Real> matmul_nt(Tape<Real>& tape, const Var<Real>& a, const Var<Real>& b) {
    detail::require_2d(a, "matmul_nt lhs");
    detail::require_2d(b, "matmul_nt rhs");
    const int64_t m = a->shape[0], k = a->shape[1], n2 = b->shape[0];
    if (b->shape[1] != k)
        throw ShapeError("matmul_nt inner dimensions disagree: " + a->shape_str() + " vs " +
                         b->shape_str());
    auto out = tape.make(Tensor<Real>({m, n2}), a->needs_grad || b->needs_grad);
    detail::mm_nt_acc(a->data.data(), b->data.data(), out->data.data(), m, k, n2);
    tape.push([a, b, out, m, k, n2]() {
        if (a->needs_grad) {
            a->ensure_grad();
            detail::mm_nn_acc(out->grad.data(), b->data.data(), a->grad.data(), m, n2, k);
        }
        if (b->needs_grad) {
            b->ensure_grad();
            detail::mm_tn_acc(out->grad.data(), a->data.data(), b->grad.data(), m, n2, k);
        }
    });
    return out;
}

template <class Real>
Var<Real> add(Tape<Real>& tape, const Var<Real>& a, const Var<Real>& b) {
    if (!a->same_shape(*b))
        throw ShapeError("add shapes disagree: " + a->shape_str() + " vs " + b->shape_str());
    auto out = tape.make(Tensor<Real>(a->shape), a->needs_grad || b->needs_grad);
    for (size_t i = 0; i < out->data.size(); ++i) out->data[i] = a->data[i] + b->data[i];
    tape.push([a, b, out]() {
        if (a->needs_grad) {
            a->ensure_grad();
            for (size_t i = 0; i < out->grad.size(); ++i) a->grad[i] += out->grad[i];
        }
        if (b->needs_grad) {
            b->ensure_grad();
            for (size_t i = 0; i < out->grad.size(); ++i) b->grad[i] += out->grad[i];
        }
    });
    return out;
}

// a + c*b, the residual/adapter combiner.
template <class Real>
Var<Real> add_scaled(Tape<Real>& tape, const Var<Real>& a, const Var<Real>& b, Real c) {
    if (!a->same_shape(*b))
        throw ShapeError("add_scaled shapes disagree: " + a->shape_str() + " vs " + b->shape_str());
    auto out = tape.make(Tensor<Real>(a->shape), a->needs_grad || b->needs_grad);
    for (size_t i = 0; i < out->data.size(); ++i) out->data[i] = a->data[i] + c * b->data[i];
    tape.push([a, b, c, out]() {
        if (a->needs_grad) {
            a->ensure_grad();
            for (size_t i = 0; i < out->grad.size(); ++i) a->grad[i] += out->grad[i];
        }
        if (b->needs_grad) {
            b->ensure_grad();
            for (size_t i = 0; i < out->grad.size(); ++i) b->grad[i] += c * out->grad[i];
        }
    });
    return out;
}

template <class Real>
Var<Real> scale(Tape<Real>& tape, const Var<Real>& a, Real c) {
    auto out = tape.make(Tensor<Real>(a->shape), a->needs_grad);
    for (size_t i = 0; i < out->data.size(); ++i) out->data[i] = c * a->data[i];
    tape.push([a, c, out]() {
        if (a->needs_grad) {
            a->ensure_grad();
            for (size_t i = 0; i < out->grad.size(); ++i) a->grad[i] += c * out->grad[i];
        }
    });
    return out;
}

// Row-wise elementwise product with a vector (the norm gain).
template <class Real>
Var<Real> mul_rowvec(Tape<Real>& tape, const Var<Real>& x, const Var<Real>& g) {
    detail::require_2d(x, "mul_rowvec input");
    const int64_t n = x->shape[0], d = x->shape[1];
    if (g->numel() != d) throw ShapeError("mul_rowvec gain length mismatch");
    auto out = tape.make(Tensor<Real>(x->shape), x->needs_grad || g->needs_grad);
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < d; ++j) out->data[i * d + j] = x->data[i * d + j] * g->data[j];
    tape.push([x, g, out, n, d]() {
        if (x->needs_grad) {
            x->ensure_grad();
            for (int64_t i = 0; i < n; ++i)
                for (int64_t j = 0; j < d; ++j)
                    x->grad[i * d + j] += out->grad[i * d + j] * g->data[j];
        }
        if (g->needs_grad) {
            g->ensure_grad();
            for (int64_t i = 0; i < n; ++i)
                for (int64_t j = 0; j < d; ++j)
                    g->grad[j] += out->grad[i * d + j] * x->data[i * d + j];
        }
    });
    return out;
}

// Row-wise RMS normalization: y = x / sqrt(mean(x^2) + eps).
template <class Real>
Var<Real> rmsnorm(Tape<Real>& tape, const Var<Real>& x, Real eps) {
    detail::require_2d(x, "rmsnorm input");
    const int64_t n = x->shape[0], d = x->shape[1];
    auto out = tape.make(Tensor<Real>(x->shape), x->needs_grad);
    std::vector<Real> inv_rms(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        Real ss = 0;
        for (int64_t j = 0; j < d; ++j) {
            const Real v = x->data[i * d + j];
            ss += v * v;
        }
        const Real r = std::sqrt(ss / static_cast<Real>(d) + eps);
        inv_rms[static_cast<size_t>(i)] = Real(1) / r;
        for (int64_t j = 0; j < d; ++j) out->data[i * d + j] = x->data[i * d + j] * inv_rms[i];
    }
    tape.push([x, out, inv_rms, n, d]() {
        if (!x->needs_grad) return;
        x->ensure_grad();
        for (int64_t i = 0; i < n; ++i) {
            const Real ir = inv_rms[static_cast<size_t>(i)];
            Real dot = 0;
            for (int64_t j = 0; j < d; ++j) dot += out->grad[i * d + j] * x->data[i * d + j];
            const Real coef = dot * ir * ir * ir / static_cast<Real>(d);
            for (int64_t j = 0; j < d; ++j)
                x->grad[i * d + j] += out->grad[i * d + j] * ir - x->data[i * d + j] * coef;
        }
    });
    return out;
}

template <class Real>
inline Real gelu_value(Real v) {
    const Real c0 = Real(0.7978845608028654);  // sqrt(2/pi)
    const Real c1 = Real(0.044715);
    return Real(0.5) * v * (Real(1) + std::tanh(c0 * (v + c1 * v * v * v)));
}

template <class Real>
Var<Real> gelu(Tape<Real>& tape, const Var<Real>& x) {
    auto out = tape.make(Tensor<Real>(x->shape), x->needs_grad);
    for (size_t i = 0; i < x->data.size(); ++i) out->data[i] = gelu_value(x->data[i]);
    tape.push([x, out]() {
        if (!x->needs_grad) return;
        x->ensure_grad();
        const Real c0 = Real(0.7978845608028654);
        const Real c1 = Real(0.044715);
        for (size_t i = 0; i < x->data.size(); ++i) {
            const Real v = x->data[i];
            const Real u = c0 * (v + c1 * v * v * v);
            const Real t = std::tanh(u);
            const Real du = c0 * (Real(1) + Real(3) * c1 * v * v);
            const Real dy = Real(0.5) * (Real(1) + t) + Real(0.5) * v * (Real(1) - t * t) * du;
            x->grad[i] += out->grad[i] * dy;
        }
    });
    return out;
}

// Gathers rows of an embedding table; backward scatters into the table.
template <class Real>
Var<Real> embedding_rows(Tape<Real>& tape, const Var<Real>& table, const std::vector<int>& ids) {
    detail::require_2d(table, "embedding table");
    const int64_t v = table->shape[0], d = table->shape[1];
    const int64_t n = static_cast<int64_t>(ids.size());
    if (n == 0) throw DegenerateInputError("embedding_rows with empty id list");
    for (int id : ids)
        if (id < 0 || id >= v) throw InputError("token id out of range: " + std::to_string(id));
    auto out = tape.make(Tensor<Real>({n, d}), table->needs_grad);
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < d; ++j) out->data[i * d + j] = table->data[ids[i] * d + j];
    tape.push([table, out, ids, d]() {
        if (!table->needs_grad) return;
        table->ensure_grad();
        for (size_t i = 0; i < ids.size(); ++i)
            for (int64_t j = 0; j < d; ++j)
                table->grad[static_cast<int64_t>(ids[i]) * d + j] += out->grad[i * d + j];
    });
    return out;
}

template <class Real>
Var<Real> slice_cols(Tape<Real>& tape, const Var<Real>& x, int64_t c0, int64_t w) {
    detail::require_2d(x, "slice_cols input");
    const int64_t n = x->shape[0], d = x->shape[1];
    if (c0 < 0 || w <= 0 || c0 + w > d) throw ShapeError("slice_cols range out of bounds");
    auto out = tape.make(Tensor<Real>({n, w}), x->needs_grad);
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < w; ++j) out->data[i * w + j] = x->data[i * d + c0 + j];
    tape.push([x, out, c0, w, n, d]() {
        if (!x->needs_grad) return;
        x->ensure_grad();
        for (int64_t i = 0; i < n; ++i)
            for (int64_t j = 0; j < w; ++j) x->grad[i * d + c0 + j] += out->grad[i * w + j];
    });
    return out;
}

template <class Real>
Var<Real> concat_cols(Tape<Real>& tape, const std::vector<Var<Real>>& xs) {
    if (xs.empty()) throw UsageError("concat_cols with no inputs");
    const int64_t n = xs[0]->shape[0];
    int64_t total = 0;
    bool needs = false;
    for (const auto& x : xs) {
        detail::require_2d(x, "concat_cols input");
        if (x->shape[0] != n) throw ShapeError("concat_cols row counts disagree");
        total += x->shape[1];
        needs = needs || x->needs_grad;
    }
    auto out = tape.make(Tensor<Real>({n, total}), needs);
    int64_t off = 0;
    for (const auto& x : xs) {
        const int64_t w = x->shape[1];
        for (int64_t i = 0; i < n; ++i)
            for (int64_t j = 0; j < w; ++j) out->data[i * total + off + j] = x->data[i * w + j];
        off += w;
    }
    tape.push([xs, out, n, total]() {
        int64_t off2 = 0;
        for (const auto& x : xs) {
            const int64_t w = x->shape[1];
            if (x->needs_grad) {
                x->ensure_grad();
                for (int64_t i = 0; i < n; ++i)
                    for (int64_t j = 0; j < w; ++j)
                        x->grad[i * w + j] += out->grad[i * total + off2 + j];
            }
            off2 += w;
        }
    });
    return out;
}

// Row-wise softmax over the causal prefix: row i attends to columns 0..i.
// Max-subtraction keeps the exponentials in range.
template <class Real>
Var<Real> causal_softmax(Tape<Real>& tape, const Var<Real>& s) {
    detail::require_2d(s, "causal_softmax input");
    const int64_t n = s->shape[0];
    if (s->shape[1] != n) throw ShapeError("causal_softmax expects a square score matrix");
    auto out = tape.make(Tensor<Real>({n, n}), s->needs_grad);
    for (int64_t i = 0; i < n; ++i) {
        Real mx = s->data[i * n];
        for (int64_t j = 1; j <= i; ++j) mx = std::max(mx, s->data[i * n + j]);
        Real sum = 0;
        for (int64_t j = 0; j <= i; ++j) {
            const Real e = std::exp(s->data[i * n + j] - mx);
            out->data[i * n + j] = e;
            sum += e;
        }
        const Real inv = Real(1) / sum;
        for (int64_t j = 0; j <= i; ++j) out->data[i * n + j] *= inv;
    }
    tape.push([s, out, n]() {
        if (!s->needs_grad) return;
        s->ensure_grad();
        for (int64_t i = 0; i < n; ++i) {
            Real dot = 0;
            for (int64_t j = 0; j <= i; ++j) dot += out->grad[i * n + j] * out->data[i * n + j];
            for (int64_t j = 0; j <= i; ++j)
                s->grad[i * n + j] += out->data[i * n + j] * (out->grad[i * n + j] - dot);
        }
    });
    return out;
}

// Mean of -log softmax(logits)[target] over mask=true rows. Rows with
// mask=false contribute nothing to the value or the gradient.
template <class Real>
Var<Real> softmax_cross_entropy(Tape<Real>& tape, const Var<Real>& logits,
                                const std::vector<int>& targets, const std::vector<bool>& mask) {
    detail::require_2d(logits, "cross entropy logits");
    const int64_t n = logits->shape[0], v = logits->shape[1];
    if (static_cast<int64_t>(targets.size()) != n || static_cast<int64_t>(mask.size()) != n)
        throw ShapeError("targets/mask length must match logit rows");
    int64_t m = 0;
    for (int64_t i = 0; i < n; ++i) {
        if (!mask[i]) continue;
        ++m;
        if (targets[i] < 0 || targets[i] >= v)
            throw InputError("target id out of range: " + std::to_string(targets[i]));
    }
    if (m == 0) throw DegenerateInputError("cross entropy mask excludes every position");

    auto out = tape.make(Tensor<Real>({1}), logits->needs_grad);
    // Per-row log-sum-exp, cached for backward.
    auto lse = std::make_shared<std::vector<Real>>(static_cast<size_t>(n), Real(0));
    Real total = 0;
    for (int64_t i = 0; i < n; ++i) {
        if (!mask[i]) continue;
        Real rowmax = logits->data[i * v];
        for (int64_t j = 1; j < v; ++j) rowmax = std::max(rowmax, logits->data[i * v + j]);
        Real sum = 0;
        for (int64_t j = 0; j < v; ++j) sum += std::exp(logits->data[i * v + j] - rowmax);
        const Real l = rowmax + std::log(sum);
        (*lse)[static_cast<size_t>(i)] = l;
        total += l - logits->data[i * v + targets[i]];
    }
    out->data[0] = total / static_cast<Real>(m);
    tape.push([logits, out, targets, mask, lse, n, v, m]() {
        if (!logits->needs_grad) return;
        logits->ensure_grad();
        const Real go = out->grad[0] / static_cast<Real>(m);
        for (int64_t i = 0; i < n; ++i) {
            if (!mask[i]) continue;
            const Real l = (*lse)[static_cast<size_t>(i)];
            for (int64_t j = 0; j < v; ++j) {
                const Real p = std::exp(logits->data[i * v + j] - l);
                logits->grad[i * v + j] += go * (p - (j == targets[i] ? Real(1) : Real(0)));
            }
        }
    });
    return out;
}

// Log-probabilities of chosen tokens at chosen rows under a temperature-
// scaled softmax. Entry t of the result is
//   log softmax(logits[row_t] * inv_temp)[token_t].
template <class Real>
Var<Real> token_log_probs(Tape<Real>& tape, const Var<Real>& logits,
                          const std::vector<std::pair<int, int>>& row_token, Real inv_temp) {
    detail::require_2d(logits, "token_log_probs logits");
    const int64_t n = logits->shape[0], v = logits->shape[1];
    const int64_t m = static_cast<int64_t>(row_token.size());
    if (m == 0) throw DegenerateInputError("token_log_probs with no positions");
    for (const auto& [r, t] : row_token) {
        if (r < 0 || r >= n) throw InputError("row index out of range");
        if (t < 0 || t >= v) throw InputError("token id out of range");
    }
    auto out = tape.make(Tensor<Real>({m}), logits->needs_grad);
    auto lse = std::make_shared<std::vector<Real>>(static_cast<size_t>(m), Real(0));
    for (int64_t q = 0; q < m; ++q) {
        const int64_t r = row_token[q].first;
        Real rowmax = logits->data[r * v] * inv_temp;
        for (int64_t j = 1; j < v; ++j)
            rowmax = std::max(rowmax, logits->data[r * v + j] * inv_temp);
        Real sum = 0;
        for (int64_t j = 0; j < v; ++j)
            sum += std::exp(logits->data[r * v + j] * inv_temp - rowmax);
        const Real l = rowmax + std::log(sum);
        (*lse)[static_cast<size_t>(q)] = l;
        out->data[q] = logits->data[r * v + row_token[q].second] * inv_temp - l;
    }
    tape.push([logits, out, row_token, lse, v, inv_temp]() {
        if (!logits->needs_grad) return;
        logits->ensure_grad();
        for (size_t q = 0; q < row_token.size(); ++q) {
            const int64_t r = row_token[q].first;
            const int tok = row_token[q].second;
            const Real go = out->grad[q];
            if (go == Real(0)) continue;
            const Real l = (*lse)[q];
            for (int64_t j = 0; j < v; ++j) {
                const Real p = std::exp(logits->data[r * v + j] * inv_temp - l);
                logits->grad[r * v + j] +=
                    go * inv_temp * ((j == tok ? Real(1) : Real(0)) - p);
            }
        }
    });
    return out;
}

template <class Real>
Var<Real> sum_scalars(Tape<Real>& tape, const std::vector<Var<Real>>& xs) {
    if (xs.empty()) throw UsageError("sum_scalars with no inputs");
    bool needs = false;
    Real total = 0;
    for (const auto& x : xs) {
        if (!x->is_scalar()) throw ShapeError("sum_scalars expects scalars");
        total += x->data[0];
        needs = needs || x->needs_grad;
    }
    auto out = tape.make(Tensor<Real>::scalar_of(total), needs);
    tape.push([xs, out]() {
        for (const auto& x : xs) {
            if (!x->needs_grad) continue;
            x->ensure_grad();
            x->grad[0] += out->grad[0];
        }
    });
    return out;
}

// Scalar dot with a constant weight vector (flattened).
template <class Real>
Var<Real> weighted_sum(Tape<Real>& tape, const Var<Real>& x, const std::vector<Real>& w) {
    if (static_cast<int64_t>(w.size()) != x->numel())
        throw ShapeError("weighted_sum weight length mismatch");
    Real total = 0;
    for (size_t i = 0; i < w.size(); ++i) total += w[i] * x->data[i];
    auto out = tape.make(Tensor<Real>::scalar_of(total), x->needs_grad);
    tape.push([x, w, out]() {
        if (!x->needs_grad) return;
        x->ensure_grad();
        for (size_t i = 0; i < w.size(); ++i) x->grad[i] += w[i] * out->grad[0];
    });
    return out;
}

template <class Real>
Var<Real> sum_all(Tape<Real>& tape, const Var<Real>& x) {
    Real total = 0;
    for (Real v : x->data) total += v;
    auto out = tape.make(Tensor<Real>::scalar_of(total), x->needs_grad);
    tape.push([x, out]() {
        if (!x->needs_grad) return;
        x->ensure_grad();
        for (size_t i = 0; i < x->grad.size(); ++i) x->grad[i] += out->grad[0];
    });
    return out;
}

}  // namespace doclab::num

#endif  // DOCLAB_NUMCORE_TAPE_HPP_
