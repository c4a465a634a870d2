#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bridge/tensor.hpp"

namespace bridge {

enum class Reduction { Sum, Mean };

// Reverse-mode autodiff tape. Nodes are appended in construction order, which
// is a topological order by construction; backward() walks it in reverse.
// One training step owns one tape exclusively.
template <typename S>
class Tape {
public:
    using Ref = int;

    Ref leaf(Tensor<S> v, bool grad_enabled = true) {
        Node n;
        n.value = std::move(v);
        n.is_leaf = true;
        n.needs_grad = grad_enabled;
        return push(std::move(n));
    }

    Ref constant(Tensor<S> v) { return leaf(std::move(v), false); }

    const Tensor<S>& value(Ref r) const { return nodes_[check(r)].value; }
    std::size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

    // ---- elementwise ----

    Ref add(Ref a, Ref b) {
        const auto& va = value(a);
        const auto& vb = value(b);
        require_same_shape(va, vb, "add");
        Tensor<S> out = va;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += vb[i];
        return unary_or_binary(std::move(out), {a, b}, [a, b](Tape& t, const Tensor<S>& g) {
            t.accumulate(a, g);
            t.accumulate(b, g);
        });
    }

    Ref sub(Ref a, Ref b) {
        const auto& va = value(a);
        const auto& vb = value(b);
        require_same_shape(va, vb, "sub");
        Tensor<S> out = va;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] -= vb[i];
        return unary_or_binary(std::move(out), {a, b}, [a, b](Tape& t, const Tensor<S>& g) {
            t.accumulate(a, g);
            t.accumulate_scaled(b, g, S(-1));
        });
    }

    Ref mul(Ref a, Ref b) {
        const auto& va = value(a);
        const auto& vb = value(b);
        require_same_shape(va, vb, "mul");
        Tensor<S> out = va;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= vb[i];
        return unary_or_binary(std::move(out), {a, b}, [a, b](Tape& t, const Tensor<S>& g) {
            const auto& xa = t.value(a);
            const auto& xb = t.value(b);
            if (t.wants_grad(a)) {
                Tensor<S> ga = g;
                for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= xb[i];
                t.accumulate(a, ga);
            }
            if (t.wants_grad(b)) {
                Tensor<S> gb = g;
                for (std::size_t i = 0; i < gb.size(); ++i) gb[i] *= xa[i];
                t.accumulate(b, gb);
            }
        });
    }

    Ref scale(Ref a, S c) {
        Tensor<S> out = value(a);
        for (auto& v : out.values) v *= c;
        return unary_or_binary(std::move(out), {a}, [a, c](Tape& t, const Tensor<S>& g) {
            t.accumulate_scaled(a, g, c);
        });
    }

    Ref add_scalar(Ref a, S c) {
        Tensor<S> out = value(a);
        for (auto& v : out.values) v += c;
        return unary_or_binary(std::move(out), {a}, [a](Tape& t, const Tensor<S>& g) {
            t.accumulate(a, g);
        });
    }

    Ref exp(Ref a) {
        Tensor<S> out = value(a);
        for (auto& v : out.values) v = std::exp(v);
        Ref r = unary_or_binary(Tensor<S>(out), {a}, [](Tape&, const Tensor<S>&) {});
        nodes_[r].back = [a, r](Tape& t, const Tensor<S>& g) {
            const auto& y = t.value(r);
            Tensor<S> ga = g;
            for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= y[i];
            t.accumulate(a, ga);
        };
        return r;
    }

    // Exact GELU, x * Phi(x). Smooth, so finite-difference checks behave.
    Ref gelu(Ref a) {
        const auto& x = value(a);
        Tensor<S> out = x;
        for (auto& v : out.values) v = v * normal_cdf(v);
        return unary_or_binary(std::move(out), {a}, [a](Tape& t, const Tensor<S>& g) {
            const auto& x2 = t.value(a);
            Tensor<S> ga = g;
            for (std::size_t i = 0; i < ga.size(); ++i) {
                const S xv = x2[i];
                ga[i] *= normal_cdf(xv) + xv * normal_pdf(xv);
            }
            t.accumulate(a, ga);
        });
    }

    // Clamp values into [lo, hi]; gradient is zero outside the open interval.
    Ref clip(Ref a, S lo, S hi) {
        const auto& x = value(a);
        Tensor<S> out = x;
        for (auto& v : out.values) v = std::min(hi, std::max(lo, v));
        return unary_or_binary(std::move(out), {a}, [a, lo, hi](Tape& t, const Tensor<S>& g) {
            const auto& x2 = t.value(a);
            Tensor<S> ga = g;
            for (std::size_t i = 0; i < ga.size(); ++i)
                if (x2[i] < lo || x2[i] > hi) ga[i] = S(0);
            t.accumulate(a, ga);
        });
    }

    // Elementwise min; ties route the gradient to the first argument.
    Ref min_elem(Ref a, Ref b) {
        const auto& va = value(a);
        const auto& vb = value(b);
        require_same_shape(va, vb, "min_elem");
        Tensor<S> out = va;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(va[i], vb[i]);
        return unary_or_binary(std::move(out), {a, b}, [a, b](Tape& t, const Tensor<S>& g) {
            const auto& xa = t.value(a);
            const auto& xb = t.value(b);
            Tensor<S> ga = g;
            Tensor<S> gb = g;
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (xa[i] <= xb[i])
                    gb[i] = S(0);
                else
                    ga[i] = S(0);
            }
            t.accumulate(a, ga);
            t.accumulate(b, gb);
        });
    }

    // ---- linear algebra ----

    Ref matmul(Ref a, Ref b) {
        const auto& va = value(a);
        const auto& vb = value(b);
        if (va.ndim() != 2 || vb.ndim() != 2)
            throw DimensionError("matmul expects 2-d tensors");
        if (va.cols() != vb.rows())
            throw DimensionError("matmul inner dimensions disagree: " + shape_string(va) +
                                 " x " + shape_string(vb));
        Tensor<S> out = matmul_values(va, vb, false, false);
        return unary_or_binary(std::move(out), {a, b}, [a, b](Tape& t, const Tensor<S>& g) {
            const auto& xa = t.value(a);
            const auto& xb = t.value(b);
            if (t.wants_grad(a)) t.accumulate(a, matmul_values(g, xb, false, true));
            if (t.wants_grad(b)) t.accumulate(b, matmul_values(xa, g, true, false));
        });
    }

    Ref transpose(Ref a) {
        const auto& va = value(a);
        if (va.ndim() != 2) throw DimensionError("transpose expects a 2-d tensor");
        Tensor<S> out({va.cols(), va.rows()});
        for (std::size_t i = 0; i < va.rows(); ++i)
            for (std::size_t j = 0; j < va.cols(); ++j) out.at(j, i) = va.at(i, j);
        return unary_or_binary(std::move(out), {a}, [a](Tape& t, const Tensor<S>& g) {
            Tensor<S> ga({g.cols(), g.rows()});
            for (std::size_t i = 0; i < g.rows(); ++i)
                for (std::size_t j = 0; j < g.cols(); ++j) ga.at(j, i) = g.at(i, j);
            t.accumulate(a, ga);
        });
    }

    // Broadcast-add a length-n vector to every row of an m x n matrix.
    Ref add_rowvec(Ref a, Ref b) {
        const auto& va = value(a);
        const auto& vb = value(b);
        if (va.ndim() != 2 || vb.ndim() != 1 || vb.size() != va.cols())
            throw DimensionError("add_rowvec expects [m x n] and [n]");
        Tensor<S> out = va;
        for (std::size_t i = 0; i < va.rows(); ++i)
            for (std::size_t j = 0; j < va.cols(); ++j) out.at(i, j) += vb[j];
        return unary_or_binary(std::move(out), {a, b}, [a, b](Tape& t, const Tensor<S>& g) {
            t.accumulate(a, g);
            if (t.wants_grad(b)) {
                Tensor<S> gb({g.cols()});
                for (std::size_t i = 0; i < g.rows(); ++i)
                    for (std::size_t j = 0; j < g.cols(); ++j) gb[j] += g.at(i, j);
                t.accumulate(b, gb);
            }
        });
    }

    // ---- reductions ----

    Ref sum(Ref a) {
        S total = S(0);
        for (S v : value(a).values) total += v;
        return unary_or_binary(Tensor<S>::scalar(total), {a}, [a](Tape& t, const Tensor<S>& g) {
            Tensor<S> ga(t.value(a).shape, g[0]);
            t.accumulate(a, ga);
        });
    }

    Ref mean(Ref a) {
        const std::size_t n = value(a).size();
        S total = S(0);
        for (S v : value(a).values) total += v;
        return unary_or_binary(Tensor<S>::scalar(total / static_cast<S>(n)), {a},
                               [a, n](Tape& t, const Tensor<S>& g) {
                                   Tensor<S> ga(t.value(a).shape, g[0] / static_cast<S>(n));
                                   t.accumulate(a, ga);
                               });
    }

    // ---- row-wise softmax family (max-subtracted for stability) ----

    Ref softmax_rows(Ref a) {
        Tensor<S> out = softmax_values(value(a));
        Ref r = unary_or_binary(std::move(out), {a}, [](Tape&, const Tensor<S>&) {});
        nodes_[r].back = [a, r](Tape& t, const Tensor<S>& g) {
            const auto& y = t.value(r);
            Tensor<S> ga = g;
            for (std::size_t i = 0; i < y.rows(); ++i) {
                S dot = S(0);
                for (std::size_t j = 0; j < y.cols(); ++j) dot += g.at(i, j) * y.at(i, j);
                for (std::size_t j = 0; j < y.cols(); ++j)
                    ga.at(i, j) = y.at(i, j) * (g.at(i, j) - dot);
            }
            t.accumulate(a, ga);
        };
        return r;
    }

    Ref log_softmax_rows(Ref a) {
        const auto& x = value(a);
        require_rows(x, "log_softmax");
        Tensor<S> out = x;
        for (std::size_t i = 0; i < x.rows(); ++i) {
            const S lse = row_logsumexp(x, i);
            for (std::size_t j = 0; j < x.cols(); ++j) out.at(i, j) = x.at(i, j) - lse;
        }
        Ref r = unary_or_binary(std::move(out), {a}, [](Tape&, const Tensor<S>&) {});
        nodes_[r].back = [a, r](Tape& t, const Tensor<S>& g) {
            const auto& y = t.value(r);
            Tensor<S> ga = g;
            for (std::size_t i = 0; i < y.rows(); ++i) {
                S gsum = S(0);
                for (std::size_t j = 0; j < y.cols(); ++j) gsum += g.at(i, j);
                for (std::size_t j = 0; j < y.cols(); ++j)
                    ga.at(i, j) = g.at(i, j) - std::exp(y.at(i, j)) * gsum;
            }
            t.accumulate(a, ga);
        };
        return r;
    }

    // ---- indexed ops ----

    // Rows of a table selected by index; the embedding lookup.
    Ref gather_rows(Ref table, const std::vector<int>& ids) {
        const auto& tab = value(table);
        if (tab.ndim() != 2) throw DimensionError("gather_rows expects a 2-d table");
        for (int id : ids)
            if (id < 0 || static_cast<std::size_t>(id) >= tab.rows())
                throw IndexError("row index " + std::to_string(id) + " out of range [0, " +
                                 std::to_string(tab.rows()) + ")");
        Tensor<S> out({ids.size(), tab.cols()});
        for (std::size_t i = 0; i < ids.size(); ++i)
            for (std::size_t j = 0; j < tab.cols(); ++j)
                out.at(i, j) = tab.at(static_cast<std::size_t>(ids[i]), j);
        return unary_or_binary(std::move(out), {table},
                               [table, ids](Tape& t, const Tensor<S>& g) {
                                   if (!t.wants_grad(table)) return;
                                   Tensor<S> gt(t.value(table).shape);
                                   for (std::size_t i = 0; i < ids.size(); ++i)
                                       for (std::size_t j = 0; j < g.cols(); ++j)
                                           gt.at(static_cast<std::size_t>(ids[i]), j) += g.at(i, j);
                                   t.accumulate(table, gt);
                               });
    }

    // Contiguous row slice [begin, begin+count).
    Ref slice_rows(Ref a, std::size_t begin, std::size_t count) {
        const auto& x = value(a);
        if (x.ndim() != 2) throw DimensionError("slice_rows expects a 2-d tensor");
        if (begin + count > x.rows()) throw IndexError("row slice out of range");
        Tensor<S> out({count, x.cols()});
        for (std::size_t i = 0; i < count; ++i)
            for (std::size_t j = 0; j < x.cols(); ++j) out.at(i, j) = x.at(begin + i, j);
        return unary_or_binary(std::move(out), {a},
                               [a, begin, count](Tape& t, const Tensor<S>& g) {
                                   Tensor<S> ga(t.value(a).shape);
                                   for (std::size_t i = 0; i < count; ++i)
                                       for (std::size_t j = 0; j < g.cols(); ++j)
                                           ga.at(begin + i, j) = g.at(i, j);
                                   t.accumulate(a, ga);
                               });
    }

    // RMS normalization with a learned per-column gain.
    Ref rmsnorm(Ref a, Ref gain, S eps = S(1e-5)) {
        const auto& x = value(a);
        const auto& gn = value(gain);
        if (x.ndim() != 2 || gn.ndim() != 1 || gn.size() != x.cols())
            throw DimensionError("rmsnorm expects [m x n] and gain [n]");
        const std::size_t n = x.cols();
        Tensor<S> out = x;
        for (std::size_t i = 0; i < x.rows(); ++i) {
            S ms = S(0);
            for (std::size_t j = 0; j < n; ++j) ms += x.at(i, j) * x.at(i, j);
            const S inv = S(1) / std::sqrt(ms / static_cast<S>(n) + eps);
            for (std::size_t j = 0; j < n; ++j) out.at(i, j) = x.at(i, j) * inv * gn[j];
        }
        return unary_or_binary(
            std::move(out), {a, gain}, [a, gain, eps](Tape& t, const Tensor<S>& g) {
                const auto& x2 = t.value(a);
                const auto& gn2 = t.value(gain);
                const std::size_t n = x2.cols();
                Tensor<S> ga(x2.shape);
                Tensor<S> gg({n});
                for (std::size_t i = 0; i < x2.rows(); ++i) {
                    S ms = S(0);
                    for (std::size_t j = 0; j < n; ++j) ms += x2.at(i, j) * x2.at(i, j);
                    const S r = std::sqrt(ms / static_cast<S>(n) + eps);
                    const S inv = S(1) / r;
                    // s = sum_j dL/dy_ij * gain_j * x_ij
                    S s = S(0);
                    for (std::size_t j = 0; j < n; ++j) s += g.at(i, j) * gn2[j] * x2.at(i, j);
                    const S c = s * inv * inv * inv / static_cast<S>(n);
                    for (std::size_t j = 0; j < n; ++j) {
                        ga.at(i, j) = g.at(i, j) * gn2[j] * inv - x2.at(i, j) * c;
                        gg[j] += g.at(i, j) * x2.at(i, j) * inv;
                    }
                }
                t.accumulate(a, ga);
                t.accumulate(gain, gg);
            });
    }

    // Fused log_softmax + gather + weighted reduction. reduction=Sum is
    // -sum_i log p_{i,y_i}; Mean divides by the number of rows.
    Ref cross_entropy(Ref logits, const std::vector<int>& targets, Reduction reduction) {
        const auto& x = value(logits);
        require_rows(x, "cross_entropy");
        if (targets.size() != x.rows())
            throw DimensionError("cross_entropy: " + std::to_string(targets.size()) +
                                 " targets for " + std::to_string(x.rows()) + " rows");
        for (int y : targets)
            if (y < 0 || static_cast<std::size_t>(y) >= x.cols())
                throw IndexError("target " + std::to_string(y) + " outside vocabulary [0, " +
                                 std::to_string(x.cols()) + ")");
        S total = S(0);
        for (std::size_t i = 0; i < x.rows(); ++i)
            total += row_logsumexp(x, i) - x.at(i, static_cast<std::size_t>(targets[i]));
        const S denom = reduction == Reduction::Mean ? static_cast<S>(x.rows()) : S(1);
        return unary_or_binary(
            Tensor<S>::scalar(total / denom), {logits},
            [logits, targets, denom](Tape& t, const Tensor<S>& g) {
                const auto& x2 = t.value(logits);
                const S gv = g[0] / denom;
                Tensor<S> gl = softmax_values(x2);
                for (auto& v : gl.values) v *= gv;
                for (std::size_t i = 0; i < x2.rows(); ++i)
                    gl.at(i, static_cast<std::size_t>(targets[i])) -= gv;
                t.accumulate(logits, gl);
            });
    }

    // Per-row realized-token log-probabilities, log p_{i, y_i}, as a vector.
    Ref gather_logprobs(Ref logits, const std::vector<int>& targets) {
        const auto& x = value(logits);
        require_rows(x, "gather_logprobs");
        if (targets.size() != x.rows())
            throw DimensionError("gather_logprobs: targets do not match rows");
        for (int y : targets)
            if (y < 0 || static_cast<std::size_t>(y) >= x.cols())
                throw IndexError("target " + std::to_string(y) + " outside vocabulary");
        Tensor<S> out({x.rows()});
        for (std::size_t i = 0; i < x.rows(); ++i)
            out[i] = x.at(i, static_cast<std::size_t>(targets[i])) - row_logsumexp(x, i);
        return unary_or_binary(std::move(out), {logits},
                               [logits, targets](Tape& t, const Tensor<S>& g) {
                                   const auto& x2 = t.value(logits);
                                   Tensor<S> gl = softmax_values(x2);
                                   for (std::size_t i = 0; i < x2.rows(); ++i) {
                                       for (std::size_t j = 0; j < x2.cols(); ++j)
                                           gl.at(i, j) *= -g[i];
                                       gl.at(i, static_cast<std::size_t>(targets[i])) += g[i];
                                   }
                                   t.accumulate(logits, gl);
                               });
    }

    // ---- backward ----

    // Gradients of a scalar loss with respect to every grad-enabled leaf,
    // keyed by leaf ref. The tape is cleared afterwards.
    std::unordered_map<int, Tensor<S>> backward(Ref loss) {
        if (value(loss).size() != 1)
            throw ContractError("backward expects a scalar loss node");
        nodes_[loss].grad = Tensor<S>::scalar(S(1));
        for (Ref r = loss; r >= 0; --r) {
            Node& n = nodes_[r];
            if (!n.needs_grad || n.grad.values.empty() || !n.back) continue;
            n.back(*this, n.grad);
        }
        std::unordered_map<int, Tensor<S>> grads;
        for (Ref r = 0; r < static_cast<Ref>(nodes_.size()); ++r) {
            Node& n = nodes_[r];
            if (!n.is_leaf || !n.needs_grad) continue;
            if (n.grad.values.empty()) n.grad = Tensor<S>(n.value.shape);
            grads.emplace(r, std::move(n.grad));
        }
        clear();
        return grads;
    }

private:
    struct Node {
        Tensor<S> value;
        Tensor<S> grad;
        std::function<void(Tape&, const Tensor<S>&)> back;
        bool needs_grad = false;
        bool is_leaf = false;
    };

    std::vector<Node> nodes_;

    Ref push(Node n) {
        nodes_.push_back(std::move(n));
        return static_cast<Ref>(nodes_.size() - 1);
    }

    Ref check(Ref r) const {
        if (r < 0 || static_cast<std::size_t>(r) >= nodes_.size())
            throw ContractError("tape ref " + std::to_string(r) + " out of range");
        return r;
    }

    bool wants_grad(Ref r) const { return nodes_[check(r)].needs_grad; }

    void accumulate(Ref r, const Tensor<S>& g) {
        Node& n = nodes_[check(r)];
        if (!n.needs_grad) return;
        if (n.grad.values.empty()) n.grad = Tensor<S>(n.value.shape);
        for (std::size_t i = 0; i < g.size(); ++i) n.grad[i] += g[i];
    }

    void accumulate_scaled(Ref r, const Tensor<S>& g, S c) {
        Node& n = nodes_[check(r)];
        if (!n.needs_grad) return;
        if (n.grad.values.empty()) n.grad = Tensor<S>(n.value.shape);
        for (std::size_t i = 0; i < g.size(); ++i) n.grad[i] += c * g[i];
    }

    template <typename F>
    Ref unary_or_binary(Tensor<S> out, std::initializer_list<Ref> inputs, F&& back) {
        Node n;
        n.value = std::move(out);
        for (Ref r : inputs)
            if (wants_grad(r)) n.needs_grad = true;
        if (n.needs_grad) n.back = std::forward<F>(back);
        return push(std::move(n));
    }

    static void require_same_shape(const Tensor<S>& a, const Tensor<S>& b, const char* op) {
        if (!a.same_shape(b))
            throw DimensionError(std::string(op) + ": shapes " + shape_string(a) + " and " +
                                 shape_string(b) + " differ");
    }

    static void require_rows(const Tensor<S>& x, const char* op) {
        if (x.ndim() != 2 || x.cols() == 0)
            throw DimensionError(std::string(op) + " expects a 2-d tensor with nonempty rows");
    }

    static S row_logsumexp(const Tensor<S>& x, std::size_t i) {
        S m = x.at(i, 0);
        for (std::size_t j = 1; j < x.cols(); ++j) m = std::max(m, x.at(i, j));
        S s = S(0);
        for (std::size_t j = 0; j < x.cols(); ++j) s += std::exp(x.at(i, j) - m);
        return m + std::log(s);
    }

    static Tensor<S> softmax_values(const Tensor<S>& x) {
        Tensor<S> out = x;
        for (std::size_t i = 0; i < x.rows(); ++i) {
            const S lse = row_logsumexp(x, i);
            for (std::size_t j = 0; j < x.cols(); ++j)
                out.at(i, j) = std::exp(x.at(i, j) - lse);
        }
        return out;
    }

    // c = a x b with optional transposes.
    static Tensor<S> matmul_values(const Tensor<S>& a, const Tensor<S>& b, bool ta, bool tb) {
        const std::size_t m = ta ? a.cols() : a.rows();
        const std::size_t k = ta ? a.rows() : a.cols();
        const std::size_t n = tb ? b.rows() : b.cols();
        Tensor<S> c({m, n});
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t p = 0; p < k; ++p) {
                const S av = ta ? a.at(p, i) : a.at(i, p);
                if (av == S(0)) continue;
                for (std::size_t j = 0; j < n; ++j)
                    c.at(i, j) += av * (tb ? b.at(j, p) : b.at(p, j));
            }
        }
        return c;
    }

    static S normal_cdf(S x) {
        return S(0.5) * (S(1) + std::erf(x * S(0.70710678118654752440)));
    }
    static S normal_pdf(S x) {
        return std::exp(S(-0.5) * x * x) * S(0.39894228040143267794);
    }
};

// Non-differentiating log_softmax over the last dimension; accepts a vector
// or a matrix of rows.
template <typename S>
Tensor<S> log_softmax(const Tensor<S>& x) {
    Tensor<S> rows = x;
    if (rows.ndim() == 1) rows.shape = {1, rows.size()};
    Tape<S> tape;
    auto r = tape.log_softmax_rows(tape.constant(std::move(rows)));
    Tensor<S> out = tape.value(r);
    out.shape = x.shape;
    return out;
}

}  // namespace bridge
