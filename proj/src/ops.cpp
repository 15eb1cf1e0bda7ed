#include "covnli/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace covnli {
namespace {

Tape& tape_of(const Var& a, const Var& b) {
    a.tape().check_same(b);
    return a.tape();
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
    if (t.rank() != rank)
        throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got shape " +
                             to_string(t.shape()));
}

[[noreturn]] void mismatch(const char* op, const Tensor& a, const Tensor& b) {
    throw DimensionError(std::string(op) + ": incompatible shapes " + to_string(a.shape()) + " and " +
                         to_string(b.shape()));
}

// Broadcast kind for binary elementwise ops: 0 = identical shapes, n > 0 = row vector of width n.
std::size_t broadcast_width(const char* op, const Tensor& a, const Tensor& b, bool allow_rows) {
    if (a.shape() == b.shape()) return 0;
    if (allow_rows && a.rank() == 2 && b.rank() == 1 && a.cols() == b.size()) return b.size();
    mismatch(op, a, b);
}

template <typename Fwd, typename DA, typename DB>
Var binary(const char* op, Var a, Var b, bool allow_rows, Fwd fwd, DA da, DB db) {
    Tape& t = tape_of(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    const std::size_t bw = broadcast_width(op, av, bv, allow_rows);
    Tensor out(av.shape());
    auto o = out.data();
    auto x = av.data();
    auto y = bv.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = fwd(x[i], y[bw ? i % bw : i]);
    const std::size_t ia = a.id(), ib = b.id();
    return t.record(std::move(out), a.requires_grad() || b.requires_grad(),
                    [ia, ib, bw, da, db](Tape& tp, std::size_t self) {
                        const auto g = tp.grad(self).data();
                        const auto x = tp.value(ia).data();
                        const auto y = tp.value(ib).data();
                        if (tp.requires_grad(ia)) {
                            auto gx = tp.grad_buffer(ia).data();
                            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * da(x[i], y[bw ? i % bw : i]);
                        }
                        if (tp.requires_grad(ib)) {
                            auto gy = tp.grad_buffer(ib).data();
                            for (std::size_t i = 0; i < g.size(); ++i) {
                                const std::size_t j = bw ? i % bw : i;
                                gy[j] += g[i] * db(x[i], y[j]);
                            }
                        }
                    });
}

template <typename Fwd, typename Deriv>
Var unary(Var a, Fwd fwd, Deriv deriv) {
    Tape& t = a.tape();
    const Tensor& av = a.value();
    Tensor out(av.shape());
    auto o = out.data();
    auto x = av.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = fwd(x[i]);
    const std::size_t ia = a.id();
    return t.record(std::move(out), a.requires_grad(), [ia, deriv](Tape& tp, std::size_t self) {
        const auto g = tp.grad(self).data();
        const auto x = tp.value(ia).data();
        const auto y = tp.value(self).data();
        auto gx = tp.grad_buffer(ia).data();
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * deriv(x[i], y[i]);
    });
}

}  // namespace

Var matmul(Var a, Var b) {
    Tape& t = tape_of(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.rank() < 1 || av.rank() > 2 || bv.rank() < 1 || bv.rank() > 2) mismatch("matmul", av, bv);
    const std::size_t m = av.rank() == 2 ? av.shape()[0] : 1;
    const std::size_t k = av.rank() == 2 ? av.shape()[1] : av.shape()[0];
    const std::size_t kb = bv.shape()[0];
    const std::size_t n = bv.rank() == 2 ? bv.shape()[1] : 1;
    if (k != kb) mismatch("matmul", av, bv);

    Shape shape;
    if (av.rank() == 2) shape.push_back(m);
    if (bv.rank() == 2) shape.push_back(n);
    if (shape.empty()) shape.push_back(1);
    Tensor out(std::move(shape));
    auto o = out.data();
    const auto x = av.data();
    const auto y = bv.data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t l = 0; l < k; ++l) {
            const double xil = x[i * k + l];
            if (xil == 0.0) continue;
            const double* yr = y.data() + l * n;
            double* orow = o.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += xil * yr[j];
        }

    const std::size_t ia = a.id(), ib = b.id();
    return t.record(std::move(out), a.requires_grad() || b.requires_grad(),
                    [ia, ib, m, k, n](Tape& tp, std::size_t self) {
                        const auto g = tp.grad(self).data();
                        const auto x = tp.value(ia).data();
                        const auto y = tp.value(ib).data();
                        if (tp.requires_grad(ia)) {
                            auto gx = tp.grad_buffer(ia).data();
                            for (std::size_t i = 0; i < m; ++i)
                                for (std::size_t l = 0; l < k; ++l) {
                                    double s = 0.0;
                                    for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * y[l * n + j];
                                    gx[i * k + l] += s;
                                }
                        }
                        if (tp.requires_grad(ib)) {
                            auto gy = tp.grad_buffer(ib).data();
                            for (std::size_t i = 0; i < m; ++i)
                                for (std::size_t l = 0; l < k; ++l) {
                                    const double xil = x[i * k + l];
                                    for (std::size_t j = 0; j < n; ++j) gy[l * n + j] += xil * g[i * n + j];
                                }
                        }
                    });
}

Var matmul_nt(Var a, Var b) {
    Tape& t = tape_of(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.cols()) mismatch("matmul_nt", av, bv);
    const std::size_t m = av.rows(), n = bv.rows(), d = av.cols();
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        const auto ar = av.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            const auto br = bv.row(j);
            double s = 0.0;
            for (std::size_t l = 0; l < d; ++l) s += ar[l] * br[l];
            out(i, j) = s;
        }
    }
    const std::size_t ia = a.id(), ib = b.id();
    return t.record(std::move(out), a.requires_grad() || b.requires_grad(),
                    [ia, ib, m, n, d](Tape& tp, std::size_t self) {
                        const Tensor& g = tp.grad(self);
                        const Tensor& x = tp.value(ia);
                        const Tensor& y = tp.value(ib);
                        if (tp.requires_grad(ia)) {
                            Tensor& gx = tp.grad_buffer(ia);
                            for (std::size_t i = 0; i < m; ++i)
                                for (std::size_t j = 0; j < n; ++j) {
                                    const double gij = g(i, j);
                                    for (std::size_t l = 0; l < d; ++l) gx(i, l) += gij * y(j, l);
                                }
                        }
                        if (tp.requires_grad(ib)) {
                            Tensor& gy = tp.grad_buffer(ib);
                            for (std::size_t i = 0; i < m; ++i)
                                for (std::size_t j = 0; j < n; ++j) {
                                    const double gij = g(i, j);
                                    for (std::size_t l = 0; l < d; ++l) gy(j, l) += gij * x(i, l);
                                }
                        }
                    });
}

Var transpose(Var a) {
    const Tensor& av = a.value();
    require_rank(av, 2, "transpose");
    const std::size_t m = av.rows(), n = av.cols();
    Tensor out({n, m});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out(j, i) = av(i, j);
    const std::size_t ia = a.id();
    return a.tape().record(std::move(out), a.requires_grad(), [ia, m, n](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        Tensor& gx = tp.grad_buffer(ia);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) gx(i, j) += g(j, i);
    });
}

Var add(Var a, Var b) {
    return binary(
        "add", a, b, true, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
        [](double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
    return binary(
        "sub", a, b, true, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
        [](double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
    return binary(
        "mul", a, b, true, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
        [](double x, double) { return x; });
}

Var abs_diff(Var a, Var b) {
    if (a.requires_grad() || b.requires_grad()) {
        const auto x = a.value().data();
        const auto y = b.value().data();
        if (x.size() == y.size())
            for (std::size_t i = 0; i < x.size(); ++i)
                if (x[i] != y[i]) a.tape().note_kink(std::abs(x[i] - y[i]));
    }
    return binary(
        "abs_diff", a, b, false, [](double x, double y) { return std::abs(x - y); },
        [](double x, double y) { return x > y ? 1.0 : (x < y ? -1.0 : 0.0); },
        [](double x, double y) { return x > y ? -1.0 : (x < y ? 1.0 : 0.0); });
}

Var relu(Var a) {
    if (a.requires_grad())
        for (double x : a.value().data())
            if (x != 0.0) a.tape().note_kink(std::abs(x));
    return unary(
        a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var tanh(Var a) {
    return unary(
        a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var scale(Var a, double c) {
    return unary(
        a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var sum(Var a) {
    double s = 0.0;
    for (double x : a.value().data()) s += x;
    const std::size_t ia = a.id();
    return a.tape().record(Tensor({1}, {s}), a.requires_grad(), [ia](Tape& tp, std::size_t self) {
        const double g = tp.grad(self)[0];
        for (auto& gx : tp.grad_buffer(ia).data()) gx += g;
    });
}

RowMax row_max_argmax(Var a) {
    const Tensor& av = a.value();
    require_rank(av, 2, "row_max_argmax");
    const std::size_t m = av.rows(), n = av.cols();
    if (m == 0 || n == 0) throw DimensionError("row_max_argmax: empty rows in shape " + to_string(av.shape()));
    Tensor values({m});
    std::vector<std::size_t> idx(m);
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
        const auto r = av.row(i);
        std::size_t best = 0;
        for (std::size_t j = 1; j < n; ++j)
            if (r[j] > r[best]) best = j;
        idx[i] = best;
        values[i] = r[best];
        for (std::size_t j = 0; j < n; ++j)
            if (r[j] != r[best]) margin = std::min(margin, r[best] - r[j]);
    }
    if (a.requires_grad()) a.tape().note_kink(margin);
    const std::size_t ia = a.id();
    Var v = a.tape().record(std::move(values), a.requires_grad(), [ia, idx, n](Tape& tp, std::size_t self) {
        const auto g = tp.grad(self).data();
        auto gx = tp.grad_buffer(ia).data();
        for (std::size_t i = 0; i < g.size(); ++i) gx[i * n + idx[i]] += g[i];
    });
    return {v, std::move(idx)};
}

Var conv1d(Var x, Var w, Var b, std::size_t window, std::size_t left_pad) {
    Tape& t = tape_of(x, w);
    t.check_same(b);
    const Tensor& xv = x.value();
    const Tensor& wv = w.value();
    const Tensor& bv = b.value();
    require_rank(xv, 2, "conv1d");
    require_rank(wv, 2, "conv1d");
    require_rank(bv, 1, "conv1d");
    const std::size_t L = xv.rows(), in = xv.cols(), out_w = wv.cols();
    if (L == 0) throw EmptyInputError("conv1d: empty sequence");
    if (window == 0 || left_pad >= window) throw DimensionError("conv1d: invalid window/padding");
    if (wv.rows() != window * in || bv.size() != out_w)
        throw DimensionError("conv1d: weight " + to_string(wv.shape()) + " / bias " + to_string(bv.shape()) +
                             " incompatible with input " + to_string(xv.shape()) + " and window " +
                             std::to_string(window));

    Tensor out({L, out_w});
    for (std::size_t i = 0; i < L; ++i) {
        auto o = out.row(i);
        for (std::size_t j = 0; j < out_w; ++j) o[j] = bv[j];
        for (std::size_t tap = 0; tap < window; ++tap) {
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(i + tap) - static_cast<std::ptrdiff_t>(left_pad);
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(L)) continue;
            const auto xr = xv.row(static_cast<std::size_t>(src));
            for (std::size_t c = 0; c < in; ++c) {
                const double xc = xr[c];
                if (xc == 0.0) continue;
                const double* wr = wv.data().data() + (tap * in + c) * out_w;
                for (std::size_t j = 0; j < out_w; ++j) o[j] += xc * wr[j];
            }
        }
    }

    const std::size_t ix = x.id(), iw = w.id(), ib = b.id();
    const bool rg = x.requires_grad() || w.requires_grad() || b.requires_grad();
    return t.record(std::move(out), rg, [=](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        const Tensor& xv = tp.value(ix);
        const Tensor& wv = tp.value(iw);
        if (tp.requires_grad(ib)) {
            auto gb = tp.grad_buffer(ib).data();
            for (std::size_t i = 0; i < L; ++i)
                for (std::size_t j = 0; j < out_w; ++j) gb[j] += g(i, j);
        }
        const bool gx_needed = tp.requires_grad(ix);
        const bool gw_needed = tp.requires_grad(iw);
        if (!gx_needed && !gw_needed) return;
        Tensor* gx = gx_needed ? &tp.grad_buffer(ix) : nullptr;
        Tensor* gw = gw_needed ? &tp.grad_buffer(iw) : nullptr;
        for (std::size_t i = 0; i < L; ++i) {
            const auto gr = g.row(i);
            for (std::size_t tap = 0; tap < window; ++tap) {
                const std::ptrdiff_t src =
                    static_cast<std::ptrdiff_t>(i + tap) - static_cast<std::ptrdiff_t>(left_pad);
                if (src < 0 || src >= static_cast<std::ptrdiff_t>(L)) continue;
                const auto s = static_cast<std::size_t>(src);
                const auto xr = xv.row(s);
                for (std::size_t c = 0; c < in; ++c) {
                    const std::size_t wrow = (tap * in + c) * out_w;
                    if (gx) {
                        const double* wr = wv.data().data() + wrow;
                        double acc = 0.0;
                        for (std::size_t j = 0; j < out_w; ++j) acc += gr[j] * wr[j];
                        (*gx)(s, c) += acc;
                    }
                    if (gw) {
                        const double xc = xr[c];
                        if (xc == 0.0) continue;
                        double* gwr = gw->data().data() + wrow;
                        for (std::size_t j = 0; j < out_w; ++j) gwr[j] += xc * gr[j];
                    }
                }
            }
        }
    });
}

Var conv1d_w2(Var x, Var w, Var b) { return tanh(conv1d(x, w, b, 2, 0)); }

Var concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw DimensionError("concat_cols: no parts");
    Tape& t = parts.front().tape();
    const std::size_t m = parts.front().value().rows();
    std::size_t total = 0;
    bool rg = false;
    std::vector<std::size_t> ids, widths;
    for (const Var& p : parts) {
        t.check_same(p);
        const Tensor& v = p.value();
        require_rank(v, 2, "concat_cols");
        if (v.rows() != m) mismatch("concat_cols", parts.front().value(), v);
        total += v.cols();
        rg = rg || p.requires_grad();
        ids.push_back(p.id());
        widths.push_back(v.cols());
    }
    Tensor out({m, total});
    std::size_t off = 0;
    for (const Var& p : parts) {
        const Tensor& v = p.value();
        for (std::size_t i = 0; i < m; ++i) std::copy_n(v.row(i).begin(), v.cols(), out.row(i).begin() + off);
        off += v.cols();
    }
    return t.record(std::move(out), rg, [ids, widths, m, total](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        std::size_t off = 0;
        for (std::size_t p = 0; p < ids.size(); ++p) {
            if (tp.requires_grad(ids[p])) {
                Tensor& gp = tp.grad_buffer(ids[p]);
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < widths[p]; ++j) gp(i, j) += g.data()[i * total + off + j];
            }
            off += widths[p];
        }
    });
}

Var concat_cols(std::initializer_list<Var> parts) { return concat_cols(std::span<const Var>(parts.begin(), parts.size())); }

Var concat(std::initializer_list<Var> parts) {
    if (parts.size() == 0) throw DimensionError("concat: no parts");
    Tape& t = parts.begin()->tape();
    std::vector<std::size_t> ids, sizes;
    std::vector<double> data;
    bool rg = false;
    for (const Var& p : parts) {
        t.check_same(p);
        require_rank(p.value(), 1, "concat");
        const auto d = p.value().data();
        data.insert(data.end(), d.begin(), d.end());
        ids.push_back(p.id());
        sizes.push_back(d.size());
        rg = rg || p.requires_grad();
    }
    const std::size_t n = data.size();
    return t.record(Tensor({n}, std::move(data)), rg, [ids, sizes](Tape& tp, std::size_t self) {
        const auto g = tp.grad(self).data();
        std::size_t off = 0;
        for (std::size_t p = 0; p < ids.size(); ++p) {
            if (tp.requires_grad(ids[p])) {
                auto gp = tp.grad_buffer(ids[p]).data();
                for (std::size_t i = 0; i < sizes[p]; ++i) gp[i] += g[off + i];
            }
            off += sizes[p];
        }
    });
}

Var as_column(Var v) {
    require_rank(v.value(), 1, "as_column");
    const std::size_t m = v.value().size();
    const auto d = v.value().data();
    const std::size_t iv = v.id();
    return v.tape().record(Tensor({m, 1}, std::vector<double>(d.begin(), d.end())), v.requires_grad(),
                           [iv](Tape& tp, std::size_t self) {
                               const auto g = tp.grad(self).data();
                               auto gv = tp.grad_buffer(iv).data();
                               for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i];
                           });
}

Var pad_cols(Var x, std::size_t k) {
    const Tensor& xv = x.value();
    require_rank(xv, 2, "pad_cols");
    const std::size_t m = xv.rows(), n = xv.cols();
    Tensor out({m, n + k});
    for (std::size_t i = 0; i < m; ++i) std::copy_n(xv.row(i).begin(), n, out.row(i).begin());
    const std::size_t ix = x.id();
    return x.tape().record(std::move(out), x.requires_grad(), [ix, m, n, k](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        Tensor& gx = tp.grad_buffer(ix);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) gx(i, j) += g.data()[i * (n + k) + j];
    });
}

Var pool_max_avg(Var x) {
    const Tensor& xv = x.value();
    require_rank(xv, 2, "pool_max_avg");
    const std::size_t L = xv.rows(), d = xv.cols();
    if (L == 0) throw DimensionError("pool_max_avg: empty sequence");
    Tensor out({2 * d});
    std::vector<std::size_t> arg(d, 0);
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < d; ++j) {
        double best = xv(0, j), s = 0.0;
        for (std::size_t i = 0; i < L; ++i) {
            const double v = xv(i, j);
            s += v;
            if (v > best) {
                best = v;
                arg[j] = i;
            }
        }
        for (std::size_t i = 0; i < L; ++i)
            if (xv(i, j) != best) margin = std::min(margin, best - xv(i, j));
        out[j] = best;
        out[d + j] = s / static_cast<double>(L);
    }
    if (x.requires_grad()) x.tape().note_kink(margin);
    const std::size_t ix = x.id();
    return x.tape().record(std::move(out), x.requires_grad(), [ix, arg, L, d](Tape& tp, std::size_t self) {
        const auto g = tp.grad(self).data();
        Tensor& gx = tp.grad_buffer(ix);
        const double inv = 1.0 / static_cast<double>(L);
        for (std::size_t j = 0; j < d; ++j) {
            gx(arg[j], j) += g[j];
            for (std::size_t i = 0; i < L; ++i) gx(i, j) += g[d + j] * inv;
        }
    });
}

Var mean_rows(Var x) {
    const Tensor& xv = x.value();
    require_rank(xv, 2, "mean_rows");
    const std::size_t L = xv.rows(), d = xv.cols();
    if (L == 0) throw DimensionError("mean_rows: empty sequence");
    Tensor out({d});
    for (std::size_t i = 0; i < L; ++i)
        for (std::size_t j = 0; j < d; ++j) out[j] += xv(i, j);
    for (auto& v : out.data()) v /= static_cast<double>(L);
    const std::size_t ix = x.id();
    return x.tape().record(std::move(out), x.requires_grad(), [ix, L, d](Tape& tp, std::size_t self) {
        const auto g = tp.grad(self).data();
        Tensor& gx = tp.grad_buffer(ix);
        const double inv = 1.0 / static_cast<double>(L);
        for (std::size_t i = 0; i < L; ++i)
            for (std::size_t j = 0; j < d; ++j) gx(i, j) += g[j] * inv;
    });
}

Var softmax(Var v) {
    const Tensor& x = v.value();
    require_rank(x, 1, "softmax");
    if (x.size() == 0) throw DimensionError("softmax: empty vector");
    Tensor out(x.shape());
    const double mx = *std::max_element(x.data().begin(), x.data().end());
    double z = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) z += (out[i] = std::exp(x[i] - mx));
    for (auto& y : out.data()) y /= z;
    const std::size_t iv = v.id();
    return v.tape().record(std::move(out), v.requires_grad(), [iv](Tape& tp, std::size_t self) {
        const auto g = tp.grad(self).data();
        const auto y = tp.value(self).data();
        double dot = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * y[i];
        auto gx = tp.grad_buffer(iv).data();
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += y[i] * (g[i] - dot);
    });
}

Var l2_normalize_rows(Var x) {
    const Tensor& xv = x.value();
    require_rank(xv, 2, "l2_normalize_rows");
    const std::size_t m = xv.rows(), d = xv.cols();
    Tensor out(xv.shape());
    std::vector<double> norms(m);
    for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (double v : xv.row(i)) s += v * v;
        norms[i] = std::sqrt(s);
        if (norms[i] > 0.0)
            for (std::size_t j = 0; j < d; ++j) out(i, j) = xv(i, j) / norms[i];
    }
    const std::size_t ix = x.id();
    return x.tape().record(std::move(out), x.requires_grad(), [ix, norms, m, d](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        const Tensor& y = tp.value(self);
        Tensor& gx = tp.grad_buffer(ix);
        for (std::size_t i = 0; i < m; ++i) {
            if (norms[i] == 0.0) continue;
            double dot = 0.0;
            for (std::size_t j = 0; j < d; ++j) dot += g(i, j) * y(i, j);
            for (std::size_t j = 0; j < d; ++j) gx(i, j) += (g(i, j) - y(i, j) * dot) / norms[i];
        }
    });
}

Var affine(Var x, Var w, Var b) {
    const Tensor& bv = b.value();
    require_rank(bv, 1, "affine");
    if (w.value().rank() != 2 || bv.size() != w.value().cols()) mismatch("affine", w.value(), bv);
    return add(matmul(x, w), b);
}

Var embedding_lookup(Var table, std::span<const std::size_t> ids) {
    const Tensor& tv = table.value();
    require_rank(tv, 2, "embedding_lookup");
    const std::size_t V = tv.rows(), d = tv.cols();
    if (ids.empty()) throw EmptyInputError("embedding_lookup: empty token sequence");
    Tensor out({ids.size(), d});
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] >= V) throw IndexError("token id " + std::to_string(ids[i]) + " outside vocabulary of size " + std::to_string(V));
        std::copy_n(tv.row(ids[i]).begin(), d, out.row(i).begin());
    }
    const std::size_t it = table.id();
    std::vector<std::size_t> idv(ids.begin(), ids.end());
    return table.tape().record(std::move(out), table.requires_grad(), [it, idv, d](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        Tensor& gt = tp.grad_buffer(it);
        for (std::size_t i = 0; i < idv.size(); ++i)
            for (std::size_t j = 0; j < d; ++j) gt(idv[i], j) += g(i, j);
    });
}

Var softmax_cross_entropy(Var logits, std::size_t gold) {
    const Tensor& z = logits.value();
    require_rank(z, 1, "softmax_cross_entropy");
    if (z.size() < 2) throw DimensionError("softmax_cross_entropy: need at least two classes");
    if (gold >= z.size())
        throw IndexError("gold class " + std::to_string(gold) + " outside [0, " + std::to_string(z.size()) + ")");
    const double mx = *std::max_element(z.data().begin(), z.data().end());
    double s = 0.0;
    for (double v : z.data()) s += std::exp(v - mx);
    const double lse = mx + std::log(s);
    const std::size_t iz = logits.id();
    return logits.tape().record(Tensor({1}, {lse - z[gold]}), logits.requires_grad(),
                                [iz, gold, lse](Tape& tp, std::size_t self) {
                                    const double g = tp.grad(self)[0];
                                    const auto z = tp.value(iz).data();
                                    auto gz = tp.grad_buffer(iz).data();
                                    for (std::size_t i = 0; i < z.size(); ++i)
                                        gz[i] += g * (std::exp(z[i] - lse) - (i == gold ? 1.0 : 0.0));
                                });
}

}  // namespace covnli
