#include "layoutkit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "layoutkit/errors.hpp"
#include "layoutkit/rng.hpp"

namespace layoutkit::ad {

namespace {

int64_t shape_numel(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
}

std::string shape_str(const std::vector<int>& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

int normalize_axis(int axis, int rank, const char* op) {
    if (axis < 0) axis += rank;
    if (axis < 0 || axis >= rank) {
        throw RuntimeError(std::string(op) + ": axis out of range for rank " + std::to_string(rank));
    }
    return axis;
}

// outer * len * inner decomposition around one axis.
struct AxisSplit {
    int64_t outer, len, inner;
};

AxisSplit split_axis(const std::vector<int>& shape, int axis) {
    AxisSplit s{1, shape[static_cast<size_t>(axis)], 1};
    for (int i = 0; i < axis; ++i) s.outer *= shape[static_cast<size_t>(i)];
    for (size_t i = static_cast<size_t>(axis) + 1; i < shape.size(); ++i) {
        s.inner *= shape[i];
    }
    return s;
}

bool is_suffix(const std::vector<int>& small, const std::vector<int>& big) {
    if (small.size() > big.size()) return false;
    return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

}  // namespace

Tensor make_node(std::vector<int> shape, std::vector<Tensor> parents, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value.assign(static_cast<size_t>(n->numel()), 0.0);
    n->requires_grad = requires_grad;
    for (auto& p : parents) n->parents.push_back(p.node());
    return Tensor(std::move(n));
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    return make_node(std::move(shape), {}, requires_grad);
}

Tensor Tensor::full(std::vector<int> shape, double v, bool requires_grad) {
    Tensor t = zeros(std::move(shape), requires_grad);
    std::fill(t.data().begin(), t.data().end(), v);
    return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> data, bool requires_grad) {
    Tensor t = make_node(std::move(shape), {}, requires_grad);
    if (static_cast<int64_t>(data.size()) != t.numel()) {
        throw RuntimeError("tensor from(): data size " + std::to_string(data.size()) +
                           " does not match shape " + shape_str(t.shape()));
    }
    t.node()->value = std::move(data);
    return t;
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return from({1}, {v}, requires_grad);
}

double Tensor::value() const {
    if (numel() != 1) throw RuntimeError("value(): tensor is not scalar, shape " + shape_str(shape()));
    return node_->value[0];
}

double Tensor::at(std::initializer_list<int> idx) const {
    const auto& s = shape();
    if (idx.size() != s.size()) throw RuntimeError("at(): rank mismatch");
    int64_t off = 0;
    size_t i = 0;
    for (int v : idx) {
        off = off * s[i] + v;
        ++i;
    }
    return node_->value[static_cast<size_t>(off)];
}

void shape_error(const std::string& op, const std::vector<const Tensor*>& args) {
    std::ostringstream os;
    os << op << ": incompatible shapes";
    for (const auto* t : args) os << " " << shape_str(t->shape());
    throw RuntimeError(os.str());
}

// ---------------------------------------------------------------- binary ops

namespace {

using BinaryFwd = double (*)(double, double);
using BinaryBwd = void (*)(double a, double b, double g, double* da, double* db);

Tensor binary_op(const char* name, const Tensor& a, const Tensor& b, BinaryFwd fwd,
                 BinaryBwd bwd) {
    const bool a_small = a.numel() < b.numel();
    const Tensor& big = a_small ? b : a;
    const Tensor& small = a_small ? a : b;
    if (!(a.shape() == b.shape() || small.numel() == 1 ||
          is_suffix(small.shape(), big.shape()))) {
        shape_error(name, {&a, &b});
    }

    const bool rg = grad_enabled() && (a.requires_grad() || b.requires_grad());
    Tensor out = make_node(big.shape(), rg ? std::vector<Tensor>{a, b} : std::vector<Tensor>{},
                           rg);
    const int64_t n = big.numel();
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* po = out.data().data();
    const int64_t an = a.numel(), bn = b.numel();
    for (int64_t i = 0; i < n; ++i) {
        po[i] = fwd(pa[an == n ? i : i % an], pb[bn == n ? i : i % bn]);
    }
    if (!rg) return out;

    out.node()->backward_fn = [bwd, n, an, bn](Node& node) {
        auto& pa_n = node.parents[0];
        auto& pb_n = node.parents[1];
        const double* g = node.grad.data();
        const double* av = pa_n->value.data();
        const double* bv = pb_n->value.data();
        double* da = nullptr;
        double* db = nullptr;
        if (pa_n->requires_grad) {
            pa_n->ensure_grad();
            da = pa_n->grad.data();
        }
        if (pb_n->requires_grad) {
            pb_n->ensure_grad();
            db = pb_n->grad.data();
        }
        for (int64_t i = 0; i < n; ++i) {
            const int64_t ia = an == n ? i : i % an;
            const int64_t ib = bn == n ? i : i % bn;
            double ga = 0, gb = 0;
            bwd(av[ia], bv[ib], g[i], &ga, &gb);
            if (da) da[ia] += ga;
            if (db) db[ib] += gb;
        }
    };
    return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_op(
        "add", a, b, [](double x, double y) { return x + y; },
        [](double, double, double g, double* da, double* db) {
            *da = g;
            *db = g;
        });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_op(
        "sub", a, b, [](double x, double y) { return x - y; },
        [](double, double, double g, double* da, double* db) {
            *da = g;
            *db = -g;
        });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_op(
        "mul", a, b, [](double x, double y) { return x * y; },
        [](double x, double y, double g, double* da, double* db) {
            *da = g * y;
            *db = g * x;
        });
}

Tensor div(const Tensor& a, const Tensor& b) {
    return binary_op(
        "div", a, b, [](double x, double y) { return x / y; },
        [](double x, double y, double g, double* da, double* db) {
            *da = g / y;
            *db = -g * x / (y * y);
        });
}

Tensor minimum(const Tensor& a, const Tensor& b) {
    return binary_op(
        "minimum", a, b, [](double x, double y) { return x < y ? x : y; },
        [](double x, double y, double g, double* da, double* db) {
            if (x <= y) *da = g; else *db = g;
        });
}

Tensor maximum(const Tensor& a, const Tensor& b) {
    return binary_op(
        "maximum", a, b, [](double x, double y) { return x > y ? x : y; },
        [](double x, double y, double g, double* da, double* db) {
            if (x >= y) *da = g; else *db = g;
        });
}

// ----------------------------------------------------------------- unary ops

namespace {

using UnaryFwd = double (*)(double);
// derivative expressed from (input, output) so sigmoid/tanh reuse the output
using UnaryBwd = double (*)(double x, double y);

Tensor unary_op(const char* /*name*/, const Tensor& a, UnaryFwd fwd, UnaryBwd bwd) {
    const bool rg = grad_enabled() && a.requires_grad();
    Tensor out = make_node(a.shape(), rg ? std::vector<Tensor>{a} : std::vector<Tensor>{}, rg);
    const int64_t n = a.numel();
    const double* pa = a.data().data();
    double* po = out.data().data();
    for (int64_t i = 0; i < n; ++i) po[i] = fwd(pa[i]);
    if (!rg) return out;
    out.node()->backward_fn = [bwd, n](Node& node) {
        auto& p = node.parents[0];
        if (!p->requires_grad) return;
        p->ensure_grad();
        const double* g = node.grad.data();
        const double* x = p->value.data();
        const double* y = node.value.data();
        double* dx = p->grad.data();
        for (int64_t i = 0; i < n; ++i) dx[i] += g[i] * bwd(x[i], y[i]);
    };
    return out;
}

}  // namespace

Tensor exp(const Tensor& a) {
    return unary_op("exp", a, [](double x) { return std::exp(x); },
                    [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
    return unary_op("log", a, [](double x) { return std::log(x); },
                    [](double x, double) { return 1.0 / x; });
}

Tensor sigmoid(const Tensor& a) {
    return unary_op("sigmoid", a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                    [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
    return unary_op("tanh", a, [](double x) { return std::tanh(x); },
                    [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& a) {
    return unary_op("relu", a, [](double x) { return x > 0 ? x : 0.0; },
                    [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Tensor neg(const Tensor& a) {
    return unary_op("neg", a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Tensor scale(const Tensor& a, double s) {
    Tensor out = mul(a, Tensor::scalar(s));
    return out;
}

Tensor add_scalar(const Tensor& a, double c) { return add(a, Tensor::scalar(c)); }

Tensor clamp(const Tensor& a, double lo, double hi) {
    const bool rg = grad_enabled() && a.requires_grad();
    Tensor out = make_node(a.shape(), rg ? std::vector<Tensor>{a} : std::vector<Tensor>{}, rg);
    const int64_t n = a.numel();
    const double* pa = a.data().data();
    double* po = out.data().data();
    for (int64_t i = 0; i < n; ++i) po[i] = std::clamp(pa[i], lo, hi);
    if (!rg) return out;
    out.node()->backward_fn = [n, lo, hi](Node& node) {
        auto& p = node.parents[0];
        if (!p->requires_grad) return;
        p->ensure_grad();
        const double* g = node.grad.data();
        const double* x = p->value.data();
        double* dx = p->grad.data();
        for (int64_t i = 0; i < n; ++i) {
            if (x[i] >= lo && x[i] <= hi) dx[i] += g[i];
        }
    };
    return out;
}

// --------------------------------------------------------------- structural

Tensor reshape(const Tensor& a, std::vector<int> shape) {
    if (shape_numel(shape) != a.numel()) {
        throw RuntimeError("reshape: cannot reshape " + shape_str(a.shape()) + " into " +
                           shape_str(shape));
    }
    const bool rg = grad_enabled() && a.requires_grad();
    Tensor out = make_node(std::move(shape), rg ? std::vector<Tensor>{a} : std::vector<Tensor>{},
                           rg);
    out.node()->value = a.data();
    if (!rg) return out;
    out.node()->backward_fn = [](Node& node) {
        auto& p = node.parents[0];
        if (!p->requires_grad) return;
        p->ensure_grad();
        for (size_t i = 0; i < node.grad.size(); ++i) p->grad[i] += node.grad[i];
    };
    return out;
}

Tensor permute(const Tensor& a, const std::vector<int>& axes) {
    const int r = a.rank();
    if (static_cast<int>(axes.size()) != r) throw RuntimeError("permute: axes rank mismatch");
    std::vector<int> out_shape(static_cast<size_t>(r));
    std::vector<bool> seen(static_cast<size_t>(r), false);
    for (int i = 0; i < r; ++i) {
        const int ax = axes[static_cast<size_t>(i)];
        if (ax < 0 || ax >= r || seen[static_cast<size_t>(ax)]) {
            throw RuntimeError("permute: invalid axes");
        }
        seen[static_cast<size_t>(ax)] = true;
        out_shape[static_cast<size_t>(i)] = a.dim(ax);
    }

    // src index for every output position
    std::vector<int64_t> in_strides(static_cast<size_t>(r), 1);
    for (int i = r - 2; i >= 0; --i) {
        in_strides[static_cast<size_t>(i)] =
            in_strides[static_cast<size_t>(i + 1)] * a.dim(i + 1);
    }
    const int64_t n = a.numel();
    auto src_of = std::make_shared<std::vector<int64_t>>(static_cast<size_t>(n));
    std::vector<int> idx(static_cast<size_t>(r), 0);
    for (int64_t o = 0; o < n; ++o) {
        int64_t src = 0;
        for (int i = 0; i < r; ++i) {
            src += static_cast<int64_t>(idx[static_cast<size_t>(i)]) *
                   in_strides[static_cast<size_t>(axes[static_cast<size_t>(i)])];
        }
        (*src_of)[static_cast<size_t>(o)] = src;
        for (int i = r - 1; i >= 0; --i) {
            if (++idx[static_cast<size_t>(i)] < out_shape[static_cast<size_t>(i)]) break;
            idx[static_cast<size_t>(i)] = 0;
        }
    }

    const bool rg = grad_enabled() && a.requires_grad();
    Tensor out = make_node(std::move(out_shape),
                           rg ? std::vector<Tensor>{a} : std::vector<Tensor>{}, rg);
    const double* pa = a.data().data();
    double* po = out.data().data();
    for (int64_t o = 0; o < n; ++o) po[o] = pa[(*src_of)[static_cast<size_t>(o)]];
    if (!rg) return out;
    out.node()->backward_fn = [src_of, n](Node& node) {
        auto& p = node.parents[0];
        if (!p->requires_grad) return;
        p->ensure_grad();
        const double* g = node.grad.data();
        double* dx = p->grad.data();
        for (int64_t o = 0; o < n; ++o) dx[(*src_of)[static_cast<size_t>(o)]] += g[o];
    };
    return out;
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
    if (parts.empty()) throw RuntimeError("concat: no inputs");
    const int r = parts[0].rank();
    axis = normalize_axis(axis, r, "concat");
    std::vector<int> out_shape = parts[0].shape();
    int total = 0;
    bool rg = false;
    for (const auto& p : parts) {
        if (p.rank() != r) shape_error("concat", {&parts[0], &p});
        for (int i = 0; i < r; ++i) {
            if (i != axis && p.dim(i) != out_shape[static_cast<size_t>(i)]) {
                shape_error("concat", {&parts[0], &p});
            }
        }
        total += p.dim(axis);
        rg = rg || p.requires_grad();
    }
    rg = rg && grad_enabled();
    out_shape[static_cast<size_t>(axis)] = total;

    Tensor out = make_node(out_shape, rg ? parts : std::vector<Tensor>{}, rg);
    const AxisSplit sp = split_axis(out_shape, axis);
    double* po = out.data().data();
    int64_t col_off = 0;
    std::vector<int64_t> part_lens;
    for (const auto& p : parts) {
        const int64_t len = p.dim(axis);
        part_lens.push_back(len);
        const double* src = p.data().data();
        for (int64_t o = 0; o < sp.outer; ++o) {
            std::copy(src + o * len * sp.inner, src + (o + 1) * len * sp.inner,
                      po + (o * sp.len + col_off) * sp.inner);
        }
        col_off += len;
    }
    if (!rg) return out;
    out.node()->backward_fn = [sp, part_lens](Node& node) {
        const double* g = node.grad.data();
        int64_t off = 0;
        for (size_t k = 0; k < node.parents.size(); ++k) {
            auto& p = node.parents[k];
            const int64_t len = part_lens[k];
            if (p->requires_grad) {
                p->ensure_grad();
                double* dx = p->grad.data();
                for (int64_t o = 0; o < sp.outer; ++o) {
                    const double* gs = g + (o * sp.len + off) * sp.inner;
                    double* ds = dx + o * len * sp.inner;
                    for (int64_t i = 0; i < len * sp.inner; ++i) ds[i] += gs[i];
                }
            }
            off += len;
        }
    };
    return out;
}

Tensor slice(const Tensor& a, int axis, int start, int len) {
    axis = normalize_axis(axis, a.rank(), "slice");
    if (start < 0 || len <= 0 || start + len > a.dim(axis)) {
        throw RuntimeError("slice: range [" + std::to_string(start) + "," +
                           std::to_string(start + len) + ") out of bounds for axis size " +
                           std::to_string(a.dim(axis)));
    }
    std::vector<int> out_shape = a.shape();
    out_shape[static_cast<size_t>(axis)] = len;
    const bool rg = grad_enabled() && a.requires_grad();
    Tensor out = make_node(out_shape, rg ? std::vector<Tensor>{a} : std::vector<Tensor>{}, rg);
    const AxisSplit sp = split_axis(a.shape(), axis);
    const double* pa = a.data().data();
    double* po = out.data().data();
    for (int64_t o = 0; o < sp.outer; ++o) {
        std::copy(pa + (o * sp.len + start) * sp.inner,
                  pa + (o * sp.len + start + len) * sp.inner, po + o * len * sp.inner);
    }
    if (!rg) return out;
    out.node()->backward_fn = [sp, start, len](Node& node) {
        auto& p = node.parents[0];
        if (!p->requires_grad) return;
        p->ensure_grad();
        const double* g = node.grad.data();
        double* dx = p->grad.data();
        for (int64_t o = 0; o < sp.outer; ++o) {
            const double* gs = g + o * len * sp.inner;
            double* ds = dx + (o * sp.len + start) * sp.inner;
            for (int64_t i = 0; i < len * sp.inner; ++i) ds[i] += gs[i];
        }
    };
    return out;
}

Tensor gather_rows(const Tensor& a, const std::vector<int>& rows) {
    if (a.rank() != 2) throw RuntimeError("gather_rows: input must be 2D, got " + shape_str(a.shape()));
    const int cols = a.dim(1);
    for (int r : rows) {
        if (r < 0 || r >= a.dim(0)) {
            throw RuntimeError("gather_rows: row index " + std::to_string(r) +
                               " out of range [0," + std::to_string(a.dim(0)) + ")");
        }
    }
    const bool rg = grad_enabled() && a.requires_grad();
    Tensor out = make_node({static_cast<int>(rows.size()), cols},
                           rg ? std::vector<Tensor>{a} : std::vector<Tensor>{}, rg);
    const double* pa = a.data().data();
    double* po = out.data().data();
    for (size_t i = 0; i < rows.size(); ++i) {
        std::copy(pa + static_cast<int64_t>(rows[i]) * cols,
                  pa + static_cast<int64_t>(rows[i] + 1) * cols,
                  po + static_cast<int64_t>(i) * cols);
    }
    if (!rg) return out;
    out.node()->backward_fn = [rows, cols](Node& node) {
        auto& p = node.parents[0];
        if (!p->requires_grad) return;
        p->ensure_grad();
        const double* g = node.grad.data();
        double* dx = p->grad.data();
        for (size_t i = 0; i < rows.size(); ++i) {
            const double* gs = g + static_cast<int64_t>(i) * cols;
            double* ds = dx + static_cast<int64_t>(rows[i]) * cols;
            for (int c = 0; c < cols; ++c) ds[c] += gs[c];
        }
    };
    return out;
}

Tensor select_index(const Tensor& a, const std::vector<int>& idx) {
    if (a.rank() != 2) throw RuntimeError("select_index: input must be 2D");
    const int rows = a.dim(0), cols = a.dim(1);
    if (static_cast<int>(idx.size()) != rows) {
        throw RuntimeError("select_index: need one index per row");
    }
    for (int c : idx) {
        if (c < 0 || c >= cols) {
            throw RuntimeError("select_index: column index " + std::to_string(c) + " out of range");
        }
    }
    const bool rg = grad_enabled() && a.requires_grad();
    Tensor out = make_node({rows}, rg ? std::vector<Tensor>{a} : std::vector<Tensor>{}, rg);
    const double* pa = a.data().data();
    double* po = out.data().data();
    for (int i = 0; i < rows; ++i) po[i] = pa[static_cast<int64_t>(i) * cols + idx[static_cast<size_t>(i)]];
    if (!rg) return out;
    out.node()->backward_fn = [idx, rows, cols](Node& node) {
        auto& p = node.parents[0];
        if (!p->requires_grad) return;
        p->ensure_grad();
        for (int i = 0; i < rows; ++i) {
            p->grad[static_cast<size_t>(static_cast<int64_t>(i) * cols + idx[static_cast<size_t>(i)])] +=
                node.grad[static_cast<size_t>(i)];
        }
    };
    return out;
}

Tensor embedding_gather(const Tensor& table, const std::vector<int>& ids) {
    if (table.rank() != 2) throw RuntimeError("embedding_gather: table must be 2D");
    for (int id : ids) {
        if (id < 0 || id >= table.dim(0)) {
            throw RuntimeError("embedding_gather: id " + std::to_string(id) +
                               " out of range [0," + std::to_string(table.dim(0)) + ")");
        }
    }
    return gather_rows(table, ids);
}

// ------------------------------------------------------------------- matmul

Tensor matmul(const Tensor& a, const Tensor& b) {
    int64_t batch = 1;
    int M, K, N;
    if (a.rank() == 2 && b.rank() == 2) {
        M = a.dim(0); K = a.dim(1); N = b.dim(1);
        if (b.dim(0) != K) shape_error("matmul", {&a, &b});
    } else if (a.rank() == 3 && b.rank() == 3) {
        if (a.dim(0) != b.dim(0) || b.dim(1) != a.dim(2)) shape_error("matmul", {&a, &b});
        batch = a.dim(0); M = a.dim(1); K = a.dim(2); N = b.dim(2);
    } else {
        shape_error("matmul", {&a, &b});
    }
    std::vector<int> out_shape = a.rank() == 2 ? std::vector<int>{M, N}
                                               : std::vector<int>{static_cast<int>(batch), M, N};
    const bool rg = grad_enabled() && (a.requires_grad() || b.requires_grad());
    Tensor out = make_node(std::move(out_shape),
                           rg ? std::vector<Tensor>{a, b} : std::vector<Tensor>{}, rg);

    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* po = out.data().data();
    for (int64_t bt = 0; bt < batch; ++bt) {
        const double* A = pa + bt * M * K;
        const double* B = pb + bt * K * N;
        double* C = po + bt * M * N;
        for (int i = 0; i < M; ++i) {
            double* Ci = C + static_cast<int64_t>(i) * N;
            for (int k = 0; k < K; ++k) {
                const double aik = A[static_cast<int64_t>(i) * K + k];
                if (aik == 0.0) continue;
                const double* Bk = B + static_cast<int64_t>(k) * N;
                for (int j = 0; j < N; ++j) Ci[j] += aik * Bk[j];
            }
        }
    }
    if (!rg) return out;

    out.node()->backward_fn = [batch, M, K, N](Node& node) {
        auto& pa_n = node.parents[0];
        auto& pb_n = node.parents[1];
        const double* g = node.grad.data();
        const double* av = pa_n->value.data();
        const double* bv = pb_n->value.data();
        if (pa_n->requires_grad) {
            pa_n->ensure_grad();
            double* da = pa_n->grad.data();
            // dA = G * B^T
            for (int64_t bt = 0; bt < batch; ++bt) {
                const double* G = g + bt * M * N;
                const double* B = bv + bt * K * N;
                double* DA = da + bt * M * K;
                for (int i = 0; i < M; ++i) {
                    for (int k = 0; k < K; ++k) {
                        const double* Gi = G + static_cast<int64_t>(i) * N;
                        const double* Bk = B + static_cast<int64_t>(k) * N;
                        double acc = 0;
                        for (int j = 0; j < N; ++j) acc += Gi[j] * Bk[j];
                        DA[static_cast<int64_t>(i) * K + k] += acc;
                    }
                }
            }
        }
        if (pb_n->requires_grad) {
            pb_n->ensure_grad();
            double* db = pb_n->grad.data();
            // dB = A^T * G
            for (int64_t bt = 0; bt < batch; ++bt) {
                const double* G = g + bt * M * N;
                const double* A = av + bt * M * K;
                double* DB = db + bt * K * N;
                for (int i = 0; i < M; ++i) {
                    const double* Gi = G + static_cast<int64_t>(i) * N;
                    for (int k = 0; k < K; ++k) {
                        const double aik = A[static_cast<int64_t>(i) * K + k];
                        if (aik == 0.0) continue;
                        double* DBk = DB + static_cast<int64_t>(k) * N;
                        for (int j = 0; j < N; ++j) DBk[j] += aik * Gi[j];
                    }
                }
            }
        }
    };
    return out;
}

// --------------------------------------------------------------- reductions

Tensor sum(const Tensor& a) {
    const bool rg = grad_enabled() && a.requires_grad();
    Tensor out = make_node({1}, rg ? std::vector<Tensor>{a} : std::vector<Tensor>{}, rg);
    double acc = 0;
    for (double v : a.data()) acc += v;
    out.data()[0] = acc;
    if (!rg) return out;
    out.node()->backward_fn = [](Node& node) {
        auto& p = node.parents[0];
        if (!p->requires_grad) return;
        p->ensure_grad();
        const double g = node.grad[0];
        for (auto& d : p->grad) d += g;
    };
    return out;
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.numel())); }

Tensor sum(const Tensor& a, int axis) {
    axis = normalize_axis(axis, a.rank(), "sum");
    std::vector<int> out_shape;
    for (int i = 0; i < a.rank(); ++i) {
        if (i != axis) out_shape.push_back(a.dim(i));
    }
    if (out_shape.empty()) out_shape = {1};
    const AxisSplit sp = split_axis(a.shape(), axis);
    const bool rg = grad_enabled() && a.requires_grad();
    Tensor out = make_node(out_shape, rg ? std::vector<Tensor>{a} : std::vector<Tensor>{}, rg);
    const double* pa = a.data().data();
    double* po = out.data().data();
    for (int64_t o = 0; o < sp.outer; ++o) {
        for (int64_t j = 0; j < sp.len; ++j) {
            const double* src = pa + (o * sp.len + j) * sp.inner;
            double* dst = po + o * sp.inner;
            for (int64_t i = 0; i < sp.inner; ++i) dst[i] += src[i];
        }
    }
    if (!rg) return out;
    out.node()->backward_fn = [sp](Node& node) {
        auto& p = node.parents[0];
        if (!p->requires_grad) return;
        p->ensure_grad();
        const double* g = node.grad.data();
        double* dx = p->grad.data();
        for (int64_t o = 0; o < sp.outer; ++o) {
            for (int64_t j = 0; j < sp.len; ++j) {
                double* ds = dx + (o * sp.len + j) * sp.inner;
                const double* gs = g + o * sp.inner;
                for (int64_t i = 0; i < sp.inner; ++i) ds[i] += gs[i];
            }
        }
    };
    return out;
}

Tensor mean(const Tensor& a, int axis) {
    const int ax = normalize_axis(axis, a.rank(), "mean");
    return scale(sum(a, ax), 1.0 / static_cast<double>(a.dim(ax)));
}

Tensor max(const Tensor& a, int axis) {
    axis = normalize_axis(axis, a.rank(), "max");
    std::vector<int> out_shape;
    for (int i = 0; i < a.rank(); ++i) {
        if (i != axis) out_shape.push_back(a.dim(i));
    }
    if (out_shape.empty()) out_shape = {1};
    const AxisSplit sp = split_axis(a.shape(), axis);
    const bool rg = grad_enabled() && a.requires_grad();
    Tensor out = make_node(out_shape, rg ? std::vector<Tensor>{a} : std::vector<Tensor>{}, rg);
    auto argmax = std::make_shared<std::vector<int64_t>>(
        static_cast<size_t>(sp.outer * sp.inner));
    const double* pa = a.data().data();
    double* po = out.data().data();
    for (int64_t o = 0; o < sp.outer; ++o) {
        for (int64_t i = 0; i < sp.inner; ++i) {
            double best = pa[(o * sp.len) * sp.inner + i];
            int64_t best_j = 0;
            for (int64_t j = 1; j < sp.len; ++j) {
                const double v = pa[(o * sp.len + j) * sp.inner + i];
                if (v > best) {
                    best = v;
                    best_j = j;
                }
            }
            po[o * sp.inner + i] = best;
            (*argmax)[static_cast<size_t>(o * sp.inner + i)] = (o * sp.len + best_j) * sp.inner + i;
        }
    }
    if (!rg) return out;
    out.node()->backward_fn = [argmax](Node& node) {
        auto& p = node.parents[0];
        if (!p->requires_grad) return;
        p->ensure_grad();
        for (size_t k = 0; k < node.grad.size(); ++k) {
            p->grad[static_cast<size_t>((*argmax)[k])] += node.grad[k];
        }
    };
    return out;
}

namespace {

// Shared iteration for softmax-family ops along one axis.
template <typename PerSlice>
void for_each_slice(const AxisSplit& sp, PerSlice fn) {
    for (int64_t o = 0; o < sp.outer; ++o) {
        for (int64_t i = 0; i < sp.inner; ++i) {
            fn(o * sp.len * sp.inner + i, sp.inner);
        }
    }
}

}  // namespace

Tensor softmax(const Tensor& a, int axis) {
    axis = normalize_axis(axis, a.rank(), "softmax");
    const AxisSplit sp = split_axis(a.shape(), axis);
    const bool rg = grad_enabled() && a.requires_grad();
    Tensor out = make_node(a.shape(), rg ? std::vector<Tensor>{a} : std::vector<Tensor>{}, rg);
    const double* pa = a.data().data();
    double* po = out.data().data();
    for_each_slice(sp, [&](int64_t base, int64_t stride) {
        double m = pa[base];
        for (int64_t j = 1; j < sp.len; ++j) m = std::max(m, pa[base + j * stride]);
        double z = 0;
        for (int64_t j = 0; j < sp.len; ++j) {
            const double e = std::exp(pa[base + j * stride] - m);
            po[base + j * stride] = e;
            z += e;
        }
        const double inv = 1.0 / z;
        for (int64_t j = 0; j < sp.len; ++j) po[base + j * stride] *= inv;
    });
    if (!rg) return out;
    out.node()->backward_fn = [sp](Node& node) {
        auto& p = node.parents[0];
        if (!p->requires_grad) return;
        p->ensure_grad();
        const double* g = node.grad.data();
        const double* y = node.value.data();
        double* dx = p->grad.data();
        for_each_slice(sp, [&](int64_t base, int64_t stride) {
            double dot = 0;
            for (int64_t j = 0; j < sp.len; ++j) {
                dot += g[base + j * stride] * y[base + j * stride];
            }
            for (int64_t j = 0; j < sp.len; ++j) {
                const int64_t k = base + j * stride;
                dx[k] += y[k] * (g[k] - dot);
            }
        });
    };
    return out;
}

Tensor log_softmax(const Tensor& a, int axis) {
    axis = normalize_axis(axis, a.rank(), "log_softmax");
    const AxisSplit sp = split_axis(a.shape(), axis);
    const bool rg = grad_enabled() && a.requires_grad();
    Tensor out = make_node(a.shape(), rg ? std::vector<Tensor>{a} : std::vector<Tensor>{}, rg);
    const double* pa = a.data().data();
    double* po = out.data().data();
    for_each_slice(sp, [&](int64_t base, int64_t stride) {
        double m = pa[base];
        for (int64_t j = 1; j < sp.len; ++j) m = std::max(m, pa[base + j * stride]);
        double z = 0;
        for (int64_t j = 0; j < sp.len; ++j) z += std::exp(pa[base + j * stride] - m);
        const double lz = m + std::log(z);
        for (int64_t j = 0; j < sp.len; ++j) {
            po[base + j * stride] = pa[base + j * stride] - lz;
        }
    });
    if (!rg) return out;
    out.node()->backward_fn = [sp](Node& node) {
        auto& p = node.parents[0];
        if (!p->requires_grad) return;
        p->ensure_grad();
        const double* g = node.grad.data();
        const double* y = node.value.data();  // log-probs
        double* dx = p->grad.data();
        for_each_slice(sp, [&](int64_t base, int64_t stride) {
            double gsum = 0;
            for (int64_t j = 0; j < sp.len; ++j) gsum += g[base + j * stride];
            for (int64_t j = 0; j < sp.len; ++j) {
                const int64_t k = base + j * stride;
                dx[k] += g[k] - std::exp(y[k]) * gsum;
            }
        });
    };
    return out;
}

Tensor layer_norm(const Tensor& a, int axis, double eps) {
    axis = normalize_axis(axis, a.rank(), "layer_norm");
    const AxisSplit sp = split_axis(a.shape(), axis);
    const bool rg = grad_enabled() && a.requires_grad();
    Tensor out = make_node(a.shape(), rg ? std::vector<Tensor>{a} : std::vector<Tensor>{}, rg);
    auto inv_sigma = std::make_shared<std::vector<double>>(
        static_cast<size_t>(sp.outer * sp.inner));
    const double* pa = a.data().data();
    double* po = out.data().data();
    {
        size_t slot = 0;
        for_each_slice(sp, [&](int64_t base, int64_t stride) {
            double mu = 0;
            for (int64_t j = 0; j < sp.len; ++j) mu += pa[base + j * stride];
            mu /= static_cast<double>(sp.len);
            double var = 0;
            for (int64_t j = 0; j < sp.len; ++j) {
                const double d = pa[base + j * stride] - mu;
                var += d * d;
            }
            var /= static_cast<double>(sp.len);
            const double is = 1.0 / std::sqrt(var + eps);
            (*inv_sigma)[slot++] = is;
            for (int64_t j = 0; j < sp.len; ++j) {
                po[base + j * stride] = (pa[base + j * stride] - mu) * is;
            }
        });
    }
    if (!rg) return out;
    out.node()->backward_fn = [sp, inv_sigma](Node& node) {
        auto& p = node.parents[0];
        if (!p->requires_grad) return;
        p->ensure_grad();
        const double* g = node.grad.data();
        const double* y = node.value.data();
        double* dx = p->grad.data();
        size_t slot = 0;
        for_each_slice(sp, [&](int64_t base, int64_t stride) {
            const double is = (*inv_sigma)[slot++];
            double gm = 0, gym = 0;
            for (int64_t j = 0; j < sp.len; ++j) {
                const int64_t k = base + j * stride;
                gm += g[k];
                gym += g[k] * y[k];
            }
            gm /= static_cast<double>(sp.len);
            gym /= static_cast<double>(sp.len);
            for (int64_t j = 0; j < sp.len; ++j) {
                const int64_t k = base + j * stride;
                dx[k] += is * (g[k] - gm - y[k] * gym);
            }
        });
    };
    return out;
}

Tensor dropout(const Tensor& a, double p, uint64_t seed, bool training) {
    if (!training || p <= 0.0) return a;
    if (p >= 1.0) throw RuntimeError("dropout: p must be < 1");
    const int64_t n = a.numel();
    auto mask = std::make_shared<std::vector<double>>(static_cast<size_t>(n));
    Rng rng(derive_seed(seed, "dropout"));
    const double keep_scale = 1.0 / (1.0 - p);
    for (int64_t i = 0; i < n; ++i) {
        (*mask)[static_cast<size_t>(i)] = rng.uniform() < p ? 0.0 : keep_scale;
    }
    const bool rg = grad_enabled() && a.requires_grad();
    Tensor out = make_node(a.shape(), rg ? std::vector<Tensor>{a} : std::vector<Tensor>{}, rg);
    const double* pa = a.data().data();
    double* po = out.data().data();
    for (int64_t i = 0; i < n; ++i) po[i] = pa[i] * (*mask)[static_cast<size_t>(i)];
    if (!rg) return out;
    out.node()->backward_fn = [mask, n](Node& node) {
        auto& p_n = node.parents[0];
        if (!p_n->requires_grad) return;
        p_n->ensure_grad();
        for (int64_t i = 0; i < n; ++i) {
            p_n->grad[static_cast<size_t>(i)] +=
                node.grad[static_cast<size_t>(i)] * (*mask)[static_cast<size_t>(i)];
        }
    };
    return out;
}

// ----------------------------------------------------------------- backward

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

void backward(const Tensor& loss) {
    if (!loss.defined() || loss.numel() != 1) {
        throw RuntimeError("backward: loss must be a scalar tensor");
    }
    // Post-order DFS gives a topological order; reversed, each node is
    // visited exactly once after everything that consumes it.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    struct Frame {
        Node* node;
        size_t next_parent;
    };
    std::vector<Frame> stack;
    Node* root = loss.node().get();
    if (visited.insert(root).second) stack.push_back({root, 0});
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent < f.node->parents.size()) {
            Node* p = f.node->parents[f.next_parent++].get();
            if (visited.insert(p).second) stack.push_back({p, 0});
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }
    root->ensure_grad();
    root->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && n->requires_grad && !n->grad.empty()) {
            n->backward_fn(*n);
        }
    }
}

double finite_diff_check(const std::function<Tensor(std::vector<Tensor>&)>& f,
                         std::vector<Tensor>& inputs, double eps) {
    for (auto& t : inputs) t.set_requires_grad(true);
    Tensor out = f(inputs);
    if (out.numel() != 1) throw RuntimeError("finite_diff_check: f must return a scalar");
    for (auto& t : inputs) t.zero_grad();
    backward(out);

    std::vector<std::vector<double>> analytic;
    analytic.reserve(inputs.size());
    for (auto& t : inputs) analytic.push_back(t.grad());

    double worst = 0.0;
    for (size_t ti = 0; ti < inputs.size(); ++ti) {
        auto& vals = inputs[ti].data();
        for (size_t e = 0; e < vals.size(); ++e) {
            const double saved = vals[e];
            vals[e] = saved + eps;
            const double fp = f(inputs).value();
            vals[e] = saved - eps;
            const double fm = f(inputs).value();
            vals[e] = saved;
            const double numeric = (fp - fm) / (2.0 * eps);
            const double err = std::abs(analytic[ti][e] - numeric) /
                               std::max(1e-8, std::abs(numeric));
            worst = std::max(worst, err);
        }
    }
    return worst;
}

}  // namespace layoutkit::ad
