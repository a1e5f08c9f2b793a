#include "quatfrac/grid.hpp"

#include <cmath>
#include <string>

namespace quatfrac::grid {

namespace {

bool finite(const Quaternion& q) {
    return std::isfinite(q.w) && std::isfinite(q.x) && std::isfinite(q.y) && std::isfinite(q.z);
}

std::string node_name(int i, int j, int k, const Point3& p) {
    return "(" + std::to_string(i) + "," + std::to_string(j) + "," + std::to_string(k) +
           ") at (" + std::to_string(p[0]) + "," + std::to_string(p[1]) + "," +
           std::to_string(p[2]) + ")";
}

}  // namespace

GridField::GridField(const Box& box, const std::array<int, 3>& n, std::vector<Quaternion> values,
                     FieldFn source)
    : box_(box), n_(n), values_(std::move(values)), source_(std::move(source)) {
    for (int k = 0; k < 3; ++k)
        if (n_[k] < 2) throw std::invalid_argument("GridField: needs n_k >= 2");
    const std::size_t want = static_cast<std::size_t>(n_[0] + 1) * (n_[1] + 1) * (n_[2] + 1);
    if (values_.size() != want) throw std::invalid_argument("GridField: value count mismatch");
    for (int i = 0; i <= n_[0]; ++i)
        for (int j = 0; j <= n_[1]; ++j)
            for (int k = 0; k <= n_[2]; ++k) {
                const Quaternion& v = values_[index(i, j, k)];
                if (!finite(v))
                    throw std::invalid_argument("GridField: non-finite value at node " +
                                                node_name(i, j, k, node(i, j, k)));
                if (source_ && max_abs(source_(node(i, j, k)) - v) > 1e-12)
                    throw std::invalid_argument("GridField: resampling mismatch at node " +
                                                node_name(i, j, k, node(i, j, k)));
            }
}

GridField sample_field(const FieldFn& f, const Box& box, const std::array<int, 3>& n) {
    for (int k = 0; k < 3; ++k)
        if (n[k] < 2) throw std::invalid_argument("sample_field: needs n_k >= 2");
    std::vector<Quaternion> values(static_cast<std::size_t>(n[0] + 1) * (n[1] + 1) * (n[2] + 1));
    const double h0 = box.width(0) / n[0], h1 = box.width(1) / n[1], h2 = box.width(2) / n[2];
    std::size_t idx = 0;
    for (int i = 0; i <= n[0]; ++i)
        for (int j = 0; j <= n[1]; ++j)
            for (int k = 0; k <= n[2]; ++k, ++idx) {
                const Point3 p{box.a[0] + i * h0, box.a[1] + j * h1, box.a[2] + k * h2};
                values[idx] = f(p);
                if (!finite(values[idx]))
                    throw std::invalid_argument("sample_field: non-finite sample at node " +
                                                node_name(i, j, k, p));
            }
    return GridField(box, n, std::move(values), f);
}

namespace {

// Applies a 1-D stencil along axis k at every node line.  pick(i, m) yields
// the node index with the axis-k coordinate replaced by m.
template <class Pick>
void apply_axis(std::vector<Quaternion>& out, const GridField& g, int k, const Pick& pick);

struct LineView {
    const GridField& g;
    int k;       // axis
    int i0, i1;  // the two fixed off-axis indices

    const Quaternion& operator[](int m) const {
        switch (k) {
            case 0: return g.at(m, i0, i1);
            case 1: return g.at(i0, m, i1);
            default: return g.at(i0, i1, m);
        }
    }
    std::size_t flat(int m) const {
        switch (k) {
            case 0: return g.index(m, i0, i1);
            case 1: return g.index(i0, m, i1);
            default: return g.index(i0, i1, m);
        }
    }
};

template <class Fn>
void for_each_line(const GridField& g, int k, const Fn& fn) {
    const auto& n = g.n();
    const int u = (k == 0) ? n[1] : n[0];
    const int v = (k == 2) ? n[1] : n[2];
    for (int i0 = 0; i0 <= u; ++i0)
        for (int i1 = 0; i1 <= v; ++i1) fn(LineView{g, k, i0, i1});
}

}  // namespace

GridField partial_fd(const GridField& g, int k, Scheme scheme) {
    if (k < 0 || k > 2) throw std::invalid_argument("partial_fd: axis out of range");
    const int nk = g.n()[k];
    const double h = g.h(k);
    if (scheme == Scheme::order4 && nk < 4)
        throw std::invalid_argument("partial_fd: order4 needs n_k >= 4");
    std::vector<Quaternion> out(g.node_count());
    if (scheme == Scheme::order2) {
        for_each_line(g, k, [&](const LineView& L) {
            out[L.flat(0)] = (L[0] * -3.0 + L[1] * 4.0 - L[2]) * (1.0 / (2.0 * h));
            for (int m = 1; m < nk; ++m) out[L.flat(m)] = (L[m + 1] - L[m - 1]) * (1.0 / (2.0 * h));
            out[L.flat(nk)] =
                (L[nk] * 3.0 - L[nk - 1] * 4.0 + L[nk - 2]) * (1.0 / (2.0 * h));
        });
    } else {
        for_each_line(g, k, [&](const LineView& L) {
            const double c = 1.0 / (12.0 * h);
            out[L.flat(0)] =
                (L[0] * -25.0 + L[1] * 48.0 - L[2] * 36.0 + L[3] * 16.0 - L[4] * 3.0) * c;
            out[L.flat(1)] = (L[0] * -3.0 + L[1] * -10.0 + L[2] * 18.0 - L[3] * 6.0 + L[4]) * c;
            for (int m = 2; m + 2 <= nk; ++m)
                out[L.flat(m)] = (L[m - 2] - L[m - 1] * 8.0 + L[m + 1] * 8.0 - L[m + 2]) * c;
            out[L.flat(nk - 1)] =
                (L[nk] * 3.0 + L[nk - 1] * 10.0 - L[nk - 2] * 18.0 + L[nk - 3] * 6.0 - L[nk - 4]) *
                c;
            out[L.flat(nk)] =
                (L[nk] * 25.0 - L[nk - 1] * 48.0 + L[nk - 2] * 36.0 - L[nk - 3] * 16.0 +
                 L[nk - 4] * 3.0) *
                c;
        });
    }
    return GridField(g.box(), g.n(), std::move(out));
}

GridField second_partial_fd(const GridField& g, int k) {
    if (k < 0 || k > 2) throw std::invalid_argument("second_partial_fd: axis out of range");
    const int nk = g.n()[k];
    if (nk < 3) throw std::invalid_argument("second_partial_fd: needs n_k >= 3");
    const double h = g.h(k);
    const double c = 1.0 / (h * h);
    std::vector<Quaternion> out(g.node_count());
    for_each_line(g, k, [&](const LineView& L) {
        out[L.flat(0)] = (L[0] * 2.0 - L[1] * 5.0 + L[2] * 4.0 - L[3]) * c;
        for (int m = 1; m < nk; ++m) out[L.flat(m)] = (L[m - 1] - L[m] * 2.0 + L[m + 1]) * c;
        out[L.flat(nk)] = (L[nk] * 2.0 - L[nk - 1] * 5.0 + L[nk - 2] * 4.0 - L[nk - 3]) * c;
    });
    return GridField(g.box(), g.n(), std::move(out));
}

}  // namespace quatfrac::grid
