#include "quatfrac/psi_ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "quatfrac/parallel.hpp"

namespace quatfrac::psi_ops {

Weight3 Weight3::coordinate_sum() {
    Weight3 w;
    w.phi = [](const Point3& q) { return q[0] + q[1] + q[2]; };
    w.dphi = [](const Point3&, int) { return 1.0; };
    w.inv_slice = [](double u, const Point3& y, int axis) {
        return u - (y[(axis + 1) % 3] + y[(axis + 2) % 3]);
    };
    return w;
}

frac1d::Weight Weight3::slice(const Point3& y, int axis) const {
    if (axis < 0 || axis > 2) throw std::invalid_argument("Weight3::slice: axis out of range");
    if (!phi || !dphi) throw std::invalid_argument("Weight3::slice: needs phi and dphi");
    frac1d::Weight out;
    out.phi = [p = phi, y, axis](double t) {
        Point3 q = y;
        q[axis] = t;
        return p(q);
    };
    out.dphi = [d = dphi, y, axis](double t) {
        Point3 q = y;
        q[axis] = t;
        return d(q, axis);
    };
    if (inv_slice)
        out.inv_phi = [inv = inv_slice, y, axis](double u) { return inv(u, y, axis); };
    return out;
}

DphiWeight dphi_weight(const Weight3& w, const Point3& x, const Point3& y) {
    if (!w.dphi) throw std::invalid_argument("dphi_weight: missing dphi");
    double total = 0.0;
    for (int i = 0; i < 3; ++i) {
        Point3 q = y;
        q[i] = x[i];
        const double d = w.dphi(q, i);
        if (!(d > 0.0))
            throw std::domain_error("dphi_weight: slice derivative along axis " +
                                    std::to_string(i) + " is " + std::to_string(d) +
                                    ", must be positive");
        total += d;
    }
    return {total};
}

FracParams::FracParams(Box box_, const std::array<frac1d::Order, 3>& alpha_,
                       const AValue& sigma_, Weight3 w_)
    : box(std::move(box_)), alpha(alpha_), sigma(sigma_), w(std::move(w_)) {
    for (int k = 0; k < 3; ++k) {
        const double s = sigma_comp(k);
        if (!(s >= 0.0) || s > 1.0)
            throw std::domain_error("FracParams: sigma component " + std::to_string(k) + " = " +
                                    std::to_string(s) + " must lie in [0,1]");
    }
    if (norm(sigma.quat()) < 1e-10)
        throw std::domain_error("FracParams: sigma too close to zero to invert");
    if (!w.phi || !w.dphi)
        throw std::invalid_argument("FracParams: weight needs phi and dphi callables");
}

double FracParams::sigma_comp(int k) const {
    switch (k) {
        case 0: return sigma.w();
        case 1: return sigma.x();
        case 2: return sigma.y();
        default: throw std::invalid_argument("FracParams::sigma_comp: axis out of range");
    }
}

bool FracParams::riemann_liouville() const {
    return sigma_comp(0) == 1.0 && sigma_comp(1) == 1.0 && sigma_comp(2) == 1.0;
}

bool FracParams::alpha_all_real() const {
    return alpha[0].is_real() && alpha[1].is_real() && alpha[2].is_real();
}

GridField psi_dbar(const GridField& g, const StructuralSet& psi, Hand hand,
                   grid::Scheme scheme) {
    const std::array<GridField, 3> d{grid::partial_fd(g, 0, scheme),
                                     grid::partial_fd(g, 1, scheme),
                                     grid::partial_fd(g, 2, scheme)};
    std::vector<Quaternion> out(g.node_count());
    for (std::size_t idx = 0; idx < out.size(); ++idx) {
        Quaternion acc{};
        for (int k = 0; k < 3; ++k) {
            const Quaternion& dk = d[k].values()[idx];
            acc += (hand == Hand::left) ? psi[k].quat() * dk : dk * psi[k].quat();
        }
        out[idx] = acc;
    }
    return GridField(g.box(), g.n(), std::move(out));
}

GridField laplacian(const GridField& g) {
    const std::array<GridField, 3> d{grid::second_partial_fd(g, 0), grid::second_partial_fd(g, 1),
                                     grid::second_partial_fd(g, 2)};
    std::vector<Quaternion> out(g.node_count());
    for (std::size_t idx = 0; idx < out.size(); ++idx)
        out[idx] = d[0].values()[idx] + d[1].values()[idx] + d[2].values()[idx];
    return GridField(g.box(), g.n(), std::move(out));
}

namespace {

template <class V>
struct Engine;

template <>
struct Engine<Quaternion> {
    static Quaternion integral(const frac1d::QuatFn& g, std::complex<double> ord, double sig,
                               const frac1d::Weight& w, double a, double b, double t,
                               frac1d::Side side, int n) {
        return frac1d::prop_frac_integral(g, frac1d::Order(ord), frac1d::Proportion(sig), w, a,
                                          b, t, side, n);
    }
};

template <>
struct Engine<CQuaternion> {
    static CQuaternion integral(const frac1d::QuatFn& g, std::complex<double> ord, double sig,
                                const frac1d::Weight& w, double a, double b, double t,
                                frac1d::Side side, int n) {
        return frac1d::prop_frac_integral_cx(g, frac1d::Order(ord), frac1d::Proportion(sig), w,
                                             a, b, t, side, n);
    }
};

// One axis slice of the three-dimensional operator: the 1-D fractional
// proportional integral of f restricted to the axis line through y.  Order 0
// and proportion 0 are both the identity (the latter by the kernel's
// concentration limit), bypassing the quadrature.
template <class V>
V slice_val(const FieldFn& f, const Weight3& w3, const Box& box, int axis, const Point3& y,
            double sig, std::complex<double> ord, double t, End end, int n_quad) {
    if (n_quad < 2) throw std::invalid_argument("slice integral: needs n_quad >= 2");
    const double a = box.a[axis], b = box.b[axis];
    if (t < a || t > b)
        throw std::domain_error("slice integral: evaluation point " + std::to_string(t) +
                                " outside [" + std::to_string(a) + "," + std::to_string(b) +
                                "] along axis " + std::to_string(axis));
    if (ord == 0.0 || sig == 0.0) {
        Point3 q = y;
        q[axis] = t;
        return V{f(q)};
    }
    const frac1d::QuatFn g = [fp = &f, y, axis](double s) {
        Point3 q = y;
        q[axis] = s;
        return (*fp)(q);
    };
    const frac1d::Side side = (end == End::a) ? frac1d::Side::left : frac1d::Side::right;
    return Engine<V>::integral(g, ord, sig, w3.slice(y, axis), a, b, t, side, n_quad);
}

void check_in_box(const Box& box, const Point3& p, const char* fn, const char* which) {
    if (!box.contains_closure(p))
        throw std::domain_error(std::string(fn) + ": point " + which + " outside the box");
}

template <class V>
V integral_3d_core(const FieldFn& f, const FracParams& p, const Point3& y, const Point3& x,
                   End end, int n_quad, bool inner) {
    check_in_box(p.box, x, "frac_prop_integral_3d", "x");
    check_in_box(p.box, y, "frac_prop_integral_3d", "y");
    V acc{};
    for (int i = 0; i < 3; ++i) {
        const std::complex<double> ord =
            inner ? std::complex<double>(1.0) - p.alpha[i].alpha : p.alpha[i].alpha;
        acc += slice_val<V>(f, p.w, p.box, i, y, p.sigma_comp(i), ord, x[i], end, n_quad);
    }
    return acc;
}

template <class V>
V cr_core(const FieldFn& f, const FracParams& p, const StructuralSet& psi,
          const Quaternion& sigma_out, const Point3& y, const Point3& x, Hand hand, End end,
          int n_quad, double h_fd) {
    check_in_box(p.box, x, "frac_prop_psi_cr", "x");
    check_in_box(p.box, y, "frac_prop_psi_cr", "y");
    if (!(h_fd > 0.0)) throw std::invalid_argument("frac_prop_psi_cr: h_fd must be positive");
    const bool rl = p.riemann_liouville();
    V val{};
    V dsum{};
    for (int i = 0; i < 3; ++i) {
        if (x[i] - h_fd < p.box.a[i] || x[i] + h_fd > p.box.b[i])
            throw std::domain_error(
                "frac_prop_psi_cr: derivative stencil leaves the box along axis " +
                std::to_string(i));
        const std::complex<double> ord = std::complex<double>(1.0) - p.alpha[i].alpha;
        auto u = [&](double t) {
            return slice_val<V>(f, p.w, p.box, i, y, p.sigma_comp(i), ord, t, end, n_quad);
        };
        const V du = (u(x[i] + h_fd) - u(x[i] - h_fd)) * (1.0 / (2.0 * h_fd));
        dsum += (hand == Hand::left) ? psi[i].quat() * du : du * psi[i].quat();
        if (!rl) val += u(x[i]);
    }
    if (rl) return dsum;
    const double dw = dphi_weight(p.w, x, y).value;
    const Quaternion one{1, 0, 0, 0};
    if (hand == Hand::left) return (one - sigma_out) * val + sigma_out * (dsum * (1.0 / dw));
    return val * (one - sigma_out) + (dsum * (1.0 / dw)) * sigma_out;
}

void require_real_orders(const FracParams& p, const char* fn) {
    if (!p.alpha_all_real())
        throw std::invalid_argument(std::string(fn) +
                                    ": complex order on the real path; use the _c variant");
}

}  // namespace

Quaternion frac_prop_integral_3d(const FieldFn& f, const FracParams& p, const Point3& y,
                                 const Point3& x, End end, int n_quad) {
    require_real_orders(p, "frac_prop_integral_3d");
    return integral_3d_core<Quaternion>(f, p, y, x, end, n_quad, false);
}

CQuaternion frac_prop_integral_3d_c(const FieldFn& f, const FracParams& p, const Point3& y,
                                    const Point3& x, End end, int n_quad) {
    return integral_3d_core<CQuaternion>(f, p, y, x, end, n_quad, false);
}

Quaternion cr_inner_integral(const FieldFn& f, const FracParams& p, const Point3& y,
                             const Point3& x, End end, int n_quad) {
    require_real_orders(p, "cr_inner_integral");
    return integral_3d_core<Quaternion>(f, p, y, x, end, n_quad, true);
}

CQuaternion cr_inner_integral_c(const FieldFn& f, const FracParams& p, const Point3& y,
                                const Point3& x, End end, int n_quad) {
    return integral_3d_core<CQuaternion>(f, p, y, x, end, n_quad, true);
}

Quaternion cr_inner_slice(const FieldFn& f, const FracParams& p, const Point3& y, int axis,
                          double t, End end, int n_quad) {
    require_real_orders(p, "cr_inner_slice");
    if (axis < 0 || axis > 2) throw std::invalid_argument("cr_inner_slice: axis out of range");
    check_in_box(p.box, y, "cr_inner_slice", "y");
    const std::complex<double> ord = std::complex<double>(1.0) - p.alpha[axis].alpha;
    return slice_val<Quaternion>(f, p.w, p.box, axis, y, p.sigma_comp(axis), ord, t, end, n_quad);
}

Quaternion frac_prop_psi_cr(const FieldFn& f, const FracParams& p, const StructuralSet& psi,
                            const Point3& y, const Point3& x, Hand hand, End end, int n_quad,
                            double h_fd) {
    require_real_orders(p, "frac_prop_psi_cr");
    return cr_core<Quaternion>(f, p, psi, p.sigma.quat(), y, x, hand, end, n_quad, h_fd);
}

CQuaternion frac_prop_psi_cr_c(const FieldFn& f, const FracParams& p, const StructuralSet& psi,
                               const Point3& y, const Point3& x, Hand hand, End end, int n_quad,
                               double h_fd) {
    return cr_core<CQuaternion>(f, p, psi, p.sigma.quat(), y, x, hand, end, n_quad, h_fd);
}

std::vector<Point3> interior_lattice(const Box& box, int m, double margin) {
    if (m < 1) throw std::invalid_argument("interior_lattice: needs m >= 1");
    if (!(margin >= 0.0)) throw std::invalid_argument("interior_lattice: margin must be >= 0");
    for (int k = 0; k < 3; ++k)
        if (2.0 * margin >= box.width(k))
            throw std::invalid_argument("interior_lattice: margin swallows the box along axis " +
                                        std::to_string(k));
    std::vector<Point3> pts;
    pts.reserve(static_cast<std::size_t>(m) * m * m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < m; ++k) {
                auto coord = [&](int axis, int idx) {
                    return box.a[axis] + margin +
                           (box.width(axis) - 2.0 * margin) * ((idx + 0.5) / m);
                };
                pts.push_back({coord(0, i), coord(1, j), coord(2, k)});
            }
    return pts;
}

namespace {

double op_norm(const FieldFn& f, const FracParams& p, const StructuralSet& psi, const Point3& y,
               const Point3& x, Hand hand, int n_quad, double h_fd) {
    if (p.alpha_all_real())
        return norm(frac_prop_psi_cr(f, p, psi, y, x, hand, End::a, n_quad, h_fd));
    return norm(frac_prop_psi_cr_c(f, p, psi, y, x, hand, End::a, n_quad, h_fd));
}

}  // namespace

double hyperholomorphy_residual(const FieldFn& f, const FracParams& p, const StructuralSet& psi,
                                const Point3& y, const std::vector<Point3>& xs, Hand hand,
                                int n_quad, double h_fd) {
    if (xs.empty())
        throw std::invalid_argument("hyperholomorphy_residual: needs at least one sample point");
    const std::vector<double> vals = par::parallel_map<double>(xs.size(), [&](std::size_t i) {
        return op_norm(f, p, psi, y, xs[i], hand, n_quad, h_fd);
    });
    return *std::max_element(vals.begin(), vals.end());
}

HyperholomorphyReport classify_hyperholomorphic(const FieldFn& f, const FracParams& p,
                                                const StructuralSet& psi, const Point3& y,
                                                const std::vector<Point3>& xs, Hand hand,
                                                int n_quad, double h_fd, double scale) {
    if (xs.empty())
        throw std::invalid_argument("classify_hyperholomorphic: needs at least one sample point");
    const std::vector<double> coarse = par::parallel_map<double>(xs.size(), [&](std::size_t i) {
        return op_norm(f, p, psi, y, xs[i], hand, n_quad, h_fd);
    });
    const std::vector<double> fine = par::parallel_map<double>(xs.size(), [&](std::size_t i) {
        return op_norm(f, p, psi, y, xs[i], hand, 2 * n_quad, h_fd);
    });
    double residual = 0.0, floor_gap = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        residual = std::max(residual, fine[i]);
        floor_gap = std::max(floor_gap, std::abs(fine[i] - coarse[i]));
    }
    const double tolerance = 10.0 * (floor_gap + 1e-13 * scale);
    return {residual, tolerance, residual < tolerance};
}

double conjugation_identity_residual(const FieldFn& f, const FracParams& p,
                                     const StructuralSet& psi, const Point3& y, const Point3& x,
                                     int n_quad, double h_fd) {
    require_real_orders(p, "conjugation_identity_residual");
    const Quaternion lhs =
        conj(cr_core<Quaternion>(f, p, psi, p.sigma.quat(), y, x, Hand::left, End::a, n_quad,
                                 h_fd));
    const FieldFn fbar = [fp = &f](const Point3& q) { return conj((*fp)(q)); };
    // Conjugating the expansion flips the basis to the conjugated set and the
    // outer factors to conj(sigma); the slice proportions are the same real
    // components.
    const Quaternion rhs = cr_core<Quaternion>(fbar, p, psi.conjugated(), conj(p.sigma.quat()),
                                               y, x, Hand::right, End::a, n_quad, h_fd);
    return norm(lhs - rhs);
}

namespace {

template <class V>
double lap_comp_impl(const FieldFn& f, const Box& box,
                     const std::array<frac1d::Order, 3>& alpha, const StructuralSet& psi,
                     const Point3& y, const Point3& x, int n_quad, double h_fd) {
    check_in_box(box, y, "laplacian_composition_residual", "y");
    if (!(h_fd > 0.0))
        throw std::invalid_argument("laplacian_composition_residual: h_fd must be positive");
    const Weight3 w = Weight3::coordinate_sum();
    V lhs{};
    V rhs{};
    for (int j = 0; j < 3; ++j) {
        if (x[j] - 2.0 * h_fd < box.a[j] || x[j] + 2.0 * h_fd > box.b[j])
            throw std::domain_error(
                "laplacian_composition_residual: composed stencil leaves the box along axis " +
                std::to_string(j));
        const std::complex<double> ord = std::complex<double>(1.0) - alpha[j].alpha;
        auto u = [&](double t) {
            return slice_val<V>(f, w, box, j, y, 1.0, ord, t, End::a, n_quad);
        };
        auto du = [&](double t) { return (u(t + h_fd) - u(t - h_fd)) * (1.0 / (2.0 * h_fd)); };
        const Quaternion pj = psi[j].quat();
        const V inner_p = pj * du(x[j] + h_fd);
        const V inner_m = pj * du(x[j] - h_fd);
        lhs += conj(pj) * ((inner_p - inner_m) * (1.0 / (2.0 * h_fd)));
        rhs += (u(x[j] + h_fd) - u(x[j]) * 2.0 + u(x[j] - h_fd)) * (1.0 / (h_fd * h_fd));
    }
    return norm(lhs - rhs);
}

}  // namespace

double laplacian_composition_residual(const FieldFn& f, const Box& box,
                                      const std::array<frac1d::Order, 3>& alpha,
                                      const StructuralSet& psi, const Point3& y, const Point3& x,
                                      int n_quad, double h_fd) {
    const bool real_orders =
        alpha[0].is_real() && alpha[1].is_real() && alpha[2].is_real();
    if (real_orders) return lap_comp_impl<Quaternion>(f, box, alpha, psi, y, x, n_quad, h_fd);
    return lap_comp_impl<CQuaternion>(f, box, alpha, psi, y, x, n_quad, h_fd);
}

}  // namespace quatfrac::psi_ops
