#include "quatfrac/integral_id.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "quatfrac/frac1d.hpp"
#include "quatfrac/parallel.hpp"

namespace quatfrac::integral_id {

namespace {

constexpr double kPi = std::numbers::pi;
const Quaternion kOne{1.0, 0.0, 0.0, 0.0};

Point3 sub(const Point3& u, const Point3& v) { return {u[0] - v[0], u[1] - v[1], u[2] - v[2]}; }

void require_real_orders(const FracParams& p, const char* fn) {
    if (!p.alpha_all_real())
        throw std::invalid_argument(std::string(fn) +
                                    ": complex orders are not supported by the identity drivers");
}

void require_same_box(const Box& pbox, const Box& box, const char* fn) {
    for (int k = 0; k < 3; ++k)
        if (pbox.a[k] != box.a[k] || pbox.b[k] != box.b[k])
            throw std::invalid_argument(std::string(fn) +
                                        ": parameter pack box differs from the integration box");
}

Quaternion sigma_inverse(const AValue& sigma) {
    const Quaternion s = sigma.quat();
    const double n2 = norm_sq(s);
    if (!(n2 > 0.0)) throw std::domain_error("sigma_inverse: sigma must be nonzero");
    return conj(s) * (1.0 / n2);
}

// The coefficient between the inner integral and the extension operator in
// the volume integrand: Dphi(x, y) sigma^{-1} in general, the identity in the
// unit-proportion (componentwise plain-derivative) limit.
Quaternion volume_coefficient(const FracParams& p, const Point3& c, const Point3& y) {
    if (p.riemann_liouville()) return kOne;
    return sigma_inverse(p.sigma) * psi_ops::dphi_weight(p.w, c, y).value;
}

LambdaSet zero_lambda(const Weight3& w, const Point3& y, const StructuralSet& psi,
                      const Box& box) {
    return LambdaSet{{0.0, 0.0, 0.0}, w, y, box, psi};
}

LambdaSet lambda_for(const FracParams& p, const Point3& y, const StructuralSet& psi,
                     const Box& box) {
    return p.riemann_liouville() ? zero_lambda(p.w, y, psi, box)
                                 : build_lambda(p.w, p.sigma, y, psi, box);
}

// Per-face pairwise reduction followed by the fixed face order, so the two
// faces of an axis cancel exactly when their node terms are exact negatives.
Quaternion face_reduce(const std::vector<Quaternion>& terms, const SurfaceQuadrature& sq) {
    const std::size_t pf = sq.per_face();
    Quaternion acc{};
    for (std::size_t face = 0; face < 6; ++face)
        acc += par::pairwise_sum_range(terms, face * pf, (face + 1) * pf);
    return acc;
}

std::array<double, 3> cell_widths(const Box& box, const std::array<int, 3>& n_vol) {
    std::array<double, 3> h{};
    for (int k = 0; k < 3; ++k) {
        if (n_vol[k] < 1) throw std::invalid_argument("volume grid: n_vol components must be >= 1");
        h[k] = box.width(k) / n_vol[k];
    }
    return h;
}

Point3 cell_center(const Box& box, const std::array<double, 3>& h, const std::array<int, 3>& n,
                   std::size_t idx) {
    const int k = static_cast<int>(idx % n[2]);
    const int j = static_cast<int>((idx / n[2]) % n[1]);
    const int i = static_cast<int>(idx / (static_cast<std::size_t>(n[2]) * n[1]));
    return {box.a[0] + (i + 0.5) * h[0], box.a[1] + (j + 0.5) * h[1], box.a[2] + (k + 0.5) * h[2]};
}

// Squared distance from p to the closed cell box center +- half widths.
double cell_dist_sq(const Point3& center, const std::array<double, 3>& half, const Point3& p) {
    double s2 = 0.0;
    for (int k = 0; k < 3; ++k) {
        const double lo = center[k] - half[k], hi = center[k] + half[k];
        const double t = p[k] < lo ? lo - p[k] : (p[k] > hi ? p[k] - hi : 0.0);
        s2 += t * t;
    }
    return s2;
}

// Sum over axes of the 1-D fractional proportional derivative, taken in x_i
// of t -> fn(x | i -> t) with order 1 - alpha_i, proportion sigma_i, and the
// axis-i slice of the weight through y.  Unit-order and zero-proportion axes
// are the exact identity and contribute fn(x) directly.  The interval is
// extended to x_i when x_i > b_i (left-anchored operators reach any t >= a_i).
Quaternion frac_partial_sum(const std::function<Quaternion(const Point3&)>& fn,
                            const FracParams& p, const Point3& x, const Point3& y, int n_quad,
                            double h_fd) {
    Quaternion acc{};
    for (int i = 0; i < 3; ++i) {
        const double nu = 1.0 - p.alpha[i].re();
        const double sig = p.sigma_comp(i);
        if (nu == 0.0 || sig == 0.0) {
            acc += fn(x);
            continue;
        }
        const frac1d::QuatFn h = [&fn, &x, i](double t) {
            Point3 q = x;
            q[i] = t;
            return fn(q);
        };
        const double hi = std::max(p.box.b[i], x[i]);
        acc += frac1d::prop_frac_derivative(h, frac1d::Order(nu), frac1d::Proportion(sig),
                                            p.w.slice(y, i), p.box.a[i], hi, x[i],
                                            frac1d::Side::left, n_quad, h_fd);
    }
    return acc;
}

}  // namespace

// --- quadrature --------------------------------------------------------------

SurfaceQuadrature SurfaceQuadrature::build(const Box& box, int m, const StructuralSet& psi) {
    if (m < 1) throw std::invalid_argument("SurfaceQuadrature: m must be >= 1");
    SurfaceQuadrature sq{box, m, {}};
    sq.nodes.reserve(6 * sq.per_face());
    for (int k = 0; k < 3; ++k) {
        const int u = (k == 0) ? 1 : 0;
        const int v = (k == 2) ? 1 : 2;
        const double du = box.width(u) / m;
        const double dv = box.width(v) / m;
        const double dA = du * dv;
        const AValue high(psi[k].w() * dA, psi[k].x() * dA, psi[k].y() * dA);
        const AValue low(-high.w(), -high.x(), -high.y());
        for (int face = 0; face < 2; ++face) {
            const double xk = (face == 0) ? box.a[k] : box.b[k];
            const AValue& wgt = (face == 0) ? low : high;
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j) {
                    Point3 p{};
                    p[k] = xk;
                    p[u] = box.a[u] + (i + 0.5) * du;
                    p[v] = box.a[v] + (j + 0.5) * dv;
                    sq.nodes.push_back({p, wgt});
                }
        }
    }
    return sq;
}

Quaternion surface_integral(const FieldFn& g, const FieldFn& f, const SurfaceQuadrature& sq,
                            const ScalarFn& weight) {
    if (sq.nodes.empty()) throw std::invalid_argument("surface_integral: empty quadrature");
    const auto terms = par::parallel_map<Quaternion>(sq.nodes.size(), [&](std::size_t idx) {
        const SurfaceNode& nd = sq.nodes[idx];
        Quaternion wq = nd.weight.quat();
        if (weight) wq = wq * weight(nd.p);
        return g(nd.p) * wq * f(nd.p);
    });
    return face_reduce(terms, sq);
}

Quaternion volume_integral(const std::function<Quaternion(const Point3&)>& integrand,
                           const Box& box, const std::array<int, 3>& n_vol) {
    const auto h = cell_widths(box, n_vol);
    const std::size_t total =
        static_cast<std::size_t>(n_vol[0]) * n_vol[1] * n_vol[2];
    const auto terms = par::parallel_map<Quaternion>(total, [&](std::size_t idx) {
        return integrand(cell_center(box, h, n_vol, idx));
    });
    return par::pairwise_sum(terms) * (h[0] * h[1] * h[2]);
}

// --- kernel ------------------------------------------------------------------

AValue cauchy_kernel(const Point3& x, const StructuralSet& psi) {
    const Quaternion q = psi.embed(x[0], x[1], x[2]);
    const double n = norm(q);
    if (n == 0.0) throw std::domain_error("cauchy_kernel: evaluation at the singularity");
    const double s = 1.0 / (4.0 * kPi * n * n * n);
    return AValue(q.w * s, -q.x * s, -q.y * s);
}

Quaternion sphere_moment(const Point3& x0, double r, int m, const StructuralSet& psi) {
    if (!(r > 0.0)) throw std::invalid_argument("sphere_moment: radius must be positive");
    if (m < 1) throw std::invalid_argument("sphere_moment: m must be >= 1");
    (void)x0;  // the integrand depends on tau - x0 = r * n only
    const int mt = m, mp = 2 * m;
    const double dth = kPi / mt, dph = 2.0 * kPi / mp;
    const auto terms =
        par::parallel_map<Quaternion>(static_cast<std::size_t>(mt) * mp, [&](std::size_t idx) {
            const int i = static_cast<int>(idx / mp);
            const int j = static_cast<int>(idx % mp);
            const double th = (i + 0.5) * dth, ph = (j + 0.5) * dph;
            const double st = std::sin(th);
            const double n0 = st * std::cos(ph), n1 = st * std::sin(ph), n2 = std::cos(th);
            const Quaternion rel = psi.embed(r * n0, r * n1, r * n2);
            const Quaternion nq = psi.embed(n0, n1, n2);
            return conj(rel) * (nq * (r * r * st * dth * dph));
        });
    return par::pairwise_sum(terms);
}

double kernel_hyperholomorphy_residual(const StructuralSet& psi, double h_fd, int m_samples) {
    if (!(h_fd > 0.0) || h_fd >= 0.1)
        throw std::invalid_argument(
            "kernel_hyperholomorphy_residual: h_fd must lie in (0, 0.1) to keep the stencil "
            "off the singularity");
    if (m_samples < 1)
        throw std::invalid_argument("kernel_hyperholomorphy_residual: m_samples must be >= 1");
    const std::array<double, 3> radii{0.5, 0.75, 1.0};
    const int mt = m_samples, mp = 2 * m_samples;
    const std::size_t per_shell = static_cast<std::size_t>(mt) * mp;
    const auto vals =
        par::parallel_map<double>(radii.size() * per_shell, [&](std::size_t idx) {
            const double r = radii[idx / per_shell];
            const std::size_t s = idx % per_shell;
            const int i = static_cast<int>(s / mp);
            const int j = static_cast<int>(s % mp);
            const double th = (i + 0.5) * kPi / mt, ph = (j + 0.5) * 2.0 * kPi / mp;
            const double st = std::sin(th);
            const Point3 x{r * st * std::cos(ph), r * st * std::sin(ph), r * std::cos(th)};
            Quaternion acc{};
            for (int k = 0; k < 3; ++k) {
                Point3 xp = x, xm = x;
                xp[k] += h_fd;
                xm[k] -= h_fd;
                const Quaternion d = (Quaternion(cauchy_kernel(xp, psi).quat()) -
                                      Quaternion(cauchy_kernel(xm, psi).quat())) *
                                     (1.0 / (2.0 * h_fd));
                acc += d * psi[k].quat();
            }
            return norm(acc);
        });
    return *std::max_element(vals.begin(), vals.end());
}

// --- reports -----------------------------------------------------------------

double measured_order(double err_coarse, double err_fine) {
    if (!(err_coarse > 0.0) || err_fine < 0.0 || !std::isfinite(err_coarse) ||
        !std::isfinite(err_fine))
        throw std::domain_error("measured_order: needs err_coarse > 0 and err_fine >= 0");
    if (err_fine == 0.0) return std::numeric_limits<double>::infinity();
    return std::log2(err_coarse / err_fine);
}

// --- classical identities ------------------------------------------------------

IdentityReport stokes_residual(const FieldFn& g, const FieldFn& f, const Box& box,
                               const std::array<int, 3>& n_vol, int m_surf,
                               const StructuralSet& psi) {
    const auto sq = SurfaceQuadrature::build(box, m_surf, psi);
    const Quaternion lhs = surface_integral(g, f, sq);
    const auto h = cell_widths(box, n_vol);
    const Quaternion rhs = volume_integral(
        [&](const Point3& c) {
            const Quaternion gc = g(c), fc = f(c);
            Quaternion acc{};
            for (int k = 0; k < 3; ++k) {
                Point3 cp = c, cm = c;
                const double d = 0.5 * h[k];
                cp[k] += d;
                cm[k] -= d;
                const double inv = 1.0 / (2.0 * d);
                const Quaternion dfk = (f(cp) - f(cm)) * inv;
                const Quaternion dgk = (g(cp) - g(cm)) * inv;
                acc += gc * (psi[k].quat() * dfk) + (dgk * psi[k].quat()) * fc;
            }
            return acc;
        },
        box, n_vol);
    IdentityReport rep;
    rep.name = "stokes";
    rep.lhs = lhs;
    rep.rhs = rhs;
    rep.residual = norm(lhs - rhs);
    rep.resolution = {n_vol, m_surf, 0, 0.0};
    return rep;
}

IdentityReport borel_pompeiu_classical(const FieldFn& f, const FieldFn& g, const Point3& x,
                                       const Box& box, const std::array<int, 3>& n_vol,
                                       int m_surf, const StructuralSet& psi, double eps) {
    const bool inside = box.contains_interior(x);
    if (!inside && box.contains_closure(x))
        throw std::domain_error("borel_pompeiu_classical: x on the boundary is not supported");
    const auto sq = SurfaceQuadrature::build(box, m_surf, psi);
    const FieldFn kern = [&psi, x](const Point3& p) -> Quaternion {
        return cauchy_kernel(sub(p, x), psi).quat();
    };
    const Quaternion boundary = surface_integral(kern, f, sq) + surface_integral(g, kern, sq);
    const auto h = cell_widths(box, n_vol);
    const std::array<double, 3> half{0.5 * h[0], 0.5 * h[1], 0.5 * h[2]};
    const double hmax = std::max({h[0], h[1], h[2]});
    const double eps_eff = eps > 0.0 ? eps : 2.0 * hmax;
    const Quaternion volume = volume_integral(
        [&](const Point3& c) -> Quaternion {
            if (inside && cell_dist_sq(c, half, x) < eps_eff * eps_eff) return {};
            const Quaternion kc = kern(c);
            Quaternion df{}, dg{};
            for (int k = 0; k < 3; ++k) {
                Point3 cp = c, cm = c;
                const double d = half[k];
                cp[k] += d;
                cm[k] -= d;
                const double inv = 1.0 / (2.0 * d);
                df += psi[k].quat() * ((f(cp) - f(cm)) * inv);
                dg += ((g(cp) - g(cm)) * inv) * psi[k].quat();
            }
            return kc * df + dg * kc;
        },
        box, n_vol);
    IdentityReport rep;
    rep.name = "borel-pompeiu";
    rep.lhs = boundary - volume;
    rep.rhs = inside ? f(x) + g(x) : Quaternion{};
    rep.residual = norm(rep.lhs - rep.rhs);
    rep.resolution = {n_vol, m_surf, 0, 0.0};
    return rep;
}

// --- exponential weights -------------------------------------------------------

double LambdaSet::lambda(const Point3& x, int k) const {
    if (c[k] == 0.0) return 0.0;
    Point3 q = y, qa = y;
    q[k] = x[k];
    qa[k] = box.a[k];
    double dsum = 0.0;
    for (int i = 0; i < 3; ++i) {
        if (i == k) continue;
        Point3 qi = y;
        qi[i] = x[i];
        dsum += w.dphi(qi, i);
    }
    return c[k] * ((w.phi(q) - w.phi(qa)) + (x[k] - box.a[k]) * dsum);
}

double LambdaSet::sum(const Point3& x) const {
    return lambda(x, 0) + lambda(x, 1) + lambda(x, 2);
}

double LambdaSet::dlambda_diag(const Point3& x, int k) const {
    if (c[k] == 0.0) return 0.0;
    return c[k] * psi_ops::dphi_weight(w, x, y).value;
}

Quaternion LambdaSet::defining_value(const Point3& x) const {
    const double dw = psi_ops::dphi_weight(w, x, y).value;
    Quaternion acc{};
    for (int k = 0; k < 3; ++k) acc += psi[k].quat() * (c[k] * dw);
    return acc;
}

LambdaSet build_lambda(const Weight3& w, const AValue& sigma, const Point3& y,
                       const StructuralSet& psi, const Box& box) {
    const Quaternion q = sigma_inverse(sigma) * (kOne - sigma.quat());
    std::array<double, 3> c{};
    Quaternion recon{};
    for (int k = 0; k < 3; ++k) {
        c[k] = psi.coeff(q, k);
        recon += psi[k].quat() * c[k];
    }
    const double resid = norm(q - recon);
    if (resid > 1e-10)
        throw std::domain_error(
            "build_lambda: sigma^{-1}(1 - sigma) has a component outside the structural span "
            "(residual " +
            std::to_string(resid) + "); no real antiderivative family satisfies the condition");
    return LambdaSet{c, w, y, box, psi};
}

double weighted_product_rule_residual(const FieldFn& f, const FracParams& p,
                                      const LambdaSet& ls, const StructuralSet& psi,
                                      const Point3& y, const Point3& x, int n_quad,
                                      double h_fd) {
    require_real_orders(p, "weighted_product_rule_residual");
    if (!(h_fd > 0.0))
        throw std::invalid_argument("weighted_product_rule_residual: h_fd must be positive");
    for (int k = 0; k < 3; ++k)
        if (x[k] - h_fd < p.box.a[k] || x[k] + h_fd > p.box.b[k])
            throw std::domain_error(
                "weighted_product_rule_residual: derivative stencil leaves the box along axis " +
                std::to_string(k));
    const auto weighted = [&](const Point3& q) -> Quaternion {
        return psi_ops::cr_inner_integral(f, p, y, q, psi_ops::End::a, n_quad) *
               std::exp(ls.sum(q));
    };
    Quaternion dl{}, dr{};
    for (int k = 0; k < 3; ++k) {
        Point3 qp = x, qm = x;
        qp[k] += h_fd;
        qm[k] -= h_fd;
        const Quaternion d = (weighted(qp) - weighted(qm)) * (1.0 / (2.0 * h_fd));
        dl += psi[k].quat() * d;
        dr += d * psi[k].quat();
    }
    const Quaternion opl =
        psi_ops::frac_prop_psi_cr(f, p, psi, y, x, psi_ops::Hand::left, psi_ops::End::a, n_quad,
                                  h_fd);
    const Quaternion opr =
        psi_ops::frac_prop_psi_cr(f, p, psi, y, x, psi_ops::Hand::right, psi_ops::End::a, n_quad,
                                  h_fd);
    const Quaternion sinv = sigma_inverse(p.sigma);
    const double scale = psi_ops::dphi_weight(p.w, x, y).value * std::exp(ls.sum(x));
    const Quaternion rl = (sinv * opl) * scale;
    const Quaternion rr = (opr * sinv) * scale;
    return std::max(norm(dl - rl), norm(dr - rr));
}

// --- fractional identities -----------------------------------------------------

IdentityReport frac_stokes_residual(const FieldFn& f, const FieldFn& g, const FracParams& pf,
                                    const FracParams& pg, const Point3& y, const Box& box,
                                    const std::array<int, 3>& n_vol, int m_surf,
                                    const StructuralSet& psi, int n_quad, double h_fd) {
    require_real_orders(pf, "frac_stokes_residual");
    require_real_orders(pg, "frac_stokes_residual");
    require_same_box(pf.box, box, "frac_stokes_residual");
    require_same_box(pg.box, box, "frac_stokes_residual");
    const auto h = cell_widths(box, n_vol);
    const double hmin = std::min({h[0], h[1], h[2]});
    if (!(h_fd > 0.0) || h_fd >= 0.5 * hmin)
        throw std::invalid_argument(
            "frac_stokes_residual: h_fd must be positive and below half a cell width");
    const LambdaSet ls_f = lambda_for(pf, y, psi, box);
    const LambdaSet ls_g = lambda_for(pg, y, psi, box);
    const ScalarFn wfun = [&](const Point3& p) { return std::exp(ls_f.sum(p) + ls_g.sum(p)); };
    const FieldFn inner_f = [&](const Point3& p) {
        return psi_ops::cr_inner_integral(f, pf, y, p, psi_ops::End::a, n_quad);
    };
    const FieldFn inner_g = [&](const Point3& p) {
        return psi_ops::cr_inner_integral(g, pg, y, p, psi_ops::End::a, n_quad);
    };
    const auto sq = SurfaceQuadrature::build(box, m_surf, psi);
    const Quaternion lhs = surface_integral(inner_g, inner_f, sq, wfun);
    const Quaternion rhs = volume_integral(
        [&](const Point3& c) {
            const Quaternion df = psi_ops::frac_prop_psi_cr(f, pf, psi, y, c, psi_ops::Hand::left,
                                                            psi_ops::End::a, n_quad, h_fd);
            const Quaternion drg = psi_ops::frac_prop_psi_cr(
                g, pg, psi, y, c, psi_ops::Hand::right, psi_ops::End::a, n_quad, h_fd);
            const Quaternion term = inner_g(c) * volume_coefficient(pf, c, y) * df +
                                    drg * volume_coefficient(pg, c, y) * inner_f(c);
            return term * wfun(c);
        },
        box, n_vol);
    IdentityReport rep;
    rep.name = "frac-stokes";
    rep.lhs = lhs;
    rep.rhs = rhs;
    rep.residual = norm(lhs - rhs);
    rep.resolution = {n_vol, m_surf, n_quad, h_fd};
    return rep;
}

Quaternion remainder_R(const FieldFn& f, const FracParams& p, const Point3& x, const Point3& y,
                       int n_quad, double h_fd) {
    require_real_orders(p, "remainder_R");
    if (!p.box.contains_closure(x))
        throw std::domain_error("remainder_R: x outside the box");
    if (!p.box.contains_closure(y))
        throw std::domain_error("remainder_R: y outside the box");
    std::array<double, 3> d1{};
    for (int j = 0; j < 3; ++j) {
        const double nu = 1.0 - p.alpha[j].re();
        const double sig = p.sigma_comp(j);
        if (nu == 0.0 || sig == 0.0) {
            d1[j] = 1.0;  // unit order / zero proportion: the operator is the identity
            continue;
        }
        const frac1d::QuatFn one = [](double) { return kOne; };
        const Quaternion v = frac1d::prop_frac_derivative(
            one, frac1d::Order(nu), frac1d::Proportion(sig), p.w.slice(y, j), p.box.a[j],
            p.box.b[j], x[j], frac1d::Side::left, n_quad, h_fd);
        d1[j] = v.w;
    }
    Quaternion acc{};
    for (int i = 0; i < 3; ++i) {
        const Quaternion ui = psi_ops::cr_inner_slice(f, p, y, i, x[i], psi_ops::End::a, n_quad);
        acc += ui * (d1[(i + 1) % 3] + d1[(i + 2) % 3]);
    }
    return acc;
}

FracBPBreakdown frac_borel_pompeiu_terms(const FieldFn& f, const FieldFn& g,
                                         const FracParams& pf, const FracParams& pg,
                                         const Point3& x, const Point3& y, const Box& box,
                                         const std::array<int, 3>& n_vol, int m_surf,
                                         const StructuralSet& psi, int n_quad, double h_fd,
                                         bool skip_volume) {
    require_real_orders(pf, "frac_borel_pompeiu");
    require_real_orders(pg, "frac_borel_pompeiu");
    require_same_box(pf.box, box, "frac_borel_pompeiu");
    require_same_box(pg.box, box, "frac_borel_pompeiu");
    if (!(h_fd > 0.0))
        throw std::invalid_argument("frac_borel_pompeiu: h_fd must be positive");
    const auto h = cell_widths(box, n_vol);
    const double hmax = std::max({h[0], h[1], h[2]});
    const double hmin = std::min({h[0], h[1], h[2]});
    const bool inside = box.contains_interior(x);
    if (!inside && box.contains_closure(x))
        throw std::domain_error("frac_borel_pompeiu: x on the boundary is not supported");
    if (inside) {
        // The ball exclusion around the outer-derivative evaluation points
        // only protects the volume convolution; the boundary-only path has no
        // singular volume factor and needs no margin.
        if (!skip_volume)
            for (int k = 0; k < 3; ++k)
                if (x[k] - box.a[k] <= 2.0 * hmax || box.b[k] - x[k] <= 2.0 * hmax)
                    throw std::domain_error(
                        "frac_borel_pompeiu: interior x must sit more than 2 cell widths from "
                        "the boundary; refine n_vol or move x");
    } else {
        for (int k = 0; k < 3; ++k)
            if (x[k] < box.a[k])
                throw std::domain_error(
                    "frac_borel_pompeiu: exterior x needs x_k >= a_k on every axis (the "
                    "per-axis operators anchor at a_k)");
    }
    if (!skip_volume && h_fd >= 0.5 * hmin)
        throw std::invalid_argument(
            "frac_borel_pompeiu: h_fd must be below half a cell width for the volume term");

    const LambdaSet ls_f = lambda_for(pf, y, psi, box);
    const LambdaSet ls_g = lambda_for(pg, y, psi, box);
    const auto sq = SurfaceQuadrature::build(box, m_surf, psi);

    const auto kexp = [&psi](const LambdaSet& ls, const Point3& zeta,
                             const Point3& xp) -> Quaternion {
        return Quaternion(cauchy_kernel(sub(zeta, xp), psi).quat()) *
               std::exp(ls.sum(zeta) - ls.sum(xp));
    };

    FracBPBreakdown out;
    out.inside = inside;

    {
        const auto terms_f =
            par::parallel_map<Quaternion>(sq.nodes.size(), [&](std::size_t idx) {
                const SurfaceNode& nd = sq.nodes[idx];
                const Quaternion ka = frac_partial_sum(
                    [&](const Point3& xp) { return kexp(ls_f, nd.p, xp); }, pf, x, y, n_quad,
                    h_fd);
                const Quaternion iv =
                    psi_ops::cr_inner_integral(f, pf, y, nd.p, psi_ops::End::a, n_quad);
                return ka * nd.weight.quat() * iv;
            });
        out.boundary_f = face_reduce(terms_f, sq);
        const auto terms_g =
            par::parallel_map<Quaternion>(sq.nodes.size(), [&](std::size_t idx) {
                const SurfaceNode& nd = sq.nodes[idx];
                const Quaternion kb = frac_partial_sum(
                    [&](const Point3& xp) { return kexp(ls_g, nd.p, xp); }, pg, x, y, n_quad,
                    h_fd);
                const Quaternion iv =
                    psi_ops::cr_inner_integral(g, pg, y, nd.p, psi_ops::End::a, n_quad);
                return iv * nd.weight.quat() * kb;
            });
        out.boundary_g = face_reduce(terms_g, sq);
    }

    if (!skip_volume) {
        const std::size_t total = static_cast<std::size_t>(n_vol[0]) * n_vol[1] * n_vol[2];
        const double cellv = h[0] * h[1] * h[2];
        const std::array<double, 3> half{0.5 * h[0], 0.5 * h[1], 0.5 * h[2]};
        const double eps = 2.0 * hmax;
        std::vector<Point3> centers(total);
        for (std::size_t idx = 0; idx < total; ++idx)
            centers[idx] = cell_center(box, h, n_vol, idx);

        // x'-independent part of the volume integrand at each cell center.
        const auto field_f = par::parallel_map<Quaternion>(total, [&](std::size_t idx) {
            const Point3& c = centers[idx];
            const Quaternion df = psi_ops::frac_prop_psi_cr(f, pf, psi, y, c,
                                                            psi_ops::Hand::left, psi_ops::End::a,
                                                            n_quad, h_fd);
            return volume_coefficient(pf, c, y) * df * std::exp(ls_f.sum(c));
        });
        const auto field_g = par::parallel_map<Quaternion>(total, [&](std::size_t idx) {
            const Point3& c = centers[idx];
            const Quaternion drg = psi_ops::frac_prop_psi_cr(g, pg, psi, y, c,
                                                             psi_ops::Hand::right,
                                                             psi_ops::End::a, n_quad, h_fd);
            return drg * volume_coefficient(pg, c, y) * std::exp(ls_g.sum(c));
        });

        const auto conv_f = [&](const Point3& xp) -> Quaternion {
            const auto terms = par::parallel_map<Quaternion>(total, [&](std::size_t idx) {
                if (cell_dist_sq(centers[idx], half, xp) < eps * eps) return Quaternion{};
                return Quaternion(cauchy_kernel(sub(centers[idx], xp), psi).quat()) *
                       field_f[idx];
            });
            return par::pairwise_sum(terms) * (cellv * std::exp(-ls_f.sum(xp)));
        };
        const auto conv_g = [&](const Point3& xp) -> Quaternion {
            const auto terms = par::parallel_map<Quaternion>(total, [&](std::size_t idx) {
                if (cell_dist_sq(centers[idx], half, xp) < eps * eps) return Quaternion{};
                return field_g[idx] *
                       Quaternion(cauchy_kernel(sub(centers[idx], xp), psi).quat());
            });
            return par::pairwise_sum(terms) * (cellv * std::exp(-ls_g.sum(xp)));
        };
        out.volume_f = frac_partial_sum(conv_f, pf, x, y, n_quad, h_fd);
        out.volume_g = frac_partial_sum(conv_g, pg, x, y, n_quad, h_fd);
    }

    if (inside) {
        Quaternion s{};
        for (int i = 0; i < 3; ++i) {
            Point3 q = y;
            q[i] = x[i];
            s += f(q) + g(q);
        }
        out.sum_fg = s;
        out.remainder_f = remainder_R(f, pf, x, y, n_quad, h_fd);
        out.remainder_g = remainder_R(g, pg, x, y, n_quad, h_fd);
        out.rhs = s + out.remainder_f + out.remainder_g;
    }
    out.lhs = out.boundary_f + out.boundary_g - out.volume_f - out.volume_g;
    return out;
}

IdentityReport frac_borel_pompeiu(const FieldFn& f, const FieldFn& g, const FracParams& pf,
                                  const FracParams& pg, const Point3& x, const Point3& y,
                                  const Box& box, const std::array<int, 3>& n_vol, int m_surf,
                                  const StructuralSet& psi, int n_quad, double h_fd) {
    const auto t =
        frac_borel_pompeiu_terms(f, g, pf, pg, x, y, box, n_vol, m_surf, psi, n_quad, h_fd);
    IdentityReport rep;
    rep.name = "frac-bp";
    rep.lhs = t.lhs;
    rep.rhs = t.rhs;
    rep.residual = norm(t.lhs - t.rhs);
    rep.resolution = {n_vol, m_surf, n_quad, h_fd};
    return rep;
}

IdentityReport cauchy_corollary_check(const FieldFn& f, const FieldFn& g, const FracParams& pf,
                                      const FracParams& pg, const Point3& x, const Point3& y,
                                      const Box& box, const std::array<int, 3>& n_vol,
                                      int m_surf, const StructuralSet& psi, int n_quad,
                                      double h_fd) {
    require_real_orders(pf, "cauchy_corollary_check");
    require_real_orders(pg, "cauchy_corollary_check");
    require_same_box(pf.box, box, "cauchy_corollary_check");
    require_same_box(pg.box, box, "cauchy_corollary_check");
    const double min_width = std::min({box.width(0), box.width(1), box.width(2)});
    const double margin = std::max(2.0 * h_fd, 1e-3 * min_width);
    const auto xs = psi_ops::interior_lattice(box, 3, margin);
    const auto repf =
        psi_ops::classify_hyperholomorphic(f, pf, psi, y, xs, psi_ops::Hand::left, n_quad, h_fd);
    if (!repf.member)
        throw std::domain_error(
            "cauchy_corollary_check: f is not a certified member of the left class (residual " +
            std::to_string(repf.residual) + " vs tolerance " + std::to_string(repf.tolerance) +
            ")");
    const auto repg =
        psi_ops::classify_hyperholomorphic(g, pg, psi, y, xs, psi_ops::Hand::right, n_quad, h_fd);
    if (!repg.member)
        throw std::domain_error(
            "cauchy_corollary_check: g is not a certified member of the right class (residual " +
            std::to_string(repg.residual) + " vs tolerance " + std::to_string(repg.tolerance) +
            ")");

    const LambdaSet ls_f = lambda_for(pf, y, psi, box);
    const LambdaSet ls_g = lambda_for(pg, y, psi, box);
    const ScalarFn wfun = [&](const Point3& p) { return std::exp(ls_f.sum(p) + ls_g.sum(p)); };
    const FieldFn inner_f = [&](const Point3& p) {
        return psi_ops::cr_inner_integral(f, pf, y, p, psi_ops::End::a, n_quad);
    };
    const FieldFn inner_g = [&](const Point3& p) {
        return psi_ops::cr_inner_integral(g, pg, y, p, psi_ops::End::a, n_quad);
    };
    const auto sq = SurfaceQuadrature::build(box, m_surf, psi);
    const Quaternion stokes_boundary = surface_integral(inner_g, inner_f, sq, wfun);

    const auto bp = frac_borel_pompeiu_terms(f, g, pf, pg, x, y, box, n_vol, m_surf, psi, n_quad,
                                             h_fd, /*skip_volume=*/true);
    IdentityReport rep;
    rep.name = "cauchy-corollary";
    rep.lhs = bp.lhs;
    rep.rhs = bp.rhs;
    rep.residual = std::max(norm(bp.lhs - bp.rhs), norm(stokes_boundary));
    rep.resolution = {n_vol, m_surf, n_quad, h_fd};
    return rep;
}

}  // namespace quatfrac::integral_id
