// Acceptance gate for the library: one numbered criterion per invocation,
// one PASS/FAIL verdict line each, with every tolerance pinned in the body.
// Run with a criterion key as the first argument (see kCriteria below), or
// with no arguments to execute every criterion in order.  The determinism
// criterion additionally needs the verify binary and a config file, passed
// as argv[2]/argv[3] or through VERIFY_BIN / VERIFY_CFG.
//
// Two criteria fail by design of the discretization and are reported with
// their measured evidence rather than hidden:
//   * laplacian-factorization pins a degree-3 polynomial, on which the
//     composed second-order stencils are exact, so there is no truncation
//     error left to converge; the verdict line carries the rounding-level
//     residuals and a degree-4 control that does converge at order 2.
//   * weighted-product-rule pins a proportion/weight pair whose closed-form
//     exponent family has nonzero cross partials; the residual converges to
//     the predicted analytic defect instead of zero, and the verdict line
//     prints both numbers.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "quatfrac/frac1d.hpp"
#include "quatfrac/grid.hpp"
#include "quatfrac/integral_id.hpp"
#include "quatfrac/parallel.hpp"
#include "quatfrac/psi_ops.hpp"
#include "quatfrac/quaternion.hpp"

using quatfrac::AValue;
using quatfrac::CQuaternion;
using quatfrac::Quaternion;
using quatfrac::StructuralSet;
using quatfrac::grid::Box;
using quatfrac::grid::FieldFn;
using quatfrac::grid::GridField;
using quatfrac::grid::Point3;
namespace frac1d = quatfrac::frac1d;
namespace ops = quatfrac::psi_ops;
namespace idn = quatfrac::integral_id;
namespace par = quatfrac::par;

namespace {

constexpr double kPi = std::numbers::pi;
const Box kUnit{{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}};

struct Verdict {
    bool pass = false;
    std::string line;                 // everything after "PASS <key>: "
    std::vector<std::string> notes;   // optional continuation lines
};

double now_s() {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
}

std::string fmt(const char* f, ...) {
    char buf[1024];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

// Random quaternion-valued polynomial of the given total degree with
// coefficients uniform in [-scale, scale]; the monomial order and the
// generator are fixed, so a seed pins the field exactly.
FieldFn random_poly(std::uint64_t seed, int deg, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    struct Term {
        Quaternion c;
        int e0, e1, e2;
    };
    std::vector<Term> terms;
    for (int e0 = 0; e0 <= deg; ++e0)
        for (int e1 = 0; e1 + e0 <= deg; ++e1)
            for (int e2 = 0; e2 + e1 + e0 <= deg; ++e2)
                terms.push_back({Quaternion{u(rng), u(rng), u(rng), u(rng)} * scale, e0, e1, e2});
    return [terms](const Point3& p) {
        Quaternion acc{};
        for (const auto& t : terms) {
            double m = 1.0;
            for (int i = 0; i < t.e0; ++i) m *= p[0];
            for (int i = 0; i < t.e1; ++i) m *= p[1];
            for (int i = 0; i < t.e2; ++i) m *= p[2];
            acc += t.c * m;
        }
        return acc;
    };
}

// phi(x) = x0 + x1 + x2 + 0.1 x0^2: linear in two axes, curved in the first.
ops::Weight3 curved_first_axis_weight() {
    ops::Weight3 w;
    w.phi = [](const Point3& p) { return p[0] + p[1] + p[2] + 0.1 * p[0] * p[0]; };
    w.dphi = [](const Point3& p, int k) { return k == 0 ? 1.0 + 0.2 * p[0] : 1.0; };
    return w;
}

// The separated sum of one-variable slices through y, the field on which the
// degenerate fractional boundary/volume identity equals the classical one.
FieldFn slice_sum(const FieldFn& f, const Point3& y) {
    return [f, y](const Point3& q) {
        Quaternion acc{};
        for (int i = 0; i < 3; ++i) {
            Point3 s = y;
            s[i] = q[i];
            acc += f(s);
        }
        return acc;
    };
}

// ---------------------------------------------------------------------------
// 1. Unit-sphere boundary moment: value and convergence order.
Verdict sphere_identity() {
    const double t0 = now_s();
    const auto psi = StructuralSet::standard();
    const double fourpi = 4.0 * kPi;
    const int ms[3] = {16, 32, 64};
    double rel[3];
    for (int i = 0; i < 3; ++i) {
        const Quaternion mom = idn::sphere_moment({0.0, 0.0, 0.0}, 1.0, ms[i], psi);
        rel[i] = norm(mom - Quaternion{fourpi, 0.0, 0.0, 0.0}) / fourpi;
    }
    const double o1 = idn::measured_order(rel[0], rel[1]);
    const double o2 = idn::measured_order(rel[1], rel[2]);
    const double secs = now_s() - t0;
    Verdict v;
    v.pass = rel[2] < 1e-3 && o1 >= 2.0 && o2 >= 2.0 && secs < 5.0;
    v.line = fmt("radius-1 boundary moment vs 4*pi*e0: rel err %.3e at m=64 (tol 1e-3); "
                 "orders %.4f, %.4f over m=16/32/64 (need >= 2); runtime %.2fs (budget 5s)",
                 rel[2], o1, o2, secs);
    return v;
}

// ---------------------------------------------------------------------------
// 2. Inverse composition of the 1-D operators: derivative of the integral
//    recovers f, and the residual halves under joint quadrature/step
//    refinement.
Verdict inverse_composition() {
    const double t0 = now_s();
    const frac1d::RealFn f = [](double t) { return std::sin(t); };
    const frac1d::Weight w{[](double t) { return t + 0.1 * t * t; },
                           [](double t) { return 1.0 + 0.2 * t; },
                           {}};
    const frac1d::Order alpha(0.5);
    const frac1d::Proportion rho(0.7);
    auto level = [&](int nq, double h_fd) {
        const auto errs = par::parallel_map<double>(10, [&](std::size_t j) {
            const double t = 2.0 * (static_cast<double>(j) + 1.0) / 11.0;
            const frac1d::RealFn integral = [&](double s) {
                return frac1d::prop_frac_integral(f, alpha, rho, w, 0.0, 2.0, s,
                                                  frac1d::Side::left, nq);
            };
            const double dif = frac1d::prop_frac_derivative(integral, alpha, rho, w, 0.0, 2.0,
                                                            t, frac1d::Side::left, nq, h_fd);
            return std::abs(dif - f(t));
        });
        return *std::max_element(errs.begin(), errs.end());
    };
    const double r1 = level(2048, 1e-3);
    const double t1 = now_s();
    const double r2 = level(4096, 5e-4);
    const double secs = now_s() - t0;
    const double ratio = r2 / r1;
    Verdict v;
    const bool acc_ok = r1 < 1e-2;
    const bool ratio_ok = ratio >= 0.35 && ratio <= 0.65;
    const bool time_ok = secs < 10.0;
    v.pass = acc_ok && ratio_ok && time_ok;
    v.line = fmt("f=sin on [0,2], order 0.5, proportion 0.7, curved weight: max residual over "
                 "10 points %.3e at n_quad=2048, h_fd=1e-3 (tol 1e-2, %s); refinement ratio "
                 "%.3f (need 0.35..0.65, %s); runtime %.1fs (budget 10s, %s)",
                 r1, acc_ok ? "ok" : "FAIL", ratio, ratio_ok ? "ok" : "FAIL", secs,
                 time_ok ? "ok" : "FAIL");
    v.notes.push_back(fmt("note: level times %.1fs at 2048 and %.1fs at 4096 on %d worker "
                          "thread(s); the composition costs n_quad^2 kernel evaluations per "
                          "point, so the 10s budget needs roughly eight hardware threads",
                          t1 - t0, secs - (t1 - t0), par::max_threads()));
    return v;
}

// ---------------------------------------------------------------------------
// 3. Factorization of the Laplacian through the four composed first-order
//    operators, measured on grids n in {8,16,32}.
Verdict laplacian_factorization() {
    const double t0 = now_s();
    const auto psi = StructuralSet::standard();
    const auto psiC = psi.conjugated();
    auto ladder = [&](const FieldFn& f, double out[3]) {
        int idx = 0;
        for (int n : {8, 16, 32}) {
            const GridField gf = quatfrac::grid::sample_field(f, kUnit, {n, n, n});
            const GridField lap = ops::laplacian(gf);
            const GridField cands[4] = {
                ops::psi_dbar(ops::psi_dbar(gf, psi, ops::Hand::left), psiC, ops::Hand::left),
                ops::psi_dbar(ops::psi_dbar(gf, psiC, ops::Hand::left), psi, ops::Hand::left),
                ops::psi_dbar(ops::psi_dbar(gf, psi, ops::Hand::right), psiC, ops::Hand::right),
                ops::psi_dbar(ops::psi_dbar(gf, psiC, ops::Hand::right), psi, ops::Hand::right),
            };
            double worst = 0.0;
            for (int i = 2; i + 2 < n; ++i)
                for (int j = 2; j + 2 < n; ++j)
                    for (int k = 2; k + 2 < n; ++k)
                        for (const auto& c : cands)
                            worst = std::max(worst, norm(c.at(i, j, k) - lap.at(i, j, k)));
            out[idx++] = worst;
        }
    };
    double r3[3], r4[3];
    ladder(random_poly(55, 3), r3);
    ladder(random_poly(56, 4), r4);
    const double o1 = idn::measured_order(r3[0], r3[1]);
    const double o2 = idn::measured_order(r3[1], r3[2]);
    const double q1 = idn::measured_order(r4[0], r4[1]);
    const double q2 = idn::measured_order(r4[1], r4[2]);
    const double secs = now_s() - t0;
    Verdict v;
    const bool window = o1 >= 1.7 && o1 <= 2.3 && o2 >= 1.7 && o2 <= 2.3;
    v.pass = window && secs < 30.0;
    v.line = fmt("four composed operators vs direct Laplacian on a random degree-3 polynomial: "
                 "residuals %.2e, %.2e, %.2e at n=8/16/32, measured orders %.2f, %.2f "
                 "(need 2.0 +/- 0.3, %s); runtime %.1fs (budget 30s)",
                 r3[0], r3[1], r3[2], o1, o2, window ? "ok" : "FAIL", secs);
    v.notes.push_back(fmt("note: the composed second-order stencils are exact on every "
                          "polynomial of degree 3 (the lone h^2/6 third-derivative term is "
                          "constant along its axis and the cross terms cancel in the "
                          "conjugate-pair sum), so the degree-3 residual above is rounding "
                          "noise with no order to measure"));
    v.notes.push_back(fmt("note: degree-4 control with nonzero fourth partials: residuals "
                          "%.2e, %.2e, %.2e, orders %.4f, %.4f -- the genuine truncation "
                          "error converges at second order",
                          r4[0], r4[1], r4[2], q1, q2));
    return v;
}

// ---------------------------------------------------------------------------
// 4. Basis-weighted integration by parts: convergence order on a random pair
//    and the exact closed-surface null.
Verdict integration_by_parts() {
    const auto psi = StructuralSet::standard();
    const FieldFn g = random_poly(101, 3);
    const FieldFn f = random_poly(102, 3);
    double r[3];
    int idx = 0;
    for (int n : {4, 8, 16})
        r[idx++] = idn::stokes_residual(g, f, kUnit, {n, n, n}, n, psi).residual;
    const double o1 = idn::measured_order(r[0], r[1]);
    const double o2 = idn::measured_order(r[1], r[2]);
    const auto sq = idn::SurfaceQuadrature::build(kUnit, 16, psi);
    const FieldFn one = [](const Point3&) { return Quaternion{1.0, 0.0, 0.0, 0.0}; };
    const double null_norm = norm(idn::surface_integral(one, one, sq));
    Verdict v;
    v.pass = o1 >= 1.8 && o2 >= 1.8 && null_norm <= 1e-14;
    v.line = fmt("boundary term vs volume term on a random cubic pair: residuals %.3e, %.3e, "
                 "%.3e over (4,8,16), orders %.3f, %.3f (need >= 1.8); closed-surface null "
                 "|sum of oriented weights| = %.1e (tol 1e-14)",
                 r[0], r[1], r[2], o1, o2, null_norm);
    return v;
}

// ---------------------------------------------------------------------------
// 5. Classical reproduction formula: interior value, exterior null, and
//    strict decrease under refinement.
Verdict reproduction_formula() {
    const double t0 = now_s();
    const auto psi = StructuralSet::standard();
    const FieldFn f = random_poly(101, 3, 0.5);
    const FieldFn g = random_poly(102, 3, 0.5);
    const Point3 xi{0.4, 0.55, 0.5}, xe{1.3, 0.45, 0.55};
    const double scale = norm(f(xi) + g(xi));
    double ri[3], re[3];
    int idx = 0;
    for (int n : {8, 16, 32}) {
        ri[idx] = idn::borel_pompeiu_classical(f, g, xi, kUnit, {n, n, n}, n, psi).residual /
                  scale;
        re[idx] = norm(idn::borel_pompeiu_classical(f, g, xe, kUnit, {n, n, n}, n, psi).lhs);
        ++idx;
    }
    const double secs = now_s() - t0;
    Verdict v;
    const bool dec_i = ri[0] > ri[1] && ri[1] > ri[2];
    const bool dec_e = re[0] > re[1] && re[1] > re[2];
    v.pass = ri[2] < 5e-2 && re[2] < 5e-2 * scale && dec_i && dec_e && secs < 180.0;
    v.line = fmt("interior rel residual %.3e at n_vol=32^3, m_surf=32^2/face (tol 5e-2), "
                 "ladder %.2e > %.2e > %.2e %s; exterior |lhs| %.3e (tol 5e-2 * scale %.3f), "
                 "ladder %.2e > %.2e > %.2e %s; runtime %.1fs (budget 180s)",
                 ri[2], ri[0], ri[1], ri[2], dec_i ? "strictly decreasing" : "NOT decreasing",
                 re[2], scale, re[0], re[1], re[2],
                 dec_e ? "strictly decreasing" : "NOT decreasing", secs);
    return v;
}

// ---------------------------------------------------------------------------
// 6. Kernel annihilation under the right first-order operator: second-order
//    decay of the finite-difference residual on the shell.
Verdict kernel_annihilation() {
    const auto psi = StructuralSet::standard();
    const double r1 = idn::kernel_hyperholomorphy_residual(psi, 1e-2, 6);
    const double r2 = idn::kernel_hyperholomorphy_residual(psi, 5e-3, 6);
    const double r3 = idn::kernel_hyperholomorphy_residual(psi, 2.5e-3, 6);
    const double o1 = idn::measured_order(r1, r2);
    const double o2 = idn::measured_order(r2, r3);
    Verdict v;
    v.pass = o1 >= 1.7 && o1 <= 2.3 && o2 >= 1.7 && o2 <= 2.3;
    v.line = fmt("max shell residual of the operator applied to the reproduction kernel: "
                 "%.3e, %.3e, %.3e at h_fd=1e-2/5e-3/2.5e-3, orders %.3f, %.3f "
                 "(need 2.0 +/- 0.3)",
                 r1, r2, r3, o1, o2);
    return v;
}

// ---------------------------------------------------------------------------
// 7. Weighted product rule for the exponential factor, plus the defining
//    condition of the closed-form exponent family.
Verdict weighted_product_rule() {
    const auto psi = StructuralSet::standard();
    const Point3 y{0.5, 0.5, 0.5}, x{0.5, 0.45, 0.6};
    const AValue sig(0.5, 0.3, 0.0);
    const std::array<frac1d::Order, 3> alpha{frac1d::Order(0.5), frac1d::Order(0.7),
                                             frac1d::Order(0.9)};
    const auto w = curved_first_axis_weight();
    const ops::FracParams p(kUnit, alpha, sig, w);
    const auto ls = idn::build_lambda(w, sig, y, psi, kUnit);
    const FieldFn f = random_poly(7, 3, 0.5);

    const double r1 = idn::weighted_product_rule_residual(f, p, ls, psi, y, x, 64, 4e-3);
    const double r2 = idn::weighted_product_rule_residual(f, p, ls, psi, y, x, 128, 2e-3);
    const double r3 = idn::weighted_product_rule_residual(f, p, ls, psi, y, x, 256, 1e-3);
    const Quaternion u = ops::cr_inner_integral(f, p, y, x, ops::End::a, 256);
    const double defect = std::abs(0.2 * (ls.c[1] * x[1] + ls.c[2] * x[2])) *
                          std::exp(ls.sum(x)) * norm(u);

    // Defining condition of the exponent family at 100 random interior nodes.
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> uni(0.05, 0.95);
    const double h = 1e-6;
    double worst_def = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Point3 q{uni(rng), uni(rng), uni(rng)};
        for (int k = 0; k < 3; ++k) {
            Point3 qp = q, qm = q;
            qp[k] += h;
            qm[k] -= h;
            const double fd = (ls.lambda(qp, k) - ls.lambda(qm, k)) / (2.0 * h);
            worst_def = std::max(worst_def, std::abs(fd - ls.dlambda_diag(q, k)));
        }
    }

    Verdict v;
    const bool to_zero = r1 > r2 && r2 > r3 && r3 <= 0.5 * r1;
    const bool def_ok = worst_def < 1e-8;
    v.pass = to_zero && def_ok;
    v.line = fmt("product-rule residual over levels (64,4e-3)/(128,2e-3)/(256,1e-3): %.4e, "
                 "%.4e, %.4e -- %s; exponent-family defining condition max residual %.2e at "
                 "100 random nodes (tol 1e-8, %s)",
                 r1, r2, r3,
                 to_zero ? "decreases to zero"
                         : "does NOT decrease toward zero (needs strict decrease and at "
                           "least halving)",
                 worst_def, def_ok ? "ok" : "FAIL");
    v.notes.push_back(fmt("note: for this proportion/weight pair the exponent family has "
                          "nonzero cross partials, and the residual converges to the "
                          "predicted analytic defect |0.2 (c1 x1 + c2 x2)| e^Lambda |u| = "
                          "%.4e (measured/predicted = %.5f) instead of zero; the rule is "
                          "exact only when each exponent depends on its own axis alone",
                          defect, r3 / defect));
    return v;
}

// ---------------------------------------------------------------------------
// 8. Fractional proportional boundary/volume identity: monotone refinement
//    and the degenerate comparison against the classical theorem.
Verdict fractional_stokes() {
    const double t0 = now_s();
    const auto psi = StructuralSet::standard();
    const Point3 y{0.4, 0.6, 0.5};
    const FieldFn f = random_poly(201, 3, 0.5);
    const FieldFn g = random_poly(202, 3, 0.5);
    const std::array<frac1d::Order, 3> alpha{frac1d::Order(0.6), frac1d::Order(0.8),
                                             frac1d::Order(1.0)};
    const ops::FracParams p(kUnit, alpha, AValue(0.7, 0.0, 0.0), curved_first_axis_weight());
    double r[3];
    int idx = 0;
    for (int n : {8, 12, 16}) {
        r[idx++] = idn::frac_stokes_residual(f, g, p, p, y, kUnit, {n, n, n}, n, psi, 8 * n,
                                             1.0 / (8.0 * n))
                       .residual;
    }
    const bool dec = r[0] > r[1] && r[1] > r[2];

    // Degenerate limits: unit orders, real unit proportion, linear weight.
    const std::array<frac1d::Order, 3> unit{frac1d::Order(1.0), frac1d::Order(1.0),
                                            frac1d::Order(1.0)};
    const ops::FracParams pd(kUnit, unit, AValue(1.0, 0.0, 0.0),
                             ops::Weight3::coordinate_sum());
    const double rf = idn::frac_stokes_residual(f, g, pd, pd, y, kUnit, {8, 8, 8}, 8, psi, 16,
                                                0.499 / 8.0)
                          .residual;
    const double rc =
        idn::stokes_residual(slice_sum(g, y), slice_sum(f, y), kUnit, {8, 8, 8}, 8, psi)
            .residual;
    const double ratio = rf / rc;
    const double secs = now_s() - t0;
    Verdict v;
    const bool factor2 = ratio >= 0.5 && ratio <= 2.0;
    v.pass = dec && factor2;
    v.line = fmt("residual ladder %.4e > %.4e > %.4e at n_vol=8^3/12^3/16^3 (%s); degenerate "
                 "limit vs classical theorem on the separated pair: %.3e vs %.3e, ratio %.3f "
                 "(need within factor 2, %s); runtime %.1fs",
                 r[0], r[1], r[2], dec ? "monotone decrease" : "NOT monotone", rf, rc, ratio,
                 factor2 ? "ok" : "FAIL", secs);
    return v;
}

// ---------------------------------------------------------------------------
// 9. Fractional reproduction formula: exterior decay and the interior
//    term-by-term cross-check against an independent assembly.
Verdict fractional_reproduction() {
    const double t0 = now_s();
    const auto psi = StructuralSet::standard();

    // Exterior point whose axis-anchored integration paths stay clear of the
    // closed box, so every integrand is regular.
    const Point3 ye{0.4, 0.6, 0.5}, xe{1.3, 1.2, 1.15};
    const FieldFn fe = random_poly(41, 3, 0.5);
    const FieldFn ge = random_poly(42, 3, 0.5);
    const std::array<frac1d::Order, 3> ae{frac1d::Order(0.3), frac1d::Order(0.4),
                                          frac1d::Order(0.5)};
    const ops::FracParams pe(kUnit, ae, AValue(0.4, 0.2, 0.0), ops::Weight3::coordinate_sum());
    const int nl[3] = {4, 8, 16};
    const int nq[3] = {64, 128, 256};
    const double hf[3] = {0.02, 0.01, 0.005};
    double e[3];
    for (int l = 0; l < 3; ++l) {
        const int n = nl[l];
        e[l] = norm(idn::frac_borel_pompeiu_terms(fe, ge, pe, pe, xe, ye, kUnit, {n, n, n}, n,
                                                  psi, nq[l], hf[l])
                        .lhs);
    }
    const bool dec = e[0] > e[1] && e[1] > e[2];

    // Interior plain-derivative constant field against a from-scratch serial
    // assembly that shares only the 1-D primitives and the quadrature rule.
    const Point3 y{0.45, 0.55, 0.5}, x{0.55, 0.42, 0.6};
    const Quaternion cf{0.8, 0.3, -0.2, 0.1};
    const FieldFn f = [cf](const Point3&) { return cf; };
    const FieldFn zero = [](const Point3&) { return Quaternion{}; };
    const double alpha = 0.5;
    const std::array<frac1d::Order, 3> al{frac1d::Order(alpha), frac1d::Order(alpha),
                                          frac1d::Order(alpha)};
    const ops::FracParams prl(kUnit, al, AValue(1.0, 1.0, 1.0), ops::Weight3::coordinate_sum());
    const std::array<int, 3> nv{6, 6, 6};
    const int m_surf = 6;
    const int nqi = 48;
    const double h_fd = 1e-3;
    const auto got = idn::frac_borel_pompeiu_terms(f, zero, prl, prl, x, y, kUnit, nv, m_surf,
                                                   psi, nqi, h_fd);

    const auto kern = [&psi](const Point3& d) {
        const Quaternion eq{d[0], d[1], d[2], 0.0};
        const double n = norm(eq);
        return conj(eq) * (1.0 / (4.0 * kPi * n * n * n));
    };
    const double nu = 1.0 - alpha;
    const auto inner = [&](const Point3& p) {
        Quaternion acc{};
        for (int i = 0; i < 3; ++i) {
            const frac1d::QuatFn fi = [&](double) { return cf; };
            acc += frac1d::prop_frac_integral(fi, frac1d::Order(nu), frac1d::Proportion(1.0),
                                              prl.w.slice(y, i), 0.0, 1.0, p[i],
                                              frac1d::Side::left, nqi);
        }
        return acc;
    };
    const auto sq = idn::SurfaceQuadrature::build(kUnit, m_surf, psi);
    Quaternion bf{};
    for (const auto& nd : sq.nodes) {
        Quaternion ka{};
        for (int i = 0; i < 3; ++i) {
            const frac1d::QuatFn hi = [&](double t) {
                Point3 q = x;
                q[i] = t;
                return kern({nd.p[0] - q[0], nd.p[1] - q[1], nd.p[2] - q[2]});
            };
            ka += frac1d::prop_frac_derivative(hi, frac1d::Order(nu), frac1d::Proportion(1.0),
                                               prl.w.slice(y, i), 0.0, 1.0, x[i],
                                               frac1d::Side::left, nqi, h_fd);
        }
        bf += ka * nd.weight.quat() * inner(nd.p);
    }

    const double h = 1.0 / 6.0;
    const double eps = 2.0 * h;
    std::vector<Point3> centers;
    std::vector<Quaternion> field;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
            for (int k = 0; k < 6; ++k) {
                const Point3 c{(i + 0.5) * h, (j + 0.5) * h, (k + 0.5) * h};
                Quaternion d{};
                for (int ax = 0; ax < 3; ++ax) {
                    Point3 cp = c, cm = c;
                    cp[ax] += h_fd;
                    cm[ax] -= h_fd;
                    d += psi[ax].quat() * ((inner(cp) - inner(cm)) * (1.0 / (2.0 * h_fd)));
                }
                centers.push_back(c);
                field.push_back(d);
            }
    const auto conv = [&](const Point3& xp) {
        Quaternion acc{};
        for (std::size_t c = 0; c < centers.size(); ++c) {
            double s2 = 0.0;
            for (int k = 0; k < 3; ++k) {
                const double lo = centers[c][k] - 0.5 * h, hi2 = centers[c][k] + 0.5 * h;
                const double t = xp[k] < lo ? lo - xp[k] : (xp[k] > hi2 ? xp[k] - hi2 : 0.0);
                s2 += t * t;
            }
            if (s2 < eps * eps) continue;
            acc += kern({centers[c][0] - xp[0], centers[c][1] - xp[1],
                         centers[c][2] - xp[2]}) *
                   field[c];
        }
        return acc * (h * h * h);
    };
    Quaternion vf{};
    for (int i = 0; i < 3; ++i) {
        const frac1d::QuatFn hi = [&](double t) {
            Point3 q = x;
            q[i] = t;
            return conv(q);
        };
        vf += frac1d::prop_frac_derivative(hi, frac1d::Order(nu), frac1d::Proportion(1.0),
                                           prl.w.slice(y, i), 0.0, 1.0, x[i], frac1d::Side::left,
                                           nqi, h_fd);
    }

    const frac1d::QuatFn one = [](double) { return Quaternion{1.0, 0.0, 0.0, 0.0}; };
    double d1[3];
    for (int j = 0; j < 3; ++j)
        d1[j] = frac1d::prop_frac_derivative(one, frac1d::Order(nu), frac1d::Proportion(1.0),
                                             prl.w.slice(y, j), 0.0, 1.0, x[j],
                                             frac1d::Side::left, nqi, h_fd)
                    .w;
    Quaternion rf{};
    for (int i = 0; i < 3; ++i) {
        const frac1d::QuatFn fi = [&](double) { return cf; };
        const Quaternion ui = frac1d::prop_frac_integral(fi, frac1d::Order(nu),
                                                         frac1d::Proportion(1.0),
                                                         prl.w.slice(y, i), 0.0, 1.0, x[i],
                                                         frac1d::Side::left, nqi);
        rf += ui * (d1[(i + 1) % 3] + d1[(i + 2) % 3]);
    }
    const Quaternion rhs_o = cf * 3.0 + rf;
    const Quaternion lhs_o = bf - vf;

    const double rb = norm(got.boundary_f - bf) / norm(bf);
    const double rv = norm(got.volume_f - vf) / norm(vf);
    const double rr = norm(got.remainder_f - rf) / norm(rf);
    const double rrhs = norm(got.rhs - rhs_o) / norm(rhs_o);
    const double rlhs = norm(got.lhs - lhs_o) / (norm(bf) + norm(vf));
    const double worst =
        std::max({rb, rv, rr, rrhs, rlhs, norm(got.sum_fg - cf * 3.0) / norm(cf * 3.0)});
    const double secs = now_s() - t0;
    Verdict v;
    const bool oracle_ok = worst < 1e-6;
    v.pass = dec && oracle_ok && secs < 600.0;
    v.line = fmt("exterior |lhs| ladder %.4e > %.4e > %.4e over (4^3,64)/(8^3,128)/(16^3,256) "
                 "(%s, total reduction %.1fx); interior constant-field term-by-term rel diff "
                 "vs independent assembly %.2e (tol 1e-6, %s); runtime %.1fs (budget 600s)",
                 e[0], e[1], e[2], dec ? "monotone decrease" : "NOT monotone", e[0] / e[2],
                 worst, oracle_ok ? "ok" : "FAIL", secs);
    return v;
}

// ---------------------------------------------------------------------------
// 10. Conjugation symmetry of the fractional operator.
Verdict conjugation_symmetry() {
    const auto psi = StructuralSet::standard();
    const Point3 y{0.5, 0.35, 0.65}, x{0.55, 0.6, 0.4};
    const ops::FracParams p(kUnit, {0.6, 0.8, 0.7}, AValue(0.5, 0.3, 0.2),
                            curved_first_axis_weight());
    double worst_ratio = 0.0;
    double worst_r = 0.0, worst_floor = 0.0;
    for (int s = 0; s < 5; ++s) {
        const FieldFn f = random_poly(900 + s, 3, 0.7);
        const double r = ops::conjugation_identity_residual(f, p, psi, y, x, 96, 1e-4);
        const Quaternion op = ops::frac_prop_psi_cr(f, p, psi, y, x, ops::Hand::left,
                                                    ops::End::a, 96, 1e-4);
        const double floor = 1e-13 * std::max(1.0, norm(op));
        if (r / (10.0 * floor) > worst_ratio) {
            worst_ratio = r / (10.0 * floor);
            worst_r = r;
            worst_floor = floor;
        }
    }
    Verdict v;
    v.pass = worst_ratio < 1.0;
    v.line = fmt("left-operator conjugate vs conjugated-basis right operator on conj(f) for 5 "
                 "random cubics: worst residual %.2e against 10x rounding floor %.2e "
                 "(worst ratio %.3f, need < 1)",
                 worst_r, 10.0 * worst_floor, worst_ratio);
    return v;
}

// ---------------------------------------------------------------------------
// 11. Determinism of the CLI across worker counts.
Verdict determinism(const std::string& bin, const std::string& cfg) {
    Verdict v;
    if (bin.empty() || cfg.empty()) {
        v.line = "verify binary or config path missing (pass as argv[2]/argv[3] or set "
                 "VERIFY_BIN and VERIFY_CFG)";
        return v;
    }
    auto run = [&](const char* jobs, const char* out) {
        const std::string cmd = "\"" + bin + "\" run \"" + cfg + "\" --jobs " + jobs +
                                " --out " + out + " >/dev/null 2>&1";
        return std::system(cmd.c_str());
    };
    const int rc1 = run("1", "acc-det-j1");
    const int rc8 = run("8", "acc-det-j8");
    auto slurp = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    std::string stem = cfg;
    if (const auto slash = stem.find_last_of("/\\"); slash != std::string::npos)
        stem = stem.substr(slash + 1);
    if (const auto dot = stem.rfind('.'); dot != std::string::npos) stem = stem.substr(0, dot);
    const std::string a = slurp("acc-det-j1/" + stem + ".csv");
    const std::string b = slurp("acc-det-j8/" + stem + ".csv");
    v.pass = rc1 == 0 && rc8 == 0 && !a.empty() && a == b;
    v.line = fmt("verify run twice on the same config with --jobs 1 and --jobs 8: exit codes "
                 "%d/%d, reports %zu and %zu bytes, %s",
                 rc1, rc8, a.size(), b.size(),
                 a.empty() ? "EMPTY report" : (a == b ? "byte-identical" : "DIFFER"));
    return v;
}

struct Entry {
    const char* key;
    Verdict (*fn)();
};

constexpr Entry kCriteria[] = {
    {"sphere-identity", sphere_identity},
    {"inverse-composition", inverse_composition},
    {"laplacian-factorization", laplacian_factorization},
    {"integration-by-parts", integration_by_parts},
    {"reproduction-formula", reproduction_formula},
    {"kernel-annihilation", kernel_annihilation},
    {"weighted-product-rule", weighted_product_rule},
    {"fractional-stokes", fractional_stokes},
    {"fractional-reproduction", fractional_reproduction},
    {"conjugation-symmetry", conjugation_symmetry},
};

int report(const char* key, const Verdict& v) {
    std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", key, v.line.c_str());
    for (const auto& n : v.notes) std::printf("  %s\n", n.c_str());
    std::fflush(stdout);
    return v.pass ? 0 : 1;
}

std::string env_or_empty(const char* name) {
    const char* v = std::getenv(name);
    return v ? v : "";
}

}  // namespace

int main(int argc, char** argv) {
    if (argc >= 2) {
        const std::string key = argv[1];
        if (key == "determinism") {
            const std::string bin = argc >= 3 ? argv[2] : env_or_empty("VERIFY_BIN");
            const std::string cfg = argc >= 4 ? argv[3] : env_or_empty("VERIFY_CFG");
            return report("determinism", determinism(bin, cfg));
        }
        for (const auto& e : kCriteria)
            if (key == e.key) return report(e.key, e.fn());
        std::fprintf(stderr, "unknown criterion '%s'; available:\n", key.c_str());
        for (const auto& e : kCriteria) std::fprintf(stderr, "  %s\n", e.key);
        std::fprintf(stderr, "  determinism <verify-binary> <config>\n");
        return 2;
    }
    int failures = 0;
    for (const auto& e : kCriteria) failures += report(e.key, e.fn());
    failures += report("determinism",
                       determinism(env_or_empty("VERIFY_BIN"), env_or_empty("VERIFY_CFG")));
    return failures == 0 ? 0 : 1;
}
