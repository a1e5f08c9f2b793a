#include "quatfrac/frac1d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace quatfrac::frac1d {

namespace {

// d^e for e in (-1, 0], with fast paths for the exponents the benchmark
// parameters hit constantly.
inline double pow_exp(double d, double e) {
    if (e == 0.0) return 1.0;
    if (e == -0.5) return 1.0 / std::sqrt(d);
    return std::pow(d, e);
}

// Solves phi(tau) = u for monotone increasing phi on [lo, hi]; warm-started
// across calls (quadrature nodes arrive in monotone order).
class PhiInverter {
  public:
    PhiInverter(const Weight& w, double lo, double hi, double start)
        : w_(w), lo_(lo), hi_(hi), t_(start) {}

    double operator()(double u) {
        if (w_.inv_phi) return w_.inv_phi(u);
        double lo = lo_, hi = hi_;
        double t = std::clamp(t_, lo, hi);
        for (int it = 0; it < 100; ++it) {
            const double ft = w_.phi(t) - u;
            if (ft == 0.0) break;
            (ft > 0.0 ? hi : lo) = t;
            const double d = w_.dphi(t);
            double tn = (d > 0.0) ? t - ft / d : std::numeric_limits<double>::quiet_NaN();
            if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
            const bool done = std::abs(tn - t) <= 1e-15 * (1.0 + std::abs(t));
            t = tn;
            if (done) break;
        }
        t_ = t;
        return t;
    }

  private:
    const Weight& w_;
    double lo_, hi_;
    double t_;  // warm start
};

void check_interval(double a, double b, double t, int n_quad) {
    if (!(a <= b)) throw std::domain_error("prop_frac: interval has a > b");
    if (!(a <= t && t <= b)) throw std::domain_error("prop_frac: t outside [a,b]");
    if (n_quad < 2) throw std::invalid_argument("prop_frac: n_quad must be >= 2");
}

// Grading exponent for the u-mesh; 1/Re(alpha) equidistributes the singular
// cell to first order.  Clamped to keep pow well-conditioned.
inline double grading(double re_alpha) { return std::clamp(1.0 / re_alpha, 1.0, 50.0); }

// Core quadrature after u = phi(tau): integrate against
// exp(c*d) * d^{alpha-1} with d = |u - phi(t)| over the mesh graded toward
// u = phi(t).  `far_t` is a for the left operator and b for the right one;
// the prefactor is applied by the caller.  V is double or Quaternion.
template <class V>
V engine_real(const std::function<V(double)>& f, double alpha, double rho, const Weight& w,
              double far_t, double t, int n) {
    const double S = w.phi(t);     // singular end in u
    const double F = w.phi(far_t);
    if (S == F) return V{};
    const double r = grading(alpha);
    const double c = (rho - 1.0) / rho;
    const double e = alpha - 1.0;
    const double span = F - S;
    PhiInverter inv(w, std::min(far_t, t), std::max(far_t, t), t);
    V acc{};
    double u_prev = S;
    for (int j = 1; j <= n; ++j) {
        const double u_j = S + span * std::pow(double(j) / n, r);
        const double width = std::abs(u_j - u_prev);
        if (width > 0.0) {
            const double m = 0.5 * (u_j + u_prev);
            const double d = std::abs(m - S);
            if (d > 0.0) {
                const double tau = inv(m);
                if (!(w.dphi(tau) > 0.0))
                    throw std::domain_error("Weight: dphi <= 0 at quadrature node");
                double k = pow_exp(d, e) * width;
                if (c != 0.0) k *= std::exp(c * d);
                acc += f(tau) * k;
            }
        }
        u_prev = u_j;
    }
    return acc * (1.0 / (std::pow(rho, alpha) * std::tgamma(alpha)));
}

inline std::complex<double> cmul(const std::complex<double>& c, double v) { return c * v; }
inline CQuaternion cmul(const std::complex<double>& c, const Quaternion& q) { return c * q; }
inline std::complex<double> cmul(const std::complex<double>& c, const std::complex<double>& v) {
    return c * v;
}
inline CQuaternion cmul(const std::complex<double>& c, const CQuaternion& q) { return c * q; }

// Complex-order twin of engine_real; only reached when Im(alpha) != 0.
template <class V, class CV>
CV engine_cx(const std::function<V(double)>& f, std::complex<double> alpha, double rho,
             const Weight& w, double far_t, double t, int n) {
    const double S = w.phi(t);
    const double F = w.phi(far_t);
    if (S == F) return CV{};
    const double r = grading(alpha.real());
    const double c = (rho - 1.0) / rho;
    const std::complex<double> e = alpha - 1.0;
    const double span = F - S;
    PhiInverter inv(w, std::min(far_t, t), std::max(far_t, t), t);
    CV acc{};
    double u_prev = S;
    for (int j = 1; j <= n; ++j) {
        const double u_j = S + span * std::pow(double(j) / n, r);
        const double width = std::abs(u_j - u_prev);
        if (width > 0.0) {
            const double m = 0.5 * (u_j + u_prev);
            const double d = std::abs(m - S);
            if (d > 0.0) {
                const double tau = inv(m);
                if (!(w.dphi(tau) > 0.0))
                    throw std::domain_error("Weight: dphi <= 0 at quadrature node");
                std::complex<double> k = std::exp(e * std::log(d)) * width;
                if (c != 0.0) k *= std::exp(c * d);
                acc += cmul(k, f(tau));
            }
        }
        u_prev = u_j;
    }
    const std::complex<double> pref =
        1.0 / (std::exp(alpha * std::log(rho)) * gamma_complex(alpha));
    return cmul(pref, acc);
}

// Derivative u' at t by central FD, or one-sided 3-point (same order) when a
// stencil leg would leave [a,b].
template <class V, class Fn>
V fd_derivative(const Fn& u, double a, double b, double t, double h) {
    if (!(h > 0.0)) throw std::domain_error("prop_frac_derivative: h_fd must be > 0");
    if (t - h >= a && t + h <= b) return (u(t + h) - u(t - h)) * (1.0 / (2.0 * h));
    if (t + 2.0 * h <= b) return (u(t) * -3.0 + u(t + h) * 4.0 - u(t + 2.0 * h)) * (1.0 / (2.0 * h));
    if (t - 2.0 * h >= a) return (u(t) * 3.0 - u(t - h) * 4.0 + u(t - 2.0 * h)) * (1.0 / (2.0 * h));
    throw std::domain_error("prop_frac_derivative: h_fd too large for [a,b]");
}

template <class V>
V deriv_real(const std::function<V(double)>& f, Order alpha, Proportion rho, const Weight& w,
             double a, double b, double t, Side side, int n_quad, double h_fd) {
    check_interval(a, b, t, n_quad);
    const bool order_one = alpha.is_real() && alpha.re() == 1.0;
    const double far_t = (side == Side::left) ? a : b;
    auto u = [&](double s) -> V {
        if (order_one) return f(s);  // I^0 = identity
        return engine_real<V>(f, 1.0 - alpha.re(), rho.rho, w, far_t, s, n_quad);
    };
    const double dphit = w.dphi(t);
    if (!(dphit > 0.0)) throw std::domain_error("Weight: dphi <= 0 at t");
    const V du = fd_derivative<V>(u, a, b, t, h_fd);
    const double sgn = (side == Side::left) ? 1.0 : -1.0;
    return u(t) * (1.0 - rho.rho) + du * (sgn * rho.rho / dphit);
}

template <class V, class CV>
CV deriv_cx(const std::function<V(double)>& f, Order alpha, Proportion rho, const Weight& w,
            double a, double b, double t, Side side, int n_quad, double h_fd) {
    check_interval(a, b, t, n_quad);
    const double far_t = (side == Side::left) ? a : b;
    auto u = [&](double s) -> CV {
        return engine_cx<V, CV>(f, 1.0 - alpha.alpha, rho.rho, w, far_t, s, n_quad);
    };
    const double dphit = w.dphi(t);
    if (!(dphit > 0.0)) throw std::domain_error("Weight: dphi <= 0 at t");
    const CV du = fd_derivative<CV>(u, a, b, t, h_fd);
    const double sgn = (side == Side::left) ? 1.0 : -1.0;
    return u(t) * (1.0 - rho.rho) + du * (sgn * rho.rho / dphit);
}

}  // namespace

double prop_derivative(const RealFn& f, const RealFn& df, Proportion rho, const Weight& w,
                       double t, Side side) {
    const double dphit = w.dphi(t);
    if (!(dphit > 0.0)) throw std::domain_error("Weight: dphi <= 0 at t");
    const double sgn = (side == Side::left) ? 1.0 : -1.0;
    return (1.0 - rho.rho) * f(t) + sgn * rho.rho * df(t) / dphit;
}

double prop_frac_integral(const RealFn& f, Order alpha, Proportion rho, const Weight& w,
                          double a, double b, double t, Side side, int n_quad) {
    if (!alpha.is_real())
        throw std::invalid_argument("prop_frac_integral: complex order needs the _cx variant");
    check_interval(a, b, t, n_quad);
    const double far_t = (side == Side::left) ? a : b;
    return engine_real<double>(f, alpha.re(), rho.rho, w, far_t, t, n_quad);
}

Quaternion prop_frac_integral(const QuatFn& f, Order alpha, Proportion rho, const Weight& w,
                              double a, double b, double t, Side side, int n_quad) {
    if (!alpha.is_real())
        throw std::invalid_argument("prop_frac_integral: complex order needs the _cx variant");
    check_interval(a, b, t, n_quad);
    const double far_t = (side == Side::left) ? a : b;
    return engine_real<Quaternion>(f, alpha.re(), rho.rho, w, far_t, t, n_quad);
}

std::complex<double> prop_frac_integral_cx(const RealFn& f, Order alpha, Proportion rho,
                                           const Weight& w, double a, double b, double t,
                                           Side side, int n_quad) {
    if (alpha.is_real())
        return {prop_frac_integral(f, alpha, rho, w, a, b, t, side, n_quad), 0.0};
    check_interval(a, b, t, n_quad);
    const double far_t = (side == Side::left) ? a : b;
    return engine_cx<double, std::complex<double>>(f, alpha.alpha, rho.rho, w, far_t, t, n_quad);
}

CQuaternion prop_frac_integral_cx(const QuatFn& f, Order alpha, Proportion rho, const Weight& w,
                                  double a, double b, double t, Side side, int n_quad) {
    if (alpha.is_real())
        return {prop_frac_integral(f, alpha, rho, w, a, b, t, side, n_quad), Quaternion{}};
    check_interval(a, b, t, n_quad);
    const double far_t = (side == Side::left) ? a : b;
    return engine_cx<Quaternion, CQuaternion>(f, alpha.alpha, rho.rho, w, far_t, t, n_quad);
}

double prop_frac_derivative(const RealFn& f, Order alpha, Proportion rho, const Weight& w,
                            double a, double b, double t, Side side, int n_quad, double h_fd) {
    if (!alpha.is_real())
        throw std::invalid_argument("prop_frac_derivative: complex order needs the _cx variant");
    return deriv_real<double>(f, alpha, rho, w, a, b, t, side, n_quad, h_fd);
}

Quaternion prop_frac_derivative(const QuatFn& f, Order alpha, Proportion rho, const Weight& w,
                                double a, double b, double t, Side side, int n_quad, double h_fd) {
    if (!alpha.is_real())
        throw std::invalid_argument("prop_frac_derivative: complex order needs the _cx variant");
    return deriv_real<Quaternion>(f, alpha, rho, w, a, b, t, side, n_quad, h_fd);
}

std::complex<double> prop_frac_derivative_cx(const RealFn& f, Order alpha, Proportion rho,
                                             const Weight& w, double a, double b, double t,
                                             Side side, int n_quad, double h_fd) {
    if (alpha.is_real())
        return {prop_frac_derivative(f, alpha, rho, w, a, b, t, side, n_quad, h_fd), 0.0};
    return deriv_cx<double, std::complex<double>>(f, alpha, rho, w, a, b, t, side, n_quad, h_fd);
}

CQuaternion prop_frac_derivative_cx(const QuatFn& f, Order alpha, Proportion rho, const Weight& w,
                                    double a, double b, double t, Side side, int n_quad,
                                    double h_fd) {
    if (alpha.is_real())
        return {prop_frac_derivative(f, alpha, rho, w, a, b, t, side, n_quad, h_fd), Quaternion{}};
    return deriv_cx<Quaternion, CQuaternion>(f, alpha, rho, w, a, b, t, side, n_quad, h_fd);
}

double exp_weight_identity_residual(const RealFn& f, Proportion rho, const Weight& w, double t,
                                    double h_fd) {
    if (!(h_fd > 0.0)) throw std::domain_error("exp_weight_identity_residual: h_fd must be > 0");
    const double dphit = w.dphi(t);
    if (!(dphit > 0.0)) throw std::domain_error("Weight: dphi <= 0 at t");
    const double c = (1.0 - rho.rho) / rho.rho;
    auto g = [&](double s) { return std::exp(w.phi(s) * c) * f(s); };
    const double lhs = rho.rho / dphit * (g(t + h_fd) - g(t - h_fd)) / (2.0 * h_fd);
    const double df = (f(t + h_fd) - f(t - h_fd)) / (2.0 * h_fd);
    const double rhs =
        std::exp(w.phi(t) * c) * ((1.0 - rho.rho) * f(t) + rho.rho * df / dphit);
    return std::abs(lhs - rhs);
}

std::complex<double> gamma_complex(std::complex<double> z) {
    // Lanczos, g = 7, 9 coefficients.
    static constexpr double kCoef[9] = {
        0.99999999999980993,     676.5203681218851,      -1259.1392167224028,
        771.32342877765313,      -176.61502916214059,    12.507343278686905,
        -0.13857109526572012,    9.9843695780195716e-6,  1.5056327351493116e-7};
    constexpr double pi = std::numbers::pi;
    if (z.real() < 0.5)
        return pi / (std::sin(pi * z) * gamma_complex(1.0 - z));
    z -= 1.0;
    std::complex<double> x = kCoef[0];
    for (int i = 1; i < 9; ++i) x += kCoef[i] / (z + double(i));
    const std::complex<double> t = z + 7.5;
    return std::sqrt(2.0 * pi) * std::pow(t, z + 0.5) * std::exp(-t) * x;
}

}  // namespace quatfrac::frac1d
