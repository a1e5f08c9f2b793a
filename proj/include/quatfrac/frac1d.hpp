// One-dimensional proportional fractional integrals and derivatives with
// respect to a monotone weight function phi, for real-, complex-, and
// quaternion-valued integrands.
//
// Operators (order alpha, proportion rho in (0,1], weight phi):
//
//   D^{rho,phi} f        = (1-rho) f + rho f'/phi'          (left; the right-
//                          sided operator flips the sign of the f' term,
//                          which is what makes the right-sided fundamental
//                          theorem hold)
//   I^{alpha,rho,phi} f  = 1/(rho^alpha Gamma(alpha)) *
//                          integral of exp(((rho-1)/rho)(phi(t)-phi(tau))) *
//                          (phi(t)-phi(tau))^{alpha-1} f(tau) phi'(tau) dtau
//   D^{alpha,rho,phi} f  = D^{rho,phi} ( I^{1-alpha,rho,phi} f )
//
// Quadrature: substitute u = phi(tau) (exact, absorbs phi'), then composite
// midpoint on a mesh graded toward the singular endpoint with exponent
// 1/Re(alpha), giving O(1/n_quad) error.  The outer derivative uses central
// finite differences of step h_fd (one-sided of the same order at interval
// ends); total error O(n_quad^{-1}) + O(h_fd^2).

#pragma once

#include <complex>
#include <functional>

#include "quatfrac/quaternion.hpp"

namespace quatfrac::frac1d {

using RealFn = std::function<double(double)>;
using QuatFn = std::function<Quaternion(double)>;

enum class Side { left, right };

// Weight function phi with derivative dphi; dphi must be positive on the
// working interval (checked at every quadrature node).  inv_phi, when
// supplied, must be the exact inverse of phi; otherwise nodes are inverted
// by a bisection-safeguarded Newton iteration.
struct Weight {
    RealFn phi;
    RealFn dphi;
    RealFn inv_phi;  // may be empty

    static Weight identity() {
        return {[](double t) { return t; }, [](double) { return 1.0; },
                [](double u) { return u; }};
    }
};

// Fractional order: complex with 0 < Re <= 1; Re == 1 only in the plain
// proportional case alpha == 1 exactly.
struct Order {
    std::complex<double> alpha;

    Order(double a) : Order(std::complex<double>(a, 0.0)) {}
    Order(std::complex<double> a) : alpha(a) {
        const double re = alpha.real();
        if (!(re > 0.0) || re > 1.0)
            throw std::domain_error("Order: Re(alpha) must lie in (0,1]");
        if (re == 1.0 && alpha.imag() != 0.0)
            throw std::domain_error("Order: Re(alpha) == 1 requires alpha == 1");
    }

    bool is_real() const { return alpha.imag() == 0.0; }
    double re() const { return alpha.real(); }
};

// Proportion rho in (0,1].  rho == 0 is excluded: 1/rho enters the kernel.
struct Proportion {
    double rho;

    Proportion(double r) : rho(r) {
        if (!(r > 0.0) || r > 1.0)
            throw std::domain_error("Proportion: rho must lie in (0,1]");
    }
};

// (1-rho) f(t) + rho f'(t)/phi'(t), with the derivative supplied by the
// caller (no quadrature).  side == right uses the reflected sign on f'.
double prop_derivative(const RealFn& f, const RealFn& df, Proportion rho, const Weight& w,
                       double t, Side side = Side::left);

// Fractional proportional integral at point t over [a,b]; side selects the
// left (from a) or right (to b) operator.  Real order on this path.
double prop_frac_integral(const RealFn& f, Order alpha, Proportion rho, const Weight& w,
                          double a, double b, double t, Side side, int n_quad);
Quaternion prop_frac_integral(const QuatFn& f, Order alpha, Proportion rho, const Weight& w,
                              double a, double b, double t, Side side, int n_quad);

// Complex-order variants.  When Im(alpha) == 0 these delegate wholly to the
// real path, so real and complex agree bit-for-bit on the same grid.
std::complex<double> prop_frac_integral_cx(const RealFn& f, Order alpha, Proportion rho,
                                           const Weight& w, double a, double b, double t,
                                           Side side, int n_quad);
CQuaternion prop_frac_integral_cx(const QuatFn& f, Order alpha, Proportion rho, const Weight& w,
                                  double a, double b, double t, Side side, int n_quad);

// Fractional proportional derivative of order alpha: the proportional
// derivative applied to u = I^{1-alpha,rho,phi} f, with u' by finite
// differences of step h_fd.  alpha == 1 uses I^0 = identity.
double prop_frac_derivative(const RealFn& f, Order alpha, Proportion rho, const Weight& w,
                            double a, double b, double t, Side side, int n_quad, double h_fd);
Quaternion prop_frac_derivative(const QuatFn& f, Order alpha, Proportion rho, const Weight& w,
                                double a, double b, double t, Side side, int n_quad, double h_fd);
std::complex<double> prop_frac_derivative_cx(const RealFn& f, Order alpha, Proportion rho,
                                             const Weight& w, double a, double b, double t,
                                             Side side, int n_quad, double h_fd);
CQuaternion prop_frac_derivative_cx(const QuatFn& f, Order alpha, Proportion rho, const Weight& w,
                                    double a, double b, double t, Side side, int n_quad,
                                    double h_fd);

// Self-test of the exponential-weight identity
//   (rho/phi'(t)) d/dt [ e^{phi(t)(1-rho)/rho} f(t) ]
//     == e^{phi(t)(1-rho)/rho} (D^{rho,phi} f)(t),
// with the left side by central finite differences.  Returns |LHS - RHS|.
double exp_weight_identity_residual(const RealFn& f, Proportion rho, const Weight& w, double t,
                                    double h_fd = 1e-5);

// Gamma function for complex argument (Lanczos approximation, g = 7, with
// reflection for Re(z) < 1/2).
std::complex<double> gamma_complex(std::complex<double> z);

}  // namespace quatfrac::frac1d
