#pragma once

#include <array>
#include <complex>
#include <functional>
#include <vector>

#include "quatfrac/frac1d.hpp"
#include "quatfrac/grid.hpp"
#include "quatfrac/quaternion.hpp"

namespace quatfrac::psi_ops {

using grid::Box;
using grid::FieldFn;
using grid::GridField;
using grid::Point3;

// Weight function phi on R^3 together with its axis partials.  The
// one-variable restrictions phi(y_0,...,t,...,y_2) along each axis feed the
// 1-D operators; inv_slice, when supplied, must solve phi(y|axis->t) == u
// for t (it removes the Newton inversion from every quadrature node).
struct Weight3 {
    std::function<double(const Point3&)> phi;
    std::function<double(const Point3&, int)> dphi;
    std::function<double(double, const Point3&, int)> inv_slice;  // may be empty

    // phi(x) = x0 + x1 + x2.
    static Weight3 coordinate_sum();

    // The one-variable weight t -> phi(y|axis->t).
    frac1d::Weight slice(const Point3& y, int axis) const;
};

// Dphi(x, y) = sum_i dphi/dx_i evaluated at (y_0,...,x_i,...,y_2): the sum
// of the slice derivatives, each taken on its own axis line through y.
struct DphiWeight {
    double value;
};

DphiWeight dphi_weight(const Weight3& w, const Point3& x, const Point3& y);

// Parameter pack of the three-dimensional fractional proportional operators:
// per-axis orders alpha_k, the proportion element sigma in A (its components
// sigma_k in the standard basis drive the per-axis slice operators, the full
// quaternion the outer combination), and the weight function.
//
// sigma_k must lie in [0, 1]: sigma_k == 0 is the identity limit of the slice
// operator, sigma_k == 1 the plain-derivative (Riemann-Liouville) limit.
struct FracParams {
    Box box;
    std::array<frac1d::Order, 3> alpha;
    AValue sigma;
    Weight3 w;

    FracParams(Box box_, const std::array<frac1d::Order, 3>& alpha_, const AValue& sigma_,
               Weight3 w_);

    double sigma_comp(int k) const;
    // True when every sigma_k == 1: the operator takes the plain-derivative
    // path psi_dbar(I^{1-alpha} f) with no proportional weighting.
    bool riemann_liouville() const;
    bool alpha_all_real() const;
};

// Multiplication side of the first-order operator and of the sigma factors.
enum class Hand { left, right };
// Which endpoint the per-axis fractional integrals anchor at.
enum class End { a, b };

// First-order operators on sampled fields: sum_k psi_k (d_k g) for the left
// hand, sum_k (d_k g) psi_k for the right.
GridField psi_dbar(const GridField& g, const StructuralSet& psi, Hand hand,
                   grid::Scheme scheme = grid::Scheme::order2);

// sum_k d_k^2 g by direct second-difference stencils.
GridField laplacian(const GridField& g);

// Sum over the three axis slices of the 1-D fractional proportional integral
// of order alpha_i and proportion sigma_i, each slice running through y and
// evaluated at x_i.  End::a anchors at a_i, End::b at b_i.
Quaternion frac_prop_integral_3d(const FieldFn& f, const FracParams& p, const Point3& y,
                                 const Point3& x, End end, int n_quad);
CQuaternion frac_prop_integral_3d_c(const FieldFn& f, const FracParams& p, const Point3& y,
                                    const Point3& x, End end, int n_quad);

// The inner integral of the Cauchy-Riemann operators: same slice structure
// with orders 1 - alpha_i (order-0 slices are the identity).
Quaternion cr_inner_integral(const FieldFn& f, const FracParams& p, const Point3& y,
                             const Point3& x, End end, int n_quad);
CQuaternion cr_inner_integral_c(const FieldFn& f, const FracParams& p, const Point3& y,
                                const Point3& x, End end, int n_quad);

// One axis term of the inner integral: the slice through y along the given
// axis, order 1 - alpha_axis and proportion sigma_axis, evaluated at t.
Quaternion cr_inner_slice(const FieldFn& f, const FracParams& p, const Point3& y, int axis,
                          double t, End end, int n_quad);

// The fractional proportional Cauchy-Riemann operator
//   (1 - sigma) (I^{1-alpha} f)(x,y) + sigma (psi_dbar I^{1-alpha} f)(x,y) / Dphi(x,y)
// (Hand::right multiplies the sigma factors from the right and uses the
// right first-order operator).  The x-partials are central differences of
// step h_fd on the slice integrals; the stencil must stay inside the box.
// When every sigma_k == 1 the operator is psi_dbar(I^{1-alpha} f) exactly.
Quaternion frac_prop_psi_cr(const FieldFn& f, const FracParams& p, const StructuralSet& psi,
                            const Point3& y, const Point3& x, Hand hand, End end, int n_quad,
                            double h_fd);
CQuaternion frac_prop_psi_cr_c(const FieldFn& f, const FracParams& p, const StructuralSet& psi,
                               const Point3& y, const Point3& x, Hand hand, End end, int n_quad,
                               double h_fd);

// m^3 sample points strictly inside the box, inset by margin from every face.
std::vector<Point3> interior_lattice(const Box& box, int m, double margin);

// Max over the sample points of norm(frac_prop_psi_cr) -- the membership
// functional for the hyperholomorphic classes (a-anchored, per definition).
double hyperholomorphy_residual(const FieldFn& f, const FracParams& p, const StructuralSet& psi,
                                const Point3& y, const std::vector<Point3>& xs, Hand hand,
                                int n_quad, double h_fd);

// Residual together with a data-driven tolerance: tau = 10 * (max discrepancy
// between the n_quad and 2*n_quad evaluations + 1e-13 * scale).  A function
// whose residual sits below tau is numerically indistinguishable from a
// class member at this resolution.
struct HyperholomorphyReport {
    double residual;
    double tolerance;
    bool member;
};

HyperholomorphyReport classify_hyperholomorphic(const FieldFn& f, const FracParams& p,
                                                const StructuralSet& psi, const Point3& y,
                                                const std::vector<Point3>& xs, Hand hand,
                                                int n_quad, double h_fd, double scale = 1.0);

// Norm of the difference between the quaternion conjugate of the left
// operator and its conjugated-basis right form applied to conj(f): the two
// sides of the conjugation identity, which holds for every f.
double conjugation_identity_residual(const FieldFn& f, const FracParams& p,
                                     const StructuralSet& psi, const Point3& y, const Point3& x,
                                     int n_quad, double h_fd);

// Residual of the factorization through the Laplacian in the plain-derivative
// specialization: the conjugated first-order operator applied (by outer
// central differences) to the fractional operator, against the direct
// Laplacian of the inner integral (both at the same x, slice quadratures at
// n_quad).  Needs x at least 2*h_fd inside the box.
double laplacian_composition_residual(const FieldFn& f, const Box& box,
                                      const std::array<frac1d::Order, 3>& alpha,
                                      const StructuralSet& psi, const Point3& y, const Point3& x,
                                      int n_quad, double h_fd);

}  // namespace quatfrac::psi_ops
