// Surface and volume quadrature over boxes, the hyperholomorphic Cauchy
// kernel, and residual evaluators for every integral identity the library
// verifies: the classical basis-weighted Stokes theorem, the classical
// reproduction formula with singular kernel, the exponentially weighted
// product rule, the fractional proportional Stokes theorem, the fractional
// proportional reproduction formula, and its boundary-only corollary for
// certified operator-kernel members.

#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "quatfrac/grid.hpp"
#include "quatfrac/psi_ops.hpp"
#include "quatfrac/quaternion.hpp"

namespace quatfrac::integral_id {

using grid::Box;
using grid::FieldFn;
using grid::Point3;
using psi_ops::FracParams;
using psi_ops::Weight3;

// --- quadrature ------------------------------------------------------------

// One boundary node: position and the outward-oriented area-scaled basis
// weight (the discrete surface form; A-valued by construction).
struct SurfaceNode {
    Point3 p;
    AValue weight;
};

// Tensor-midpoint quadrature of the boundary of a box, m x m nodes per face.
// Faces are ordered (axis-0 low, axis-0 high, axis-1 low, ...), each face
// holding m*m nodes; the low/high faces of an axis carry exactly negated
// weights node-for-node, so the closed-surface sum cancels exactly.
struct SurfaceQuadrature {
    Box box;
    int m = 0;
    std::vector<SurfaceNode> nodes;

    static SurfaceQuadrature build(const Box& box, int m, const StructuralSet& psi);
    std::size_t per_face() const { return static_cast<std::size_t>(m) * m; }
};

// Scalar multiplier applied to the surface form or volume element (an
// exponential weight); an empty function means 1.
using ScalarFn = std::function<double(const Point3&)>;

// Sum over nodes of g * (weight * psi-eta) * f, preserving the
// noncommutative order.  Reduction is per-face pairwise followed by a fixed
// face order, so results are bit-identical for any worker count.
Quaternion surface_integral(const FieldFn& g, const FieldFn& f, const SurfaceQuadrature& sq,
                            const ScalarFn& weight = {});

// Tensor-midpoint volume rule: integrand evaluated at cell centers.
// Deterministic pairwise reduction over cells in (i,j,k) order.
Quaternion volume_integral(const std::function<Quaternion(const Point3&)>& integrand,
                           const Box& box, const std::array<int, 3>& n_vol);

// --- kernel ----------------------------------------------------------------

// The hyperholomorphic Cauchy kernel conj(x~)/(4 pi |x~|^3), where x~ is the
// basis embedding of the coordinates.  Throws on x == 0.
AValue cauchy_kernel(const Point3& x, const StructuralSet& psi);

// Latitude-longitude midpoint quadrature of conj(embed(tau - x0)) psi-eta
// over the sphere of radius r about x0; converges to 4 pi r^3 e0 at second
// order in m.
Quaternion sphere_moment(const Point3& x0, double r, int m, const StructuralSet& psi);

// Max over deterministic shell samples (0.5 <= |x| <= 1) of the norm of the
// right basis-weighted first-order operator of the Cauchy kernel, by central
// differences with step h_fd.  Decays at second order in h_fd.
double kernel_hyperholomorphy_residual(const StructuralSet& psi, double h_fd, int m_samples);

// --- reports ---------------------------------------------------------------

struct Resolution {
    std::array<int, 3> n_vol{0, 0, 0};
    int m_surf = 0;
    int n_quad = 0;
    double h_fd = 0.0;
};

struct IdentityReport {
    std::string name;
    Quaternion lhs{};
    Quaternion rhs{};
    double residual = 0.0;  // norm(lhs - rhs)
    Resolution resolution{};
    std::optional<double> order{};  // filled by refinement drivers
};

// log2(coarse / fine): measured convergence rate across one dyadic step.
double measured_order(double err_coarse, double err_fine);

// --- classical identities ----------------------------------------------------

// Boundary integral of g psi-eta f against the volume integral of
// g (psi-dbar f) + (psi-dbar_r g) f, with derivatives by centered
// differences of half a cell width at cell centers.
IdentityReport stokes_residual(const FieldFn& g, const FieldFn& f, const Box& box,
                               const std::array<int, 3>& n_vol, int m_surf,
                               const StructuralSet& psi);

// Reproduction formula with the singular kernel: boundary terms
// K(tau-x) psi-eta f + g psi-eta K(tau-x) minus the volume terms
// K (psi-dbar f) + (psi-dbar_r g) K equal f(x)+g(x) inside and 0 outside.
// Volume cells intersecting the ball B(x, eps) are dropped (eps <= 0 picks
// 2 * max cell width).  x on the boundary is rejected.
IdentityReport borel_pompeiu_classical(const FieldFn& f, const FieldFn& g, const Point3& x,
                                       const Box& box, const std::array<int, 3>& n_vol,
                                       int m_surf, const StructuralSet& psi, double eps = 0.0);

// --- exponential weights -----------------------------------------------------

// The closed-form antiderivative family lambda_k for a weight/proportion
// pair: lambda_k(x) = c_k [ (phi_k(x_k) - phi_k(a_k))
//                           + (x_k - a_k) sum_{i != k} phi_i'(x_i) ],
// where c_k are the basis components of sigma^{-1}(1 - sigma) and phi_i is
// the axis-i slice of the weight through y.  Differentiating in x_k gives
// c_k * Dphi(x, y) exactly, which is the defining condition.
struct LambdaSet {
    std::array<double, 3> c{};
    Weight3 w;
    Point3 y{};
    Box box;
    StructuralSet psi;

    double lambda(const Point3& x, int k) const;
    double sum(const Point3& x) const;
    // d lambda_k / d x_k == c_k * Dphi(x, y), exact
    double dlambda_diag(const Point3& x, int k) const;
    // sum_k psi_k d lambda_k / d x_k, the quantity the defining condition pins
    Quaternion defining_value(const Point3& x) const;
};

// Decomposes sigma^{-1}(1 - sigma) over the structural basis and builds the
// closed-form lambda_k.  Throws when the product has a component outside the
// basis span beyond tolerance (the condition is then unsatisfiable with real
// lambda_k).  The same construction serves the second weight family since
// (1 - sigma) sigma^{-1} == sigma^{-1} (1 - sigma).
LambdaSet build_lambda(const Weight3& w, const AValue& sigma, const Point3& y,
                       const StructuralSet& psi, const Box& box);

// Residual of the weighted product rule: the left/right basis-weighted
// first-order operator applied to e^{sum lambda_k} (inner integral of f)
// against Dphi sigma^{-1} (extension operator of f) e^{sum lambda_k} (left),
// respectively (right extension) sigma^{-1} Dphi e^{sum lambda_k} (right).
// Derivatives by central differences with step h_fd; returns the larger of
// the two residual norms.  Exact only when each lambda_k depends on x_k
// alone (curl-safe weights); the general defect is reported, not hidden.
double weighted_product_rule_residual(const FieldFn& f, const FracParams& p,
                                      const LambdaSet& ls, const StructuralSet& psi,
                                      const Point3& y, const Point3& x, int n_quad,
                                      double h_fd);

// --- fractional identities ---------------------------------------------------

// Fractional proportional Stokes theorem: boundary integral of
// (I g) psi-eta^{mu,lambda} (I f) against the volume integral of
// (I g) C_phi,sigma (D f) + (D_r g) C_r,theta,rho (I f) under the
// exponential volume weight, with C_phi,sigma = Dphi sigma^{-1} and
// C_r,theta,rho = rho^{-1} Dtheta.
IdentityReport frac_stokes_residual(const FieldFn& f, const FieldFn& g, const FracParams& pf,
                                    const FracParams& pg, const Point3& y, const Box& box,
                                    const std::array<int, 3>& n_vol, int m_surf,
                                    const StructuralSet& psi, int n_quad, double h_fd);

// The remainder sum: Sigma_i (slice inner integral of f at x_i) times
// Sigma_{j != i} (fractional proportional derivative of the constant 1 at
// x_j).  Unit-order and zero-proportion factors collapse to exactly 1.
Quaternion remainder_R(const FieldFn& f, const FracParams& p, const Point3& x, const Point3& y,
                       int n_quad, double h_fd);

// Every term of the fractional reproduction formula, exposed for
// term-by-term cross checks.
struct FracBPBreakdown {
    Quaternion boundary_f{};  // kernel-weighted boundary integral, f side
    Quaternion boundary_g{};  // g side (kernel on the right)
    Quaternion volume_f{};    // outer fractional derivative of the volume term, f side
    Quaternion volume_g{};    // g side
    Quaternion sum_fg{};      // Sigma_i (f+g)(y | i -> x_i)
    Quaternion remainder_f{};
    Quaternion remainder_g{};
    Quaternion lhs{};  // boundary_f + boundary_g - volume_f - volume_g
    Quaternion rhs{};  // sum_fg + remainder_f + remainder_g inside; 0 outside
    bool inside = false;
};

// Fractional proportional reproduction formula.  For x inside, the singular
// volume factor is handled by ball exclusion around each outer-derivative
// evaluation point (radius 2 * max cell width); x within 2 * max cell width
// of the boundary is rejected.  For x outside the closure all integrals are
// regular and rhs == 0.  When both parameter packs have unit proportions the
// exponential weights vanish and the volume integrand reduces to the
// kernel times the unit-proportion extension operator (componentwise limit).
// skip_volume omits the volume terms (used by the boundary-only corollary).
FracBPBreakdown frac_borel_pompeiu_terms(const FieldFn& f, const FieldFn& g,
                                         const FracParams& pf, const FracParams& pg,
                                         const Point3& x, const Point3& y, const Box& box,
                                         const std::array<int, 3>& n_vol, int m_surf,
                                         const StructuralSet& psi, int n_quad, double h_fd,
                                         bool skip_volume = false);

IdentityReport frac_borel_pompeiu(const FieldFn& f, const FieldFn& g, const FracParams& pf,
                                  const FracParams& pg, const Point3& x, const Point3& y,
                                  const Box& box, const std::array<int, 3>& n_vol, int m_surf,
                                  const StructuralSet& psi, int n_quad, double h_fd);

// Boundary-only corollary for certified members: first certifies that f (left
// class) and g (right class) annihilate their extension operators on an
// interior lattice (throwing a domain error naming the residual otherwise),
// then checks that the fractional Stokes boundary integral vanishes and that
// the kernel boundary terms alone reproduce Sigma (f+g) + remainders.
// residual = max(norm(lhs - rhs), norm(stokes boundary)).
IdentityReport cauchy_corollary_check(const FieldFn& f, const FieldFn& g, const FracParams& pf,
                                      const FracParams& pg, const Point3& x, const Point3& y,
                                      const Box& box, const std::array<int, 3>& n_vol,
                                      int m_surf, const StructuralSet& psi, int n_quad,
                                      double h_fd);

}  // namespace quatfrac::integral_id
