// Quaternion arithmetic and structural sets.
//
// Basis convention: e0 = 1 (real unit), e1, e2, e3 imaginary units with
// e1*e2 = e3, e2*e3 = e1, e3*e1 = e2, ek*ek = -1.  The subspace
// A = span{e0, e1, e2} hosts structural sets; it is not a subalgebra
// (products of A-elements may pick up an e3 part).

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace quatfrac {

struct Quaternion {
    double w = 0.0;  // e0
    double x = 0.0;  // e1
    double y = 0.0;  // e2
    double z = 0.0;  // e3

    constexpr Quaternion() = default;
    constexpr Quaternion(double w_, double x_, double y_, double z_)
        : w(w_), x(x_), y(y_), z(z_) {}

    static constexpr Quaternion unit(std::size_t k) {
        switch (k) {
            case 0: return {1, 0, 0, 0};
            case 1: return {0, 1, 0, 0};
            case 2: return {0, 0, 1, 0};
            case 3: return {0, 0, 0, 1};
        }
        throw std::out_of_range("Quaternion::unit: index " + std::to_string(k));
    }

    constexpr Quaternion operator-() const { return {-w, -x, -y, -z}; }

    constexpr Quaternion& operator+=(const Quaternion& r) {
        w += r.w; x += r.x; y += r.y; z += r.z;
        return *this;
    }
    constexpr Quaternion& operator-=(const Quaternion& r) {
        w -= r.w; x -= r.x; y -= r.y; z -= r.z;
        return *this;
    }
    constexpr Quaternion& operator*=(double s) {
        w *= s; x *= s; y *= s; z *= s;
        return *this;
    }
    constexpr Quaternion& operator/=(double s) {
        w /= s; x /= s; y /= s; z /= s;
        return *this;
    }

    friend constexpr Quaternion operator+(Quaternion a, const Quaternion& b) { return a += b; }
    friend constexpr Quaternion operator-(Quaternion a, const Quaternion& b) { return a -= b; }
    friend constexpr Quaternion operator*(Quaternion a, double s) { return a *= s; }
    friend constexpr Quaternion operator*(double s, Quaternion a) { return a *= s; }
    friend constexpr Quaternion operator/(Quaternion a, double s) { return a /= s; }

    friend constexpr Quaternion operator*(const Quaternion& a, const Quaternion& b) {
        return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
                a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
                a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
                a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
    }

    friend constexpr bool operator==(const Quaternion& a, const Quaternion& b) {
        return a.w == b.w && a.x == b.x && a.y == b.y && a.z == b.z;
    }
};

constexpr Quaternion conj(const Quaternion& q) { return {q.w, -q.x, -q.y, -q.z}; }

constexpr double norm_sq(const Quaternion& q) {
    return q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z;
}

inline double norm(const Quaternion& q) { return std::sqrt(norm_sq(q)); }

inline Quaternion inverse(const Quaternion& q) {
    const double n2 = norm_sq(q);
    if (n2 == 0.0) throw std::domain_error("Quaternion inverse of zero");
    return conj(q) / n2;
}

// Euclidean R^4 inner product of the coefficient vectors.
constexpr double dot(const Quaternion& a, const Quaternion& b) {
    return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
}

// (conj(u)*v + conj(v)*u) / 2.  Real-valued in exact arithmetic: equals
// dot(u, v) * e0.
constexpr Quaternion scalar_product(const Quaternion& u, const Quaternion& v) {
    return (conj(u) * v + conj(v) * u) * 0.5;
}

inline double max_abs(const Quaternion& q) {
    return std::max(std::max(std::abs(q.w), std::abs(q.x)),
                    std::max(std::abs(q.y), std::abs(q.z)));
}

inline bool approx_equal(const Quaternion& a, const Quaternion& b, double tol) {
    return max_abs(a - b) <= tol;
}

// Element of A = span{e0, e1, e2}; the e3 component is structurally zero.
class AValue {
  public:
    constexpr AValue() = default;
    constexpr AValue(double w, double x, double y) : q_{w, x, y, 0.0} {}

    static AValue from_quaternion(const Quaternion& q, double tol = 0.0) {
        if (std::abs(q.z) > tol)
            throw std::domain_error("AValue: nonzero e3 component " + std::to_string(q.z));
        return AValue{q.w, q.x, q.y};
    }

    constexpr operator const Quaternion&() const { return q_; }
    constexpr const Quaternion& quat() const { return q_; }

    constexpr double w() const { return q_.w; }
    constexpr double x() const { return q_.x; }
    constexpr double y() const { return q_.y; }

  private:
    Quaternion q_;
};

// Quaternion with complex coefficients, stored as real and imaginary
// quaternion parts.  Arises when a complex scalar kernel multiplies a
// quaternion-valued integrand; for real kernels the imaginary part is
// exactly zero.
struct CQuaternion {
    Quaternion re;
    Quaternion im;

    constexpr CQuaternion() = default;
    constexpr CQuaternion(const Quaternion& r) : re(r), im() {}
    constexpr CQuaternion(const Quaternion& r, const Quaternion& i) : re(r), im(i) {}

    constexpr CQuaternion& operator+=(const CQuaternion& o) {
        re += o.re;
        im += o.im;
        return *this;
    }
    constexpr CQuaternion& operator-=(const CQuaternion& o) {
        re -= o.re;
        im -= o.im;
        return *this;
    }
    constexpr CQuaternion& operator*=(double s) {
        re *= s;
        im *= s;
        return *this;
    }
    friend constexpr CQuaternion operator+(CQuaternion a, const CQuaternion& b) { return a += b; }
    friend constexpr CQuaternion operator-(CQuaternion a, const CQuaternion& b) { return a -= b; }
    friend constexpr CQuaternion operator*(CQuaternion a, double s) { return a *= s; }
    friend constexpr CQuaternion operator*(double s, CQuaternion a) { return a *= s; }
};

// Quaternion times complex quaternion (and the mirrored order); the complex
// unit commutes with the quaternion units, so the parts multiply separately.
constexpr CQuaternion operator*(const Quaternion& a, const CQuaternion& b) {
    return {a * b.re, a * b.im};
}

constexpr CQuaternion operator*(const CQuaternion& a, const Quaternion& b) {
    return {a.re * b, a.im * b};
}

constexpr CQuaternion conj(const CQuaternion& q) { return {conj(q.re), conj(q.im)}; }

// Complex scalar times quaternion.
constexpr CQuaternion operator*(const std::complex<double>& c, const Quaternion& q) {
    return {q * c.real(), q * c.imag()};
}

constexpr CQuaternion operator*(const std::complex<double>& c, const CQuaternion& q) {
    return {q.re * c.real() - q.im * c.imag(), q.re * c.imag() + q.im * c.real()};
}

inline double norm(const CQuaternion& q) { return std::sqrt(norm_sq(q.re) + norm_sq(q.im)); }

inline double max_abs(const CQuaternion& q) { return std::max(max_abs(q.re), max_abs(q.im)); }

// Structural set {psi0, psi1, psi2} in A: psi_k * conj(psi_s) + psi_s * conj(psi_k)
// must equal 2*delta_{k,s}*e0 (the symmetrized orthonormality condition; it equals
// 2*dot(psi_k, psi_s)*e0 and is exactly what makes the first-order operator pair
// factor the Laplacian).
class StructuralSet {
  public:
    static constexpr double kOrthoTol = 1e-12;

    static StructuralSet make(const AValue& p0, const AValue& p1, const AValue& p2) {
        StructuralSet s;
        s.psi_ = {p0, p1, p2};
        for (std::size_t k = 0; k < 3; ++k) {
            for (std::size_t j = k; j < 3; ++j) {
                const Quaternion lhs =
                    s.psi_[k].quat() * conj(s.psi_[j].quat()) +
                    s.psi_[j].quat() * conj(s.psi_[k].quat());
                const Quaternion want = (k == j) ? Quaternion{2, 0, 0, 0} : Quaternion{};
                if (!approx_equal(lhs, want, kOrthoTol))
                    throw std::invalid_argument(
                        "StructuralSet: orthonormality fails for pair (" +
                        std::to_string(k) + "," + std::to_string(j) + ")");
            }
        }
        return s;
    }

    static StructuralSet standard() {
        return make(AValue{1, 0, 0}, AValue{0, 1, 0}, AValue{0, 0, 1});
    }

    const AValue& operator[](std::size_t k) const { return psi_.at(k); }

    // The conjugated set {conj(psi_k)}; conjugation preserves A and orthonormality.
    StructuralSet conjugated() const {
        auto c = [](const AValue& v) { return AValue{v.w(), -v.x(), -v.y()}; };
        return make(c(psi_[0]), c(psi_[1]), c(psi_[2]));
    }

    // x0*psi0 + x1*psi1 + x2*psi2.
    Quaternion embed(double x0, double x1, double x2) const {
        return psi_[0].quat() * x0 + psi_[1].quat() * x1 + psi_[2].quat() * x2;
    }

    // Coefficient of v along psi_k (valid because the set is orthonormal in R^4).
    double coeff(const Quaternion& v, std::size_t k) const {
        return dot(v, psi_.at(k).quat());
    }

  private:
    std::array<AValue, 3> psi_;
};

}  // namespace quatfrac
