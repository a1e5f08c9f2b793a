// A-valued fields on the coordinate box: sampling on uniform tensor grids,
// one-variable slices through a base point, and finite-difference partials.

#pragma once

#include <array>
#include <functional>
#include <vector>

#include "quatfrac/quaternion.hpp"

namespace quatfrac::grid {

using Point3 = std::array<double, 3>;
using FieldFn = std::function<Quaternion(const Point3&)>;

struct Box {
    Point3 a;
    Point3 b;

    Box(const Point3& lo, const Point3& hi) : a(lo), b(hi) {
        for (int k = 0; k < 3; ++k)
            if (!(a[k] < b[k])) throw std::invalid_argument("Box: requires a_k < b_k");
    }

    double width(int k) const { return b[k] - a[k]; }
    bool contains_interior(const Point3& p) const {
        for (int k = 0; k < 3; ++k)
            if (!(a[k] < p[k] && p[k] < b[k])) return false;
        return true;
    }
    bool contains_closure(const Point3& p) const {
        for (int k = 0; k < 3; ++k)
            if (!(a[k] <= p[k] && p[k] <= b[k])) return false;
        return true;
    }
};

// One-variable restriction x_axis -> f(y_0,..,x_axis,..,y_2).
struct SlicePoint {
    Point3 y;
    int axis;

    static SlicePoint checked(const Point3& y, int axis, const Box& box) {
        if (axis < 0 || axis > 2) throw std::invalid_argument("SlicePoint: axis out of range");
        if (!box.contains_interior(y))
            throw std::invalid_argument("SlicePoint: base point not strictly interior");
        return {y, axis};
    }
};

inline std::function<Quaternion(double)> slice(const FieldFn& f, const SlicePoint& p) {
    return [f, p](double t) {
        Point3 q = p.y;
        q[p.axis] = t;
        return f(q);
    };
}

enum class Scheme { order2, order4 };

// Dense nodal storage over the (n0+1)(n1+1)(n2+1) tensor grid, row-major in
// the last axis.  Immutable after construction.
class GridField {
  public:
    GridField(const Box& box, const std::array<int, 3>& n, std::vector<Quaternion> values,
              FieldFn source = nullptr);

    const Box& box() const { return box_; }
    const std::array<int, 3>& n() const { return n_; }
    double h(int k) const { return box_.width(k) / n_[k]; }
    std::size_t node_count() const { return values_.size(); }

    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * (n_[1] + 1) + j) * (n_[2] + 1) + k;
    }
    const Quaternion& at(int i, int j, int k) const { return values_[index(i, j, k)]; }
    const std::vector<Quaternion>& values() const { return values_; }

    Point3 node(int i, int j, int k) const {
        return {box_.a[0] + i * h(0), box_.a[1] + j * h(1), box_.a[2] + k * h(2)};
    }
    const FieldFn& source() const { return source_; }

  private:
    Box box_;
    std::array<int, 3> n_;
    std::vector<Quaternion> values_;
    FieldFn source_;
};

// Samples f on the uniform grid (boundary nodes included); rejects
// non-finite samples naming the offending node, and verifies the resampling
// invariant against the stored callable.
GridField sample_field(const FieldFn& f, const Box& box, const std::array<int, 3>& n);

// Nodewise partial derivative along axis k: central differences in the
// interior, one-sided stencils of the same order at the faces.
GridField partial_fd(const GridField& g, int k, Scheme scheme);

// Nodewise second partial along axis k: central 3-point interior, one-sided
// 4-point (2,-5,4,-1)/h^2 at the faces (exact on cubics).
GridField second_partial_fd(const GridField& g, int k);

}  // namespace quatfrac::grid
