#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gevit {

// Element of a finite point group, identified by its index into the
// group's element list. Index 0 is always the identity.
struct GroupElement {
    int index = 0;
    friend bool operator==(GroupElement a, GroupElement b) { return a.index == b.index; }
    friend bool operator!=(GroupElement a, GroupElement b) { return a.index != b.index; }
};

enum class GroupKind { cyclic, dihedral };

using Mat2 = std::array<double, 4>;  // row-major 2x2

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

// Raised by act_grid when a group element does not map the pixel lattice
// onto itself (e.g. a 45 degree rotation on a square grid).
struct ExactActionUnavailable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Discretized planar point group: cyclic Cn (rotations by 2*pi/n) or
// dihedral Dn (those rotations plus n reflections). Composition and
// inverses are precomputed tables; each element carries its 2x2 matrix.
// Immutable after construction.
class FiniteGroup {
public:
    FiniteGroup(GroupKind kind, int n);

    GroupKind kind() const { return kind_; }
    int n() const { return n_; }
    int order() const { return order_; }

    GroupElement identity() const { return GroupElement{0}; }
    GroupElement element(int index) const;

    GroupElement compose(GroupElement a, GroupElement b) const;
    GroupElement inverse(GroupElement a) const;

    // The positional-encoding product  h_tilde * h_hat^-1 * h_tilde.
    GroupElement twist(GroupElement h_tilde, GroupElement h_hat) const;

    const Mat2& matrix(GroupElement a) const;
    bool is_reflection(GroupElement a) const;

    // Applies the element's matrix to a point.
    Vec2 act_point(GroupElement h, Vec2 p) const;

    // Exact permutation action on a W x H pixel grid (linear row-major
    // indices, coordinates (col,row), rotation about the geometric
    // center ((W-1)/2,(H-1)/2)). Throws ExactActionUnavailable if the
    // element does not map lattice points to lattice points.
    int act_grid(GroupElement h, int idx, int width, int height) const;
    bool grid_action_exact(GroupElement h, int width, int height) const;

    // perm[k] = index of inverse(h_bar) * element(k); permutes the group
    // axis of a lifted feature map under the regular representation.
    std::vector<int> regular_permutation(GroupElement h_bar) const;

    // "c4", "d8", ...
    static FiniteGroup from_spec(const std::string& spec);
    std::string spec() const;

private:
    void check(GroupElement a) const;

    GroupKind kind_;
    int n_;
    int order_;
    std::vector<Mat2> matrices_;
    std::vector<int> compose_table_;  // order x order
    std::vector<int> inverse_table_;
};

}  // namespace gevit
