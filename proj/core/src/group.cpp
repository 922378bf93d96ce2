#include "gevit/group.hpp"

#include <cmath>
#include <cstdlib>

namespace gevit {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kMatchTol = 1e-9;

Mat2 mat_mul(const Mat2& a, const Mat2& b) {
    return Mat2{a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
                a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}

double mat_dist(const Mat2& a, const Mat2& b) {
    double m = 0.0;
    for (int i = 0; i < 4; ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

Mat2 rotation(double theta) {
    double c = std::cos(theta), s = std::sin(theta);
    return Mat2{c, -s, s, c};
}

}  // namespace

FiniteGroup::FiniteGroup(GroupKind kind, int n) : kind_(kind), n_(n) {
    if (n < 1) throw std::invalid_argument("FiniteGroup: n must be >= 1");
    order_ = (kind == GroupKind::dihedral) ? 2 * n : n;

    matrices_.resize(order_);
    const Mat2 mirror{1.0, 0.0, 0.0, -1.0};  // reflection about the x axis
    for (int k = 0; k < n; ++k) {
        Mat2 rot = rotation(2.0 * kPi * k / n);
        matrices_[k] = rot;
        if (kind == GroupKind::dihedral) matrices_[n + k] = mat_mul(mirror, rot);
    }

    // Build Cayley and inverse tables by matching matrix products back to
    // elements. Snap near-zero entries so the match is robust.
    auto find = [&](const Mat2& m) {
        for (int i = 0; i < order_; ++i)
            if (mat_dist(matrices_[i], m) < kMatchTol) return i;
        throw std::logic_error("FiniteGroup: product matrix not in group");
    };
    compose_table_.resize(order_ * order_);
    for (int a = 0; a < order_; ++a)
        for (int b = 0; b < order_; ++b)
            compose_table_[a * order_ + b] = find(mat_mul(matrices_[a], matrices_[b]));
    inverse_table_.resize(order_);
    for (int a = 0; a < order_; ++a) {
        const Mat2& m = matrices_[a];
        // Orthogonal matrices: inverse = transpose.
        inverse_table_[a] = find(Mat2{m[0], m[2], m[1], m[3]});
    }
}

void FiniteGroup::check(GroupElement a) const {
    if (a.index < 0 || a.index >= order_)
        throw std::out_of_range("GroupElement index " + std::to_string(a.index) +
                                " out of range for group of order " + std::to_string(order_));
}

GroupElement FiniteGroup::element(int index) const {
    GroupElement e{index};
    check(e);
    return e;
}

GroupElement FiniteGroup::compose(GroupElement a, GroupElement b) const {
    check(a);
    check(b);
    return GroupElement{compose_table_[a.index * order_ + b.index]};
}

GroupElement FiniteGroup::inverse(GroupElement a) const {
    check(a);
    return GroupElement{inverse_table_[a.index]};
}

GroupElement FiniteGroup::twist(GroupElement h_tilde, GroupElement h_hat) const {
    return compose(compose(h_tilde, inverse(h_hat)), h_tilde);
}

const Mat2& FiniteGroup::matrix(GroupElement a) const {
    check(a);
    return matrices_[a.index];
}

bool FiniteGroup::is_reflection(GroupElement a) const {
    const Mat2& m = matrix(a);
    return m[0] * m[3] - m[1] * m[2] < 0.0;
}

Vec2 FiniteGroup::act_point(GroupElement h, Vec2 p) const {
    const Mat2& m = matrix(h);
    return Vec2{m[0] * p.x + m[1] * p.y, m[2] * p.x + m[3] * p.y};
}

bool FiniteGroup::grid_action_exact(GroupElement h, int width, int height) const {
    const Mat2& m = matrix(h);
    for (int i = 0; i < 4; ++i)
        if (std::abs(m[i] - std::round(m[i])) > kMatchTol) return false;
    // Integer orthogonal matrices keep a square lattice; for non-square
    // grids only axis-aligned elements preserve the rectangle.
    if (width != height) {
        bool axis_aligned = std::abs(m[1]) < kMatchTol && std::abs(m[2]) < kMatchTol;
        bool half_turn_like = std::abs(m[0]) > kMatchTol;  // diag(+-1,+-1)
        if (!(axis_aligned && half_turn_like)) return false;
    }
    return true;
}

int FiniteGroup::act_grid(GroupElement h, int idx, int width, int height) const {
    if (!grid_action_exact(h, width, height))
        throw ExactActionUnavailable("group element " + std::to_string(h.index) +
                                     " has no exact action on a " + std::to_string(width) + "x" +
                                     std::to_string(height) + " grid");
    if (idx < 0 || idx >= width * height) throw std::out_of_range("act_grid: index out of range");
    double cx = (width - 1) / 2.0, cy = (height - 1) / 2.0;
    double px = (idx % width) - cx, py = (idx / width) - cy;
    Vec2 q = act_point(h, Vec2{px, py});
    int col = static_cast<int>(std::lround(q.x + cx));
    int row = static_cast<int>(std::lround(q.y + cy));
    return row * width + col;
}

std::vector<int> FiniteGroup::regular_permutation(GroupElement h_bar) const {
    GroupElement inv = inverse(h_bar);
    std::vector<int> perm(order_);
    for (int k = 0; k < order_; ++k) perm[k] = compose(inv, GroupElement{k}).index;
    return perm;
}

FiniteGroup FiniteGroup::from_spec(const std::string& spec) {
    if (spec.size() < 2 || (spec[0] != 'c' && spec[0] != 'd'))
        throw std::invalid_argument("group spec must look like c4, c8, d4, ...: got '" + spec + "'");
    int n = std::atoi(spec.c_str() + 1);
    if (n < 1) throw std::invalid_argument("invalid group spec '" + spec + "'");
    return FiniteGroup(spec[0] == 'c' ? GroupKind::cyclic : GroupKind::dihedral, n);
}

std::string FiniteGroup::spec() const {
    return (kind_ == GroupKind::cyclic ? "c" : "d") + std::to_string(n_);
}

}  // namespace gevit
