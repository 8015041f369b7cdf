#include "mimfd/fem.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <string>

#include "mimfd/errors.hpp"

namespace mimfd {

Mesh::Mesh(int nx, int ny, Rectangle domain) : nx_(nx), ny_(ny), domain_(domain) {
    if (nx < 2 || ny < 2)
        throw DomainError("build_mesh: need at least 2 cells per axis, got " + std::to_string(nx) + "x" +
                          std::to_string(ny));
    if (!(domain.x1 > domain.x0) || !(domain.y1 > domain.y0) || !std::isfinite(domain.area()))
        throw DomainError("build_mesh: degenerate rectangle");

    nodes_.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
    boundary_.reserve(nodes_.capacity());
    for (int j = 0; j <= ny; ++j) {
        // Endpoints are copied so boundary coordinates are exact.
        const double y = j == ny ? domain.y1 : domain.y0 + j * hy();
        for (int i = 0; i <= nx; ++i) {
            const double x = i == nx ? domain.x1 : domain.x0 + i * hx();
            nodes_.push_back({x, y});
            boundary_.push_back(i == 0 || i == nx || j == 0 || j == ny ? 1 : 0);
        }
    }

    elements_.reserve(2 * static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int ll = node_index(i, j), lr = node_index(i + 1, j);
            const int ul = node_index(i, j + 1), ur = node_index(i + 1, j + 1);
            elements_.push_back({ll, lr, ur});
            elements_.push_back({ll, ur, ul});
        }
    }
}

Point Mesh::centroid(std::size_t element) const {
    const auto& e = elements_[element];
    return {(nodes_[e[0]].x + nodes_[e[1]].x + nodes_[e[2]].x) / 3.0,
            (nodes_[e[0]].y + nodes_[e[1]].y + nodes_[e[2]].y) / 3.0};
}

double Mesh::signed_area(std::size_t element) const {
    const auto& e = elements_[element];
    const Point& a = nodes_[e[0]];
    const Point& b = nodes_[e[1]];
    const Point& c = nodes_[e[2]];
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

Mesh build_mesh(int nx, int ny, Rectangle domain) { return Mesh(nx, ny, domain); }

Coefficients Coefficients::laplacian() {
    return {[](double, double) { return Eigen::Matrix2d::Identity().eval(); }, [](double, double) { return 0.0; }};
}

ObservationMask::ObservationMask(std::vector<std::uint8_t> element_flags) : flags_(std::move(element_flags)) {
    if (observed_count() == 0) throw DomainError("ObservationMask: observation region is empty");
}

std::size_t ObservationMask::observed_count() const {
    return static_cast<std::size_t>(std::count_if(flags_.begin(), flags_.end(), [](auto f) { return f != 0; }));
}

std::vector<std::uint8_t> ObservationMask::node_flags(const Mesh& mesh) const {
    if (flags_.size() != mesh.element_count()) throw DimensionError("ObservationMask: mesh mismatch");
    std::vector<std::uint8_t> out(static_cast<std::size_t>(mesh.node_count()), 0);
    for (std::size_t e = 0; e < flags_.size(); ++e)
        if (flags_[e])
            for (int v : mesh.elements()[e]) out[static_cast<std::size_t>(v)] = 1;
    return out;
}

ObservationMask ObservationMask::everywhere(const Mesh& mesh) {
    return ObservationMask(std::vector<std::uint8_t>(mesh.element_count(), 1));
}

ObservationMask mask_from_frame(const Mesh& mesh, double inner_lo, double inner_hi) {
    const Rectangle& d = mesh.domain();
    if (!(inner_lo <= inner_hi) || !(inner_lo > d.x0 && inner_lo > d.y0) || !(inner_hi < d.x1 && inner_hi < d.y1))
        throw DomainError("mask_from_frame: inner square [" + std::to_string(inner_lo) + "," +
                          std::to_string(inner_hi) + "]^2 is not strictly inside the domain");
    std::vector<std::uint8_t> flags(mesh.element_count(), 0);
    for (std::size_t e = 0; e < flags.size(); ++e) {
        const Point c = mesh.centroid(e);
        const bool inside = c.x >= inner_lo && c.x <= inner_hi && c.y >= inner_lo && c.y <= inner_hi;
        flags[e] = inside ? 0 : 1;
    }
    return ObservationMask(std::move(flags));
}

namespace {

void check_coefficients(const Eigen::Matrix2d& a, double c, const Point& at) {
    const double scale = std::max(std::abs(a(0, 0)), std::abs(a(1, 1)));
    const bool symmetric = std::abs(a(0, 1) - a(1, 0)) <= 1e-14 * std::max(scale, 1.0);
    const bool definite = a(0, 0) > 0.0 && a.determinant() > 0.0;
    if (!symmetric || !definite || !std::isfinite(a.sum()))
        throw CoefficientError("assemble: diffusion tensor not SPD at (" + std::to_string(at.x) + "," +
                               std::to_string(at.y) + ")");
    if (!(c >= 0.0) || !std::isfinite(c))
        throw CoefficientError("assemble: negative reaction coefficient at (" + std::to_string(at.x) + "," +
                               std::to_string(at.y) + ")");
}

}  // namespace

AssembledSystem assemble(const Mesh& mesh, const Coefficients& coeffs, const ObservationMask& mask) {
    if (mask.element_flags().size() != mesh.element_count())
        throw DimensionError("assemble: observation mask does not match the mesh");

    using Triplet = Eigen::Triplet<double>;
    std::vector<Triplet> mass, stiff, mass_omega;
    const std::size_t ne = mesh.element_count();
    mass.reserve(9 * ne);
    stiff.reserve(9 * ne);
    mass_omega.reserve(9 * mask.observed_count());

    const auto& pts = mesh.nodes();
    for (std::size_t e = 0; e < ne; ++e) {
        const auto& v = mesh.elements()[e];
        const double area = mesh.signed_area(e);
        const Point c = mesh.centroid(e);
        const Eigen::Matrix2d a = coeffs.diffusion(c.x, c.y);
        const double react = coeffs.reaction(c.x, c.y);
        check_coefficients(a, react, c);

        // Gradients of the three barycentric functions.
        Eigen::Matrix<double, 2, 3> grad;
        for (int k = 0; k < 3; ++k) {
            const Point& p1 = pts[v[(k + 1) % 3]];
            const Point& p2 = pts[v[(k + 2) % 3]];
            grad(0, k) = (p1.y - p2.y) / (2.0 * area);
            grad(1, k) = (p2.x - p1.x) / (2.0 * area);
        }
        const Eigen::Matrix<double, 2, 3> a_grad = a * grad;

        for (int r = 0; r < 3; ++r) {
            for (int s = r; s < 3; ++s) {
                const double m = area / 12.0 * (r == s ? 2.0 : 1.0);
                const double k = area * grad.col(r).dot(a_grad.col(s)) + react * m;
                mass.emplace_back(v[r], v[s], m);
                stiff.emplace_back(v[r], v[s], k);
                if (mask.observed(e)) mass_omega.emplace_back(v[r], v[s], m);
                if (r != s) {
                    mass.emplace_back(v[s], v[r], m);
                    stiff.emplace_back(v[s], v[r], k);
                    if (mask.observed(e)) mass_omega.emplace_back(v[s], v[r], m);
                }
            }
        }
    }

    const Eigen::Index n = mesh.node_count();
    AssembledSystem sys;
    sys.mass.resize(n, n);
    sys.stiffness.resize(n, n);
    sys.mass_omega.resize(n, n);
    sys.mass.setFromTriplets(mass.begin(), mass.end());
    sys.stiffness.setFromTriplets(stiff.begin(), stiff.end());
    sys.mass_omega.setFromTriplets(mass_omega.begin(), mass_omega.end());

    sys.interior_index.assign(static_cast<std::size_t>(n), -1);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!mesh.on_boundary(i)) {
            sys.interior_index[static_cast<std::size_t>(i)] = static_cast<int>(sys.free_nodes.size());
            sys.free_nodes.push_back(static_cast<int>(i));
        }
    }
    return sys;
}

SparseMatrix restrict_to_free(const SparseMatrix& full, const AssembledSystem& system) {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(full.nonZeros()));
    for (int col = 0; col < full.outerSize(); ++col) {
        const int jc = system.interior_index[static_cast<std::size_t>(col)];
        if (jc < 0) continue;
        for (SparseMatrix::InnerIterator it(full, col); it; ++it) {
            const int ir = system.interior_index[static_cast<std::size_t>(it.row())];
            if (ir >= 0) trips.emplace_back(ir, jc, it.value());
        }
    }
    SparseMatrix out(system.free_count(), system.free_count());
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
}

SparseMatrix restrict_rows(const SparseMatrix& full, const AssembledSystem& system) {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(full.nonZeros()));
    for (int col = 0; col < full.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(full, col); it; ++it) {
            const int ir = system.interior_index[static_cast<std::size_t>(it.row())];
            if (ir >= 0) trips.emplace_back(ir, col, it.value());
        }
    }
    SparseMatrix out(system.free_count(), full.cols());
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
}

Eigen::VectorXd gather_free(const Eigen::VectorXd& full, const AssembledSystem& system) {
    if (full.size() != system.node_count()) throw DimensionError("gather_free: length mismatch");
    Eigen::VectorXd out(system.free_count());
    for (Eigen::Index k = 0; k < out.size(); ++k) out[k] = full[system.free_nodes[static_cast<std::size_t>(k)]];
    return out;
}

Eigen::VectorXd scatter_free(const Eigen::VectorXd& reduced, const AssembledSystem& system) {
    if (reduced.size() != system.free_count()) throw DimensionError("scatter_free: length mismatch");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(system.node_count());
    for (Eigen::Index k = 0; k < reduced.size(); ++k) out[system.free_nodes[static_cast<std::size_t>(k)]] = reduced[k];
    return out;
}

double l2_inner(const Field& f, const Field& g, const SparseMatrix& matrix) {
    if (f.size() != matrix.rows() || g.size() != matrix.cols())
        throw DimensionError("l2_inner: field length " + std::to_string(f.size()) + "/" + std::to_string(g.size()) +
                             " does not match matrix of order " + std::to_string(matrix.rows()));
    return f.dot(matrix * g);
}

double l2_norm(const Field& f, const SparseMatrix& matrix) { return std::sqrt(std::max(0.0, l2_inner(f, f, matrix))); }

Field project_function(const Mesh& mesh, const ScalarFunction& f) {
    Field out(mesh.node_count());
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        const Point& p = mesh.nodes()[static_cast<std::size_t>(i)];
        out[i] = f(p.x, p.y);
    }
    return out;
}

SpdSolver::SpdSolver(const SparseMatrix& lhs, double residual_tolerance) : lhs_(lhs), tolerance_(residual_tolerance) {
    if (lhs.rows() != lhs.cols()) throw DimensionError("SpdSolver: matrix is not square");
    factor_.compute(lhs_);
    if (factor_.info() != Eigen::Success) throw SolverError("SpdSolver: factorization failed (matrix not SPD?)");
    const auto d = factor_.vectorD();
    if ((d.array() <= 0.0).any()) throw SolverError("SpdSolver: matrix is not positive definite");
}

Eigen::VectorXd SpdSolver::solve(const Eigen::VectorXd& rhs) const {
    if (rhs.size() != lhs_.rows()) throw DimensionError("SpdSolver: right-hand side length mismatch");
    const double rhs_norm = rhs.norm();
    if (rhs_norm == 0.0) return Eigen::VectorXd::Zero(rhs.size());
    Eigen::VectorXd x = factor_.solve(rhs);
    // One step of iterative refinement keeps the residual well below tolerance.
    Eigen::VectorXd r = rhs - lhs_ * x;
    if (r.norm() > 1e-14 * rhs_norm) {
        x += factor_.solve(r);
        r = rhs - lhs_ * x;
    }
    if (!(r.norm() <= tolerance_ * rhs_norm))
        throw SolverError("SpdSolver: relative residual " + std::to_string(r.norm() / rhs_norm) + " above tolerance");
    return x;
}

Eigen::VectorXd solve_spd(const SparseMatrix& lhs, const Eigen::VectorXd& rhs) { return SpdSolver(lhs).solve(rhs); }

}  // namespace mimfd
