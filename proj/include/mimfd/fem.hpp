#pragma once

// Structured P1 finite elements on a rectangle.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

namespace mimfd {

using Field = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using ScalarFunction = std::function<double(double, double)>;
using TensorFunction = std::function<Eigen::Matrix2d(double, double)>;

struct Rectangle {
    double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;

    double area() const { return (x1 - x0) * (y1 - y0); }
    bool operator==(const Rectangle&) const = default;
};

struct Point {
    double x, y;
};

// Every cell of an nx-by-ny grid split along its lower-left to upper-right
// diagonal. Node (i, j) has index j*(nx+1) + i.
class Mesh {
public:
    Mesh(int nx, int ny, Rectangle domain);

    int nx() const noexcept { return nx_; }
    int ny() const noexcept { return ny_; }
    const Rectangle& domain() const noexcept { return domain_; }
    double hx() const noexcept { return (domain_.x1 - domain_.x0) / nx_; }
    double hy() const noexcept { return (domain_.y1 - domain_.y0) / ny_; }

    Eigen::Index node_count() const noexcept { return static_cast<Eigen::Index>(nodes_.size()); }
    std::size_t element_count() const noexcept { return elements_.size(); }

    const std::vector<Point>& nodes() const noexcept { return nodes_; }
    const std::vector<std::array<int, 3>>& elements() const noexcept { return elements_; }
    const std::vector<std::uint8_t>& boundary_mask() const noexcept { return boundary_; }
    bool on_boundary(Eigen::Index node) const { return boundary_[static_cast<std::size_t>(node)] != 0; }

    int node_index(int i, int j) const noexcept { return j * (nx_ + 1) + i; }
    Point centroid(std::size_t element) const;
    double signed_area(std::size_t element) const;

    bool operator==(const Mesh& other) const {
        return nx_ == other.nx_ && ny_ == other.ny_ && domain_ == other.domain_;
    }

private:
    int nx_, ny_;
    Rectangle domain_;
    std::vector<Point> nodes_;
    std::vector<std::array<int, 3>> elements_;
    std::vector<std::uint8_t> boundary_;
};

Mesh build_mesh(int nx, int ny, Rectangle domain = {});

// Diffusion tensor A(x) and reaction c(x) of the elliptic operator
// -div(A grad u) + c u, sampled at element centroids.
struct Coefficients {
    TensorFunction diffusion;
    ScalarFunction reaction;

    static Coefficients laplacian();
};

// Per-element membership in the observation region.
class ObservationMask {
public:
    explicit ObservationMask(std::vector<std::uint8_t> element_flags);

    const std::vector<std::uint8_t>& element_flags() const noexcept { return flags_; }
    bool observed(std::size_t element) const { return flags_[element] != 0; }
    std::size_t observed_count() const;

    // Nodes touched by at least one observed element.
    std::vector<std::uint8_t> node_flags(const Mesh& mesh) const;

    static ObservationMask everywhere(const Mesh& mesh);

private:
    std::vector<std::uint8_t> flags_;
};

// Flags the elements whose centroid lies outside the closed square
// [inner_lo, inner_hi]^2, i.e. the frame Omega minus that square.
ObservationMask mask_from_frame(const Mesh& mesh, double inner_lo, double inner_hi);

struct AssembledSystem {
    SparseMatrix mass;        // M
    SparseMatrix stiffness;   // K: diffusion plus reaction
    SparseMatrix mass_omega;  // M restricted to observed elements
    // interior_index[node] is the unknown number of a free node, -1 on the boundary.
    std::vector<int> interior_index;
    std::vector<int> free_nodes;

    Eigen::Index node_count() const { return mass.rows(); }
    Eigen::Index free_count() const { return static_cast<Eigen::Index>(free_nodes.size()); }
};

AssembledSystem assemble(const Mesh& mesh, const Coefficients& coeffs, const ObservationMask& mask);

// Rows and columns of a full-size matrix at the free nodes.
SparseMatrix restrict_to_free(const SparseMatrix& full, const AssembledSystem& system);
// Rows at the free nodes, all columns.
SparseMatrix restrict_rows(const SparseMatrix& full, const AssembledSystem& system);
Eigen::VectorXd gather_free(const Eigen::VectorXd& full, const AssembledSystem& system);
Eigen::VectorXd scatter_free(const Eigen::VectorXd& reduced, const AssembledSystem& system);

// f^T matrix g.
double l2_inner(const Field& f, const Field& g, const SparseMatrix& matrix);
double l2_norm(const Field& f, const SparseMatrix& matrix);

// Nodal interpolation.
Field project_function(const Mesh& mesh, const ScalarFunction& f);

// Sparse Cholesky (LDL^T) of an SPD matrix, factored once and reused.
class SpdSolver {
public:
    explicit SpdSolver(const SparseMatrix& lhs, double residual_tolerance = 1e-10);

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
    Eigen::Index size() const { return lhs_.rows(); }

private:
    SparseMatrix lhs_;
    Eigen::SimplicialLDLT<SparseMatrix> factor_;
    double tolerance_;
};

Eigen::VectorXd solve_spd(const SparseMatrix& lhs, const Eigen::VectorXd& rhs);

// CSV with header "x,y,value", one row per node in node order, 17 significant
// digits so a read-back reproduces every coefficient exactly.
void write_field_csv(const std::filesystem::path& path, const Mesh& mesh, const Field& field);

struct FieldCsv {
    std::vector<Point> coordinates;
    Field values;
};

FieldCsv read_field_csv(const std::filesystem::path& path);
// Reads and checks that the row count and coordinates match `mesh`.
Field read_field_csv(const std::filesystem::path& path, const Mesh& mesh);

}  // namespace mimfd
