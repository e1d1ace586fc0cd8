#pragma once

// Structured P1 / bilinear-Q1 grids on intervals and axis-aligned rectangles,
// homogeneous Dirichlet everywhere, with 2-point (resp. 2x2) Gauss quadrature.
// Controls and coefficient data live at quadrature points (CellField); states,
// adjoints and test functions are nodal (Field).

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace ploc {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  double norm2() const { return x * x + y * y; }
  double norm() const;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

// Domain description: dim = 1 uses [x0, x1], dim = 2 uses [x0, x1] x [y0, y1].
struct DomainSpec {
  int dim = 1;
  double x0 = 0.0;
  double x1 = 1.0;
  double y0 = 0.0;
  double y1 = 1.0;

  double measure() const;
};

// Uniform grid with n cells per axis. Element-local data (shape values and
// global-frame shape gradients at the reference quadrature points) is shared
// across elements since the mesh is uniform; per-element data is reduced to
// node indices and quadrature point coordinates.
class Grid {
 public:
  DomainSpec domain;
  int n = 0;           // cells per axis
  int dim = 1;
  double hx = 0.0;     // cell extents
  double hy = 0.0;

  std::vector<Vec2> nodes;
  std::vector<std::array<int, 4>> elems;  // 1D uses entries [0,1]
  int nodes_per_elem = 2;

  std::vector<int> interior_index;  // node -> interior dof, or -1 on boundary
  int n_interior = 0;

  // Quadrature: nq points per element, flattened arrays of size n_elems*nq.
  int nq = 2;
  std::vector<Vec2> quad_points;
  std::vector<double> quad_weights;

  // Reference-element tables, identical for every element: phi[q][loc] and
  // the global-frame gradient dphi[q][loc].
  std::vector<std::array<double, 4>> phi;
  std::vector<std::array<Vec2, 4>> dphi;

  std::size_t n_nodes() const { return nodes.size(); }
  std::size_t n_elems() const { return elems.size(); }
  std::size_t n_quad() const { return quad_points.size(); }
  double cell_measure() const { return dim == 1 ? hx : hx * hy; }
};

// Builds the uniform grid; requires n >= 2 and a positive-measure domain.
Grid build_grid(const DomainSpec& domain, int n);

// Nodal field, zero on the Dirichlet boundary by construction.
struct Field {
  const Grid* grid = nullptr;
  Eigen::VectorXd nodal;

  Field() = default;
  explicit Field(const Grid& g) : grid(&g), nodal(Eigen::VectorXd::Zero(g.n_nodes())) {}
  double& operator[](std::size_t i) { return nodal[static_cast<Eigen::Index>(i)]; }
  double operator[](std::size_t i) const { return nodal[static_cast<Eigen::Index>(i)]; }
};

// One scalar per quadrature point.
struct CellField {
  const Grid* grid = nullptr;
  Eigen::VectorXd q;

  CellField() = default;
  explicit CellField(const Grid& g) : grid(&g), q(Eigen::VectorXd::Zero(g.n_quad())) {}
  CellField(const Grid& g, double fill) : grid(&g), q(Eigen::VectorXd::Constant(g.n_quad(), fill)) {}
  double& operator[](std::size_t i) { return q[static_cast<Eigen::Index>(i)]; }
  double operator[](std::size_t i) const { return q[static_cast<Eigen::Index>(i)]; }
  std::size_t size() const { return static_cast<std::size_t>(q.size()); }
};

// Interpolation helpers.
Field nodal_interpolate(const Grid& grid, const std::function<double(Vec2)>& f);
CellField sample_at_quadrature(const Grid& grid, const std::function<double(Vec2)>& f);
CellField values_at_quadrature(const Field& y);
std::vector<Vec2> gradient_at_quadrature(const Field& y);

// Interior-dof gather/scatter.
Eigen::VectorXd interior_vector(const Field& y);
Field field_from_interior(const Grid& grid, const Eigen::VectorXd& interior);

// Compensated quadrature sums; all norms route through these so that the
// normalization identity ||psi||_L2 + mu = 1 survives at the 1e-12 level.
double integrate(const Grid& grid, const CellField& f);
double kahan_sum(const std::vector<double>& terms);

enum class NormKind { L2, Linf, H10 };
double norm(const Field& y, NormKind kind);
double norm_l2(const Grid& grid, const CellField& f);
double norm_linf(const CellField& f);

// CSV dump: header "x,value" (1D) or "x,y,value" (2D), one row per node
// (Field) or per quadrature point (CellField), full double precision.
void write_field_csv(const std::string& path, const Field& y);
void write_field_csv(const std::string& path, const CellField& f);

}  // namespace ploc
