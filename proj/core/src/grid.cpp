#include "ploc/grid.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace ploc {

double Vec2::norm() const { return std::sqrt(x * x + y * y); }

double DomainSpec::measure() const {
  return dim == 1 ? (x1 - x0) : (x1 - x0) * (y1 - y0);
}

namespace {

constexpr double kGauss = 0.5773502691896257;  // 1/sqrt(3)

void check_domain(const DomainSpec& d, int n) {
  if (d.dim != 1 && d.dim != 2) throw std::invalid_argument("grid: dim must be 1 or 2");
  if (n < 2) throw std::invalid_argument("grid: n must be >= 2");
  if (!(d.x1 > d.x0)) throw std::invalid_argument("grid: empty extent in x");
  if (d.dim == 2 && !(d.y1 > d.y0)) throw std::invalid_argument("grid: empty extent in y");
}

}  // namespace

Grid build_grid(const DomainSpec& domain, int n) {
  check_domain(domain, n);
  Grid g;
  g.domain = domain;
  g.n = n;
  g.dim = domain.dim;
  g.hx = (domain.x1 - domain.x0) / n;
  g.hy = g.dim == 2 ? (domain.y1 - domain.y0) / n : 0.0;

  if (g.dim == 1) {
    g.nodes_per_elem = 2;
    g.nq = 2;
    g.nodes.resize(n + 1);
    for (int i = 0; i <= n; ++i) g.nodes[i] = {domain.x0 + i * g.hx, 0.0};
    g.elems.resize(n);
    for (int e = 0; e < n; ++e) g.elems[e] = {e, e + 1, -1, -1};

    g.interior_index.assign(g.nodes.size(), -1);
    for (int i = 1; i < n; ++i) g.interior_index[i] = i - 1;
    g.n_interior = n - 1;

    // 2-point Gauss on each cell; reference coordinates r in [-1, 1].
    const double r[2] = {-kGauss, kGauss};
    g.phi.resize(2);
    g.dphi.resize(2);
    for (int q = 0; q < 2; ++q) {
      g.phi[q] = {0.5 * (1 - r[q]), 0.5 * (1 + r[q]), 0.0, 0.0};
      g.dphi[q] = {Vec2{-1.0 / g.hx, 0.0}, Vec2{1.0 / g.hx, 0.0}, Vec2{}, Vec2{}};
    }
    g.quad_points.resize(2 * n);
    g.quad_weights.assign(2 * n, 0.5 * g.hx);
    for (int e = 0; e < n; ++e) {
      double xc = domain.x0 + (e + 0.5) * g.hx;
      for (int q = 0; q < 2; ++q) g.quad_points[2 * e + q] = {xc + 0.5 * g.hx * r[q], 0.0};
    }
    return g;
  }

  // dim == 2: (n+1)^2 nodes, n^2 bilinear quads, 2x2 Gauss.
  g.nodes_per_elem = 4;
  g.nq = 4;
  const int nn = n + 1;
  g.nodes.resize(static_cast<std::size_t>(nn) * nn);
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      g.nodes[j * nn + i] = {domain.x0 + i * g.hx, domain.y0 + j * g.hy};

  g.elems.resize(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      g.elems[j * n + i] = {j * nn + i, j * nn + i + 1, (j + 1) * nn + i + 1, (j + 1) * nn + i};

  g.interior_index.assign(g.nodes.size(), -1);
  int dof = 0;
  for (int j = 1; j < n; ++j)
    for (int i = 1; i < n; ++i) g.interior_index[j * nn + i] = dof++;
  g.n_interior = dof;

  const double r[2] = {-kGauss, kGauss};
  g.phi.resize(4);
  g.dphi.resize(4);
  int qi = 0;
  for (int qj = 0; qj < 2; ++qj) {
    for (int qx = 0; qx < 2; ++qx, ++qi) {
      const double a = r[qx], b = r[qj];
      // Local node order: (-,-), (+,-), (+,+), (-,+) in reference coords.
      g.phi[qi] = {0.25 * (1 - a) * (1 - b), 0.25 * (1 + a) * (1 - b),
                   0.25 * (1 + a) * (1 + b), 0.25 * (1 - a) * (1 + b)};
      const double dx = 2.0 / g.hx, dy = 2.0 / g.hy;  // d(ref)/d(global) scale
      g.dphi[qi] = {Vec2{-0.25 * (1 - b) * dx, -0.25 * (1 - a) * dy},
                    Vec2{0.25 * (1 - b) * dx, -0.25 * (1 + a) * dy},
                    Vec2{0.25 * (1 + b) * dx, 0.25 * (1 + a) * dy},
                    Vec2{-0.25 * (1 + b) * dx, 0.25 * (1 - a) * dy}};
    }
  }

  g.quad_points.resize(4 * g.elems.size());
  g.quad_weights.assign(4 * g.elems.size(), 0.25 * g.hx * g.hy);
  for (std::size_t e = 0; e < g.elems.size(); ++e) {
    const Vec2 c = {0.5 * (g.nodes[g.elems[e][0]].x + g.nodes[g.elems[e][1]].x),
                    0.5 * (g.nodes[g.elems[e][0]].y + g.nodes[g.elems[e][3]].y)};
    qi = 0;
    for (int qj = 0; qj < 2; ++qj)
      for (int qx = 0; qx < 2; ++qx, ++qi)
        g.quad_points[4 * e + qi] = {c.x + 0.5 * g.hx * r[qx], c.y + 0.5 * g.hy * r[qj]};
  }
  return g;
}

Field nodal_interpolate(const Grid& grid, const std::function<double(Vec2)>& f) {
  Field y(grid);
  for (std::size_t i = 0; i < grid.n_nodes(); ++i)
    if (grid.interior_index[i] >= 0) y[i] = f(grid.nodes[i]);
  return y;
}

CellField sample_at_quadrature(const Grid& grid, const std::function<double(Vec2)>& f) {
  CellField out(grid);
  for (std::size_t q = 0; q < grid.n_quad(); ++q) out[q] = f(grid.quad_points[q]);
  return out;
}

CellField values_at_quadrature(const Field& y) {
  const Grid& g = *y.grid;
  CellField out(g);
  for (std::size_t e = 0; e < g.n_elems(); ++e) {
    for (int q = 0; q < g.nq; ++q) {
      double v = 0.0;
      for (int l = 0; l < g.nodes_per_elem; ++l) v += g.phi[q][l] * y[g.elems[e][l]];
      out[e * g.nq + q] = v;
    }
  }
  return out;
}

std::vector<Vec2> gradient_at_quadrature(const Field& y) {
  const Grid& g = *y.grid;
  std::vector<Vec2> out(g.n_quad());
  for (std::size_t e = 0; e < g.n_elems(); ++e) {
    for (int q = 0; q < g.nq; ++q) {
      Vec2 grad{};
      for (int l = 0; l < g.nodes_per_elem; ++l) grad = grad + y[g.elems[e][l]] * g.dphi[q][l];
      out[e * g.nq + q] = grad;
    }
  }
  return out;
}

Eigen::VectorXd interior_vector(const Field& y) {
  const Grid& g = *y.grid;
  Eigen::VectorXd v(g.n_interior);
  for (std::size_t i = 0; i < g.n_nodes(); ++i)
    if (g.interior_index[i] >= 0) v[g.interior_index[i]] = y[i];
  return v;
}

Field field_from_interior(const Grid& grid, const Eigen::VectorXd& interior) {
  if (interior.size() != grid.n_interior)
    throw std::invalid_argument("field_from_interior: size mismatch");
  Field y(grid);
  for (std::size_t i = 0; i < grid.n_nodes(); ++i)
    if (grid.interior_index[i] >= 0) y[i] = interior[grid.interior_index[i]];
  return y;
}

double integrate(const Grid& grid, const CellField& f) {
  // Kahan-compensated: telemetry invariants sit at the 1e-12 level and naive
  // sums over ~1e5 quadrature points can drift past that.
  double sum = 0.0, c = 0.0;
  for (std::size_t q = 0; q < grid.n_quad(); ++q) {
    const double term = grid.quad_weights[q] * f[q] - c;
    const double t = sum + term;
    c = (t - sum) - term;
    sum = t;
  }
  return sum;
}

double kahan_sum(const std::vector<double>& terms) {
  double sum = 0.0, c = 0.0;
  for (double v : terms) {
    const double term = v - c;
    const double t = sum + term;
    c = (t - sum) - term;
    sum = t;
  }
  return sum;
}

double norm(const Field& y, NormKind kind) {
  const Grid& g = *y.grid;
  switch (kind) {
    case NormKind::Linf: {
      // Piecewise (bi)linear functions attain their max at nodes.
      return y.nodal.size() ? y.nodal.cwiseAbs().maxCoeff() : 0.0;
    }
    case NormKind::L2: {
      CellField v = values_at_quadrature(y);
      return norm_l2(g, v);
    }
    case NormKind::H10: {
      auto grads = gradient_at_quadrature(y);
      CellField g2(g);
      for (std::size_t q = 0; q < g.n_quad(); ++q) g2[q] = grads[q].norm2();
      return std::sqrt(std::max(0.0, integrate(g, g2)));
    }
  }
  return 0.0;
}

double norm_l2(const Grid& grid, const CellField& f) {
  CellField sq(grid);
  for (std::size_t q = 0; q < grid.n_quad(); ++q) sq[q] = f[q] * f[q];
  return std::sqrt(std::max(0.0, integrate(grid, sq)));
}

double norm_linf(const CellField& f) {
  return f.q.size() ? f.q.cwiseAbs().maxCoeff() : 0.0;
}

namespace {

void write_csv_rows(const std::string& path, const Grid& g, const std::vector<Vec2>& pts,
                    const Eigen::VectorXd& vals) {
  std::FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw std::runtime_error("cannot open for writing: " + path);
  std::fprintf(fp, g.dim == 1 ? "x,value\n" : "x,y,value\n");
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    if (g.dim == 1)
      std::fprintf(fp, "%.17g,%.17g\n", pts[i].x, vals[i]);
    else
      std::fprintf(fp, "%.17g,%.17g,%.17g\n", pts[i].x, pts[i].y, vals[i]);
  }
  std::fclose(fp);
}

}  // namespace

void write_field_csv(const std::string& path, const Field& y) {
  if (!y.grid) throw std::invalid_argument("write_field_csv: field has no grid");
  write_csv_rows(path, *y.grid, y.grid->nodes, y.nodal);
}

void write_field_csv(const std::string& path, const CellField& f) {
  if (!f.grid) throw std::invalid_argument("write_field_csv: field has no grid");
  write_csv_rows(path, *f.grid, f.grid->quad_points, f.q);
}

}  // namespace ploc
