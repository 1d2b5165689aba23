#include "bayesgam/gpbasis.hpp"

#include "bayesgam/errors.hpp"
#include "bayesgam/kernels.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace bayesgam {

namespace {

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

double distance(std::span<const double> x, std::span<const double> y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(acc);
}

bool is_one_dimensional(const Kernel& k) {
  const Index a = k.arity();
  return a == 0 || a == 1;
}

// Eigenpairs of a PSD matrix, descending, with noise-level eigenvalues clamped to zero.
struct EigenPairs {
  Vector values;
  Matrix vectors;
};

EigenPairs sorted_eigenpairs(const Matrix& k) {
  const Index n = k.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> es(k);
  if (es.info() != Eigen::Success) throw Error("eigen decomposition did not converge");
  const double trace = k.trace();
  const Vector& asc = es.eigenvalues();
  if (asc(0) < -1e-10 * trace) throw IndefiniteCovariance(asc(0));
  EigenPairs out;
  out.values = asc.reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();
  const double zero_tol = static_cast<double>(n) * std::numeric_limits<double>::epsilon() * out.values(0);
  for (Index i = 0; i < n; ++i)
    if (out.values(i) <= zero_tol) out.values(i) = 0.0;
  return out;
}

void fix_sign(Eigen::Ref<Vector> column) {
  Index arg = 0;
  column.cwiseAbs().maxCoeff(&arg);
  if (column(arg) < 0.0) column = -column;
}

// Smallest k with cumulative fraction >= threshold among the strictly positive values
// (already sorted descending). Returns k and the retained fraction.
std::pair<Index, double> truncation(const Vector& values, double threshold) {
  Index positive = 0;
  while (positive < values.size() && values(positive) > 0.0) ++positive;
  double total = 0.0;
  for (Index i = 0; i < positive; ++i) total += values(i);
  double cum = 0.0;
  for (Index i = 0; i < positive; ++i) {
    cum += values(i);
    if (cum >= threshold * total) return {i + 1, cum / total};
  }
  return {positive, 1.0};
}

void require_threshold(double t) {
  if (!(t > 0.0 && t <= 1.0)) throw InvalidArgument("energy threshold must lie in (0, 1]");
}

Vector mean_on_grid(const Grid& grid, const MeanFunction& mean_fn) {
  const Points knots = grid.knots();
  Vector mu(grid.size());
  for (Index i = 0; i < grid.size(); ++i) mu(i) = mean_fn ? mean_fn(point_of(knots, i)) : 0.0;
  return mu;
}

}  // namespace

Kernel::Kernel(SquaredExponential k) : v_(k) { validate(); }
Kernel::Kernel(Periodic k) : v_(k) { validate(); }
Kernel::Kernel(Symmetric k) : v_(std::move(k)) { validate(); }
Kernel::Kernel(Separable k) : v_(std::move(k)) { validate(); }

Kernel Kernel::symmetric(Kernel inner) { return Kernel(Symmetric{std::make_shared<const Kernel>(std::move(inner))}); }
Kernel Kernel::separable(std::vector<Kernel> factors) { return Kernel(Separable{std::move(factors)}); }

void Kernel::validate() const {
  std::visit(overloaded{
                 [](const SquaredExponential& k) {
                   if (!(k.sigma2 > 0.0 && k.length > 0.0))
                     throw InvalidArgument("squared exponential needs sigma2 > 0 and length > 0");
                 },
                 [](const Periodic& k) {
                   if (!(k.sigma2 > 0.0 && k.length > 0.0 && k.period > 0.0))
                     throw InvalidArgument("periodic kernel needs sigma2, length and period > 0");
                 },
                 [](const Symmetric& k) {
                   if (!k.inner) throw InvalidArgument("symmetric kernel needs an inner kernel");
                   if (!is_one_dimensional(*k.inner) || std::holds_alternative<Separable>(k.inner->variant()))
                     throw InvalidArgument("symmetric kernel wraps a 1-D kernel only");
                 },
                 [](const Separable& k) {
                   if (k.factors.empty()) throw InvalidArgument("separable kernel needs at least one factor");
                   for (const auto& f : k.factors)
                     if (std::holds_alternative<Separable>(f.variant()) || !is_one_dimensional(f))
                       throw InvalidArgument("separable kernel factors must be 1-D");
                 },
             },
             v_);
}

// 0 means "any dimension" (isotropic kernels on Euclidean distance).
Index Kernel::arity() const {
  return std::visit(overloaded{
                        [](const SquaredExponential&) -> Index { return 0; },
                        [](const Periodic&) -> Index { return 0; },
                        [](const Symmetric&) -> Index { return 1; },
                        [](const Separable& k) -> Index { return static_cast<Index>(k.factors.size()); },
                    },
                    v_);
}

double kernel_eval(const Kernel& kernel, std::span<const double> x, std::span<const double> x2) {
  if (x.size() != x2.size()) throw InvalidArgument("kernel_eval: points have different dimensions");
  const Index arity = kernel.arity();
  if (arity != 0 && static_cast<Index>(x.size()) != arity)
    throw InvalidArgument("kernel_eval: point dimension does not match kernel arity");
  return std::visit(overloaded{
                        [&](const SquaredExponential& k) {
                          const double d = distance(x, x2);
                          return k.sigma2 * std::exp(-d * d / (2.0 * k.length * k.length));
                        },
                        [&](const Periodic& k) {
                          const double s = std::sin(std::numbers::pi * distance(x, x2) / k.period);
                          return k.sigma2 * std::exp(-2.0 * s * s / (k.length * k.length));
                        },
                        [&](const Symmetric& k) {
                          const double mirrored = -x[0];
                          return kernel_eval(*k.inner, x, x2) +
                                 kernel_eval(*k.inner, std::span<const double>(&mirrored, 1), x2);
                        },
                        [&](const Separable& k) {
                          double v = 1.0;
                          for (std::size_t i = 0; i < k.factors.size(); ++i)
                            v *= kernel_eval(k.factors[i], x.subspan(i, 1), x2.subspan(i, 1));
                          return v;
                        },
                    },
                    kernel.variant());
}

Matrix covariance_matrix(const Kernel& kernel, const Grid& grid) {
  const bool separable = std::holds_alternative<Separable>(kernel.variant());
  if (grid.dims() > 1 && !separable) throw InvalidArgument("multi-axis grids need a separable kernel");
  if (separable && kernel.arity() != grid.dims())
    throw InvalidArgument("separable kernel needs one factor per grid axis");
  return kernels::gram_matrix(grid.knots(), [&kernel](std::span<const double> a, std::span<const double> b) {
    return kernel_eval(kernel, a, b);
  });
}

MeanFunction zero_mean() {
  return [](std::span<const double>) { return 0.0; };
}

MeanFunction constant_mean(double value) {
  return [value](std::span<const double>) { return value; };
}

GpBasis eigenbasis(const Kernel& kernel, const Grid& grid, const MeanFunction& mean_fn, double energy_threshold) {
  require_threshold(energy_threshold);
  const EigenPairs pairs = sorted_eigenpairs(covariance_matrix(kernel, grid));
  const auto [k, energy] = truncation(pairs.values, energy_threshold);
  GpBasis out;
  out.grid = grid;
  out.mean = mean_on_grid(grid, mean_fn);
  out.eigenvalues = pairs.values.head(k);
  out.basis = pairs.vectors.leftCols(k);
  for (Index i = 0; i < k; ++i) {
    fix_sign(out.basis.col(i));
    out.basis.col(i) *= std::sqrt(out.eigenvalues(i));
  }
  out.energy = energy;
  return out;
}

GpBasis kron_eigenbasis(const std::vector<KernelFactor>& factors, double energy_threshold, const MeanFunction& mean_fn) {
  require_threshold(energy_threshold);
  if (factors.size() < 2) throw InvalidArgument("kron_eigenbasis needs at least two factors");
  std::vector<EigenPairs> parts;
  std::vector<std::vector<double>> axes;
  for (const auto& f : factors) {
    if (std::holds_alternative<Separable>(f.kernel.variant()) || !is_one_dimensional(f.kernel))
      throw InvalidArgument("kron_eigenbasis factors must be 1-D kernels");
    Grid line({f.knots});
    parts.push_back(sorted_eigenpairs(covariance_matrix(f.kernel, line)));
    axes.push_back(f.knots);
  }
  Grid grid(axes);
  const std::size_t dims = factors.size();

  // Enumerate products of non-zero factor eigenvalues.
  struct Product {
    double value;
    std::vector<Index> index;
  };
  std::vector<Index> nonzero(dims);
  for (std::size_t d = 0; d < dims; ++d)
    nonzero[d] = (parts[d].values.array() > 0.0).count();
  std::vector<Product> products;
  std::vector<Index> idx(dims, 0);
  const bool any_empty = std::any_of(nonzero.begin(), nonzero.end(), [](Index n) { return n == 0; });
  while (!any_empty) {
    double v = 1.0;
    for (std::size_t d = 0; d < dims; ++d) v *= parts[d].values(idx[d]);
    products.push_back({v, idx});
    std::size_t d = dims;
    while (d-- > 0) {
      if (++idx[d] < nonzero[d]) break;
      idx[d] = 0;
    }
    if (d == static_cast<std::size_t>(-1)) break;
  }
  std::stable_sort(products.begin(), products.end(),
                   [](const Product& a, const Product& b) { return a.value > b.value; });

  Vector values(static_cast<Index>(products.size()));
  for (std::size_t i = 0; i < products.size(); ++i) values(static_cast<Index>(i)) = products[i].value;
  if (values.size() > 0) {
    const double zero_tol = static_cast<double>(grid.size()) * std::numeric_limits<double>::epsilon() * values(0);
    for (Index i = 0; i < values.size(); ++i)
      if (values(i) <= zero_tol) values(i) = 0.0;
  }
  const auto [k, energy] = truncation(values, energy_threshold);

  GpBasis out;
  out.grid = grid;
  out.mean = mean_on_grid(grid, mean_fn);
  out.eigenvalues = values.head(k);
  out.basis.resize(grid.size(), k);
  for (Index c = 0; c < k; ++c) {
    const auto& pidx = products[static_cast<std::size_t>(c)].index;
    for (Index f = 0; f < grid.size(); ++f) {
      double v = 1.0;
      for (std::size_t d = 0; d < dims; ++d)
        v *= parts[d].vectors(grid.coordinate(f, static_cast<Index>(d)), pidx[d]);
      out.basis(f, c) = v;
    }
    fix_sign(out.basis.col(c));
    out.basis.col(c) *= std::sqrt(out.eigenvalues(c));
  }
  out.energy = energy;
  return out;
}

DesignBlock gp_design_block(const GpBasis& basis, const Points& inputs) {
  const SparseMatrix interp = interpolation_matrix(basis.grid, inputs);
  DesignBlock out;
  const Matrix dense = interp * basis.basis;
  out.design = dense.sparseView(0.0, 0.0);
  out.translation = interp * basis.mean;
  return out;
}

PriorBlock gp_prior_block(const GpBasis& basis) {
  PriorBlock block;
  block.transform = SparseMatrix(basis.size(), basis.size());
  block.transform.setIdentity();
  block.mean = Vector::Zero(basis.size());
  block.var = Vector::Ones(basis.size());
  return block;
}

}  // namespace bayesgam
