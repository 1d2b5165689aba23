#include "bayesgam/localbasis.hpp"

#include "bayesgam/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bayesgam {

namespace {

Vector broadcast_std(const Vector& std, Index rows, const char* what) {
  Vector out;
  if (std.size() == 1) {
    out = Vector::Constant(rows, std(0));
  } else if (std.size() == rows) {
    out = std;
  } else {
    std::ostringstream os;
    os << what << ": expected 1 or " << rows << " standard deviations, got " << std.size();
    throw InvalidArgument(os.str());
  }
  if (!(out.array() > 0.0).all() || !out.allFinite())
    throw NonPositiveStd(std::string("NonPositiveStd: ") + what + " standard deviations must be positive");
  return out;
}

double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

void require_axis(const Grid& grid, Index axis) {
  if (axis < 0 || axis >= grid.dims()) throw InvalidArgument("axis index out of range");
}

// Flat indices of the first knot of every 1-D line along `axis`.
std::vector<Index> line_starts(const Grid& grid, Index axis) {
  std::vector<Index> starts;
  for (Index f = 0; f < grid.size(); ++f)
    if (grid.coordinate(f, axis) == 0) starts.push_back(f);
  return starts;
}

}  // namespace

Grid::Grid(std::vector<std::vector<double>> axes) : axes_(std::move(axes)) {
  if (axes_.empty()) throw InvalidArgument("grid needs at least one axis");
  for (const auto& a : axes_) {
    if (a.size() < 2) throw InvalidArgument("every grid axis needs at least 2 knots");
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!std::isfinite(a[i])) throw InvalidArgument("grid knots must be finite");
      if (i > 0 && !(a[i] > a[i - 1])) throw InvalidArgument("grid knots must be strictly increasing");
    }
  }
  strides_.assign(axes_.size(), 1);
  for (std::size_t d = axes_.size() - 1; d-- > 0;)
    strides_[d] = strides_[d + 1] * static_cast<Index>(axes_[d + 1].size());
  size_ = strides_[0] * static_cast<Index>(axes_[0].size());
}

Grid Grid::uniform(double lo, double hi, Index count) {
  if (count < 2 || !(hi > lo)) throw InvalidArgument("uniform grid needs count >= 2 and hi > lo");
  std::vector<double> knots(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i)
    knots[static_cast<std::size_t>(i)] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  knots.back() = hi;
  return Grid({std::move(knots)});
}

Points Grid::knots() const {
  Points pts(size_, dims());
  for (Index f = 0; f < size_; ++f)
    for (Index d = 0; d < dims(); ++d) pts(f, d) = axis(d)[static_cast<std::size_t>(coordinate(f, d))];
  return pts;
}

void PriorBlock::validate() const {
  if (mean.size() != transform.rows() || var.size() != transform.rows())
    throw InvalidArgument("prior block mean/var length does not match its rows");
  if (!(var.array() > 0.0).all()) throw InvalidArgument("prior block variances must be positive");
}

PriorBlock DifferenceOperator::prior_block() const {
  return PriorBlock{rows, Vector::Zero(rows.rows()), prior_std.array().square().matrix()};
}

SparseMatrix interpolation_matrix(const Grid& grid, const Points& inputs) {
  const Index dims = grid.dims();
  if (inputs.cols() != dims && inputs.rows() > 0) throw InvalidArgument("input dimension does not match grid");
  const Index corners = Index{1} << dims;
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(inputs.rows() * corners));
  std::vector<Index> cell(static_cast<std::size_t>(dims));
  std::vector<double> frac(static_cast<std::size_t>(dims));

  for (Index r = 0; r < inputs.rows(); ++r) {
    for (Index d = 0; d < dims; ++d) {
      const auto& knots = grid.axis(d);
      const double x = inputs(r, d);
      const double lo = knots.front();
      const double hi = knots.back();
      const double slack = 1e-12 * (hi - lo);
      if (!(x >= lo - slack && x <= hi + slack)) {
        std::ostringstream os;
        os << "coordinate " << d << " = " << x << " not in [" << lo << ", " << hi << "]";
        throw OutOfGrid(static_cast<std::size_t>(r), os.str());
      }
      auto it = std::upper_bound(knots.begin(), knots.end(), x);
      Index j = static_cast<Index>(it - knots.begin()) - 1;
      j = std::clamp<Index>(j, 0, static_cast<Index>(knots.size()) - 2);
      const auto uj = static_cast<std::size_t>(j);
      const double t = (x - knots[uj]) / (knots[uj + 1] - knots[uj]);
      cell[static_cast<std::size_t>(d)] = j;
      frac[static_cast<std::size_t>(d)] = std::clamp(t, 0.0, 1.0);
    }
    for (Index c = 0; c < corners; ++c) {
      double w = 1.0;
      Index flat = 0;
      for (Index d = 0; d < dims; ++d) {
        const bool upper = (c >> d) & 1;
        const auto ud = static_cast<std::size_t>(d);
        w *= upper ? frac[ud] : 1.0 - frac[ud];
        flat += (cell[ud] + (upper ? 1 : 0)) * grid.stride(d);
      }
      if (w != 0.0) trips.emplace_back(r, flat, w);
    }
  }
  SparseMatrix a(inputs.rows(), grid.size());
  a.setFromTriplets(trips.begin(), trips.end());
  return a;
}

Index difference_row_count(const Grid& grid, Index axis, int order) {
  require_axis(grid, axis);
  const Index n = grid.axis_length(axis);
  if (order < 1) throw InvalidArgument("difference order must be at least 1");
  if (n <= order) {
    std::ostringstream os;
    os << "OrderTooHigh: order " << order << " needs more than " << order << " knots along axis " << axis
       << ", grid has " << n;
    throw OrderTooHigh(os.str());
  }
  return (n - order) * (grid.size() / n);
}

DifferenceOperator difference_operator(const Grid& grid, Index axis, int order, const Vector& prior_std) {
  const Index rows = difference_row_count(grid, axis, order);
  const Index n = grid.axis_length(axis);
  const Index stride = grid.stride(axis);

  std::vector<double> stencil(static_cast<std::size_t>(order) + 1);
  for (int j = 0; j <= order; ++j) stencil[static_cast<std::size_t>(j)] = ((j % 2 == 0) ? -1.0 : 1.0) * binomial(order, j);

  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(rows * (order + 1)));
  Index r = 0;
  for (Index f = 0; f < grid.size(); ++f) {
    if (grid.coordinate(f, axis) > n - 1 - order) continue;
    for (int j = 0; j <= order; ++j) trips.emplace_back(r, f + j * stride, stencil[static_cast<std::size_t>(j)]);
    ++r;
  }
  DifferenceOperator op;
  op.order = order;
  op.axis = axis;
  op.rows = SparseMatrix(rows, grid.size());
  op.rows.setFromTriplets(trips.begin(), trips.end());
  op.prior_std = broadcast_std(prior_std, rows, "difference prior");
  return op;
}

DifferenceOperator difference_operator(const Grid& grid, Index axis, int order, double prior_std) {
  return difference_operator(grid, axis, order, Vector::Constant(1, prior_std));
}

Vector spatial_std_profile(const Grid& grid, Index axis, int order, const PointFunction& std_fn) {
  const Index rows = difference_row_count(grid, axis, order);
  const Index n = grid.axis_length(axis);
  const auto& knots = grid.axis(axis);
  Vector out(rows);
  std::vector<double> point(static_cast<std::size_t>(grid.dims()));
  Index r = 0;
  for (Index f = 0; f < grid.size(); ++f) {
    const Index p = grid.coordinate(f, axis);
    if (p > n - 1 - order) continue;
    for (Index d = 0; d < grid.dims(); ++d)
      point[static_cast<std::size_t>(d)] = grid.axis(d)[static_cast<std::size_t>(grid.coordinate(f, d))];
    const auto lo = static_cast<std::size_t>(p + order / 2);
    const auto hi = static_cast<std::size_t>(p + (order + 1) / 2);
    point[static_cast<std::size_t>(axis)] = 0.5 * (knots[lo] + knots[hi]);
    const double s = std_fn(point);
    if (!(s > 0.0) || !std::isfinite(s)) {
      std::ostringstream os;
      os << "NonPositiveStd: std profile gave " << s << " at row " << r;
      throw NonPositiveStd(os.str());
    }
    out(r++) = s;
  }
  return out;
}

PriorBlock periodic_rows(const std::vector<double>& knots, int match_derivatives, const Vector& prior_std) {
  if (match_derivatives != 0 && match_derivatives != 1)
    throw InvalidArgument("match_derivatives must be 0 or 1");
  const Index n = static_cast<Index>(knots.size());
  if (n < 2 || (match_derivatives == 1 && n < 3))
    throw InvalidArgument("periodic rows need at least 2 knots (3 when matching derivatives)");
  const Index rows = 1 + match_derivatives;
  const int last = static_cast<int>(n - 1);
  std::vector<Triplet> trips{{0, 0, -1.0}, {0, last, 1.0}};
  if (match_derivatives == 1) {
    trips.insert(trips.end(), {{1, 0, 1.0}, {1, 1, -1.0}, {1, last - 1, -1.0}, {1, last, 1.0}});
  }
  PriorBlock block;
  block.transform = SparseMatrix(rows, n);
  block.transform.setFromTriplets(trips.begin(), trips.end());
  block.mean = Vector::Zero(rows);
  block.var = broadcast_std(prior_std, rows, "periodic prior").array().square();
  return block;
}

PriorBlock symmetry_rows(const std::vector<double>& knots, double axis_of_symmetry, const Vector& prior_std) {
  if (knots.size() < 2) throw InvalidArgument("symmetry rows need at least 2 knots");
  const double tol = 1e-9 * std::max(1.0, knots.back() - knots.front());
  std::vector<std::pair<Index, Index>> pairs;
  for (std::size_t i = 0; i < knots.size(); ++i) {
    const double target = 2.0 * axis_of_symmetry - knots[i];
    if (!(target > knots[i] + tol)) continue;
    auto it = std::lower_bound(knots.begin(), knots.end(), target - tol);
    if (it != knots.end() && std::abs(*it - target) <= tol)
      pairs.emplace_back(static_cast<Index>(i), static_cast<Index>(it - knots.begin()));
  }
  if (pairs.empty()) {
    std::ostringstream os;
    os << "NoMirrorPairs: no knot pair is mirrored about " << axis_of_symmetry;
    throw NoMirrorPairs(os.str());
  }
  // innermost pair first
  std::reverse(pairs.begin(), pairs.end());
  const Index rows = static_cast<Index>(pairs.size());
  std::vector<Triplet> trips;
  for (Index r = 0; r < rows; ++r) {
    trips.emplace_back(r, pairs[static_cast<std::size_t>(r)].first, -1.0);
    trips.emplace_back(r, pairs[static_cast<std::size_t>(r)].second, 1.0);
  }
  PriorBlock block;
  block.transform = SparseMatrix(rows, static_cast<Index>(knots.size()));
  block.transform.setFromTriplets(trips.begin(), trips.end());
  block.mean = Vector::Zero(rows);
  block.var = broadcast_std(prior_std, rows, "symmetry prior").array().square();
  return block;
}

PriorBlock lift_to_grid(const PriorBlock& line_block, const Grid& grid, Index axis) {
  require_axis(grid, axis);
  if (line_block.cols() != grid.axis_length(axis))
    throw InvalidArgument("line prior block width does not match the grid axis length");
  if (grid.dims() == 1) return line_block;
  const auto starts = line_starts(grid, axis);
  const Index stride = grid.stride(axis);
  const Index per_line = line_block.rows();
  const Index rows = per_line * static_cast<Index>(starts.size());
  const SparseMatrix row_major = line_block.transform;  // column iteration below
  std::vector<Triplet> trips;
  PriorBlock out;
  out.mean.resize(rows);
  out.var.resize(rows);
  for (std::size_t l = 0; l < starts.size(); ++l) {
    const Index base = static_cast<Index>(l) * per_line;
    for (Index c = 0; c < row_major.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(row_major, c); it; ++it)
        trips.emplace_back(base + it.row(), starts[l] + c * stride, it.value());
    out.mean.segment(base, per_line) = line_block.mean;
    out.var.segment(base, per_line) = line_block.var;
  }
  out.transform = SparseMatrix(rows, grid.size());
  out.transform.setFromTriplets(trips.begin(), trips.end());
  return out;
}

PriorBlock identifiability_prior(Index term_size, const Identifiability& mode) {
  if (term_size < 1) throw InvalidArgument("identifiability prior needs a non-empty term");
  PriorBlock block;
  if (const auto* per = std::get_if<PerTermMean>(&mode)) {
    if (!(per->var > 0.0)) throw InvalidArgument("identifiability variance must be positive");
    block.transform = SparseMatrix(term_size, term_size);
    block.transform.setIdentity();
    block.mean = Vector::Constant(term_size, per->mean);
    block.var = Vector::Constant(term_size, per->var);
  } else {
    const auto& shared = std::get<SharedMean>(mode);
    if (!(shared.var > 0.0)) throw InvalidArgument("identifiability variance must be positive");
    std::vector<Triplet> trips;
    for (Index i = 0; i < term_size; ++i) {
      trips.emplace_back(i, i, 1.0);
      trips.emplace_back(i, term_size, -1.0);
    }
    block.transform = SparseMatrix(term_size, term_size + 1);
    block.transform.setFromTriplets(trips.begin(), trips.end());
    block.mean = Vector::Zero(term_size);
    block.var = Vector::Constant(term_size, shared.var);
  }
  return block;
}

}  // namespace bayesgam
