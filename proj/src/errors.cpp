#include "bayesgam/errors.hpp"

#include <sstream>

namespace bayesgam {

SingularPosterior::SingularPosterior(std::ptrdiff_t pivot, const std::string& detail)
    : Error("SingularPosterior: posterior precision is not positive definite at parameter " +
            std::to_string(pivot) + (detail.empty() ? "" : " (" + detail + ")")),
      pivot_(pivot) {}

namespace {
std::string describe_eigenvalue(double v) {
  std::ostringstream os;
  os << "IndefiniteCovariance: covariance matrix has eigenvalue " << v
     << " below the tolerated negative bound";
  return os.str();
}
}  // namespace

IndefiniteCovariance::IndefiniteCovariance(double min_eigenvalue)
    : Error(describe_eigenvalue(min_eigenvalue)), min_eigenvalue_(min_eigenvalue) {}

OutOfGrid::OutOfGrid(std::size_t input_index, const std::string& detail)
    : Error("OutOfGrid: input " + std::to_string(input_index) + " lies outside the grid" +
            (detail.empty() ? "" : " (" + detail + ")")),
      input_index_(input_index) {}

MissingColumn::MissingColumn(const std::string& column)
    : Error("MissingColumn: data has no column '" + column + "'"), column_(column) {}

UnknownTerm::UnknownTerm(const std::string& name) : Error("UnknownTerm: no term named '" + name + "'") {}

}  // namespace bayesgam
