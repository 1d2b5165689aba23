#pragma once

#include "bayesgam/model.hpp"

#include <istream>
#include <string>
#include <vector>

namespace bayesgam::io {

/// Header row, then numeric rows. Throws EmptyData for a file without a header and
/// SchemaError for ragged rows or unparseable numbers.
DataTable read_csv(const std::string& path);
DataTable parse_csv(std::istream& in, const std::string& source = "<stream>");

/// 17 significant digits, '.' as decimal point whatever the locale.
std::string format_double(double v);

/// Writes to a temporary file next to `path`, then renames it over `path`.
void write_atomic(const std::string& path, const std::string& content);

/// CSV text of equal-length columns.
std::string format_table(const std::vector<std::string>& header, const std::vector<Vector>& columns);

}  // namespace bayesgam::io
