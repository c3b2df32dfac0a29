#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "imblr/numerics/matrix.hpp"

namespace imblr::cli {

// Labelled dataset with header `y,x1,...,xd`.
struct Dataset {
  std::vector<int> labels;
  Matrix features;  // one row per record

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return features.cols(); }
  /// Rows whose label equals `label`, in file order.
  Matrix rows_with_label(int label) const;
};

/// Parses dataset text. `source` names the input in error messages. Throws
/// ParseError naming the missing column or the offending line.
Dataset parse_dataset(const std::string& text, const std::string& source);
Dataset read_dataset(const std::string& path);
void write_dataset(std::ostream& out, const Dataset& data);

/// Point file: a header line followed by numeric rows. When the header has a
/// `y` column only rows with y == `label` are kept and `y` is dropped.
Matrix read_points(const std::string& path, int label);

// Tabulated density: header `x,density`, strictly increasing x, density >= 0.
struct DensityTable {
  std::vector<double> x;
  std::vector<double> density;
};

DensityTable read_density_table(const std::string& path);
/// Piecewise-linear interpolant, zero outside the table, normalised so that
/// its integral is exactly one.
double interpolate(const DensityTable& table, double value);
DensityTable normalized(DensityTable table);

std::string read_file(const std::string& path);

}  // namespace imblr::cli
