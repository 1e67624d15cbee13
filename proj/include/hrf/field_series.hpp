#pragma once

#include <string>
#include <vector>

#include "hrf/grid_field.hpp"

namespace hrf {

/// Fields of a time-dependent solution at increasing output times, with the
/// total mass integral u dmu(g(t)) at each time.
struct FieldSeries {
  std::vector<double> times;
  std::vector<GridField> fields;
  std::vector<double> masses;
  std::vector<std::string> warnings;

  std::size_t size() const { return times.size(); }
};

}  // namespace hrf
