#include "maptrix/errors.hpp"

#include <array>
#include <utility>

namespace maptrix {

int exit_code_for(const std::string& error_name) {
  static constexpr std::array<std::pair<const char*, int>, 9> kCodes{{
      {"IngestError", 3},
      {"ValidationError", 4},
      {"GeometryError", 5},
      {"RangeError", 6},
      {"AggregationError", 7},
      {"ContiguityError", 8},
      {"SteepLeaderError", 9},
      {"ModeError", 10},
      {"DegenerateSiteError", 11},
  }};
  for (const auto& [name, code] : kCodes) {
    if (error_name == name) return code;
  }
  return 1;
}

}  // namespace maptrix
