#pragma once

#include "maptrix/flow_model.hpp"

#include <fstream>
#include <sstream>
#include <string>

namespace testing {

inline maptrix::Polygon square(double x, double y, double s) {
  return {{x, y}, {x + s, y}, {x + s, y + s}, {x, y + s}};
}

inline maptrix::Region square_region(const std::string& id, double x, double y, double s) {
  return maptrix::make_region(id, id, square(x, y, s));
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::string data_path(const std::string& rel) { return std::string(MAPTRIX_DATA_DIR) + "/" + rel; }

inline maptrix::FlowDataset load_fixture(const std::string& name) {
  std::ifstream flows(data_path(name + "/flows.csv"));
  std::ifstream bounds(data_path(name + "/boundaries.geojson"));
  return maptrix::load_dataset(flows, bounds, maptrix::Projection{});
}

/// One-feature-per-id FeatureCollection of unit squares in a row.
inline std::string square_features(const std::vector<std::string>& ids) {
  std::string out = R"({"type":"FeatureCollection","features":[)";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const double x = double(i);
    std::ostringstream f;
    f << (i ? "," : "") << R"({"type":"Feature","properties":{"id":")" << ids[i]
      << R"("},"geometry":{"type":"Polygon","coordinates":[[[)" << x << ",0],[" << x + 1 << ",0],[" << x + 1
      << ",1],[" << x << ",1],[" << x << ",0]]]}}";
    out += f.str();
  }
  return out + "]}";
}

}  // namespace testing
