#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace maptrix {

/// Base of every error the library raises. `name()` is the stable,
/// machine-readable code used by the CLI exit mapping and the HTTP service.
class Error : public std::runtime_error {
 public:
  Error(std::string name, const std::string& what)
      : std::runtime_error(what), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class IngestError : public Error {
 public:
  IngestError(const std::string& what, std::vector<std::string> unmatched = {})
      : Error("IngestError", what), unmatched_(std::move(unmatched)) {}
  const std::vector<std::string>& unmatched_ids() const { return unmatched_; }

 private:
  std::vector<std::string> unmatched_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error("ValidationError", what) {}
};

class GeometryError : public Error {
 public:
  explicit GeometryError(const std::string& what) : Error("GeometryError", what) {}
};

class AggregationError : public Error {
 public:
  explicit AggregationError(const std::string& what) : Error("AggregationError", what) {}
};

class ContiguityError : public Error {
 public:
  explicit ContiguityError(const std::string& what) : Error("ContiguityError", what) {}
};

class RangeError : public Error {
 public:
  explicit RangeError(const std::string& what) : Error("RangeError", what) {}
};

class DegenerateSiteError : public Error {
 public:
  explicit DegenerateSiteError(const std::string& what) : Error("DegenerateSiteError", what) {}
};

class ModeError : public Error {
 public:
  explicit ModeError(const std::string& what) : Error("ModeError", what) {}
};

/// A leader cannot reach its port with the configured diagonal gradient.
/// Carries the smallest gradient that would make the route feasible.
class SteepLeaderError : public Error {
 public:
  SteepLeaderError(const std::string& what, double min_k)
      : Error("SteepLeaderError", what), min_k_(min_k) {}
  double min_k() const noexcept { return min_k_; }

 private:
  double min_k_;
};

/// Process exit code for a library error name; 1 for anything unknown.
int exit_code_for(const std::string& error_name);

}  // namespace maptrix
