#pragma once

#include <stdexcept>
#include <string>

namespace lft {

/// Malformed block structure (empty block list, non-positive multiplicity).
class StructureError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operand dimensions do not agree with each other or with a structure.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An interconnection whose defining inverse does not exist numerically.
/// `sigma_min` is the smallest singular value of the matrix that had to be
/// inverted (I - Delta*A for LFTs, I - D22*DK for feedback loops).
class IllPosedError : public std::runtime_error {
 public:
  IllPosedError(const std::string& what, double sigma_min)
      : std::runtime_error(what), sigma_min_(sigma_min) {}
  double sigma_min() const { return sigma_min_; }

 private:
  double sigma_min_;
};

/// Input outside the supported domain of an operation (e.g. D22 != 0 in a
/// synthesis entry point).
class UnsupportedError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The feasibility engine hit its iteration cap before reaching the margin
/// threshold.
class SolverTimeoutError : public std::runtime_error {
 public:
  SolverTimeoutError(const std::string& what, double best_margin)
      : std::runtime_error(what), best_margin_(best_margin) {}
  double best_margin() const { return best_margin_; }

 private:
  double best_margin_;
};

/// Controller reconstruction failed although the synthesis conditions were
/// certified: a coupling block could not be factored or the controller
/// inequality came out below the margin threshold.
class ReconstructionError : public std::runtime_error {
 public:
  ReconstructionError(const std::string& what, double margin)
      : std::runtime_error(what), margin_(margin) {}
  double margin() const { return margin_; }

 private:
  double margin_;
};

/// A JSON document that does not parse or does not match its schema.
class FormatError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace lft
