#pragma once

#include <string>
#include <utility>
#include <vector>

#include "spinal/model.hpp"

namespace spinal {

// Piecewise-constant type trajectory on [0, horizon]. types[i] holds on
// [times[i], times[i+1]); times[0] == 0. Right-continuous at jumps.
struct TypePath {
  std::vector<double> times;
  std::vector<int> types;
  double horizon = 0.0;

  void reset(int type0, double T) {
    times.assign(1, 0.0);
    types.assign(1, type0);
    horizon = T;
  }
  void jump(double s, int type) {
    if (type == types.back()) return;
    times.push_back(s);
    types.push_back(type);
  }
  int type_at(double s) const;
  int final_type() const { return types.back(); }
  int changes() const { return static_cast<int>(types.size()) - 1; }
};

// Population composition along a path, normalized by the capacity (or the
// deterministic limit itself).
class CompositionTrack {
 public:
  virtual ~CompositionTrack() = default;
  virtual double coordinate(int x, double s) const = 0;
};

class Functional {
 public:
  enum class Kind { ConstantOne, TypeAtTimes, OccupationTime, FinalType, TypeChangeCount, CompositionProbe };

  static Functional constant_one();
  // Indicator that the type at each listed time equals the listed type.
  static Functional type_at_times(std::vector<std::pair<double, int>> checkpoints);
  // Fraction of [0, horizon] spent in `type`.
  static Functional occupation_time(int type);
  static Functional final_type(int type);
  // min(number of type changes, cap).
  static Functional type_change_count(int cap);
  // Normalized composition coordinate at `time`.
  static Functional composition_probe(int coordinate, double time);

  // Parses "one", "final-type:B", "type-at-times:1.5=A,3=B", "occupation:A",
  // "changes:10", "probe:A@1.5".
  static Functional parse(const std::string& spec, const TypeSpace& types);

  double evaluate(const TypePath& path, const CompositionTrack* track) const;

  Kind kind() const { return kind_; }
  double bound() const;
  // Lipschitz constant in the composition argument.
  double lipschitz() const { return kind_ == Kind::CompositionProbe ? 1.0 : 0.0; }
  bool needs_composition() const { return kind_ == Kind::CompositionProbe; }
  std::string describe(const TypeSpace& types) const;

 private:
  Kind kind_ = Kind::ConstantOne;
  int type_ = 0;
  int cap_ = 0;
  double time_ = 0.0;
  std::vector<std::pair<double, int>> checkpoints_;
};

}  // namespace spinal
