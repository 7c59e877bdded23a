#include "spinal/functional.hpp"

#include <algorithm>
#include <sstream>

namespace spinal {

int TypePath::type_at(double s) const {
  const auto it = std::upper_bound(times.begin(), times.end(), s);
  const auto i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - times.begin()) - 1));
  return types[i];
}

Functional Functional::constant_one() { return Functional{}; }

Functional Functional::type_at_times(std::vector<std::pair<double, int>> checkpoints) {
  Functional f;
  f.kind_ = Kind::TypeAtTimes;
  f.checkpoints_ = std::move(checkpoints);
  return f;
}

Functional Functional::occupation_time(int type) {
  Functional f;
  f.kind_ = Kind::OccupationTime;
  f.type_ = type;
  return f;
}

Functional Functional::final_type(int type) {
  Functional f;
  f.kind_ = Kind::FinalType;
  f.type_ = type;
  return f;
}

Functional Functional::type_change_count(int cap) {
  if (cap < 1) throw ModelError("type-change cap must be positive");
  Functional f;
  f.kind_ = Kind::TypeChangeCount;
  f.cap_ = cap;
  return f;
}

Functional Functional::composition_probe(int coordinate, double time) {
  Functional f;
  f.kind_ = Kind::CompositionProbe;
  f.type_ = coordinate;
  f.time_ = time;
  return f;
}

double Functional::bound() const { return kind_ == Kind::TypeChangeCount ? double(cap_) : 1.0; }

double Functional::evaluate(const TypePath& path, const CompositionTrack* track) const {
  switch (kind_) {
    case Kind::ConstantOne:
      return 1.0;
    case Kind::TypeAtTimes:
      for (const auto& [s, x] : checkpoints_)
        if (path.type_at(s) != x) return 0.0;
      return 1.0;
    case Kind::OccupationTime: {
      if (path.horizon <= 0.0) return path.types.front() == type_ ? 1.0 : 0.0;
      double occ = 0.0;
      for (std::size_t i = 0; i < path.types.size(); ++i) {
        if (path.types[i] != type_) continue;
        const double end = i + 1 < path.times.size() ? path.times[i + 1] : path.horizon;
        occ += end - path.times[i];
      }
      return std::clamp(occ / path.horizon, 0.0, 1.0);
    }
    case Kind::FinalType:
      return path.final_type() == type_ ? 1.0 : 0.0;
    case Kind::TypeChangeCount:
      return double(std::min(path.changes(), cap_));
    case Kind::CompositionProbe:
      if (!track) throw ModelError("composition probe needs a composition track");
      return track->coordinate(type_, time_);
  }
  return 0.0;
}

namespace {

double parse_number(const std::string& s, const std::string& spec) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ModelError("bad number '" + s + "' in functional '" + spec + "'");
}

}  // namespace

Functional Functional::parse(const std::string& spec, const TypeSpace& types) {
  const auto colon = spec.find(':');
  const std::string head = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? std::string{} : spec.substr(colon + 1);
  if (head == "one" && arg.empty()) return constant_one();
  if (head == "final-type") return final_type(types.index_of(arg));
  if (head == "occupation") return occupation_time(types.index_of(arg));
  if (head == "changes") return type_change_count(static_cast<int>(parse_number(arg, spec)));
  if (head == "probe") {
    const auto at = arg.find('@');
    if (at == std::string::npos) throw ModelError("probe functional needs TYPE@TIME");
    return composition_probe(types.index_of(arg.substr(0, at)), parse_number(arg.substr(at + 1), spec));
  }
  if (head == "type-at-times") {
    std::vector<std::pair<double, int>> cps;
    std::stringstream ss(arg);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ModelError("type-at-times entries must be TIME=TYPE");
      cps.emplace_back(parse_number(item.substr(0, eq), spec), types.index_of(item.substr(eq + 1)));
    }
    if (cps.empty()) throw ModelError("type-at-times needs at least one TIME=TYPE entry");
    return type_at_times(std::move(cps));
  }
  throw ModelError("unknown functional '" + spec + "'");
}

std::string Functional::describe(const TypeSpace& types) const {
  std::ostringstream out;
  auto name = [&](int x) { return types.names[static_cast<std::size_t>(x)]; };
  switch (kind_) {
    case Kind::ConstantOne:
      out << "one";
      break;
    case Kind::TypeAtTimes:
      out << "type-at-times:";
      for (std::size_t i = 0; i < checkpoints_.size(); ++i)
        out << (i ? "," : "") << checkpoints_[i].first << "=" << name(checkpoints_[i].second);
      break;
    case Kind::OccupationTime:
      out << "occupation:" << name(type_);
      break;
    case Kind::FinalType:
      out << "final-type:" << name(type_);
      break;
    case Kind::TypeChangeCount:
      out << "changes:" << cap_;
      break;
    case Kind::CompositionProbe:
      out << "probe:" << name(type_) << "@" << time_;
      break;
  }
  return out.str();
}

}  // namespace spinal
