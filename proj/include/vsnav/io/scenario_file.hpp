#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vsnav/sim/scenario.hpp"

namespace vsnav {

/// Parse failure with the offending line number.
class ScenarioParseError : public std::runtime_error {
 public:
  ScenarioParseError(int line, const std::string& message)
      : std::runtime_error("scenario line " + std::to_string(line) + ": " + message),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

inline std::optional<VirtualSurfacePolicy> parse_policy(const std::string& s) {
  if (s == "best_case" || s == "bestcase") return VirtualSurfacePolicy::BestCase;
  if (s == "non_traversable" || s == "nontraversable")
    return VirtualSurfacePolicy::NonTraversable;
  if (s == "traversable") return VirtualSurfacePolicy::Traversable;
  return std::nullopt;
}

// Scenario files are line-oriented "key = value" text with '#' comments.
//
//   world = trench | ramp | cliff_bypass      built-in world
//   heightfield = <res> <ox> <oy> <nx> <ny>   or an inline heightfield,
//   row = h h h ...                           followed by ny row lines
//   start = <x> <y> <yaw_deg>
//   goal = <x> <y>
//   policy = best_case | non_traversable | traversable
//   seed = <integer>
//   timeout = <seconds>
//   success = reach_goal | survive
//
// Optional tuning keys: v_max, points_per_second, sensor_height, max_step,
// max_slope_deg, noise_sigma.
inline ScenarioSpec parse_scenario_text(const std::string& text,
                                        const std::string& name = "scenario") {
  ScenarioSpec spec;
  spec.name = name;

  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  bool have_world = false, have_goal = false;
  int heightfield_rows_expected = 0;
  int heightfield_rows_seen = 0;
  double hf_res = 0;
  Vec2 hf_origin = Vec2::Zero();
  int hf_nx = 0, hf_ny = 0;
  std::vector<float> hf_heights;

  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (eq == std::string::npos)
      throw ScenarioParseError(line_no, "expected 'key = value'");

    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    std::istringstream vs(value);

    auto numbers = [&](auto&... out) {
      if (!((vs >> out) && ...))
        throw ScenarioParseError(line_no, "bad numeric value for '" + key + "'");
    };

    if (key == "world") {
      auto world = make_builtin_world(value);
      if (!world) throw ScenarioParseError(line_no, "unknown world '" + value + "'");
      spec.world = std::make_shared<WorldModel>(std::move(*world));
      have_world = true;
    } else if (key == "heightfield") {
      numbers(hf_res, hf_origin.x(), hf_origin.y(), hf_nx, hf_ny);
      if (hf_res <= 0 || hf_nx <= 0 || hf_ny <= 0)
        throw ScenarioParseError(line_no, "invalid heightfield dimensions");
      heightfield_rows_expected = hf_ny;
      hf_heights.clear();
      hf_heights.reserve(static_cast<std::size_t>(hf_nx) * hf_ny);
    } else if (key == "row") {
      if (heightfield_rows_seen >= heightfield_rows_expected)
        throw ScenarioParseError(line_no, "unexpected heightfield row");
      for (int i = 0; i < hf_nx; ++i) {
        double h;
        if (!(vs >> h))
          throw ScenarioParseError(line_no, "heightfield row needs " +
                                                std::to_string(hf_nx) + " values");
        hf_heights.push_back(static_cast<float>(h));
      }
      if (++heightfield_rows_seen == heightfield_rows_expected) {
        WorldModel w = WorldModel::from_function(
            hf_res, hf_origin, hf_nx, hf_ny, [&](double x, double y) {
              const int i = std::clamp(
                  static_cast<int>(std::floor((x - hf_origin.x()) / hf_res)), 0, hf_nx - 1);
              const int j = std::clamp(
                  static_cast<int>(std::floor((y - hf_origin.y()) / hf_res)), 0, hf_ny - 1);
              return static_cast<double>(
                  hf_heights[static_cast<std::size_t>(j) * hf_nx + i]);
            });
        spec.world = std::make_shared<WorldModel>(std::move(w));
        have_world = true;
      }
    } else if (key == "start") {
      double yaw_deg = 0.0;
      numbers(spec.start.x, spec.start.y, yaw_deg);
      spec.start.yaw = wrap_angle(deg_to_rad(yaw_deg));
    } else if (key == "goal") {
      numbers(spec.goal.x(), spec.goal.y());
      have_goal = true;
    } else if (key == "policy") {
      const auto p = parse_policy(value);
      if (!p) throw ScenarioParseError(line_no, "unknown policy '" + value + "'");
      spec.policy = *p;
    } else if (key == "seed") {
      numbers(spec.seed);
    } else if (key == "timeout") {
      numbers(spec.timeout);
      if (spec.timeout <= 0) throw ScenarioParseError(line_no, "timeout must be positive");
    } else if (key == "success") {
      if (value == "reach_goal") {
        spec.success_rule = SuccessRule::ReachGoal;
      } else if (value == "survive") {
        spec.success_rule = SuccessRule::SurviveUntilTimeout;
      } else {
        throw ScenarioParseError(line_no, "unknown success rule '" + value + "'");
      }
    } else if (key == "v_max") {
      numbers(spec.config.limits.v_max);
    } else if (key == "points_per_second") {
      numbers(spec.config.sensor.points_per_second);
    } else if (key == "sensor_height") {
      numbers(spec.config.sensor.mount_offset.z());
    } else if (key == "max_step") {
      numbers(spec.config.fatality.max_step);
    } else if (key == "max_slope_deg") {
      double deg;
      numbers(deg);
      spec.config.fatality.max_slope = deg_to_rad(deg);
    } else if (key == "noise_sigma") {
      numbers(spec.config.sensor.noise_sigma);
    } else {
      throw ScenarioParseError(line_no, "unknown key '" + key + "'");
    }
  }

  if (heightfield_rows_seen != heightfield_rows_expected)
    throw ScenarioParseError(line_no, "heightfield rows missing");
  if (!have_world) throw ScenarioParseError(line_no, "scenario needs a world");
  if (!have_goal) throw ScenarioParseError(line_no, "scenario needs a goal");
  return spec;
}

inline ScenarioSpec load_scenario_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open scenario file: " + path);
  std::ostringstream buffer;
  buffer << f.rdbuf();
  auto name = path;
  const auto slash = name.find_last_of('/');
  if (slash != std::string::npos) name.erase(0, slash + 1);
  const auto dot = name.find_last_of('.');
  if (dot != std::string::npos) name.erase(dot);
  return parse_scenario_text(buffer.str(), name);
}

}  // namespace vsnav
