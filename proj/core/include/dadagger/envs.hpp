#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "dadagger/types.hpp"

namespace dadagger {

enum class EnvKind { track, reacher };

std::string_view to_string(EnvKind kind);
/// Accepts "track" and "reacher"; anything else is a ConfigError.
EnvKind env_kind_from_string(std::string_view name);

std::size_t obs_dim(EnvKind kind);
std::size_t act_dim(EnvKind kind);
int default_horizon(EnvKind kind);

struct StepResult {
  Observation obs;
  double reward = 0.0;
  bool done = false;
  bool success = false;  // implies done
};

/// Common interface of the built-in tasks. Instances are stateful and not
/// thread-safe; use one per thread.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual EnvKind kind() const = 0;
  virtual Observation reset(std::uint64_t seed) = 0;
  /// Components are clamped to [-1, 1]. Throws UsageError once done().
  virtual StepResult step(std::span<const double> action) = 0;
  virtual Observation observe() const = 0;
  /// The scripted expert's action in the current state.
  virtual Action expert_action() const = 0;

  bool done() const { return done_; }

 protected:
  void require_running() const;
  bool started_ = false;
  bool done_ = false;
};

std::unique_ptr<Environment> make_env(EnvKind kind);

/// Expert label recovered from an observation alone. Equal to the
/// expert_action() of the state that produced `obs`.
Action query_expert(EnvKind kind, std::span<const double> obs);

// ---------------------------------------------------------------------------
// Track steering

struct TrackSpec {
  std::vector<double> curvatures;  // per step of arc, padded past `length`
  double half_width = 0.0;
  int length = 0;  // steps of arc to finish a lap
};

/// Procedural track: a short straight run-in followed by straights and
/// constant-curvature turns with |curvature| <= TrackEnv::kMaxCurvature.
TrackSpec generate_track(std::uint64_t seed);

/// Lane keeping on a procedurally generated track, in path coordinates.
///
/// The car moves at unit speed; the action is a steering command mapped to a
/// yaw rate of kMaxYawRate * action. State is (progress, lateral offset,
/// heading error). Leaving the lane (|offset| > half width) ends the episode
/// as a failure; reaching `length` completes the lap.
///
/// Observation (10): curvature at the next 8 waypoints (spaced
/// kWaypointSpacing steps apart, starting at the current position), lateral
/// offset, heading error.
class TrackEnv final : public Environment {
 public:
  static constexpr double kDt = 0.1;
  static constexpr double kSpeed = 1.0;
  static constexpr double kMaxYawRate = 1.0;
  static constexpr double kMaxCurvature = 0.5;
  static constexpr double kHalfWidth = 0.6;
  static constexpr int kLength = 250;
  static constexpr int kWaypoints = 8;
  static constexpr int kWaypointSpacing = 5;
  static constexpr std::size_t kObsDim = kWaypoints + 2;

  // Expert gains: steer = ff * curvature - kp * offset - kh * heading.
  static constexpr double kExpertFeedforward = 1.0 / kMaxYawRate;
  static constexpr double kExpertOffsetGain = 1.0;
  static constexpr double kExpertHeadingGain = 1.6;

  EnvKind kind() const override { return EnvKind::track; }
  Observation reset(std::uint64_t seed) override;
  Observation reset(TrackSpec track);
  StepResult step(std::span<const double> action) override;
  Observation observe() const override;
  Action expert_action() const override;

  /// Moves the car within the current lap; for probing specific states.
  void place(double lateral_offset, double heading_error);

  const TrackSpec& track() const { return track_; }
  int progress() const { return progress_; }
  double lateral_offset() const { return offset_; }
  double heading_error() const { return heading_; }

 private:
  double curvature_at(int step) const;

  TrackSpec track_;
  int progress_ = 0;
  double offset_ = 0.0;
  double heading_ = 0.0;
};

// ---------------------------------------------------------------------------
// Multi-joint continuous control

/// Six independent double integrators. Dimension 0 is driven forward and is
/// rewarded for its velocity; dimensions 1..5 start displaced and the expert
/// returns them to the origin. reward = v0 - 0.01 * |a|^2, and the episode
/// only ends at the horizon.
///
/// Observation (12): positions then velocities.
class ReacherEnv final : public Environment {
 public:
  static constexpr std::size_t kJoints = 6;
  static constexpr std::size_t kObsDim = 2 * kJoints;
  static constexpr double kDt = 0.1;
  static constexpr int kHorizon = 200;
  static constexpr double kTargetSpeed = 1.0;
  static constexpr double kReturnGain = 0.5;  // target v_j = -gain * p_j
  static constexpr double kExpertGain = 2.0;
  static constexpr double kControlCost = 0.01;

  EnvKind kind() const override { return EnvKind::reacher; }
  Observation reset(std::uint64_t seed) override;
  StepResult step(std::span<const double> action) override;
  Observation observe() const override;
  Action expert_action() const override;

  /// Sets positions and velocities directly.
  void place(std::span<const double> positions, std::span<const double> velocities);

  /// Episode reward of cruising at the target speed for `steps` steps with no
  /// control effort.
  static double cruise_reward(int steps) { return kTargetSpeed * steps; }

  int steps() const { return steps_; }

 private:
  std::vector<double> pos_ = std::vector<double>(kJoints, 0.0);
  std::vector<double> vel_ = std::vector<double>(kJoints, 0.0);
  int steps_ = 0;
};

}  // namespace dadagger
