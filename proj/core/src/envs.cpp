#include "dadagger/envs.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dadagger/error.hpp"
#include "dadagger/random.hpp"

namespace dadagger {

namespace {

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

void check_obs(EnvKind kind, std::span<const double> obs) {
  if (obs.size() != obs_dim(kind)) {
    throw InputError(std::string(to_string(kind)) + " observation needs " +
                     std::to_string(obs_dim(kind)) + " components, got " +
                     std::to_string(obs.size()));
  }
  for (double v : obs) {
    if (!std::isfinite(v)) throw InputError("observation has a non-finite component");
  }
}

void check_action(EnvKind kind, std::span<const double> action) {
  if (action.size() != act_dim(kind)) {
    throw InputError(std::string(to_string(kind)) + " action needs " +
                     std::to_string(act_dim(kind)) + " components, got " +
                     std::to_string(action.size()));
  }
}

}  // namespace

std::string_view to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::track: return "track";
    case EnvKind::reacher: return "reacher";
  }
  return "?";
}

EnvKind env_kind_from_string(std::string_view name) {
  if (name == "track") return EnvKind::track;
  if (name == "reacher") return EnvKind::reacher;
  throw ConfigError("unknown env_kind '" + std::string(name) +
                    "' (expected \"track\" or \"reacher\")");
}

std::size_t obs_dim(EnvKind kind) {
  return kind == EnvKind::track ? TrackEnv::kObsDim : ReacherEnv::kObsDim;
}

std::size_t act_dim(EnvKind kind) {
  return kind == EnvKind::track ? 1 : ReacherEnv::kJoints;
}

int default_horizon(EnvKind kind) {
  return kind == EnvKind::track ? 300 : ReacherEnv::kHorizon;
}

void Environment::require_running() const {
  if (!started_) throw UsageError("step() called before reset()");
  if (done_) throw UsageError("step() called on a finished episode; call reset()");
}

std::unique_ptr<Environment> make_env(EnvKind kind) {
  if (kind == EnvKind::track) return std::make_unique<TrackEnv>();
  return std::make_unique<ReacherEnv>();
}

Action query_expert(EnvKind kind, std::span<const double> obs) {
  check_obs(kind, obs);
  if (kind == EnvKind::track) {
    const double curvature = obs[0];
    const double offset = obs[TrackEnv::kWaypoints];
    const double heading = obs[TrackEnv::kWaypoints + 1];
    return {clamp_unit(TrackEnv::kExpertFeedforward * curvature -
                       TrackEnv::kExpertOffsetGain * offset -
                       TrackEnv::kExpertHeadingGain * heading)};
  }
  Action a(ReacherEnv::kJoints);
  for (std::size_t j = 0; j < ReacherEnv::kJoints; ++j) {
    const double p = obs[j];
    const double v = obs[ReacherEnv::kJoints + j];
    const double target =
        j == 0 ? ReacherEnv::kTargetSpeed : -ReacherEnv::kReturnGain * p;
    a[j] = clamp_unit(ReacherEnv::kExpertGain * (target - v));
  }
  return a;
}

// ---------------------------------------------------------------------------

TrackSpec generate_track(std::uint64_t seed) {
  Rng rng(mix_seed({seed, 0x7ac}));
  TrackSpec t;
  t.half_width = TrackEnv::kHalfWidth;
  t.length = TrackEnv::kLength;
  const std::size_t total = static_cast<std::size_t>(
      t.length + TrackEnv::kWaypoints * TrackEnv::kWaypointSpacing + 1);
  t.curvatures.assign(10, 0.0);
  while (t.curvatures.size() < total) {
    const std::size_t len = 15 + rng.below(36);
    double k = 0.0;
    if (!rng.bernoulli(0.3)) {
      const double mag = rng.uniform(0.15, TrackEnv::kMaxCurvature);
      k = rng.bernoulli(0.5) ? mag : -mag;
    }
    t.curvatures.insert(t.curvatures.end(), len, k);
  }
  t.curvatures.resize(total);
  return t;
}

Observation TrackEnv::reset(std::uint64_t seed) { return reset(generate_track(seed)); }

Observation TrackEnv::reset(TrackSpec track) {
  if (track.length < 1 || !(track.half_width > 0.0) || track.curvatures.empty()) {
    throw ConfigError("invalid track spec");
  }
  track_ = std::move(track);
  progress_ = 0;
  offset_ = 0.0;
  heading_ = 0.0;
  started_ = true;
  done_ = false;
  return observe();
}

double TrackEnv::curvature_at(int step) const {
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(std::max(step, 0)),
                                       track_.curvatures.size() - 1);
  return track_.curvatures[i];
}

Observation TrackEnv::observe() const {
  Observation o(kObsDim);
  for (int w = 0; w < kWaypoints; ++w) {
    o[static_cast<std::size_t>(w)] = curvature_at(progress_ + w * kWaypointSpacing);
  }
  o[kWaypoints] = offset_;
  o[kWaypoints + 1] = heading_;
  return o;
}

Action TrackEnv::expert_action() const { return query_expert(EnvKind::track, observe()); }

void TrackEnv::place(double lateral_offset, double heading_error) {
  offset_ = lateral_offset;
  heading_ = heading_error;
}

StepResult TrackEnv::step(std::span<const double> action) {
  require_running();
  check_action(EnvKind::track, action);
  const double steer = clamp_unit(action[0]);
  heading_ += (kMaxYawRate * steer - curvature_at(progress_) * kSpeed) * kDt;
  offset_ += kSpeed * std::sin(heading_) * kDt;
  ++progress_;

  StepResult r;
  if (std::abs(offset_) > track_.half_width) {
    done_ = true;
    r.reward = 0.0;
  } else {
    r.reward = 1.0;
    if (progress_ >= track_.length) {
      done_ = true;
      r.success = true;
    }
  }
  r.done = done_;
  r.obs = observe();
  return r;
}

// ---------------------------------------------------------------------------

Observation ReacherEnv::reset(std::uint64_t seed) {
  Rng rng(mix_seed({seed, 0x4ea}));
  std::fill(vel_.begin(), vel_.end(), 0.0);
  pos_[0] = 0.0;
  for (std::size_t j = 1; j < kJoints; ++j) pos_[j] = rng.uniform(-1.0, 1.0);
  steps_ = 0;
  started_ = true;
  done_ = false;
  return observe();
}

void ReacherEnv::place(std::span<const double> positions,
                       std::span<const double> velocities) {
  if (positions.size() != kJoints || velocities.size() != kJoints) {
    throw InputError("reacher state needs 6 positions and 6 velocities");
  }
  std::copy(positions.begin(), positions.end(), pos_.begin());
  std::copy(velocities.begin(), velocities.end(), vel_.begin());
}

Observation ReacherEnv::observe() const {
  Observation o(kObsDim);
  std::copy(pos_.begin(), pos_.end(), o.begin());
  std::copy(vel_.begin(), vel_.end(), o.begin() + kJoints);
  return o;
}

Action ReacherEnv::expert_action() const {
  return query_expert(EnvKind::reacher, observe());
}

StepResult ReacherEnv::step(std::span<const double> action) {
  require_running();
  check_action(EnvKind::reacher, action);
  double effort = 0.0;
  for (std::size_t j = 0; j < kJoints; ++j) {
    const double a = clamp_unit(action[j]);
    effort += a * a;
    pos_[j] += vel_[j] * kDt;
    vel_[j] += a * kDt;
  }
  ++steps_;
  StepResult r;
  r.reward = vel_[0] - kControlCost * effort;
  if (steps_ >= kHorizon) {
    done_ = true;
    r.success = true;
  }
  r.done = done_;
  r.obs = observe();
  return r;
}

}  // namespace dadagger
