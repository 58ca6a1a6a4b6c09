#include "cubesort/armsim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace cubesort::arm {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kLimitSlack = 1e-9;

std::size_t idx(MotorId m) noexcept { return static_cast<std::size_t>(m); }

bool in_range(MotorId m, double v) noexcept {
  const JointLimit lim = kJointLimits[idx(m)];
  return v >= lim.lo - kLimitSlack && v <= lim.hi + kLimitSlack;
}

double clamp_joint(std::size_t m, double v) noexcept {
  return std::clamp(v, kJointLimits[m].lo, kJointLimits[m].hi);
}

// Per-motor velocity sign implied by the relay pair.
int direction(const ArmState& arm, std::size_t m) noexcept {
  if (arm.relays[2 * m]) return 1;
  if (arm.relays[2 * m + 1]) return -1;
  return 0;
}

}  // namespace

std::string_view to_string(MotorId m) noexcept {
  switch (m) {
    case MotorId::Gripper: return "gripper";
    case MotorId::Wrist: return "wrist";
    case MotorId::Elbow: return "elbow";
    case MotorId::Shoulder: return "shoulder";
    case MotorId::Base: return "base";
  }
  return "?";
}

std::array<std::uint8_t, 4> frame_encode(std::uint8_t channel, bool on) {
  if (channel >= kChannelCount) throw Error(ErrorCode::BadChannel, "channel " + std::to_string(channel));
  const std::uint8_t state = on ? 0x01 : 0x00;
  return {kSync, channel, state, static_cast<std::uint8_t>(kSync ^ channel ^ state)};
}

RelayFrame frame_decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw Error(ErrorCode::TruncatedData, "relay frame needs 4 bytes");
  if (bytes[0] != kSync) throw Error(ErrorCode::BadSync, "sync byte " + std::to_string(bytes[0]));
  if ((bytes[0] ^ bytes[1] ^ bytes[2]) != bytes[3]) throw Error(ErrorCode::BadChecksum, "xor mismatch");
  if (bytes[1] >= kChannelCount) throw Error(ErrorCode::BadChannel, "channel " + std::to_string(bytes[1]));
  if (bytes[2] > 1) throw Error(ErrorCode::InvalidArgument, "state byte " + std::to_string(bytes[2]));
  return {bytes[1], bytes[2] == 1};
}

double distance(const Vec3& a, const Vec3& b) noexcept {
  return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) + (a.z - b.z) * (a.z - b.z));
}

bool ArmState::any_relay_on() const noexcept {
  return std::any_of(relays.begin(), relays.end(), [](bool r) { return r; });
}

ArmState home_state() noexcept {
  ArmState arm;
  arm.joint(MotorId::Gripper) = 1.0;
  arm.joint(MotorId::Wrist) = 0.0;
  arm.joint(MotorId::Elbow) = 150.0;
  arm.joint(MotorId::Shoulder) = 90.0;
  arm.joint(MotorId::Base) = 135.0;
  return arm;
}

bool state_is_safe(const ArmState& arm) noexcept {
  for (std::size_t m = 0; m < kMotorCount; ++m) {
    if (arm.relays[2 * m] && arm.relays[2 * m + 1]) return false;
    if (arm.joints[m] < kJointLimits[m].lo || arm.joints[m] > kJointLimits[m].hi) return false;
  }
  return true;
}

void apply_frame(ArmState& arm, const RelayFrame& frame) {
  if (frame.channel >= kChannelCount) throw Error(ErrorCode::BadChannel, "channel " + std::to_string(frame.channel));
  if (frame.channel >= 2 * kMotorCount) return;
  const std::size_t partner = frame.channel ^ 1u;
  if (frame.on && arm.relays[partner]) {
    throw Error(ErrorCode::PairConflict, "channel " + std::to_string(frame.channel) + " while channel " +
                                             std::to_string(partner) + " is on");
  }
  arm.relays[frame.channel] = frame.on;
}

void step(ArmState& arm, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "step needs dt > 0");
  for (std::size_t m = 0; m < kMotorCount; ++m) {
    const int dir = direction(arm, m);
    if (dir != 0) arm.joints[m] = clamp_joint(m, arm.joints[m] + dir * kMotorRates[m] * dt);
  }
  arm.elapsed += dt;
}

Vec3 forward_kinematics(const ArmState& arm) noexcept {
  const double yaw = (arm.joint(MotorId::Base) - 135.0) * kDeg;
  const double t1 = arm.joint(MotorId::Shoulder) * kDeg;
  const double t2 = t1 + (arm.joint(MotorId::Elbow) - 150.0) * kDeg;
  const double t3 = t2 - arm.joint(MotorId::Wrist) * kDeg;
  const double r = kLink1 * std::cos(t1) + kLink2 * std::cos(t2) + kLink3 * std::cos(t3);
  const double z = kBaseHeight + kLink1 * std::sin(t1) + kLink2 * std::sin(t2) + kLink3 * std::sin(t3);
  return {r * std::cos(yaw), r * std::sin(yaw), z};
}

JointTarget inverse_reach(const Vec3& target, double payload_grams) {
  if (!(payload_grams >= 0.0)) throw Error(ErrorCode::InvalidArgument, "payload must be >= 0");
  if (payload_grams > kMaxPayloadGrams) {
    throw Error(ErrorCode::PayloadTooHeavy, std::to_string(payload_grams) + " g exceeds 100 g");
  }
  const double r = std::hypot(target.x, target.y);
  if (r > kMaxReach) throw Error(ErrorCode::OutOfReach, "radial distance " + std::to_string(r) + " > 12.6");
  if (target.z < 0.0) throw Error(ErrorCode::OutOfReach, "target below the table");

  const double yaw = std::atan2(target.y, target.x) / kDeg;
  const double base = yaw + 135.0;
  if (!in_range(MotorId::Base, base)) {
    throw Error(ErrorCode::YawUnreachable, "yaw " + std::to_string(yaw) + " outside the 270 degree sector");
  }

  // Wrist joint sits one L3 above the tip when the gripper points down.
  const double pr = r;
  const double pz = target.z + kLink3 - kBaseHeight;
  const double d2 = pr * pr + pz * pz;
  const double c = (d2 - kLink1 * kLink1 - kLink2 * kLink2) / (2.0 * kLink1 * kLink2);
  if (c > 1.0 + 1e-12 || c < -1.0 - 1e-12) {
    throw Error(ErrorCode::OutOfReach, "no arm configuration reaches the target with a vertical gripper");
  }
  const double phi_abs = std::acos(std::clamp(c, -1.0, 1.0));

  for (const double phi : {-phi_abs, phi_abs}) {
    const double t1 = std::atan2(pz, pr) - std::atan2(kLink2 * std::sin(phi), kLink1 + kLink2 * std::cos(phi));
    const double t2 = t1 + phi;
    JointTarget jt{base, t1 / kDeg, 150.0 + phi / kDeg, t2 / kDeg + 90.0};
    if (in_range(MotorId::Shoulder, jt.shoulder) && in_range(MotorId::Elbow, jt.elbow) &&
        in_range(MotorId::Wrist, jt.wrist)) {
      jt.base = clamp_joint(idx(MotorId::Base), jt.base);
      jt.shoulder = clamp_joint(idx(MotorId::Shoulder), jt.shoulder);
      jt.elbow = clamp_joint(idx(MotorId::Elbow), jt.elbow);
      jt.wrist = clamp_joint(idx(MotorId::Wrist), jt.wrist);
      return jt;
    }
  }
  throw Error(ErrorCode::OutOfReach, "target needs joint angles outside their ranges");
}

namespace {

struct Planner {
  PickDropPlan plan;
  std::array<double, kMotorCount> expected{};
  std::int64_t now_ms = 0;

  // All listed motors start together; the phase lasts as long as the slowest.
  void move(const std::array<std::optional<double>, kMotorCount>& goal) {
    std::int64_t phase_ms = 0;
    for (std::size_t m = 0; m < kMotorCount; ++m) {
      if (!goal[m]) continue;
      const double delta = *goal[m] - expected[m];
      const auto ms = static_cast<std::int64_t>(std::llround(std::abs(delta) / kMotorRates[m] * 1000.0));
      if (ms == 0) continue;
      const auto ch = static_cast<std::uint8_t>(delta > 0 ? 2 * m : 2 * m + 1);
      plan.frames.push_back({now_ms, {ch, true}});
      plan.frames.push_back({now_ms + ms, {ch, false}});
      const double sign = delta > 0 ? 1.0 : -1.0;
      expected[m] = clamp_joint(m, expected[m] + sign * kMotorRates[m] * (static_cast<double>(ms) / 1000.0));
      phase_ms = std::max(phase_ms, ms);
    }
    now_ms += phase_ms;
  }

  void reach(const JointTarget& t) {
    std::array<std::optional<double>, kMotorCount> goal{};
    goal[idx(MotorId::Base)] = t.base;
    goal[idx(MotorId::Shoulder)] = t.shoulder;
    goal[idx(MotorId::Elbow)] = t.elbow;
    goal[idx(MotorId::Wrist)] = t.wrist;
    move(goal);
  }

  void gripper(double opening) {
    std::array<std::optional<double>, kMotorCount> goal{};
    goal[idx(MotorId::Gripper)] = opening;
    move(goal);
  }
};

Vec3 lifted(Vec3 p) noexcept {
  p.z += kHoverHeight;
  return p;
}

}  // namespace

PickDropPlan plan_pick_drop(const Vec3& object_pose, double payload_grams, const Vec3& drop_zone_pose,
                            ObjectId object_id, int drop_zone) {
  const JointTarget above_obj = inverse_reach(lifted(object_pose), payload_grams);
  const JointTarget at_obj = inverse_reach(object_pose, payload_grams);
  const JointTarget above_zone = inverse_reach(lifted(drop_zone_pose), payload_grams);
  const JointTarget at_zone = inverse_reach(drop_zone_pose, payload_grams);
  const ArmState home = home_state();
  const JointTarget home_target{home.joint(MotorId::Base), home.joint(MotorId::Shoulder), home.joint(MotorId::Elbow),
                                home.joint(MotorId::Wrist)};

  Planner p;
  p.plan.target_object = object_id;
  p.plan.drop_zone = drop_zone;
  p.expected = home.joints;
  p.gripper(1.0);
  p.reach(above_obj);
  p.reach(at_obj);
  p.gripper(0.0);
  p.reach(above_obj);
  p.reach(above_zone);
  p.reach(at_zone);
  p.gripper(1.0);
  p.reach(above_zone);
  p.reach(home_target);

  // Off before on at equal times keeps relay pairs exclusive across phases.
  std::stable_sort(p.plan.frames.begin(), p.plan.frames.end(), [](const TimedFrame& a, const TimedFrame& b) {
    if (a.offset_ms != b.offset_ms) return a.offset_ms < b.offset_ms;
    return !a.frame.on && b.frame.on;
  });
  return p.plan;
}

std::string plan_to_csv(const PickDropPlan& plan) {
  std::ostringstream os;
  os << "offset_ms,channel,state\n";
  for (const TimedFrame& f : plan.frames) {
    os << f.offset_ms << ',' << static_cast<int>(f.frame.channel) << ',' << (f.frame.on ? 1 : 0) << '\n';
  }
  return os.str();
}

std::vector<std::uint8_t> encode_stream(std::span<const TimedFrame> frames) {
  std::vector<std::uint8_t> out;
  out.reserve(frames.size() * 4);
  for (const TimedFrame& f : frames) {
    const auto bytes = frame_encode(f.frame);
    out.insert(out.end(), bytes.begin(), bytes.end());
  }
  return out;
}

std::vector<RelayFrame> decode_stream(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % 4 != 0) throw Error(ErrorCode::TruncatedData, "stream ends inside a frame");
  std::vector<RelayFrame> out;
  out.reserve(bytes.size() / 4);
  for (std::size_t i = 0; i < bytes.size(); i += 4) out.push_back(frame_decode(bytes.subspan(i, 4)));
  return out;
}

ExecutionResult execute(const PickDropPlan& plan, std::vector<WorldObject> world, const ArmState& start) {
  ExecutionResult res{start, std::move(world), 0, std::nullopt, {}, {}};
  ArmState& arm = res.arm;
  std::int64_t now = 0;

  const auto carry = [&] {
    if (!arm.held_object) return;
    const Vec3 tip = forward_kinematics(arm);
    for (WorldObject& o : res.world) {
      if (o.id == *arm.held_object) o.pose = tip;
    }
  };
  const auto advance_to = [&](std::int64_t t) {
    while (now < t) {
      const std::int64_t dt = std::min<std::int64_t>(kIntegrationStepMs, t - now);
      step(arm, static_cast<double>(dt) / 1000.0);
      now += dt;
      carry();
    }
  };

  const std::uint8_t close_ch = reverse_channel(MotorId::Gripper);
  const std::uint8_t open_ch = forward_channel(MotorId::Gripper);
  for (const TimedFrame& tf : plan.frames) {
    advance_to(tf.offset_ms);
    try {
      apply_frame(arm, tf.frame);
    } catch (const Error& e) {
      res.error = e.code();
      res.diagnostic = e.what();
      return res;
    }
    if (tf.frame.on && tf.frame.channel == close_ch && !arm.held_object) {
      const Vec3 tip = forward_kinematics(arm);
      const WorldObject* best = nullptr;
      for (const WorldObject& o : res.world) {
        const double d = distance(o.pose, tip);
        if (d <= kGraspRadius && (!best || d < distance(best->pose, tip))) best = &o;
      }
      if (best) arm.held_object = best->id;
    } else if (tf.frame.on && tf.frame.channel == open_ch && arm.held_object) {
      carry();
      arm.held_object.reset();
    }
    ++res.frames_applied;
    res.held_trace.push_back(arm.held_object);
  }
  return res;
}

}  // namespace cubesort::arm
