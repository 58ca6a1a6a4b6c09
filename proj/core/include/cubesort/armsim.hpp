#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cubesort/error.hpp"

namespace cubesort::arm {

enum class MotorId : std::uint8_t { Gripper = 0, Wrist = 1, Elbow = 2, Shoulder = 3, Base = 4 };

inline constexpr std::size_t kMotorCount = 5;
inline constexpr std::size_t kChannelCount = 16;
inline constexpr std::uint8_t kSync = 0xA5;

struct JointLimit {
  double lo;
  double hi;
};

// Degrees, except the gripper which is an opening fraction.
inline constexpr std::array<JointLimit, kMotorCount> kJointLimits{{{0.0, 1.0}, {0.0, 120.0}, {0.0, 300.0}, {0.0, 180.0}, {0.0, 270.0}}};
// Degrees per second, except the gripper (fraction per second).
inline constexpr std::array<double, kMotorCount> kMotorRates{1.0, 40.0, 40.0, 30.0, 45.0};

inline constexpr double kLink1 = 4.0;  // inches
inline constexpr double kLink2 = 4.0;
inline constexpr double kLink3 = 4.6;
inline constexpr double kBaseHeight = 2.4;
inline constexpr double kMaxReach = kLink1 + kLink2 + kLink3;
inline constexpr double kMaxPayloadGrams = 100.0;
inline constexpr double kGraspRadius = 0.5;
inline constexpr double kHoverHeight = 1.5;
inline constexpr double kSupplyVolts = 3.0;
inline constexpr double kNoLoadCurrentMilliamps = 255.0;
inline constexpr int kIntegrationStepMs = 10;

std::string_view to_string(MotorId m) noexcept;

constexpr std::uint8_t forward_channel(MotorId m) noexcept { return static_cast<std::uint8_t>(2 * static_cast<int>(m)); }
constexpr std::uint8_t reverse_channel(MotorId m) noexcept { return static_cast<std::uint8_t>(2 * static_cast<int>(m) + 1); }

struct RelayFrame {
  std::uint8_t channel = 0;
  bool on = false;

  friend bool operator==(const RelayFrame&, const RelayFrame&) = default;
};

/// Sync, channel, state, XOR of the first three. Throws BadChannel above 15.
std::array<std::uint8_t, 4> frame_encode(std::uint8_t channel, bool on);
inline std::array<std::uint8_t, 4> frame_encode(const RelayFrame& f) { return frame_encode(f.channel, f.on); }

/// Checks length (TruncatedData), sync (BadSync), checksum (BadChecksum),
/// channel (BadChannel) and finally the state byte (InvalidArgument).
RelayFrame frame_decode(std::span<const std::uint8_t> bytes);

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Vec3&, const Vec3&) = default;
};

double distance(const Vec3& a, const Vec3& b) noexcept;

using ObjectId = int;

struct ArmState {
  std::array<double, kMotorCount> joints{};
  std::array<bool, kChannelCount> relays{};
  std::optional<ObjectId> held_object;
  double elapsed = 0.0;

  double joint(MotorId m) const noexcept { return joints[static_cast<std::size_t>(m)]; }
  double& joint(MotorId m) noexcept { return joints[static_cast<std::size_t>(m)]; }
  bool any_relay_on() const noexcept;

  friend bool operator==(const ArmState&, const ArmState&) = default;
};

/// Base 135 (facing +x), shoulder 90, elbow 150, wrist 0: the chain points
/// straight up with the gripper open.
ArmState home_state() noexcept;

/// True when every joint is in range and no relay pair is double-energized.
bool state_is_safe(const ArmState& arm) noexcept;

/// Throws PairConflict (state unchanged) when energizing a relay whose partner is on.
void apply_frame(ArmState& arm, const RelayFrame& frame);

/// Integrates constant-rate motion for dt seconds, clamping at joint limits.
/// Throws InvalidArgument unless dt > 0.
void step(ArmState& arm, double dt);

Vec3 forward_kinematics(const ArmState& arm) noexcept;

struct JointTarget {
  double base = 0.0;
  double shoulder = 0.0;
  double elbow = 0.0;
  double wrist = 0.0;
};

/// Gripper pointing straight down at the target. The solution with the
/// forearm bent down (elbow < 150) is preferred when it respects the limits.
/// Throws OutOfReach, PayloadTooHeavy, YawUnreachable, InvalidArgument.
JointTarget inverse_reach(const Vec3& target, double payload_grams = 0.0);

struct TimedFrame {
  std::int64_t offset_ms = 0;
  RelayFrame frame;

  friend bool operator==(const TimedFrame&, const TimedFrame&) = default;
};

struct PickDropPlan {
  std::vector<TimedFrame> frames;
  ObjectId target_object = 0;
  int drop_zone = 0;

  std::int64_t duration_ms() const noexcept { return frames.empty() ? 0 : frames.back().offset_ms; }
};

/// Open, above, descend, close, ascend, above zone, descend, open, ascend,
/// home. Assumes the arm starts at home_state(). Errors from inverse_reach propagate.
PickDropPlan plan_pick_drop(const Vec3& object_pose, double payload_grams, const Vec3& drop_zone_pose,
                            ObjectId object_id = 0, int drop_zone = 0);

/// "offset_ms,channel,state" header then one row per frame.
std::string plan_to_csv(const PickDropPlan& plan);

/// Concatenated 4-byte frames, the wire image of a plan.
std::vector<std::uint8_t> encode_stream(std::span<const TimedFrame> frames);
/// Throws the frame_decode errors or TruncatedData for a partial frame.
std::vector<RelayFrame> decode_stream(std::span<const std::uint8_t> bytes);

struct WorldObject {
  ObjectId id = 0;
  Vec3 pose;
  double payload_grams = 0.0;

  friend bool operator==(const WorldObject&, const WorldObject&) = default;
};

struct ExecutionResult {
  ArmState arm;
  std::vector<WorldObject> world;
  std::size_t frames_applied = 0;
  std::optional<ErrorCode> error;
  std::string diagnostic;
  // held_object after each frame, in order, for trace assertions.
  std::vector<std::optional<ObjectId>> held_trace;

  bool ok() const noexcept { return !error.has_value(); }
};

/// Applies frames at their offsets with step() at no more than 10 ms per tick.
/// Energizing the gripper-close relay within 0.5" of an object grasps it; the
/// open relay releases it at the tip. A PairConflict stops execution and the
/// state at that moment is returned.
ExecutionResult execute(const PickDropPlan& plan, std::vector<WorldObject> world,
                        const ArmState& start = home_state());

}  // namespace cubesort::arm
