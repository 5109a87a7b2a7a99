#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string_view>
#include <utility>
#include <vector>

#include "vslkit/mvdp.hpp"

namespace vslkit::firefighters {

/// Structured Firefighters state.  Field ranges:
/// fire_intensity 0..4 (None..Severe), occupancy 0..4, equipment 0..1,
/// knowledge 0..1, condition 0..3 (Incapacitated..Perfect), floor 0..2.
struct State {
    int fire_intensity = 0;
    int occupancy = 0;
    int equipment = 0;
    int knowledge = 0;
    int condition = 0;
    int floor = 0;

    bool operator==(const State&) const = default;
};

enum class Action : int {
    EvacuateOccupants = 0,
    ContainFire,
    AggressiveFireSuppression,
    PrepareEquipment,
    UpdateKnowledge,
    GoUpstairs,
    GoDownstairs,
};

inline constexpr std::size_t kNumActions = 7;
inline constexpr std::size_t kNumStates = 5 * 5 * 2 * 2 * 4 * 3;
inline constexpr std::size_t kFeatureDim = 5 + 5 + 2 + 2 + 4 + 3 + kNumActions;
inline constexpr int kMaxFireIntensity = 4;
inline constexpr int kMaxFloor = 2;

/// Value order in the built process.
inline constexpr std::size_t kProfessionalism = 0;
inline constexpr std::size_t kProximity = 1;

std::string_view action_name(Action a);

bool is_valid(const State& s);
/// Bijection onto 0..1199.
StateId encode(const State& s);
State decode(StateId id);

/// Deterministic transition rules.
State transition(const State& s, Action a);

/// (professionalism, proximity) reward for taking `a` in `s` and landing in `next`.
/// Throws std::invalid_argument unless next == transition(s, a).
std::pair<double, double> reward(const State& s, Action a, const State& next);

/// One-hot blocks FI(5) | OC(5) | EQ(2) | KN(2) | FFC(4) | FL(3) | action(7).
std::array<double, kFeatureDim> encode_features(const State& s, Action a);

/// The full 1200-state, 7-action process with values (pf, px).
/// Initial distribution: uniform over states whose firefighter is not incapacitated.
Mvdp build_mvdp(std::size_t horizon = 50);

/// CSV dump of every transition: s-fields, action, s'-fields, r_pf, r_px.
void dump_csv(std::ostream& out);

}  // namespace vslkit::firefighters
