#pragma once

#include <utility>
#include <vector>

#include "vslkit/firefighters.hpp"

namespace fftable {

using vslkit::firefighters::Action;
using vslkit::firefighters::State;

inline std::vector<State> all_states() {
    std::vector<State> out;
    for (int fi = 0; fi < 5; ++fi)
        for (int oc = 0; oc < 5; ++oc)
            for (int eq = 0; eq < 2; ++eq)
                for (int kn = 0; kn < 2; ++kn)
                    for (int c = 0; c < 4; ++c)
                        for (int fl = 0; fl < 3; ++fl) out.push_back({fi, oc, eq, kn, c, fl});
    return out;
}

inline constexpr Action kAll[] = {Action::EvacuateOccupants, Action::ContainFire,     Action::AggressiveFireSuppression,
                                  Action::PrepareEquipment,  Action::UpdateKnowledge, Action::GoUpstairs,
                                  Action::GoDownstairs};

// Reward rows written out case by case, independently of the library.
inline std::pair<double, double> table_reward(const State& s, Action a, const State& next) {
    if (next.condition == 0) return {-1.0, -1.0};
    switch (a) {
        case Action::EvacuateOccupants:
            return s.occupancy == 0 ? std::pair{-1.0, -1.0} : std::pair{1 - 0.2 * s.fire_intensity - 0.1 * s.knowledge, 1.0};
        case Action::ContainFire:
            return s.fire_intensity == 0 ? std::pair{-1.0, -1.0} : std::pair{0.8, 0.2};
        case Action::AggressiveFireSuppression:
            if (s.fire_intensity == 0) return {-1.0, -1.0};
            return s.equipment == 0 ? std::pair{0.3, 0.5} : std::pair{0.6, 0.5};
        case Action::PrepareEquipment:
            return s.equipment == 0 ? std::pair{0.5, -0.1} : std::pair{-1.0, -1.0};
        case Action::UpdateKnowledge:
            return s.knowledge == 0 ? std::pair{1.0, -0.5} : std::pair{-1.0, -1.0};
        default:
            return {0.0, 0.0};
    }
}

}  // namespace fftable
