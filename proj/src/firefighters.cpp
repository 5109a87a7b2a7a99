#include "vslkit/firefighters.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

namespace vslkit::firefighters {

namespace {

// Mixed-radix layout, fire intensity most significant.
constexpr std::array<int, 6> kRadix{5, 5, 2, 2, 4, 3};

std::array<int, 6> fields(const State& s) {
    return {s.fire_intensity, s.occupancy, s.equipment, s.knowledge, s.condition, s.floor};
}

}  // namespace

std::string_view action_name(Action a) {
    switch (a) {
        case Action::EvacuateOccupants: return "EvacuateOccupants";
        case Action::ContainFire: return "ContainFire";
        case Action::AggressiveFireSuppression: return "AggressiveFireSuppression";
        case Action::PrepareEquipment: return "PrepareEquipment";
        case Action::UpdateKnowledge: return "UpdateKnowledge";
        case Action::GoUpstairs: return "GoUpstairs";
        case Action::GoDownstairs: return "GoDownstairs";
    }
    return "?";
}

bool is_valid(const State& s) {
    auto f = fields(s);
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f[i] < 0 || f[i] >= kRadix[i]) return false;
    return true;
}

StateId encode(const State& s) {
    if (!is_valid(s)) throw std::out_of_range("firefighters::encode: field out of range");
    int id = 0;
    auto f = fields(s);
    for (std::size_t i = 0; i < f.size(); ++i) id = id * kRadix[i] + f[i];
    return id;
}

State decode(StateId id) {
    if (id < 0 || static_cast<std::size_t>(id) >= kNumStates)
        throw std::out_of_range("firefighters::decode: state index out of range");
    std::array<int, 6> f{};
    for (std::size_t i = f.size(); i-- > 0;) {
        f[i] = id % kRadix[i];
        id /= kRadix[i];
    }
    return State{f[0], f[1], f[2], f[3], f[4], f[5]};
}

State transition(const State& s, Action a) {
    State n = s;
    const bool severe = s.fire_intensity == kMaxFireIntensity;
    switch (a) {
        case Action::EvacuateOccupants:
            n.occupancy = std::max(0, s.occupancy - 1);
            if (s.fire_intensity >= 3 && s.equipment == 0 && s.knowledge == 0)
                n.condition = std::max(0, s.condition - 1);
            if (severe) n.equipment = 0;
            break;
        case Action::ContainFire:
            n.fire_intensity = std::max(0, s.fire_intensity - 1);
            break;
        case Action::AggressiveFireSuppression:
            n.fire_intensity = std::max(0, s.fire_intensity - 2);
            if (s.fire_intensity >= 3 && (s.equipment == 0 || s.knowledge == 0))
                n.condition = std::max(0, s.condition - 1);
            if (severe) n.equipment = 0;
            break;
        case Action::PrepareEquipment:
            n.equipment = 1;
            break;
        case Action::UpdateKnowledge:
            n.knowledge = 1;
            break;
        case Action::GoUpstairs:
            n.floor = std::min(kMaxFloor, s.floor + 1);
            break;
        case Action::GoDownstairs:
            n.floor = std::max(0, s.floor - 1);
            break;
    }
    return n;
}

std::pair<double, double> reward(const State& s, Action a, const State& next) {
    if (!(next == transition(s, a))) throw std::invalid_argument("firefighters::reward: next is not the successor");
    if (next.condition == 0) return {-1.0, -1.0};
    switch (a) {
        case Action::EvacuateOccupants:
            if (s.occupancy == 0) return {-1.0, -1.0};
            return {1.0 - 0.2 * s.fire_intensity - 0.1 * s.knowledge, 1.0};
        case Action::ContainFire:
            if (s.fire_intensity == 0) return {-1.0, -1.0};
            return {0.8, 0.2};
        case Action::AggressiveFireSuppression:
            if (s.fire_intensity == 0) return {-1.0, -1.0};
            if (s.equipment == 0) return {0.3, 0.5};
            return {0.6, 0.5};
        case Action::PrepareEquipment:
            if (s.equipment != 0) return {-1.0, -1.0};
            return {0.5, -0.1};
        case Action::UpdateKnowledge:
            if (s.knowledge != 0) return {-1.0, -1.0};
            return {1.0, -0.5};
        case Action::GoUpstairs:
        case Action::GoDownstairs:
            return {0.0, 0.0};
    }
    return {0.0, 0.0};
}

std::array<double, kFeatureDim> encode_features(const State& s, Action a) {
    if (!is_valid(s)) throw std::out_of_range("firefighters::encode_features: invalid state");
    std::array<double, kFeatureDim> out{};
    std::size_t offset = 0;
    auto f = fields(s);
    for (std::size_t i = 0; i < f.size(); ++i) {
        out[offset + static_cast<std::size_t>(f[i])] = 1.0;
        offset += static_cast<std::size_t>(kRadix[i]);
    }
    out[offset + static_cast<std::size_t>(a)] = 1.0;
    return out;
}

Mvdp build_mvdp(std::size_t horizon) {
    if (horizon == 0) throw std::invalid_argument("firefighters::build_mvdp: horizon must be >= 1");
    MvdpSpec spec;
    spec.n_states = kNumStates;
    spec.n_actions = kNumActions;
    spec.values = ValueSet({"pf", "px"});
    spec.rewards.assign(2, RewardTable(kNumStates * kNumActions, 0.0));
    spec.feature_dim = kFeatureDim;
    spec.features.assign(kNumStates * kNumActions * kFeatureDim, 0.0);
    spec.horizon = horizon;
    spec.transitions.reserve(kNumStates * kNumActions);
    spec.initial_dist.assign(kNumStates, 0.0);

    std::size_t live = 0;
    for (std::size_t id = 0; id < kNumStates; ++id)
        if (decode(static_cast<StateId>(id)).condition != 0) ++live;

    for (std::size_t id = 0; id < kNumStates; ++id) {
        const State s = decode(static_cast<StateId>(id));
        if (s.condition != 0) spec.initial_dist[id] = 1.0 / static_cast<double>(live);
        for (std::size_t ai = 0; ai < kNumActions; ++ai) {
            const auto a = static_cast<Action>(ai);
            const State n = transition(s, a);
            spec.transitions.push_back({static_cast<StateId>(id), static_cast<ActionId>(ai), encode(n), 1.0});
            auto [pf, px] = reward(s, a, n);
            const std::size_t c = id * kNumActions + ai;
            spec.rewards[kProfessionalism][c] = pf;
            spec.rewards[kProximity][c] = px;
            auto feat = encode_features(s, a);
            std::copy(feat.begin(), feat.end(), spec.features.begin() + static_cast<std::ptrdiff_t>(c * kFeatureDim));
        }
    }
    return Mvdp::build(std::move(spec));
}

void dump_csv(std::ostream& out) {
    out << "fi,oc,eq,kn,ffc,fl,action,next_fi,next_oc,next_eq,next_kn,next_ffc,next_fl,r_pf,r_px\n";
    for (std::size_t id = 0; id < kNumStates; ++id) {
        const State s = decode(static_cast<StateId>(id));
        for (std::size_t ai = 0; ai < kNumActions; ++ai) {
            const auto a = static_cast<Action>(ai);
            const State n = transition(s, a);
            auto [pf, px] = reward(s, a, n);
            out << s.fire_intensity << ',' << s.occupancy << ',' << s.equipment << ',' << s.knowledge << ','
                << s.condition << ',' << s.floor << ',' << action_name(a) << ',' << n.fire_intensity << ','
                << n.occupancy << ',' << n.equipment << ',' << n.knowledge << ',' << n.condition << ',' << n.floor
                << ',' << pf << ',' << px << '\n';
        }
    }
}

}  // namespace vslkit::firefighters
