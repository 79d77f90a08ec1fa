#pragma once

// EnvId-dispatched front door over the two concrete environments.

#include "mimic/coopgrid.hpp"
#include "mimic/env.hpp"
#include "mimic/pointalign.hpp"

#include <utility>

namespace mimic::env {

inline int state_dim(EnvId id) {
    return id == EnvId::pointalign ? PointAlign::kStateDim : CoopGrid::kStateDim;
}
inline int horizon(EnvId id) {
    return id == EnvId::pointalign ? PointAlign::kHorizon : CoopGrid::kHorizon;
}
inline int mode_count(EnvId id) {
    return id == EnvId::pointalign ? PointAlign::kModes : CoopGrid::kModes;
}
inline bool discrete_actions(EnvId id) { return id == EnvId::coopgrid; }

// width of the policy's action representation (one-hot for discrete envs)
inline int policy_action_dim(EnvId id) {
    return id == EnvId::pointalign ? PointAlign::kActionDim : CoopGrid::kActionDim;
}

inline std::vector<std::string> descriptors(EnvId id) {
    std::vector<std::string> out;
    if (id == EnvId::pointalign)
        for (const char* d : PointAlign::descriptors()) out.push_back(d);
    else
        for (const char* d : CoopGrid::descriptors()) out.push_back(d);
    return out;
}

inline std::vector<std::string> mode_names(EnvId id) {
    std::vector<std::string> out;
    if (id == EnvId::pointalign)
        for (const char* d : PointAlign::mode_names()) out.push_back(d);
    else
        for (const char* d : CoopGrid::mode_names()) out.push_back(d);
    return out;
}

inline EnvState init(EnvId id, Rng& rng) {
    return id == EnvId::pointalign ? PointAlign::init(rng) : CoopGrid::init(rng);
}

inline EnvState step(EnvId id, const EnvState& s, const Action& a) {
    return id == EnvId::pointalign ? PointAlign::step(s, a) : CoopGrid::step(s, a);
}

inline bool success(EnvId id, const EnvState& s) {
    return id == EnvId::pointalign ? PointAlign::success(s) : CoopGrid::success(s);
}

inline float endpoint_distance(EnvId id, const EnvState& s) {
    return id == EnvId::pointalign ? PointAlign::endpoint_distance(s)
                                   : CoopGrid::endpoint_distance(s);
}

inline Action expert_action(EnvId id, int mode, const EnvState& s) {
    return id == EnvId::pointalign ? PointAlign::expert_action(mode, s)
                                   : CoopGrid::expert_action(mode, s);
}

inline int detect_mode(const Trajectory& tr) {
    return tr.env == EnvId::pointalign ? PointAlign::detect_mode(tr) : CoopGrid::detect_mode(tr);
}

inline std::vector<float> trajectory_summary(const Trajectory& tr) {
    return tr.env == EnvId::pointalign ? PointAlign::trajectory_summary(tr)
                                       : CoopGrid::trajectory_summary(tr);
}

inline std::pair<bool, float> success_and_distance(const Trajectory& tr) {
    if (tr.states.empty()) return {false, 0.0f};
    const auto& last = tr.states.back();
    return {success(tr.env, last), endpoint_distance(tr.env, last)};
}

inline double default_noise(EnvId id) {
    return id == EnvId::pointalign ? PointAlign::kDefaultNoise : CoopGrid::kDefaultNoise;
}

// policy output (R^action_dim) -> executable env action
inline Action policy_to_env_action(EnvId id, const std::vector<float>& raw) {
    if (id == EnvId::pointalign) {
        Action a(2);
        for (int i = 0; i < 2; ++i)
            a[static_cast<size_t>(i)] = std::min(PointAlign::kMaxSpeed,
                                                 std::max(-PointAlign::kMaxSpeed, raw[static_cast<size_t>(i)]));
        return a;
    }
    int best = 0;
    for (int i = 1; i < CoopGrid::kActionDim; ++i)
        if (raw[static_cast<size_t>(i)] > raw[static_cast<size_t>(best)]) best = i;
    return {static_cast<float>(best)};
}

// recorded env action -> policy-space regression target
inline std::vector<float> env_action_to_policy(EnvId id, const Action& a) {
    if (id == EnvId::pointalign) return a;
    std::vector<float> onehot(CoopGrid::kActionDim, 0.0f);
    onehot[static_cast<size_t>(CoopGrid::action_index(a))] = 1.0f;
    return onehot;
}

// post-sampling clamp range for the policy's action space
inline std::pair<float, float> policy_action_bounds(EnvId id) {
    return id == EnvId::pointalign
               ? std::pair<float, float>{-PointAlign::kMaxSpeed, PointAlign::kMaxSpeed}
               : std::pair<float, float>{0.0f, 1.0f};
}

inline Trajectory expert_rollout(EnvId id, int mode, uint64_t seed, double noise) {
    if (mode < 0 || mode >= mode_count(id))
        throw EnvError("expert_rollout: mode " + std::to_string(mode) + " out of range for " +
                       env_name(id));
    Rng init_rng = Rng::stream(seed, "env-init");
    Rng noise_rng = Rng::stream(seed, "expert-noise");
    Trajectory tr;
    tr.env = id;
    tr.mode_id = mode;
    tr.seed = seed;
    EnvState s = init(id, init_rng);
    tr.states.push_back(s);
    const int T = horizon(id);
    for (int t = 0; t < T; ++t) {
        Action a = expert_action(id, mode, s);
        if (id == EnvId::pointalign) {
            for (auto& v : a)
                v = std::min(PointAlign::kMaxSpeed,
                             std::max(-PointAlign::kMaxSpeed,
                                      v + static_cast<float>(noise * noise_rng.normal())));
        } else {
            if (noise_rng.uniform() < noise)
                a = {static_cast<float>(noise_rng.below(CoopGrid::kActionDim))};
        }
        s = step(id, s, a);
        tr.actions.push_back(a);
        tr.states.push_back(s);
        if (success(id, s)) break;
    }
    tr.success = success(id, s);
    return tr;
}

inline Trajectory expert_rollout(EnvId id, int mode, uint64_t seed) {
    return expert_rollout(id, mode, seed, default_noise(id));
}

}  // namespace mimic::env
