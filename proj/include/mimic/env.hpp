#pragma once

#include "mimic/rng.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mimic::env {

struct EnvError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class EnvId { pointalign, coopgrid };

inline std::string env_name(EnvId id) {
    return id == EnvId::pointalign ? "pointalign" : "coopgrid";
}

inline EnvId parse_env(const std::string& s) {
    if (s == "pointalign") return EnvId::pointalign;
    if (s == "coopgrid") return EnvId::coopgrid;
    throw EnvError("unknown environment '" + s + "' (expected pointalign|coopgrid)");
}

struct EnvState {
    std::vector<float> features;
    int t = 0;
};

// PointAlign: velocity 2-vector. CoopGrid: single float holding the discrete
// action index (0=up 1=down 2=left 3=right 4=interact 5=stay).
using Action = std::vector<float>;

inline constexpr int kAmbiguous = -1;

struct Trajectory {
    EnvId env = EnvId::pointalign;
    int mode_id = kAmbiguous;  // generating expert mode; kAmbiguous for policy rollouts
    uint64_t seed = 0;
    bool success = false;
    std::vector<EnvState> states;
    std::vector<Action> actions;

    int length() const { return static_cast<int>(states.size()); }
};

inline float wrap_angle(float a) {
    return a - 2.0f * static_cast<float>(M_PI) *
                   std::floor((a + static_cast<float>(M_PI)) / (2.0f * static_cast<float>(M_PI)));
}

inline float clamp01(float v) { return std::min(1.0f, std::max(0.0f, v)); }

}  // namespace mimic::env
