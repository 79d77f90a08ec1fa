#pragma once

// PointAlign: a point agent pushes a box to a target pose in the unit arena.
// Contact is a rigid radial push plus torque-proportional rotation. Four
// scripted expert modes give the demonstrations their multimodality:
// approach-left, approach-right, rotate-then-push, zigzag.

#include "mimic/env.hpp"

#include <array>
#include <cmath>

namespace mimic::env {

struct PointAlign {
    static constexpr int kStateDim = 9;
    static constexpr int kActionDim = 2;
    static constexpr int kHorizon = 150;
    static constexpr int kModes = 4;

    static constexpr float kMaxSpeed = 0.05f;
    static constexpr float kContactRadius = 0.07f;
    static constexpr float kPushGain = 1.0f;
    static constexpr float kRotGain = 2.0f;
    static constexpr float kPosTol = 0.03f;
    static constexpr float kAngTol = 0.15f;
    static constexpr double kDefaultNoise = 0.005;

    // feature layout
    enum : int { AX = 0, AY, BX, BY, BTH, TX, TY, TTH, TT };

    static const std::array<const char*, kModes>& mode_names() {
        static const std::array<const char*, kModes> names = {"approach-left", "approach-right",
                                                              "rotate-then-push", "zigzag"};
        return names;
    }

    static const std::array<const char*, kModes>& descriptors() {
        static const std::array<const char*, kModes> texts = {
            "I approach from the left before pushing the box to the target",
            "I approach from the right before pushing the box to the target",
            "I rotate the box first, then push it straight to the target",
            "I take a zigzag path while closing in on the box"};
        return texts;
    }

    static EnvState init(Rng& rng) {
        EnvState s;
        s.features.assign(kStateDim, 0.0f);
        s.features[AX] = static_cast<float>(rng.uniform(0.2, 0.8));
        s.features[AY] = static_cast<float>(rng.uniform(0.05, 0.15));
        s.features[BX] = static_cast<float>(rng.uniform(0.35, 0.65));
        s.features[BY] = static_cast<float>(rng.uniform(0.40, 0.55));
        s.features[TX] = std::min(0.8f, std::max(0.2f, s.features[BX] + static_cast<float>(rng.uniform(-0.08, 0.08))));
        s.features[TY] = static_cast<float>(rng.uniform(0.75, 0.90));
        s.features[TTH] = static_cast<float>(rng.uniform(-0.4, 0.4));
        s.features[BTH] = wrap_angle(s.features[TTH] + static_cast<float>(rng.uniform(-0.05, 0.05)));
        s.t = 0;
        return s;
    }

    static EnvState step(const EnvState& s, const Action& a) {
        if (a.size() != kActionDim)
            throw EnvError("pointalign: action must have 2 components, got " +
                           std::to_string(a.size()));
        float vx = std::min(kMaxSpeed, std::max(-kMaxSpeed, a[0]));
        float vy = std::min(kMaxSpeed, std::max(-kMaxSpeed, a[1]));
        EnvState n = s;
        const float ax0 = s.features[AX], ay0 = s.features[AY];
        n.features[AX] = clamp01(ax0 + vx);
        n.features[AY] = clamp01(ay0 + vy);
        const float dxm = n.features[AX] - ax0;  // applied displacement after wall clamp
        const float dym = n.features[AY] - ay0;
        // contact uses the agent's position at the start of the step: the box
        // reacts to the sweep of an agent that begins inside the contact shell
        const float rx = s.features[BX] - ax0;
        const float ry = s.features[BY] - ay0;
        const float dist = std::sqrt(rx * rx + ry * ry);
        if (dist < kContactRadius && dist > 1e-9f) {
            const float rhx = rx / dist, rhy = ry / dist;
            const float radial = std::max(0.0f, dxm * rhx + dym * rhy);
            n.features[BX] = clamp01(s.features[BX] + kPushGain * radial * rhx);
            n.features[BY] = clamp01(s.features[BY] + kPushGain * radial * rhy);
            const float tangential = rhx * dym - rhy * dxm;  // cross(r_hat, v)
            n.features[BTH] = wrap_angle(s.features[BTH] + kRotGain * tangential);
        }
        n.t = s.t + 1;
        n.features[TT] = static_cast<float>(n.t) / static_cast<float>(kHorizon);
        return n;
    }

    static bool success(const EnvState& s) {
        const float dx = s.features[BX] - s.features[TX];
        const float dy = s.features[BY] - s.features[TY];
        const float ang = wrap_angle(s.features[BTH] - s.features[TTH]);
        return std::sqrt(dx * dx + dy * dy) <= kPosTol && std::abs(ang) <= kAngTol;
    }

    static float endpoint_distance(const EnvState& s) {
        const float dx = s.features[BX] - s.features[TX];
        const float dy = s.features[BY] - s.features[TY];
        return std::sqrt(dx * dx + dy * dy);
    }

    // --- scripted experts -------------------------------------------------

    static Action expert_action(int mode, const EnvState& s) {
        const float px = s.features[AX], py = s.features[AY];
        const float bx = s.features[BX], by = s.features[BY];
        const float gx = s.features[TX], gy = s.features[TY];
        const float ang_err = wrap_angle(s.features[BTH] - s.features[TTH]);

        float ddx = gx - bx, ddy = gy - by;  // unit push direction box -> target
        const float dnorm = std::sqrt(ddx * ddx + ddy * ddy);
        if (dnorm > 1e-6f) {
            ddx /= dnorm;
            ddy /= dnorm;
        } else {
            ddx = 0.0f;
            ddy = 1.0f;
        }
        const float rel_x = bx - px, rel_y = by - py;
        const float dist = std::sqrt(rel_x * rel_x + rel_y * rel_y);
        const float rhx = dist > 1e-6f ? rel_x / dist : 0.0f;
        const float rhy = dist > 1e-6f ? rel_y / dist : 1.0f;
        const float box_goal = dnorm;

        auto navigate = [](float tx_, float ty_, float cx, float cy, float speed) {
            float vx = tx_ - cx, vy = ty_ - cy;
            const float n = std::max(std::abs(vx), std::abs(vy));
            if (n > speed) {
                vx *= speed / n;
                vy *= speed / n;
            }
            return Action{vx, vy};
        };
        // Rotate the box in place. Outside the shell: dive to a close radius
        // (free move). Inside: sweep tangentially, which spins the box without
        // translating it; the arc slowly drifts outward, triggering a re-dive.
        auto sweep = [&](float dir) {
            if (dist >= kContactRadius)
                return navigate(bx - rhx * 0.040f, by - rhy * 0.040f, px, py, kMaxSpeed);
            return Action{-rhy * dir * 0.018f, rhx * dir * 0.018f};
        };

        if (mode == 2) {  // rotate-then-push: spin up, unwind, then push
            if (s.t < 30) {
                if (ang_err < 0.42f) return sweep(1.0f);
                return Action{0.0f, 0.0f};
            }
            if (s.t < 54) {
                if (ang_err > 0.03f) return sweep(-1.0f);
                if (ang_err < -0.03f) return sweep(1.0f);
                return Action{0.0f, 0.0f};
            }
        }

        // endgame angle correction once the box is nearly placed
        if (box_goal <= 0.06f && std::abs(ang_err) > 0.10f)
            return sweep(ang_err > 0 ? -1.0f : 1.0f);

        if (dist > 0.12f) {
            // approach phase, mode-specific path toward the point behind the box
            const float app_x = bx - ddx * 0.085f, app_y = by - ddy * 0.085f;
            switch (mode) {
                case 0: {  // keep left of the box until contact
                    if (py < app_y - 0.025f) {
                        if (px > bx - 0.10f) return navigate(bx - 0.16f, py, px, py, 0.03f);
                        return navigate(bx - 0.16f, app_y, px, py, 0.03f);
                    }
                    return navigate(app_x, app_y, px, py, 0.03f);
                }
                case 1: {  // mirror: keep right
                    if (py < app_y - 0.025f) {
                        if (px < bx + 0.10f) return navigate(bx + 0.16f, py, px, py, 0.03f);
                        return navigate(bx + 0.16f, app_y, px, py, 0.03f);
                    }
                    return navigate(app_x, app_y, px, py, 0.03f);
                }
                case 3: {  // zigzag: lateral oscillation layered on the approach
                    Action v = navigate(app_x, app_y, px, py, 0.016f);
                    if (dist > 0.13f) {
                        const float osc =
                            0.034f * std::sin(2.0f * static_cast<float>(M_PI) * s.t / 6.0f);
                        v[0] += -ddy * osc;
                        v[1] += ddx * osc;
                    }
                    return v;
                }
                default:
                    return navigate(app_x, app_y, px, py, 0.035f);
            }
        }

        // positioning: make sure the agent is behind the box before pushing
        const float ux = -rhx, uy = -rhy;  // unit box -> agent
        const float behind = ux * -ddx + uy * -ddy;
        if (dist < kContactRadius) {
            if (behind < 0.85f) return Action{-rhx * 0.04f, -rhy * 0.04f};  // back out, free
        } else {
            if (behind < 0.92f) {
                // orbit around the box toward the anti-target side (contact-free)
                const float orbit_sign = (ux * -ddy - uy * -ddx) > 0 ? 1.0f : -1.0f;
                const float radial = 0.5f * (0.105f - dist);
                return Action{-uy * 0.033f * orbit_sign + ux * radial,
                              ux * 0.033f * orbit_sign + uy * radial};
            }
            return navigate(bx - ddx * 0.05f, by - ddy * 0.05f, px, py, kMaxSpeed);
        }

        // push phase: drive the box toward the target, decelerating near the
        // goal and gently re-centering on the anti-target ray
        const float push_speed = std::min(0.022f, 0.8f * box_goal + 0.004f);
        float cx = (bx - ddx * dist) - px, cy = (by - ddy * dist) - py;
        const float cnorm = std::sqrt(cx * cx + cy * cy);
        if (cnorm > 0.008f) {
            cx *= 0.008f / cnorm;
            cy *= 0.008f / cnorm;
        }
        return Action{ddx * push_speed + cx, ddy * push_speed + cy};
    }

    // summary vector for clustering and nearest-mode assignment (12 dims)
    static std::vector<float> trajectory_summary(const Trajectory& tr);
    static int detect_mode(const Trajectory& tr);
};

namespace detail_pa {

// first state index where the agent sits inside the contact shell
inline int first_contact_index(const Trajectory& tr) {
    for (int t = 0; t < tr.length(); ++t) {
        const auto& f = tr.states[static_cast<size_t>(t)].features;
        const float dx = f[PointAlign::BX] - f[PointAlign::AX];
        const float dy = f[PointAlign::BY] - f[PointAlign::AY];
        if (std::sqrt(dx * dx + dy * dy) < PointAlign::kContactRadius) return t;
    }
    return tr.length();
}

struct PathStats {
    float angle_excursion = 0.0f;  // max |box angle - starting box angle|
    float mean_side = 0.0f;        // mean (agent_x - box_x) sign before contact
    int lateral_crossings = 0;     // smoothed sign changes of lateral velocity
    float crossing_rate = 0.0f;    // crossings per pre-contact step
    int pre_contact_steps = 0;
};

inline PathStats path_stats(const Trajectory& tr) {
    PathStats st;
    const int contact = first_contact_index(tr);
    st.pre_contact_steps = contact;
    const float th0 = tr.states[0].features[PointAlign::BTH];
    for (const auto& s : tr.states)
        st.angle_excursion =
            std::max(st.angle_excursion, std::abs(wrap_angle(s.features[PointAlign::BTH] - th0)));

    double side = 0.0;
    int side_n = 0;
    for (int t = 0; t < contact; ++t) {
        const auto& f = tr.states[static_cast<size_t>(t)].features;
        const float d = f[PointAlign::AX] - f[PointAlign::BX];
        if (std::abs(d) > 1e-5f) {
            side += d > 0 ? 1.0 : -1.0;
            ++side_n;
        }
    }
    st.mean_side = side_n > 0 ? static_cast<float>(side / side_n) : 0.0f;

    // lateral velocity (w.r.t. the initial agent->box axis), 3-step smoothed
    if (contact >= 4) {
        const auto& f0 = tr.states[0].features;
        float axd = f0[PointAlign::BX] - f0[PointAlign::AX];
        float ayd = f0[PointAlign::BY] - f0[PointAlign::AY];
        const float n = std::sqrt(axd * axd + ayd * ayd);
        if (n > 1e-6f) {
            axd /= n;
            ayd /= n;
            std::vector<float> lat;
            for (int t = 1; t < contact; ++t) {
                const auto& a = tr.states[static_cast<size_t>(t - 1)].features;
                const auto& b = tr.states[static_cast<size_t>(t)].features;
                const float vx = b[PointAlign::AX] - a[PointAlign::AX];
                const float vy = b[PointAlign::AY] - a[PointAlign::AY];
                lat.push_back(-ayd * vx + axd * vy);
            }
            int last_sign = 0;
            for (size_t t = 1; t + 1 < lat.size(); ++t) {
                const float sm = (lat[t - 1] + lat[t] + lat[t + 1]) / 3.0f;
                if (std::abs(sm) < 0.013f) continue;
                const int sign = sm > 0 ? 1 : -1;
                if (last_sign != 0 && sign != last_sign) ++st.lateral_crossings;
                last_sign = sign;
            }
            st.crossing_rate =
                static_cast<float>(st.lateral_crossings) / static_cast<float>(contact);
        }
    }
    return st;
}

}  // namespace detail_pa

inline int PointAlign::detect_mode(const Trajectory& tr) {
    if (tr.length() < 5) return kAmbiguous;
    const auto st = detail_pa::path_stats(tr);
    if (st.angle_excursion > 0.25f) return 2;
    if (st.lateral_crossings >= 3) return 3;
    if (st.pre_contact_steps < 3) return kAmbiguous;
    if (st.mean_side < -0.15f) return 0;
    if (st.mean_side > 0.15f) return 1;
    return kAmbiguous;
}

inline std::vector<float> PointAlign::trajectory_summary(const Trajectory& tr) {
    std::vector<float> out(12, 0.0f);
    if (tr.states.empty()) return out;
    const auto st = detail_pa::path_stats(tr);
    const auto& first = tr.states.front().features;
    const auto& last = tr.states.back().features;
    out[0] = first[AX];
    out[1] = first[AY];
    out[2] = last[BX] - first[BX];
    out[3] = last[BY] - first[BY];
    out[4] = endpoint_distance(tr.states.back());
    out[5] = st.angle_excursion;
    out[6] = st.mean_side;
    out[7] = static_cast<float>(st.lateral_crossings);
    out[8] = static_cast<float>(st.pre_contact_steps) / kHorizon;
    out[9] = static_cast<float>(tr.length()) / kHorizon;
    double path_len = 0.0;
    for (int t = 1; t < tr.length(); ++t) {
        const auto& a = tr.states[static_cast<size_t>(t - 1)].features;
        const auto& b = tr.states[static_cast<size_t>(t)].features;
        path_len += std::sqrt((b[AX] - a[AX]) * (b[AX] - a[AX]) + (b[AY] - a[AY]) * (b[AY] - a[AY]));
    }
    out[10] = static_cast<float>(path_len);
    out[11] = wrap_angle(last[BTH] - last[TTH]);
    return out;
}

}  // namespace mimic::env
