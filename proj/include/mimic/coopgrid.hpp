#pragma once

// CoopGrid: a 5x5 delivery kitchen with a central wall, a scripted patrol
// partner, and an item pickup/delivery loop. The two expert modes circle the
// wall clockwise or counterclockwise.

#include "mimic/env.hpp"

#include <array>
#include <cmath>

namespace mimic::env {

struct CoopGrid {
    static constexpr int kGrid = 5;
    static constexpr int kCells = kGrid * kGrid;
    // features: agent one-hot, partner one-hot, carry flags, delivered, time
    static constexpr int kStateDim = 2 * kCells + 4;
    static constexpr int kActionDim = 6;  // one-hot width used by the policy
    static constexpr int kHorizon = 120;
    static constexpr int kModes = 2;
    static constexpr int kNeeded = 2;  // deliveries for success
    static constexpr double kDefaultNoise = 0.05;  // random-action rate

    enum : int { kUp = 0, kDown, kLeft, kRight, kInteract, kStay };

    static constexpr int kSourceX = 0, kSourceY = 2;
    static constexpr int kSinkX = 4, kSinkY = 2;

    static const std::array<const char*, kModes>& mode_names() {
        static const std::array<const char*, kModes> names = {"clockwise", "counterclockwise"};
        return names;
    }

    static const std::array<const char*, kModes>& descriptors() {
        static const std::array<const char*, kModes> texts = {
            "I take the clockwise route around the counter to deliver",
            "I take the counterclockwise route around the counter to deliver"};
        return texts;
    }

    static bool blocked(int x, int y) { return x == 2 && (y == 1 || y == 2 || y == 3); }

    static int partner_index(int t) {
        static constexpr int xs[4] = {1, 1, 1, 1};
        static constexpr int ys[4] = {1, 2, 3, 2};
        const int k = (t / 2) % 4;
        return ys[k] * kGrid + xs[k];
    }

    enum : int { F_ACARRY = 2 * kCells, F_PCARRY, F_DELIVERED, F_TIME };

    static int agent_cell(const EnvState& s) {
        for (int i = 0; i < kCells; ++i)
            if (s.features[static_cast<size_t>(i)] > 0.5f) return i;
        throw EnvError("coopgrid: state has no agent cell set");
    }

    static EnvState init(Rng& rng) {
        EnvState s;
        s.features.assign(kStateDim, 0.0f);
        // start on the left edge near the source
        const int starts[3][2] = {{0, 1}, {0, 2}, {0, 3}};
        const auto& c = starts[rng.below(3)];
        s.features[static_cast<size_t>(c[1] * kGrid + c[0])] = 1.0f;
        s.features[static_cast<size_t>(kCells + partner_index(0))] = 1.0f;
        s.t = 0;
        return s;
    }

    static int action_index(const Action& a) {
        if (a.size() != 1)
            throw EnvError("coopgrid: action must be a single discrete index, got " +
                           std::to_string(a.size()) + " components");
        const float v = a[0];
        const int idx = static_cast<int>(std::lround(v));
        if (std::abs(v - static_cast<float>(idx)) > 1e-4f || idx < 0 || idx >= kActionDim)
            throw EnvError("coopgrid: invalid discrete action " + std::to_string(v));
        return idx;
    }

    static EnvState step(const EnvState& s, const Action& a) {
        const int act = action_index(a);
        EnvState n = s;
        const int cell = agent_cell(s);
        int x = cell % kGrid, y = cell / kGrid;
        int nx = x, ny = y;
        switch (act) {
            case kUp: ny = y - 1; break;
            case kDown: ny = y + 1; break;
            case kLeft: nx = x - 1; break;
            case kRight: nx = x + 1; break;
            default: break;
        }
        const int next_partner = partner_index(s.t + 1);
        const bool passable = nx >= 0 && nx < kGrid && ny >= 0 && ny < kGrid &&
                              !blocked(nx, ny) && (ny * kGrid + nx) != next_partner;
        if (!passable) {
            nx = x;
            ny = y;
        }
        n.features[static_cast<size_t>(cell)] = 0.0f;
        n.features[static_cast<size_t>(ny * kGrid + nx)] = 1.0f;
        n.features[static_cast<size_t>(kCells + partner_index(s.t))] = 0.0f;
        n.features[static_cast<size_t>(kCells + next_partner)] = 1.0f;
        if (act == kInteract) {
            const bool carry = s.features[F_ACARRY] > 0.5f;
            if (!carry && nx == kSourceX && ny == kSourceY) n.features[F_ACARRY] = 1.0f;
            if (carry && nx == kSinkX && ny == kSinkY) {
                n.features[F_ACARRY] = 0.0f;
                n.features[F_DELIVERED] =
                    std::min(1.0f, s.features[F_DELIVERED] + 1.0f / kNeeded);
            }
        }
        n.t = s.t + 1;
        n.features[F_TIME] = static_cast<float>(n.t) / static_cast<float>(kHorizon);
        return n;
    }

    static int delivered(const EnvState& s) {
        return static_cast<int>(std::lround(s.features[F_DELIVERED] * kNeeded));
    }

    static bool success(const EnvState& s) { return delivered(s) >= kNeeded; }

    static float endpoint_distance(const EnvState& s) {
        return static_cast<float>(kNeeded - delivered(s));
    }

    // --- scripted expert ---------------------------------------------------

    // perimeter cycle in clockwise order starting at the source
    static const std::array<std::array<int, 2>, 16>& perimeter() {
        static const std::array<std::array<int, 2>, 16> cells = {
            {{0, 2}, {0, 1}, {0, 0}, {1, 0}, {2, 0}, {3, 0}, {4, 0}, {4, 1}, {4, 2}, {4, 3},
             {4, 4}, {3, 4}, {2, 4}, {1, 4}, {0, 4}, {0, 3}}};
        return cells;
    }

    static int perimeter_slot(int x, int y) {
        const auto& per = perimeter();
        for (size_t i = 0; i < per.size(); ++i)
            if (per[i][0] == x && per[i][1] == y) return static_cast<int>(i);
        return -1;
    }

    static Action toward(int x, int y, int tx, int ty) {
        if (tx > x) return {static_cast<float>(kRight)};
        if (tx < x) return {static_cast<float>(kLeft)};
        if (ty > y) return {static_cast<float>(kDown)};
        if (ty < y) return {static_cast<float>(kUp)};
        return {static_cast<float>(kStay)};
    }

    static Action expert_action(int mode, const EnvState& s) {
        const int cell = agent_cell(s);
        const int x = cell % kGrid, y = cell / kGrid;
        const bool carry = s.features[F_ACARRY] > 0.5f;
        if (!carry && x == kSourceX && y == kSourceY) return {static_cast<float>(kInteract)};
        if (carry && x == kSinkX && y == kSinkY) return {static_cast<float>(kInteract)};
        const int slot = perimeter_slot(x, y);
        if (slot < 0) {
            // drifted off the ring (action noise): rejoin via the nearest edge
            if (x < 2) return toward(x, y, 0, y);
            if (x > 2) return toward(x, y, 4, y);
            return y <= 2 ? toward(x, y, x, 0) : toward(x, y, x, 4);
        }
        const auto& per = perimeter();
        const int dir = mode == 0 ? 1 : -1;
        const auto& nxt = per[static_cast<size_t>((slot + dir + 16) % 16)];
        return toward(x, y, nxt[0], nxt[1]);
    }

    static int detect_mode(const Trajectory& tr);
    static std::vector<float> trajectory_summary(const Trajectory& tr);
};

inline int CoopGrid::detect_mode(const Trajectory& tr) {
    if (tr.length() < 8) return kAmbiguous;
    double winding = 0.0;
    double prev = 0.0;
    bool have_prev = false;
    for (const auto& s : tr.states) {
        const int cell = agent_cell(s);
        const double dx = cell % kGrid - 2.0, dy = cell / kGrid - 2.0;
        if (dx == 0.0 && dy == 0.0) continue;
        const double ang = std::atan2(dy, dx);
        if (have_prev) {
            double d = ang - prev;
            while (d > M_PI) d -= 2.0 * M_PI;
            while (d < -M_PI) d += 2.0 * M_PI;
            winding += d;
        }
        prev = ang;
        have_prev = true;
    }
    // y grows downward, so a clockwise route on screen accumulates positive
    // winding in atan2 terms
    if (winding > M_PI) return 0;
    if (winding < -M_PI) return 1;
    return kAmbiguous;
}

inline std::vector<float> CoopGrid::trajectory_summary(const Trajectory& tr) {
    std::vector<float> out(10, 0.0f);
    if (tr.states.empty()) return out;
    const int c0 = agent_cell(tr.states.front());
    const int c1 = agent_cell(tr.states.back());
    out[0] = static_cast<float>(c0 % kGrid) / (kGrid - 1);
    out[1] = static_cast<float>(c0 / kGrid) / (kGrid - 1);
    out[2] = static_cast<float>(c1 % kGrid) / (kGrid - 1);
    out[3] = static_cast<float>(c1 / kGrid) / (kGrid - 1);
    double winding = 0.0, prev = 0.0;
    bool have_prev = false;
    std::array<double, 4> quadrant{};
    for (const auto& s : tr.states) {
        const int cell = agent_cell(s);
        const double dx = cell % kGrid - 2.0, dy = cell / kGrid - 2.0;
        if (dx != 0.0 || dy != 0.0) {
            const double ang = std::atan2(dy, dx);
            if (have_prev) {
                double d = ang - prev;
                while (d > M_PI) d -= 2.0 * M_PI;
                while (d < -M_PI) d += 2.0 * M_PI;
                winding += d;
            }
            prev = ang;
            have_prev = true;
        }
        quadrant[static_cast<size_t>((cell % kGrid >= 2 ? 1 : 0) + (cell / kGrid >= 2 ? 2 : 0))] += 1.0;
    }
    out[4] = static_cast<float>(winding / (2.0 * M_PI));
    out[5] = static_cast<float>(delivered(tr.states.back()));
    for (int q = 0; q < 4; ++q)
        out[static_cast<size_t>(6 + q)] =
            static_cast<float>(quadrant[static_cast<size_t>(q)] / tr.states.size());
    return out;
}

}  // namespace mimic::env
