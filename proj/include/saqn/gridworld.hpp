#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "saqn/env.hpp"
#include "saqn/errors.hpp"

namespace saqn {

/// 16x16 empty room with a surrounding wall. The agent starts at (1,1)
/// facing east (optionally at a random pose) and must reach the goal at
/// (14,14). Observations are the MiniGrid-style egocentric 7x7 window with
/// three integer channels per cell (type, color, state), flattened to 147
/// values and normalized by 10. Seven actions: turn-left, turn-right,
/// forward, and four object interactions that are no-ops in an empty room.
class GridEnv final : public Environment {
public:
    static constexpr int kSize = 16;
    static constexpr int kViewSize = 7;
    static constexpr int kMaxSteps = 256;
    static constexpr double kStepPenalty = -0.1;
    static constexpr double kGoalReward = 10.0;

    enum class Cell : int { Empty = 1, Wall = 2, Goal = 8 };
    enum Heading { North = 0, East = 1, South = 2, West = 3 };

    explicit GridEnv(bool random_start = false) : random_start_(random_start) { build_room(); }

    std::vector<double> reset(SeededRng& rng) override {
        build_room();
        if (random_start_) {
            do {
                row_ = 1 + static_cast<int>(rng.uniform_int(kSize - 2));
                col_ = 1 + static_cast<int>(rng.uniform_int(kSize - 2));
            } while (row_ == goal_row_ && col_ == goal_col_);
            heading_ = static_cast<int>(rng.uniform_int(4));
        } else {
            row_ = 1;
            col_ = 1;
            heading_ = East;
        }
        steps_ = 0;
        done_ = false;
        return observe();
    }

    EnvStep step(int action) override {
        if (done_) throw StateError("GridEnv::step called on a finished episode");
        if (action < 0 || action > 6) {
            throw InputError("GridEnv: action index must be in 0..6");
        }
        double reward = kStepPenalty;
        switch (action) {
            case 0: heading_ = (heading_ + 3) % 4; break;
            case 1: heading_ = (heading_ + 1) % 4; break;
            case 2: {
                const auto [dr, dc] = forward_delta();
                const int nr = row_ + dr, nc = col_ + dc;
                if (cell(nr, nc) != Cell::Wall) {
                    row_ = nr;
                    col_ = nc;
                    if (cell(nr, nc) == Cell::Goal) {
                        reward += kGoalReward;
                        done_ = true;
                    }
                }
                break;
            }
            default: break;  // pickup/drop/toggle/done: nothing to act on here
        }
        ++steps_;
        if (steps_ >= kMaxSteps) done_ = true;
        return {observe(), reward, done_};
    }

    std::size_t observation_dim() const override { return kViewSize * kViewSize * 3; }
    int action_count() const override { return 7; }
    bool done() const override { return done_; }

    int agent_row() const { return row_; }
    int agent_col() const { return col_; }
    int heading() const { return heading_; }
    int goal_row() const { return goal_row_; }
    int goal_col() const { return goal_col_; }

    /// Test hooks: reposition the agent or the goal.
    void set_agent(int row, int col, int heading) {
        row_ = row;
        col_ = col;
        heading_ = heading;
        steps_ = 0;
        done_ = false;
    }
    void set_goal(int row, int col) {
        build_room();
        goal_row_ = row;
        goal_col_ = col;
        for (auto& c : cells_) {
            if (c == Cell::Goal) c = Cell::Empty;
        }
        cells_[row * kSize + col] = Cell::Goal;
    }

    /// Egocentric 7x7x3 observation. The agent sits at the bottom-center of
    /// the window (view row 6, view col 3) and the window extends forward.
    /// Cells outside the grid encode as wall.
    std::vector<double> observe() const {
        std::vector<double> out(observation_dim());
        std::size_t idx = 0;
        for (int vr = 0; vr < kViewSize; ++vr) {
            for (int vc = 0; vc < kViewSize; ++vc) {
                const int fwd = (kViewSize - 1) - vr;  // distance ahead of the agent
                const int lat = vc - kViewSize / 2;    // offset to the agent's right
                int wr = row_, wc = col_;
                switch (heading_) {
                    case North: wr -= fwd; wc += lat; break;
                    case East: wr += lat; wc += fwd; break;
                    case South: wr += fwd; wc -= lat; break;
                    case West: wr -= lat; wc -= fwd; break;
                }
                const Cell c = cell(wr, wc);
                int type = static_cast<int>(c), color = 0;
                if (c == Cell::Wall) color = 5;   // grey
                if (c == Cell::Goal) color = 1;   // green
                out[idx++] = type / 10.0;
                out[idx++] = color / 10.0;
                out[idx++] = 0.0;  // state channel: no doors in an empty room
            }
        }
        return out;
    }

    Cell cell(int row, int col) const {
        if (row < 0 || row >= kSize || col < 0 || col >= kSize) return Cell::Wall;
        return cells_[row * kSize + col];
    }

private:
    std::pair<int, int> forward_delta() const {
        switch (heading_) {
            case North: return {-1, 0};
            case East: return {0, 1};
            case South: return {1, 0};
            default: return {0, -1};
        }
    }

    void build_room() {
        cells_.assign(kSize * kSize, Cell::Empty);
        for (int i = 0; i < kSize; ++i) {
            cells_[i] = Cell::Wall;
            cells_[(kSize - 1) * kSize + i] = Cell::Wall;
            cells_[i * kSize] = Cell::Wall;
            cells_[i * kSize + kSize - 1] = Cell::Wall;
        }
        goal_row_ = kSize - 2;
        goal_col_ = kSize - 2;
        cells_[goal_row_ * kSize + goal_col_] = Cell::Goal;
    }

    bool random_start_;
    std::vector<Cell> cells_;
    int row_ = 1;
    int col_ = 1;
    int heading_ = East;
    int goal_row_ = kSize - 2;
    int goal_col_ = kSize - 2;
    int steps_ = 0;
    bool done_ = true;
};

/// Latent-dump category for a raw grid observation: goal visible, wall
/// visible, or open view. Scans the type channel of the 7x7 window.
inline const char* grid_state_label(const std::vector<double>& raw) {
    bool wall = false;
    for (std::size_t i = 0; i + 2 < raw.size(); i += 3) {
        const double type = raw[i];
        if (type > 0.75 && type < 0.85) return "goal-in-view";
        if (type > 0.15 && type < 0.25) wall = true;
    }
    return wall ? "wall-in-view" : "open";
}

}  // namespace saqn
