#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace poekl {

struct AlphaGridResult {
    double alpha = 0.0;
    double val_return = 0.0;
    double test_return = 0.0;
    double val_kl = 0.0;
    double test_kl = 0.0;
};

inline void check_grid(const std::vector<AlphaGridResult>& grid) {
    if (grid.empty()) throw std::invalid_argument("alpha grid is empty");
    for (size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i].alpha > grid[i - 1].alpha))
            throw std::invalid_argument("alpha grid must be strictly increasing");
}

/// KL-budget rule: the smallest (most adaptive) alpha whose validation KL
/// stays within the budget; if nothing qualifies, the alpha of minimal
/// validation KL, breaking ties toward larger alpha.
inline double kl_budget_select(const std::vector<AlphaGridResult>& grid, double kappa) {
    check_grid(grid);
    if (!(kappa > 0.0)) throw std::invalid_argument("kl_budget_select: kappa must be > 0");
    for (const auto& g : grid)
        if (g.val_kl <= kappa) return g.alpha;
    double best_kl = grid.front().val_kl;
    double best_alpha = grid.front().alpha;
    for (const auto& g : grid)
        if (g.val_kl <= best_kl) { // ties go to the larger alpha
            best_kl = g.val_kl;
            best_alpha = g.alpha;
        }
    return best_alpha;
}

/// Validation-return maximizer, ties toward larger (more conservative) alpha.
inline double val_best_select(const std::vector<AlphaGridResult>& grid) {
    check_grid(grid);
    double best = grid.front().val_return;
    double best_alpha = grid.front().alpha;
    for (const auto& g : grid)
        if (g.val_return >= best) {
            best = g.val_return;
            best_alpha = g.alpha;
        }
    return best_alpha;
}

/// Regret of the selected alpha against the test-split oracle.
inline double selection_loss(double selected, const std::vector<AlphaGridResult>& grid) {
    check_grid(grid);
    const AlphaGridResult* sel = nullptr;
    double best_test = grid.front().test_return;
    for (const auto& g : grid) {
        best_test = std::max(best_test, g.test_return);
        if (g.alpha == selected) sel = &g;
    }
    if (!sel) throw std::invalid_argument("selection_loss: selected alpha not in grid");
    return best_test - sel->test_return;
}

} // namespace poekl
