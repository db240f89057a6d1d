#pragma once

// Brute-force breadth-first-search connectivity oracle for tests.

#include "gridswitch/case_model.hpp"
#include "gridswitch/powerflow.hpp"

#include <queue>
#include <vector>

namespace gridswitch::testing {

inline std::vector<char> bfs_reachable_from_slack(const GridCase& grid,
                                                  const TopologyStatus& status) {
    const std::size_t n = grid.n_bus();
    std::vector<std::vector<std::size_t>> adj(n);
    for (std::size_t k = 0; k < grid.n_branch(); ++k) {
        if (!status.in_service(k)) continue;
        std::size_t f = grid.bus_pos(grid.branches[k].from_bus);
        std::size_t t = grid.bus_pos(grid.branches[k].to_bus);
        adj[f].push_back(t);
        adj[t].push_back(f);
    }
    std::vector<char> seen(n, 0);
    std::queue<std::size_t> q;
    q.push(grid.slack_pos());
    seen[grid.slack_pos()] = 1;
    while (!q.empty()) {
        std::size_t u = q.front();
        q.pop();
        for (std::size_t w : adj[u])
            if (!seen[w]) {
                seen[w] = 1;
                q.push(w);
            }
    }
    return seen;
}

/// Oracle verdict: every bus with nonzero load or an in-service generator
/// must be reachable from the slack.
inline bool bfs_connected(const GridCase& grid, const TopologyStatus& status) {
    auto seen = bfs_reachable_from_slack(grid, status);
    std::vector<char> needs(grid.n_bus(), 0);
    for (std::size_t i = 0; i < grid.n_bus(); ++i)
        if (grid.buses[i].p_load != 0.0 || grid.buses[i].q_load != 0.0) needs[i] = 1;
    for (const Generator& g : grid.generators)
        if (g.status) needs[grid.bus_pos(g.bus)] = 1;
    for (std::size_t i = 0; i < grid.n_bus(); ++i)
        if (needs[i] && !seen[i]) return false;
    return true;
}

} // namespace gridswitch::testing
