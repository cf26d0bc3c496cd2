#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <queue>
#include <vector>

namespace dslab {

// Dinic max-flow over integral capacities.
class MaxFlow {
public:
    struct Arc {
        int to;
        std::int64_t cap;
    };

    explicit MaxFlow(int nodes) : adj_(static_cast<std::size_t>(nodes)) {}

    /// Returns the arc id; the reverse arc is id ^ 1.
    int add_arc(int from, int to, std::int64_t cap) {
        int id = static_cast<int>(arcs_.size());
        arcs_.push_back({to, cap});
        adj_[from].push_back(id);
        arcs_.push_back({from, 0});
        adj_[to].push_back(id + 1);
        return id;
    }

    /// Flow currently pushed through arc `id`.
    std::int64_t flow_on(int id) const { return arcs_[id ^ 1].cap; }

    /// Nodes reachable from `source` in the residual graph after run(): the
    /// source side of the minimal minimum cut.
    std::vector<bool> source_side(int source) const {
        std::vector<bool> seen(adj_.size(), false);
        std::vector<int> stack{source};
        seen[source] = true;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int id : adj_[u]) {
                const auto& a = arcs_[id];
                if (a.cap > 0 && !seen[a.to]) {
                    seen[a.to] = true;
                    stack.push_back(a.to);
                }
            }
        }
        return seen;
    }

    std::int64_t run(int source, int sink) {
        std::int64_t total = 0;
        while (bfs(source, sink)) {
            it_.assign(adj_.size(), 0);
            while (auto pushed = dfs(source, sink, std::numeric_limits<std::int64_t>::max()))
                total += pushed;
        }
        return total;
    }

private:
    bool bfs(int s, int t) {
        level_.assign(adj_.size(), -1);
        std::queue<int> q;
        level_[s] = 0;
        q.push(s);
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (int id : adj_[u]) {
                const auto& a = arcs_[id];
                if (a.cap > 0 && level_[a.to] < 0) {
                    level_[a.to] = level_[u] + 1;
                    q.push(a.to);
                }
            }
        }
        return level_[t] >= 0;
    }

    std::int64_t dfs(int u, int t, std::int64_t limit) {
        if (u == t)
            return limit;
        for (auto& i = it_[u]; i < adj_[u].size(); ++i) {
            int id = adj_[u][i];
            auto& a = arcs_[id];
            if (a.cap > 0 && level_[a.to] == level_[u] + 1) {
                if (auto got = dfs(a.to, t, std::min(limit, a.cap))) {
                    a.cap -= got;
                    arcs_[id ^ 1].cap += got;
                    return got;
                }
            }
        }
        return 0;
    }

    std::vector<Arc> arcs_;
    std::vector<std::vector<int>> adj_;
    std::vector<int> level_;
    std::vector<std::size_t> it_;
};

} // namespace dslab
