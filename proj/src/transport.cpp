#include "pushforward/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <string>

#include "pushforward/errors.hpp"

namespace pushforward {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Primal network simplex specialised to the transportation problem.
//
// Nodes 0..m-1 are sources, m..m+n-1 sinks and m+n the artificial root.
// Arc a < m*n joins source a/n to sink a%n; arc m*n+u joins node u to the
// root (source -> root, root -> sink). All capacities are infinite, so every
// non-tree arc sits at flow zero.
class NetworkSimplex {
public:
    NetworkSimplex(std::span<const double> supply, std::span<const double> demand,
                   std::span<const double> cost)
        : m_(supply.size()), n_(demand.size()), cost_(cost) {
        nodes_ = m_ + n_ + 1;
        root_ = m_ + n_;
        real_arcs_ = m_ * n_;
        arcs_ = real_arcs_ + m_ + n_;
        double max_cost = 0.0;
        for (double c : cost_) max_cost = std::max(max_cost, c);
        art_cost_ = (max_cost + 1.0) * static_cast<double>(nodes_);
        eps_ = 1e-14 * art_cost_;

        flow_.assign(arcs_, 0.0);
        in_tree_.assign(arcs_, 0);
        tree_adj_.assign(nodes_, {});
        for (std::size_t u = 0; u < m_ + n_; ++u) {
            const std::size_t a = real_arcs_ + u;
            flow_[a] = u < m_ ? supply[u] : demand[u - m_];
            in_tree_[a] = 1;
            tree_adj_[u].push_back(a);
            tree_adj_[root_].push_back(a);
        }
        parent_.assign(nodes_, 0);
        pred_.assign(nodes_, 0);
        pred_up_.assign(nodes_, 0);
        depth_.assign(nodes_, 0);
        pi_.assign(nodes_, 0.0);
        rebuild_tree();
        block_ = std::max<std::size_t>(10, static_cast<std::size_t>(std::sqrt(static_cast<double>(arcs_))));
    }

    void run() {
        const std::size_t max_pivots = 50 * arcs_ + 1000;
        std::size_t pivots = 0;
        while (auto in = find_entering()) {
            pivot(*in);
            if (++pivots > max_pivots) throw ConvergenceFailure("network simplex exceeded its pivot budget");
        }
    }

    TransportPlan plan() const {
        TransportPlan p;
        for (std::size_t a = 0; a < real_arcs_; ++a) {
            if (flow_[a] > 0.0) {
                p.pairs.push_back({a / n_, a % n_, flow_[a]});
                p.cost += flow_[a] * cost_[a];
            }
        }
        return p;
    }

private:
    std::size_t src(std::size_t a) const {
        if (a < real_arcs_) return a / n_;
        const std::size_t u = a - real_arcs_;
        return u < m_ ? u : root_;
    }
    std::size_t tgt(std::size_t a) const {
        if (a < real_arcs_) return m_ + a % n_;
        const std::size_t u = a - real_arcs_;
        return u < m_ ? root_ : u;
    }
    double arc_cost(std::size_t a) const { return a < real_arcs_ ? cost_[a] : art_cost_; }
    double reduced(std::size_t a) const { return arc_cost(a) + pi_[src(a)] - pi_[tgt(a)]; }

    // Recomputes parent/pred/depth/potentials from the tree adjacency.
    void rebuild_tree() {
        stack_.clear();
        stack_.push_back(root_);
        parent_[root_] = root_;
        depth_[root_] = 0;
        pi_[root_] = 0.0;
        while (!stack_.empty()) {
            const std::size_t u = stack_.back();
            stack_.pop_back();
            for (std::size_t a : tree_adj_[u]) {
                if (u != root_ && a == pred_[u]) continue;
                const std::size_t s = src(a);
                const std::size_t v = s == u ? tgt(a) : s;
                parent_[v] = u;
                pred_[v] = a;
                pred_up_[v] = s == v;
                depth_[v] = depth_[u] + 1;
                pi_[v] = s == u ? pi_[u] + arc_cost(a) : pi_[u] - arc_cost(a);
                stack_.push_back(v);
            }
        }
    }

    std::optional<std::size_t> find_entering() {
        double best = -eps_;
        std::size_t best_arc = arcs_;
        std::size_t scanned = 0;
        std::size_t in_block = 0;
        while (scanned < arcs_) {
            const std::size_t a = next_arc_;
            next_arc_ = next_arc_ + 1 == arcs_ ? 0 : next_arc_ + 1;
            ++scanned;
            if (!in_tree_[a]) {
                const double rc = reduced(a);
                if (rc < best) {
                    best = rc;
                    best_arc = a;
                }
            }
            if (++in_block == block_) {
                if (best_arc != arcs_) return best_arc;
                in_block = 0;
            }
        }
        if (best_arc != arcs_) return best_arc;
        return std::nullopt;
    }

    void pivot(std::size_t in) {
        const std::size_t first = src(in);
        const std::size_t second = tgt(in);
        std::size_t a = first, b = second;
        while (a != b) {
            if (depth_[a] >= depth_[b]) {
                a = parent_[a];
            } else {
                b = parent_[b];
            }
        }
        const std::size_t join = a;

        // Strongly feasible leaving-arc rule: strict on the first path,
        // non-strict on the second.
        double delta = kInf;
        std::size_t leave = nodes_;
        for (std::size_t u = first; u != join; u = parent_[u]) {
            const double d = pred_up_[u] ? flow_[pred_[u]] : kInf;
            if (d < delta) {
                delta = d;
                leave = u;
            }
        }
        for (std::size_t u = second; u != join; u = parent_[u]) {
            const double d = pred_up_[u] ? kInf : flow_[pred_[u]];
            if (d <= delta) {
                delta = d;
                leave = u;
            }
        }
        if (leave == nodes_ || !std::isfinite(delta)) throw Error("transport problem is unbounded");

        if (delta > 0.0) {
            flow_[in] += delta;
            for (std::size_t u = first; u != join; u = parent_[u]) {
                flow_[pred_[u]] += pred_up_[u] ? -delta : delta;
            }
            for (std::size_t u = second; u != join; u = parent_[u]) {
                flow_[pred_[u]] += pred_up_[u] ? delta : -delta;
            }
        }
        const std::size_t out = pred_[leave];
        flow_[out] = 0.0;
        in_tree_[out] = 0;
        in_tree_[in] = 1;
        for (std::size_t u : {src(out), tgt(out)}) std::erase(tree_adj_[u], out);
        tree_adj_[first].push_back(in);
        tree_adj_[second].push_back(in);
        rebuild_tree();
    }

    std::size_t m_, n_;
    std::span<const double> cost_;
    std::size_t nodes_ = 0, root_ = 0, real_arcs_ = 0, arcs_ = 0;
    double art_cost_ = 0.0;
    double eps_ = 0.0;
    std::vector<double> flow_;
    std::vector<unsigned char> in_tree_;
    std::vector<std::vector<std::size_t>> tree_adj_;
    std::vector<std::size_t> parent_, pred_, depth_;
    std::vector<unsigned char> pred_up_;
    std::vector<double> pi_;
    std::vector<std::size_t> stack_;
    std::size_t block_ = 10;
    std::size_t next_arc_ = 0;
};

void check_marginal(std::span<const double> w, const char* what) {
    if (w.empty()) throw ParameterError(std::string(what) + " is empty");
    for (double x : w) {
        if (!(x > 0.0) || !std::isfinite(x)) throw ParameterError(std::string(what) + " must be positive");
    }
}

}  // namespace

TransportPlan solve_transport(std::span<const double> supply, std::span<const double> demand,
                              std::span<const double> cost) {
    check_marginal(supply, "supply");
    check_marginal(demand, "demand");
    if (cost.size() != supply.size() * demand.size()) {
        throw DimensionError("cost matrix must be " + std::to_string(supply.size()) + "x" +
                             std::to_string(demand.size()));
    }
    const double ts = std::accumulate(supply.begin(), supply.end(), 0.0);
    const double td = std::accumulate(demand.begin(), demand.end(), 0.0);
    if (std::fabs(ts - td) > 1e-9 * std::max(1.0, ts)) {
        throw ParameterError("supply and demand totals differ");
    }

    // A single source or sink forces the coupling.
    if (supply.size() == 1 || demand.size() == 1) {
        TransportPlan p;
        const bool one_source = supply.size() == 1;
        const auto& many = one_source ? demand : supply;
        for (std::size_t k = 0; k < many.size(); ++k) {
            const std::size_t i = one_source ? 0 : k;
            const std::size_t j = one_source ? k : 0;
            p.pairs.push_back({i, j, many[k]});
            p.cost += many[k] * cost[i * demand.size() + j];
        }
        return p;
    }

    NetworkSimplex ns(supply, demand, cost);
    ns.run();
    return ns.plan();
}

// ---------------------------------------------------------------------------

double bipartite_max_flow(std::span<const double> a, std::span<const double> b,
                          std::span<const unsigned char> allowed) {
    const std::size_t m = a.size();
    const std::size_t n = b.size();
    if (allowed.size() != m * n) throw DimensionError("edge mask must be m x n");

    // Dinic on source(0) -> A(1..m) -> B(m+1..m+n) -> sink(m+n+1).
    struct Edge {
        std::size_t to;
        double cap;
    };
    const std::size_t s = 0, t = m + n + 1, nodes = m + n + 2;
    std::vector<Edge> edges;
    std::vector<std::vector<std::size_t>> adj(nodes);
    auto add = [&](std::size_t u, std::size_t v, double cap) {
        adj[u].push_back(edges.size());
        edges.push_back({v, cap});
        adj[v].push_back(edges.size());
        edges.push_back({u, 0.0});
    };
    for (std::size_t i = 0; i < m; ++i) add(s, 1 + i, a[i]);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (allowed[i * n + j]) add(1 + i, 1 + m + j, kInf);
    for (std::size_t j = 0; j < n; ++j) add(1 + m + j, t, b[j]);

    constexpr double eps = 1e-15;
    std::vector<int> level(nodes);
    std::vector<std::size_t> it(nodes);
    double total = 0.0;
    auto bfs = [&] {
        std::fill(level.begin(), level.end(), -1);
        std::queue<std::size_t> q;
        level[s] = 0;
        q.push(s);
        while (!q.empty()) {
            const std::size_t u = q.front();
            q.pop();
            for (std::size_t e : adj[u]) {
                if (edges[e].cap > eps && level[edges[e].to] < 0) {
                    level[edges[e].to] = level[u] + 1;
                    q.push(edges[e].to);
                }
            }
        }
        return level[t] >= 0;
    };
    auto dfs = [&](auto&& self, std::size_t u, double pushed) -> double {
        if (u == t) return pushed;
        for (; it[u] < adj[u].size(); ++it[u]) {
            const std::size_t e = adj[u][it[u]];
            Edge& ed = edges[e];
            if (ed.cap > eps && level[ed.to] == level[u] + 1) {
                const double got = self(self, ed.to, std::min(pushed, ed.cap));
                if (got > 0.0) {
                    ed.cap -= got;
                    edges[e ^ 1].cap += got;
                    return got;
                }
            }
        }
        return 0.0;
    };
    while (bfs()) {
        std::fill(it.begin(), it.end(), 0);
        while (double f = dfs(dfs, s, kInf)) total += f;
    }
    return total;
}

}  // namespace pushforward
