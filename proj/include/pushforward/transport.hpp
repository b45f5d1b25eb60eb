#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pushforward {

struct TransportEntry {
    std::size_t source = 0;
    std::size_t target = 0;
    double mass = 0.0;
};

/// A coupling between two atom lists: positive masses on (source, target)
/// pairs whose row sums are the source weights and column sums the target
/// weights.
struct TransportPlan {
    std::vector<TransportEntry> pairs;
    double cost = 0.0;
};

/// Exact minimum-cost transportation problem on the complete bipartite graph.
///
/// `cost` is row-major with supply.size() rows and demand.size() columns.
/// Solved by a primal network simplex over an artificial-root starting basis
/// with strongly feasible leaving-arc selection and block-search pricing.
/// Supplies and demands must be positive with (nearly) equal totals.
TransportPlan solve_transport(std::span<const double> supply, std::span<const double> demand,
                              std::span<const double> cost);

/// Maximum flow from a source through side A (capacities `a`) across the
/// allowed edges (row-major boolean mask) into side B (capacities `b`).
double bipartite_max_flow(std::span<const double> a, std::span<const double> b,
                          std::span<const unsigned char> allowed);

}  // namespace pushforward
