#include "fluhgam/geography.hpp"

#include "fluhgam/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fluhgam {

Geography::Geography(std::vector<GeoUnit> units) : units_(std::move(units)) {
    if (units_.empty()) throw ValidationError("geography has no units");
    std::unordered_map<std::string, std::size_t> region_index;
    for (std::size_t i = 0; i < units_.size(); ++i) {
        const GeoUnit& u = units_[i];
        if (u.unit_id.empty()) throw ValidationError("empty unit_id");
        if (u.population <= 0.0) {
            throw ValidationError("unit '" + u.unit_id + "' has non-positive population");
        }
        if (!index_.emplace(u.unit_id, i).second) {
            throw ValidationError("duplicate unit_id '" + u.unit_id + "'");
        }
        auto [it, inserted] = region_index.emplace(u.region_id, regions_.size());
        if (inserted) {
            regions_.push_back(u.region_id);
            region_members_.emplace_back();
        }
        unit_region_.push_back(it->second);
        region_members_[it->second].push_back(i);
    }
}

std::size_t Geography::unit_index(const std::string& unit_id) const {
    auto it = index_.find(unit_id);
    if (it == index_.end()) throw UnknownUnit("unknown unit '" + unit_id + "'");
    return it->second;
}

bool Geography::has_unit(const std::string& unit_id) const {
    return index_.count(unit_id) > 0;
}

Geography Geography::subset(const std::vector<std::string>& unit_ids) const {
    std::vector<GeoUnit> kept;
    kept.reserve(unit_ids.size());
    for (const auto& id : unit_ids) kept.push_back(units_[unit_index(id)]);
    return Geography(std::move(kept));
}

namespace {

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

} // namespace

AdjacencyGraph build_adjacency(const std::vector<GeoUnit>& units,
                               const std::vector<std::pair<std::string, std::string>>& neighbor_pairs) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < units.size(); ++i) index.emplace(units[i].unit_id, i);

    AdjacencyGraph g;
    g.nodes.reserve(units.size());
    for (const auto& u : units) g.nodes.push_back(u.unit_id);

    UnionFind uf(units.size());
    std::vector<AdjacencyGraph::Edge> edges;
    for (const auto& [raw_a, raw_b] : neighbor_pairs) {
        auto ia = index.find(raw_a);
        auto ib = index.find(raw_b);
        if (ia == index.end()) throw UnknownUnit("adjacency references unknown unit '" + raw_a + "'");
        if (ib == index.end()) throw UnknownUnit("adjacency references unknown unit '" + raw_b + "'");
        if (raw_a == raw_b) {
            throw ValidationError("self-loop on unit '" + raw_a + "' not allowed");
        }
        const GeoUnit& ua = units[ia->second];
        const GeoUnit& ub = units[ib->second];
        const double dx = ua.centroid_x - ub.centroid_x;
        const double dy = ua.centroid_y - ub.centroid_y;
        const double dist = std::sqrt(dx * dx + dy * dy);
        if (dist <= 0.0) {
            throw CoincidentCentroids("units '" + raw_a + "' and '" + raw_b +
                                      "' have coincident centroids");
        }
        AdjacencyGraph::Edge e{std::min(raw_a, raw_b), std::max(raw_a, raw_b), 1.0 / dist};
        edges.push_back(std::move(e));
        uf.unite(ia->second, ib->second);
    }

    // Deduplicate repeated pairs, keeping one edge per unordered pair.
    std::sort(edges.begin(), edges.end(), [](const auto& x, const auto& y) {
        return std::tie(x.a, x.b) < std::tie(y.a, y.b);
    });
    edges.erase(std::unique(edges.begin(), edges.end(),
                            [](const auto& x, const auto& y) { return x.a == y.a && x.b == y.b; }),
                edges.end());
    g.edges = std::move(edges);

    if (!units.empty()) {
        const std::size_t root = uf.find(0);
        for (std::size_t i = 1; i < units.size(); ++i) {
            if (uf.find(i) != root) {
                throw DisconnectedGraph("adjacency graph is not connected (unit '" +
                                        units[i].unit_id + "' unreachable)");
            }
        }
    }
    return g;
}

Eigen::MatrixXd graph_laplacian(const AdjacencyGraph& g, const std::vector<std::string>& order) {
    const std::size_t n = order.size();
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < n; ++i) pos.emplace(order[i], i);
    if (pos.size() != n || n != g.nodes.size()) {
        throw ValidationError("graph_laplacian: order must be a permutation of the graph nodes");
    }
    for (const auto& node : g.nodes) {
        if (!pos.count(node)) {
            throw ValidationError("graph_laplacian: node '" + node + "' missing from order");
        }
    }
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                static_cast<Eigen::Index>(n));
    for (const auto& e : g.edges) {
        const auto i = static_cast<Eigen::Index>(pos.at(e.a));
        const auto j = static_cast<Eigen::Index>(pos.at(e.b));
        lap(i, j) -= e.weight;
        lap(j, i) -= e.weight;
        lap(i, i) += e.weight;
        lap(j, j) += e.weight;
    }
    return lap;
}

} // namespace fluhgam
