#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace fluhgam {

// Sub-regional unit with its catchment population (the model's offset) and a
// planar centroid used for adjacency weighting.
struct GeoUnit {
    std::string unit_id;
    std::string region_id;
    double population = 0.0;
    double centroid_x = 0.0;
    double centroid_y = 0.0;
};

// Validated unit collection with stable ordering and region lookups.
// Immutable after construction.
class Geography {
public:
    explicit Geography(std::vector<GeoUnit> units);

    const std::vector<GeoUnit>& units() const { return units_; }
    std::size_t n_units() const { return units_.size(); }

    // Regions in first-appearance order.
    const std::vector<std::string>& regions() const { return regions_; }
    std::size_t n_regions() const { return regions_.size(); }

    std::size_t unit_index(const std::string& unit_id) const; // throws UnknownUnit
    bool has_unit(const std::string& unit_id) const;
    std::size_t region_index_of_unit(std::size_t unit_idx) const { return unit_region_[unit_idx]; }

    // Units belonging to each region, as unit indices.
    const std::vector<std::vector<std::size_t>>& region_members() const { return region_members_; }

    Geography subset(const std::vector<std::string>& unit_ids) const;

private:
    std::vector<GeoUnit> units_;
    std::vector<std::string> regions_;
    std::vector<std::size_t> unit_region_;
    std::vector<std::vector<std::size_t>> region_members_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Undirected weighted graph over unit ids; symmetric by construction, no
// self-loops, strictly positive weights, connected.
struct AdjacencyGraph {
    struct Edge {
        std::string a; // lexicographically a < b
        std::string b;
        double weight;
    };
    std::vector<std::string> nodes;
    std::vector<Edge> edges;
};

// Edge weight is 1/d(centroid_a, centroid_b): closer neighbours correlate
// more. Throws UnknownUnit, CoincidentCentroids, or DisconnectedGraph (a
// disconnected graph would make the MRF penalty singular beyond its
// intended null space).
AdjacencyGraph build_adjacency(const std::vector<GeoUnit>& units,
                               const std::vector<std::pair<std::string, std::string>>& neighbor_pairs);

// L = D - W for the given unit order; symmetric PSD with L * 1 = 0.
Eigen::MatrixXd graph_laplacian(const AdjacencyGraph& g, const std::vector<std::string>& order);

} // namespace fluhgam
