#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "vslkit/mvdp.hpp"

namespace vslkit::roadworld {

enum class RoadType { Residential, Primary, Unclassified, Tertiary, LivingStreet, Secondary };

inline constexpr std::size_t kNumRoadTypes = 6;

std::string_view road_type_name(RoadType t);
/// Throws std::invalid_argument naming the type for unknown names.
RoadType parse_road_type(std::string_view name);

struct Edge {
    std::int64_t id = 0;
    std::int64_t from = 0;
    std::int64_t to = 0;
    RoadType type = RoadType::Residential;
    double length_m = 0.0;
};

/// Directed road network.  Edges are states of the route-choice process.
struct RoadGraph {
    std::vector<std::int64_t> nodes;
    std::vector<Edge> edges;
};

/// Raw cost triple; order matches the value order (su, co, ef).
struct Costs {
    double fuel = 0.0;
    double comfort = 0.0;
    double time = 0.0;
};

/// Per-road-type cost weights, multiplied by segment length.
struct RoadCostTable {
    std::array<Costs, kNumRoadTypes> weights;

    static RoadCostTable defaults();
    const Costs& operator[](RoadType t) const { return weights[static_cast<std::size_t>(t)]; }
};

/// Throws std::invalid_argument when endpoints are missing, ids repeat or lengths are not positive.
void validate_graph(const RoadGraph& graph);

/// Each cost = type weight x length.
Costs edge_raw_costs(const RoadGraph& graph, const RoadCostTable& table, std::size_t edge_index);

/// Per-edge costs divided by M_k = horizon x (max per-edge raw cost k), an upper
/// bound on the k-cost of any horizon-step path.  Values are positive costs; the
/// reward features are their negations.
std::vector<Costs> normalize_costs(const RoadGraph& graph, const RoadCostTable& table, std::size_t horizon);

/// Route-choice process: states are edges (in graph order); action k at edge e
/// moves to the k-th outgoing edge (by edge id) of e's head node.  The reward
/// features of (e, k) are the negated normalized costs of the entered edge.
/// The destination edge is absorbing with a single zero-reward action.
/// Values: su (fuel), co (comfort), ef (time); rewards equal the features.
Mvdp build_mvdp(const RoadGraph& graph, const RoadCostTable& table, std::int64_t destination_edge_id,
                std::size_t horizon);

/// State index of an edge id in a process built from `graph`.
StateId state_of_edge(const RoadGraph& graph, std::int64_t edge_id);

/// Text format: `NODE <id>` and `EDGE <id> <from> <to> <type> <length_m>` lines, `#` comments.
RoadGraph load_graph(std::istream& in);
RoadGraph load_graph(const std::filesystem::path& path);
void save_graph(std::ostream& out, const RoadGraph& graph);

/// Connected grid-with-diagonals network of one-way streets.
///
/// Nodes sit on a near-square grid.  Row streets alternate east/west and
/// column streets alternate south/north; reverse edges are added where needed
/// to make the graph strongly connected, then seeded diagonals are added until
/// the edge count reaches 2 x n_nodes.  Every 4th row/column street is an
/// arterial (Primary or Secondary, 50/50); other segments draw Residential
/// 40%, Tertiary 25%, Unclassified 20%, LivingStreet 15%.  Lengths are uniform
/// in [50, 500] meters.
RoadGraph generate_synthetic_network(std::size_t n_nodes, std::uint64_t seed);

/// CSV of per-edge features: edge id, raw fuel/comfort/time, normalized triple.
void dump_features_csv(std::ostream& out, const RoadGraph& graph, const RoadCostTable& table, std::size_t horizon);

}  // namespace vslkit::roadworld
