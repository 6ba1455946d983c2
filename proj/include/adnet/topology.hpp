#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "adnet/linalg.hpp"

namespace adnet {

enum class TopologyKind { line, cycle, grid, complete, random };

TopologyKind parse_topology_kind(std::string_view name);
std::string_view to_string(TopologyKind kind);

/// Undirected, connected graph over agents 0..K-1 without self-loops.
struct Graph {
    TopologyKind kind = TopologyKind::complete;
    int K = 0;
    std::vector<std::pair<int, int>> edges;  // first < second, sorted, unique
    double edge_probability = 1.0;           // meaningful for random graphs only

    std::vector<int> degrees() const;
    bool is_complete() const;
};

bool is_connected(int K, std::span<const std::pair<int, int>> edges);

/// Throws InvalidInput on bad sizes (grid needs a perfect square) and
/// ConstructionFailure when no connected random graph appears in 1000 draws.
Graph build_graph(TopologyKind kind, int K, std::optional<double> edge_probability = {},
                  std::optional<std::uint64_t> seed = {});

/// Column-compressed weights: for agent k, `sources[offsets[k]..offsets[k+1])`
/// are the agents l with a_{lk} != 0 and `weights` the matching a_{lk}.
struct SparseWeights {
    std::vector<std::size_t> offsets;
    std::vector<int> sources;
    std::vector<double> weights;

    static SparseWeights from_dense(const Matrix& a);
    std::size_t agents() const noexcept { return offsets.empty() ? 0 : offsets.size() - 1; }
};

/// Symmetric doubly-stochastic combination matrix and derived quantities.
struct CombinationMatrix {
    SymMatrix A;
    SymMatrix Abar;  // (A + I) / 2
    SymMatrix V;     // PSD, V * V = I - Abar
    std::vector<double> eigenvalues;  // of A, descending
    double lambda2 = 0.0;
    double lambdaK = 0.0;
    double lambda = 0.0;        // max(|lambda2|, |lambdaK|)
    double lambda_prime = 0.5;  // (1 + lambda2) / 2
    SparseWeights A_sparse;
    SparseWeights Abar_sparse;

    int K() const noexcept { return static_cast<int>(A.size()); }
    double gap() const noexcept { return 1.0 - lambda; }
};

/// Validates the doubly-stochastic invariants of `A` and derives the rest.
CombinationMatrix make_combination(SymMatrix A);

CombinationMatrix metropolis_weights(const Graph& g);

/// 1/K everywhere. Throws InvalidInput unless `g` is complete.
CombinationMatrix uniform_weights(const Graph& g);

struct GapSample {
    int K;
    double gap;
};

/// 1 - lambda of the Metropolis matrix for each size.
std::vector<GapSample> spectral_gap_scan(TopologyKind kind, std::span<const int> sizes);

}  // namespace adnet
