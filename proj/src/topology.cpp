#include "adnet/topology.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>

#include "adnet/errors.hpp"
#include "adnet/rng.hpp"

namespace adnet {

namespace {

constexpr int kRandomGraphRetries = 1000;
constexpr double kStochasticTolerance = 1e-12;
constexpr double kSpectralCrossCheck = 1e-10;

void add_edge(std::vector<std::pair<int, int>>& edges, int a, int b) {
    if (a == b) return;
    edges.emplace_back(std::min(a, b), std::max(a, b));
}

void normalize(std::vector<std::pair<int, int>>& edges) {
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

int integer_sqrt(int K) {
    int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(K))));
    return r * r == K ? r : -1;
}

}  // namespace

TopologyKind parse_topology_kind(std::string_view name) {
    if (name == "line") return TopologyKind::line;
    if (name == "cycle") return TopologyKind::cycle;
    if (name == "grid") return TopologyKind::grid;
    if (name == "complete") return TopologyKind::complete;
    if (name == "random") return TopologyKind::random;
    throw InvalidInput("unknown topology kind '" + std::string(name) + "'");
}

std::string_view to_string(TopologyKind kind) {
    switch (kind) {
        case TopologyKind::line: return "line";
        case TopologyKind::cycle: return "cycle";
        case TopologyKind::grid: return "grid";
        case TopologyKind::complete: return "complete";
        case TopologyKind::random: return "random";
    }
    return "unknown";
}

std::vector<int> Graph::degrees() const {
    std::vector<int> deg(static_cast<std::size_t>(K), 0);
    for (auto [a, b] : edges) {
        ++deg[a];
        ++deg[b];
    }
    return deg;
}

bool Graph::is_complete() const {
    return edges.size() == static_cast<std::size_t>(K) * (K - 1) / 2;
}

bool is_connected(int K, std::span<const std::pair<int, int>> edges) {
    if (K <= 1) return K == 1;
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(K));
    for (auto [a, b] : edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::vector<char> seen(static_cast<std::size_t>(K), 0);
    std::queue<int> frontier;
    frontier.push(0);
    seen[0] = 1;
    int reached = 1;
    while (!frontier.empty()) {
        const int k = frontier.front();
        frontier.pop();
        for (int l : adj[k]) {
            if (seen[l]) continue;
            seen[l] = 1;
            ++reached;
            frontier.push(l);
        }
    }
    return reached == K;
}

Graph build_graph(TopologyKind kind, int K, std::optional<double> edge_probability,
                  std::optional<std::uint64_t> seed) {
    if (K < 1) throw InvalidInput("build_graph: K must be at least 1, got " + std::to_string(K));

    Graph g;
    g.kind = kind;
    g.K = K;
    switch (kind) {
        case TopologyKind::line:
            for (int k = 0; k + 1 < K; ++k) add_edge(g.edges, k, k + 1);
            break;
        case TopologyKind::cycle:
            for (int k = 0; k < K; ++k) add_edge(g.edges, k, (k + 1) % K);
            break;
        case TopologyKind::grid: {
            const int side = integer_sqrt(K);
            if (side < 0)
                throw InvalidInput("build_graph: grid requires a perfect-square K, got " +
                                   std::to_string(K));
            for (int r = 0; r < side; ++r) {
                for (int c = 0; c < side; ++c) {
                    const int k = r * side + c;
                    if (c + 1 < side) add_edge(g.edges, k, k + 1);
                    if (r + 1 < side) add_edge(g.edges, k, k + side);
                }
            }
            break;
        }
        case TopologyKind::complete:
            for (int a = 0; a < K; ++a)
                for (int b = a + 1; b < K; ++b) add_edge(g.edges, a, b);
            break;
        case TopologyKind::random: {
            const double p = edge_probability.value_or(-1.0);
            if (!(p > 0.0 && p <= 1.0))
                throw InvalidInput("build_graph: random graphs need edge_probability in (0, 1]");
            g.edge_probability = p;
            Rng rng = make_stream({stream::kGraph, seed.value_or(0)});
            std::bernoulli_distribution coin(p);
            for (int attempt = 0; attempt < kRandomGraphRetries; ++attempt) {
                g.edges.clear();
                for (int a = 0; a < K; ++a)
                    for (int b = a + 1; b < K; ++b)
                        if (coin(rng)) g.edges.emplace_back(a, b);
                if (is_connected(K, g.edges)) return g;
            }
            throw ConstructionFailure("build_graph: no connected random graph with K=" +
                                      std::to_string(K) + ", p=" + std::to_string(p) +
                                      " after " + std::to_string(kRandomGraphRetries) +
                                      " attempts");
        }
    }
    normalize(g.edges);
    return g;
}

SparseWeights SparseWeights::from_dense(const Matrix& a) {
    SparseWeights w;
    const std::size_t K = a.rows();
    w.offsets.reserve(K + 1);
    w.offsets.push_back(0);
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t l = 0; l < K; ++l) {
            const double alk = a(l, k);
            if (alk == 0.0) continue;
            w.sources.push_back(static_cast<int>(l));
            w.weights.push_back(alk);
        }
        w.offsets.push_back(w.sources.size());
    }
    return w;
}

CombinationMatrix make_combination(SymMatrix A) {
    const std::size_t K = A.size();
    if (K == 0) throw InvalidInput("make_combination: empty matrix");

    for (std::size_t i = 0; i < K; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < K; ++j) {
            if (A(i, j) < 0.0)
                throw InvalidInput("make_combination: negative weight at (" + std::to_string(i) +
                                   "," + std::to_string(j) + ")");
            row += A(i, j);
        }
        // Symmetry makes the column sums equal to the row sums.
        if (std::abs(row - 1.0) > kStochasticTolerance)
            throw InvalidInput("make_combination: row " + std::to_string(i) + " sums to " +
                               std::to_string(row));
    }

    CombinationMatrix c;
    Matrix abar(K, K);
    Matrix i_minus_abar(K, K);
    for (std::size_t i = 0; i < K; ++i) {
        for (std::size_t j = 0; j < K; ++j) {
            const double delta = i == j ? 1.0 : 0.0;
            abar(i, j) = 0.5 * (A(i, j) + delta);
            i_minus_abar(i, j) = delta - abar(i, j);
        }
    }

    const EigenDecomposition eig_a = sym_eig(A);
    EigenDecomposition eig_v = sym_eig(SymMatrix(i_minus_abar));

    c.eigenvalues = eig_a.values;
    if (K == 1) {
        c.lambda2 = 0.0;
        c.lambdaK = 0.0;
    } else {
        c.lambda2 = eig_a.values[1];
        c.lambdaK = eig_a.values[K - 1];
    }
    c.lambda = std::max(std::abs(c.lambda2), std::abs(c.lambdaK));
    c.lambda_prime = 0.5 * (1.0 + c.lambda2);
    if (K > 1) {
        // eig(I - Abar) ascending from the back: index K-2 holds 1 - lambda2(Abar).
        const double lambda2_abar = 1.0 - eig_v.values[K - 2];
        if (std::abs(lambda2_abar - c.lambda_prime) > kSpectralCrossCheck)
            throw NumericFailure("make_combination: lambda' cross-check failed (" +
                                 std::to_string(lambda2_abar) + " vs " +
                                 std::to_string(c.lambda_prime) + ")");
    }
    if (!(c.lambda < 1.0))
        throw InvalidInput("make_combination: lambda = " + std::to_string(c.lambda) +
                           " (graph disconnected or A periodic)");

    // The consensus eigenvalue of I - Abar is exactly zero on a connected graph;
    // a rounding residue of 1e-16 would leave sqrt ~ 1e-8 in V * 1.
    eig_v.values[K - 1] = 0.0;
    c.V = sym_sqrt(eig_v);
    c.A_sparse = SparseWeights::from_dense(A.dense());
    c.Abar_sparse = SparseWeights::from_dense(abar);
    c.Abar = SymMatrix(std::move(abar));
    c.A = std::move(A);
    return c;
}

CombinationMatrix metropolis_weights(const Graph& g) {
    if (!is_connected(g.K, g.edges))
        throw InvalidInput("metropolis_weights: graph is not connected");
    const auto deg = g.degrees();
    Matrix a(static_cast<std::size_t>(g.K), static_cast<std::size_t>(g.K));
    for (auto [l, k] : g.edges) {
        const double w = 1.0 / (1.0 + std::max(deg[l], deg[k]));
        a(l, k) = w;
        a(k, l) = w;
    }
    for (int k = 0; k < g.K; ++k) {
        double off = 0.0;
        for (int l = 0; l < g.K; ++l)
            if (l != k) off += a(l, k);
        a(k, k) = 1.0 - off;
    }
    return make_combination(SymMatrix(std::move(a)));
}

CombinationMatrix uniform_weights(const Graph& g) {
    if (!g.is_complete())
        throw InvalidInput("uniform_weights: graph with K=" + std::to_string(g.K) + " and " +
                           std::to_string(g.edges.size()) + " edges is not complete");
    const auto K = static_cast<std::size_t>(g.K);
    return make_combination(SymMatrix(Matrix(K, K, 1.0 / static_cast<double>(K))));
}

std::vector<GapSample> spectral_gap_scan(TopologyKind kind, std::span<const int> sizes) {
    std::vector<GapSample> out;
    out.reserve(sizes.size());
    for (int K : sizes) {
        const CombinationMatrix c = metropolis_weights(build_graph(kind, K, 0.5, 0));
        out.push_back({K, c.gap()});
    }
    return out;
}

}  // namespace adnet
