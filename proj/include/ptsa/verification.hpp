#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "ptsa/abstraction.hpp"
#include "ptsa/mdp.hpp"

namespace ptsa {

// ---------------------------------------------------------------- transitivity

struct TransitivityResult
{
	bool passed = true;
	std::optional<std::array<int, 3>> counterexample;  // (s1, s2, s3): p12 and p23 hold, p13 fails
	std::size_t triples_checked = 0;
	bool exhaustive = false;
};

inline constexpr std::size_t kExhaustiveTripleLimit = 1000000;

// Samples triple_count random triples, then sweeps every triple when
// |S|^3 <= 10^6. Returns the first violation found.
TransitivityResult check_transitivity(const AbstractionFn &fn, const ValueTables &tables,
                                      std::size_t triple_count, std::uint64_t seed);

// ---------------------------------------------------------------- path vs node transitivity

// Small rooted tree whose nodes carry oracle states. Node 0 is the root.
struct SyntheticTree
{
	std::vector<int> parent;
	std::vector<int> depth;
	std::vector<int> state;
	std::vector<std::vector<int>> children;

	std::size_t size() const { return parent.size(); }
};

SyntheticTree random_synthetic_tree(std::uint64_t seed, int state_count, int max_depth = 3, int max_branching = 4);

// Node paths of length `length` that start at a child of `parent`.
std::vector<std::vector<int>> sibling_paths(const SyntheticTree &tree, int parent, int length);

struct TreeEquivalence
{
	bool node_transitive = true;
	bool path_transitive = true;  // over the tree's sibling paths plus single-node embeddings
	bool witness_in_tree = false; // a path violation was found among the tree's own paths
	std::optional<std::array<int, 3>> node_counterexample;  // node ids
	std::optional<std::array<std::vector<int>, 3>> path_counterexample;
	bool consistent() const { return node_transitive == path_transitive; }
};

// Throws std::invalid_argument for the probability abstraction.
TreeEquivalence check_tree_equivalence(const AbstractionFn &fn, const ValueTables &tables, const SyntheticTree &tree);

struct EquivalenceResult
{
	bool passed = true;
	int trees_checked = 0;
	int node_transitive_trees = 0;
	int witnesses_in_tree = 0;
	std::vector<int> exceptions;  // indices of trees where the two sides disagree
};

EquivalenceResult check_path_node_equivalence(const AbstractionFn &fn, const ValueTables &tables, int tree_samples,
                                              std::uint64_t seed);

// p12*p23*p13 + (1 - p13)*(1 - p12*p23)
double prob_transitivity(double p12, double p23, double p13);

// ---------------------------------------------------------------- error bound

double aggregation_error(std::span<const std::pair<double, double>> aggregated_values);
double aggregation_error(std::span<const AggregationEvent> events);

// log_|A|(N_s + 1) * zeta, times (|A| - 1) when the predicate is not transitive.
double error_bound(int action_count, int simulations, double zeta, bool transitive);

// Value-loss bound zeta of a predicate: 2*eps*R_max/(1-gamma)^2 for the
// epsilon kinds (d plays eps for the bucket kind), 0 for exact kinds, the
// configured zeta for the probability abstraction.
double loss_bound(const AbstractionFn &fn, double r_max, double gamma);

// ---------------------------------------------------------------- clustering

struct Clustering
{
	std::vector<std::vector<std::size_t>> clusters;
	std::size_t comparisons = 0;
};

// Single pass: each item is compared with one representative per cluster.
template <typename Aggregable> Clustering greedy_clusters(std::size_t n, Aggregable &&aggregable)
{
	Clustering out;
	for (std::size_t i = 0; i < n; ++i) {
		bool placed = false;
		for (auto &cluster : out.clusters) {
			++out.comparisons;
			if (aggregable(cluster.front(), i)) {
				cluster.push_back(i);
				placed = true;
				break;
			}
		}
		if (!placed)
			out.clusters.push_back({i});
	}
	return out;
}

// Paths are state sequences; unequal lengths never aggregate.
bool paths_aggregable(std::span<const int> a, std::span<const int> b, const AbstractionFn &fn,
                      const ValueTables &tables);

Clustering smallest_abstract_space(std::span<const std::vector<int>> paths, const AbstractionFn &fn,
                                   const ValueTables &tables);

// Exhaustive set-partition search for the fewest blocks whose members are
// pairwise aggregable. Intended for n <= 10.
template <typename Aggregable> std::size_t minimum_partition_size(std::size_t n, Aggregable &&aggregable)
{
	if (n == 0)
		return 0;
	std::vector<std::vector<char>> rel(n, std::vector<char>(n, 0));
	for (std::size_t i = 0; i < n; ++i)
		for (std::size_t j = 0; j < n; ++j)
			rel[i][j] = i == j || (aggregable(i, j) && aggregable(j, i));
	std::size_t best = n;
	std::vector<std::size_t> block(n, 0);
	// restricted growth strings
	auto recurse = [&](auto &&self, std::size_t i, std::size_t blocks) -> void {
		if (blocks >= best)
			return;
		if (i == n) {
			best = blocks;
			return;
		}
		for (std::size_t b = 0; b <= blocks; ++b) {
			bool ok = true;
			for (std::size_t j = 0; j < i && ok; ++j)
				if (block[j] == b && !rel[i][j])
					ok = false;
			if (!ok)
				continue;
			block[i] = b;
			self(self, i + 1, b == blocks ? blocks + 1 : blocks);
		}
	};
	recurse(recurse, 0, 0);
	return best;
}

} // namespace ptsa
