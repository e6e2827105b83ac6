#include "ptsa/verification.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

#include "ptsa/common.hpp"

namespace ptsa {

namespace {

using Relation = std::vector<std::vector<char>>;

template <typename Rel> std::optional<std::array<int, 3>> first_violation(int n, const Rel &rel)
{
	for (int a = 0; a < n; ++a)
		for (int b = 0; b < n; ++b) {
			if (b == a || !rel(a, b))
				continue;
			for (int c = 0; c < n; ++c)
				if (c != a && c != b && rel(b, c) && !rel(a, c))
					return std::array<int, 3>{a, b, c};
		}
	return std::nullopt;
}

bool path_relation(RowPath a, RowPath b, const AbstractionFn &fn)
{
	AggregationEvent e = path_agg_prob(a, b, fn);
	if (fn.deterministic())
		return e.probability == 1.0;
	return e.probability >= fn.decision.tau;
}

} // namespace

TransitivityResult check_transitivity(const AbstractionFn &fn, const ValueTables &tables, std::size_t triple_count,
                                      std::uint64_t seed)
{
	fn.validate();
	const int n = tables.state_count;
	std::vector<QRow> rows;
	rows.reserve(n);
	for (int s = 0; s < n; ++s)
		rows.push_back(table_row(tables, s));
	Relation rel(n, std::vector<char>(n, 0));
	for (int a = 0; a < n; ++a)
		for (int b = 0; b < n; ++b)
			rel[a][b] = node_predicate(rows[a], rows[b], fn);
	auto holds = [&](int a, int b) { return rel[a][b] != 0; };

	TransitivityResult out;
	std::mt19937_64 rng(seed);
	for (std::size_t k = 0; k < triple_count && n > 0; ++k) {
		const int a = static_cast<int>(uniform_index(rng, n));
		const int b = static_cast<int>(uniform_index(rng, n));
		const int c = static_cast<int>(uniform_index(rng, n));
		++out.triples_checked;
		if (holds(a, b) && holds(b, c) && !holds(a, c)) {
			out.passed = false;
			out.counterexample = std::array<int, 3>{a, b, c};
			return out;
		}
	}
	const auto cube = static_cast<std::size_t>(n) * n * n;
	if (cube <= kExhaustiveTripleLimit) {
		out.exhaustive = true;
		out.triples_checked += cube;
		if (auto v = first_violation(n, holds)) {
			out.passed = false;
			out.counterexample = v;
		}
	}
	return out;
}

// ---------------------------------------------------------------- synthetic trees

SyntheticTree random_synthetic_tree(std::uint64_t seed, int state_count, int max_depth, int max_branching)
{
	if (state_count < 1 || max_depth < 1 || max_branching < 1)
		throw std::invalid_argument("random_synthetic_tree: sizes must be positive");
	std::mt19937_64 rng(seed);
	SyntheticTree t;
	auto add = [&](int parent, int depth) {
		t.parent.push_back(parent);
		t.depth.push_back(depth);
		t.state.push_back(static_cast<int>(uniform_index(rng, state_count)));
		t.children.emplace_back();
		const int id = static_cast<int>(t.parent.size()) - 1;
		if (parent >= 0)
			t.children[parent].push_back(id);
		return id;
	};
	const int target_depth = 1 + static_cast<int>(uniform_index(rng, max_depth));
	add(-1, 0);
	for (std::size_t i = 0; i < t.parent.size(); ++i) {
		if (t.depth[i] >= target_depth)
			continue;
		const int branching = 1 + static_cast<int>(uniform_index(rng, max_branching));
		for (int k = 0; k < branching; ++k)
			add(static_cast<int>(i), t.depth[i] + 1);
	}
	return t;
}

std::vector<std::vector<int>> sibling_paths(const SyntheticTree &tree, int parent, int length)
{
	std::vector<std::vector<int>> out;
	std::vector<int> current;
	auto walk = [&](auto &&self, int node) -> void {
		current.push_back(node);
		if (static_cast<int>(current.size()) == length)
			out.push_back(current);
		else
			for (int c : tree.children[node])
				self(self, c);
		current.pop_back();
	};
	for (int c : tree.children[parent])
		walk(walk, c);
	return out;
}

TreeEquivalence check_tree_equivalence(const AbstractionFn &fn, const ValueTables &tables, const SyntheticTree &tree)
{
	if (!fn.deterministic())
		throw std::invalid_argument("check_tree_equivalence: needs a deterministic predicate");
	TreeEquivalence out;

	std::map<int, int> first_node_of_state;
	for (std::size_t v = 0; v < tree.size(); ++v)
		first_node_of_state.emplace(tree.state[v], static_cast<int>(v));
	std::vector<int> states;
	for (const auto &[s, v] : first_node_of_state)
		states.push_back(s);
	std::map<int, QRow> row_of;
	for (int s : states)
		row_of.emplace(s, table_row(tables, s));

	// Node level: every triple of states that appear in the tree.
	const int n = static_cast<int>(states.size());
	Relation node_rel(n, std::vector<char>(n, 0));
	for (int a = 0; a < n; ++a)
		for (int b = 0; b < n; ++b)
			node_rel[a][b] = node_predicate(row_of.at(states[a]), row_of.at(states[b]), fn);
	if (auto v = first_violation(n, [&](int a, int b) { return node_rel[a][b] != 0; })) {
		out.node_transitive = false;
		out.node_counterexample = std::array<int, 3>{first_node_of_state.at(states[(*v)[0]]),
		                                             first_node_of_state.at(states[(*v)[1]]),
		                                             first_node_of_state.at(states[(*v)[2]])};
	}

	// Path level over the tree's own sibling paths.
	int height = 0;
	for (int d : tree.depth)
		height = std::max(height, d);
	auto rows_of = [&](const std::vector<int> &path) {
		std::vector<const QRow *> r;
		for (int v : path)
			r.push_back(&row_of.at(tree.state[v]));
		return r;
	};
	for (std::size_t p = 0; p < tree.size() && !out.witness_in_tree; ++p) {
		for (int len = 1; len <= height - tree.depth[p] && !out.witness_in_tree; ++len) {
			const auto paths = sibling_paths(tree, static_cast<int>(p), len);
			const int m = static_cast<int>(paths.size());
			if (m < 3)
				continue;
			std::vector<std::vector<const QRow *>> rows(m);
			for (int i = 0; i < m; ++i)
				rows[i] = rows_of(paths[i]);
			Relation rel(m, std::vector<char>(m, 0));
			for (int i = 0; i < m; ++i)
				for (int j = 0; j < m; ++j)
					rel[i][j] = i == j || path_relation(rows[i], rows[j], fn);
			if (auto v = first_violation(m, [&](int a, int b) { return rel[a][b] != 0; })) {
				out.witness_in_tree = true;
				out.path_counterexample = std::array<std::vector<int>, 3>{paths[(*v)[0]], paths[(*v)[1]], paths[(*v)[2]]};
			}
		}
	}

	// Single-node sibling paths built from a violating node triple.
	bool embedded_violation = false;
	if (out.node_counterexample) {
		const auto &[v1, v2, v3] = *out.node_counterexample;
		const QRow *r1 = &row_of.at(tree.state[v1]);
		const QRow *r2 = &row_of.at(tree.state[v2]);
		const QRow *r3 = &row_of.at(tree.state[v3]);
		const std::array<const QRow *, 1> b1{r1}, b2{r2}, b3{r3};
		embedded_violation = path_relation(b1, b2, fn) && path_relation(b2, b3, fn) && !path_relation(b1, b3, fn);
		if (embedded_violation && !out.path_counterexample)
			out.path_counterexample = std::array<std::vector<int>, 3>{std::vector<int>{v1}, std::vector<int>{v2},
			                                                          std::vector<int>{v3}};
	}
	out.path_transitive = !out.witness_in_tree && !embedded_violation;
	return out;
}

EquivalenceResult check_path_node_equivalence(const AbstractionFn &fn, const ValueTables &tables, int tree_samples,
                                              std::uint64_t seed)
{
	EquivalenceResult out;
	for (int t = 0; t < tree_samples; ++t) {
		const auto tree = random_synthetic_tree(hash_combine(seed, static_cast<std::uint64_t>(t)), tables.state_count);
		const auto eq = check_tree_equivalence(fn, tables, tree);
		++out.trees_checked;
		out.node_transitive_trees += eq.node_transitive ? 1 : 0;
		out.witnesses_in_tree += eq.witness_in_tree ? 1 : 0;
		if (!eq.consistent()) {
			out.passed = false;
			out.exceptions.push_back(t);
		}
	}
	return out;
}

double prob_transitivity(double p12, double p23, double p13)
{
	for (double p : {p12, p23, p13})
		if (!(p >= 0.0 && p <= 1.0))
			throw std::invalid_argument("prob_transitivity: probabilities must lie in [0, 1]");
	const double both = p12 * p23;
	return both * p13 + (1.0 - p13) * (1.0 - both);
}

// ---------------------------------------------------------------- error bound

double aggregation_error(std::span<const std::pair<double, double>> aggregated_values)
{
	double total = 0.0;
	for (const auto &[a, b] : aggregated_values)
		total += std::abs(a - b);
	return total;
}

double aggregation_error(std::span<const AggregationEvent> events)
{
	double total = 0.0;
	for (const auto &e : events)
		if (e.decided)
			total += std::abs(e.value_a - e.value_b);
	return total;
}

double error_bound(int action_count, int simulations, double zeta, bool transitive)
{
	if (action_count < 2 || simulations < 1 || !(zeta >= 0.0))
		throw std::invalid_argument("error_bound: need |A| >= 2, N_s >= 1, zeta >= 0");
	const double depth = std::log(static_cast<double>(simulations) + 1.0) / std::log(static_cast<double>(action_count));
	const double bound = depth * zeta;
	return transitive ? bound : (action_count - 1) * bound;
}

double loss_bound(const AbstractionFn &fn, double r_max, double gamma)
{
	const double scale = 2.0 * r_max / ((1.0 - gamma) * (1.0 - gamma));
	switch (fn.kind) {
	case AbstractionKind::PhiAStar:
	case AbstractionKind::PhiQStar:
		return 0.0;
	case AbstractionKind::PhiAStarEps:
	case AbstractionKind::PhiQStarEps:
		return *fn.epsilon * scale;
	case AbstractionKind::PhiQBucket:
		return *fn.bucket * scale;
	case AbstractionKind::PhiQPsiAlpha:
		if (!fn.zeta)
			throw std::invalid_argument("loss_bound: the probability abstraction needs an explicit zeta");
		return *fn.zeta;
	}
	return 0.0;
}

// ---------------------------------------------------------------- clustering

bool paths_aggregable(std::span<const int> a, std::span<const int> b, const AbstractionFn &fn,
                      const ValueTables &tables)
{
	if (a.size() != b.size() || a.empty())
		return false;
	std::vector<QRow> ra, rb;
	for (int s : a)
		ra.push_back(table_row(tables, s));
	for (int s : b)
		rb.push_back(table_row(tables, s));
	std::vector<const QRow *> pa, pb;
	for (const auto &r : ra)
		pa.push_back(&r);
	for (const auto &r : rb)
		pb.push_back(&r);
	return path_relation(pa, pb, fn);
}

Clustering smallest_abstract_space(std::span<const std::vector<int>> paths, const AbstractionFn &fn,
                                   const ValueTables &tables)
{
	fn.validate();
	return greedy_clusters(paths.size(), [&](std::size_t i, std::size_t j) {
		return paths_aggregable(paths[i], paths[j], fn, tables);
	});
}

} // namespace ptsa
