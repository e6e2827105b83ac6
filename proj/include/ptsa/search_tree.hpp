#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <json.hpp>

#include "ptsa/abstraction.hpp"
#include "ptsa/environment.hpp"

namespace ptsa {

using NodeId = std::uint32_t;

struct SearchNode
{
	NodeId id = 0;
	std::optional<NodeId> parent;
	int action_from_parent = -1;
	double prior = 0.0;
	std::int64_t visit_count = 0;
	double value_sum = 0.0;
	double reward = 0.0;
	std::optional<EnvState> model_state;
	std::map<int, NodeId> children;
	std::vector<int> legal_actions;
	bool expanded = false;
	bool terminal = false;
	bool pruned = false;

	// mean value from the perspective of the player who chose this node
	double mean_value() const { return visit_count > 0 ? value_sum / static_cast<double>(visit_count) : 0.0; }
};

// Where the abstraction reads Q rows from.
enum class QSource {
	Tree,    // children's running mean values (unvisited = 0)
	Model,   // r + gamma * V from the model, one query per legal action
	Oracle,  // exact Q* tables (tabular environments only)
};

std::string_view to_string(QSource source);
QSource q_source_from_string(std::string_view name);

struct SearchConfig
{
	int simulations = 30;
	double c_puct = 1.25;
	// When positive, c(s) = c_puct + log((N(s) + c_base + 1) / c_base).
	double c_base = 0.0;
	std::optional<int> sampled_actions;
	std::uint64_t seed = 0;
	std::optional<AbstractionFn> abstraction;
	QSource q_source = QSource::Tree;

	void validate(int action_count) const;
	bool operator==(const SearchConfig &) const = default;
};

nlohmann::json search_config_to_json(const SearchConfig &config);
SearchConfig search_config_from_json(const nlohmann::json &doc);

class SearchTree
{
public:
	SearchTree();

	NodeId root() const { return 0; }
	const SearchNode &node(NodeId id) const { return nodes_.at(id); }
	SearchNode &node(NodeId id) { return nodes_.at(id); }
	std::size_t size() const { return nodes_.size(); }

	NodeId add_child(NodeId parent, int action, double prior);

	// Unpruned expanded nodes, root included.
	std::size_t live_expanded_count() const;
	std::int64_t child_visit_sum(NodeId id) const;

	nlohmann::json to_json() const;

private:
	std::vector<SearchNode> nodes_;
};

inline constexpr int kTreeSchemaVersion = 1;

// Root-anchored node sequence; nodes[0] is a child of the root.
struct SearchPath
{
	std::uint64_t id = 0;
	std::vector<NodeId> nodes;
	double terminal_value = 0.0;

	std::size_t length() const { return nodes.size(); }
};

// b.V reading used to pick the pruned path: the final node's mean value.
double path_value(const SearchTree &tree, const SearchPath &path);

// Argmax of Q + c * P * sqrt(sum_b N(s,b)) / (1 + N(s,a)) over unpruned
// children; ties go to the lowest action.
int puct_select(const SearchTree &tree, NodeId node, const SearchConfig &config);

// Creates children for `legal` (subsampled without replacement in
// proportion to the priors when config.sampled_actions is set) and stores the
// model state and reward on the node. priors align with legal.
void expand(SearchTree &tree, NodeId node, std::span<const int> legal, std::span<const double> priors,
            EnvState model_state, double reward, const SearchConfig &config, std::mt19937_64 &rng);

// Expansion of a terminal node: state and reward are stored, no children.
void mark_terminal(SearchTree &tree, NodeId node, EnvState model_state, double reward);

// Folds G <- r + gamma * G from the leaf up (negating G between plies in
// two-player games) and accumulates G into each node. When q_bound is set,
// every updated mean value must stay within it.
void backpropagate(SearchTree &tree, const SearchPath &path, double leaf_value, double gamma, bool two_player,
                   std::optional<double> q_bound = std::nullopt);

struct VisitDelta
{
	std::int64_t visits_merged = 0;
	double value_merged = 0.0;
	std::size_t nodes_pruned = 0;
	std::size_t shared_prefix = 0;
};

// Marks the victim's unique nodes (and everything under them) pruned,
// detaches them, and merges the victim's per-depth N and W into the
// survivor's node at the same depth.
VisitDelta prune(SearchTree &tree, const SearchPath &victim, const SearchPath &survivor);

// Visit-proportional distribution over the root's unpruned children, or the
// normalized priors when no child has been visited.
std::map<int, double> collect_policy(const SearchTree &tree);

// The searched-path list S_L.
class SearchedPathList
{
public:
	// Returns the new path id, or the id of an identical live path.
	std::uint64_t add(SearchPath path);
	bool remove(std::uint64_t id);
	// Drops every path that runs through a pruned node; returns how many.
	std::size_t purge_pruned(const SearchTree &tree);

	const std::vector<SearchPath> &paths() const { return paths_; }
	const SearchPath *find(std::uint64_t id) const;
	std::size_t size() const { return paths_.size(); }
	std::uint64_t paths_added() const { return next_id_; }

private:
	std::vector<SearchPath> paths_;
	std::uint64_t next_id_ = 0;
};

} // namespace ptsa
