#include "ptsa/search_tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ptsa/common.hpp"

namespace ptsa {

std::string_view to_string(QSource source)
{
	switch (source) {
	case QSource::Tree:
		return "tree";
	case QSource::Model:
		return "model";
	case QSource::Oracle:
		return "oracle";
	}
	return "tree";
}

QSource q_source_from_string(std::string_view name)
{
	if (name == "tree")
		return QSource::Tree;
	if (name == "model")
		return QSource::Model;
	if (name == "oracle")
		return QSource::Oracle;
	throw std::invalid_argument("unknown q_source '" + std::string(name) + "'");
}

void SearchConfig::validate(int action_count) const
{
	if (simulations < 0)
		throw std::invalid_argument("search: simulations must be non-negative");
	if (!(c_puct >= 0.0) || !(c_base >= 0.0))
		throw std::invalid_argument("search: exploration constants must be non-negative");
	if (sampled_actions && (*sampled_actions < 1 || *sampled_actions > action_count))
		throw std::invalid_argument("search: sampled_actions must lie in [1, |A|]");
	if (abstraction)
		abstraction->validate();
}

nlohmann::json search_config_to_json(const SearchConfig &c)
{
	nlohmann::json j{{"simulations", c.simulations}, {"c_puct", c.c_puct},
	                 {"c_base", c.c_base},           {"seed", c.seed},
	                 {"q_source", std::string(to_string(c.q_source))}};
	j["sampled_actions"] = c.sampled_actions ? nlohmann::json(*c.sampled_actions) : nlohmann::json(nullptr);
	j["abstraction"] = c.abstraction ? abstraction_to_json(*c.abstraction) : nlohmann::json(nullptr);
	return j;
}

SearchConfig search_config_from_json(const nlohmann::json &doc)
{
	SearchConfig c;
	c.simulations = doc.value("simulations", c.simulations);
	c.c_puct = doc.value("c_puct", c.c_puct);
	c.c_base = doc.value("c_base", c.c_base);
	c.seed = doc.value("seed", c.seed);
	c.q_source = q_source_from_string(doc.value("q_source", std::string("tree")));
	if (doc.contains("sampled_actions") && !doc["sampled_actions"].is_null())
		c.sampled_actions = doc["sampled_actions"].get<int>();
	if (doc.contains("abstraction") && !doc["abstraction"].is_null())
		c.abstraction = abstraction_from_json(doc["abstraction"]);
	return c;
}

// ---------------------------------------------------------------- tree

SearchTree::SearchTree()
{
	nodes_.emplace_back();
}

NodeId SearchTree::add_child(NodeId parent, int action, double prior)
{
	const auto id = static_cast<NodeId>(nodes_.size());
	SearchNode child;
	child.id = id;
	child.parent = parent;
	child.action_from_parent = action;
	child.prior = prior;
	nodes_.push_back(std::move(child));
	nodes_[parent].children.emplace(action, id);
	return id;
}

std::size_t SearchTree::live_expanded_count() const
{
	return static_cast<std::size_t>(
	    std::count_if(nodes_.begin(), nodes_.end(), [](const SearchNode &n) { return n.expanded && !n.pruned; }));
}

std::int64_t SearchTree::child_visit_sum(NodeId id) const
{
	std::int64_t total = 0;
	for (const auto &[a, c] : nodes_.at(id).children)
		if (!nodes_[c].pruned)
			total += nodes_[c].visit_count;
	return total;
}

nlohmann::json SearchTree::to_json() const
{
	nlohmann::json nodes = nlohmann::json::array();
	for (const auto &n : nodes_) {
		nodes.push_back({{"id", n.id},
		                 {"parent", n.parent ? nlohmann::json(*n.parent) : nlohmann::json(nullptr)},
		                 {"action", n.action_from_parent},
		                 {"N", n.visit_count},
		                 {"W", n.value_sum},
		                 {"prior", n.prior},
		                 {"reward", n.reward},
		                 {"expanded", n.expanded},
		                 {"terminal", n.terminal},
		                 {"pruned", n.pruned}});
	}
	return {{"schema_version", kTreeSchemaVersion}, {"root", root()}, {"nodes", std::move(nodes)}};
}

double path_value(const SearchTree &tree, const SearchPath &path)
{
	return path.nodes.empty() ? 0.0 : tree.node(path.nodes.back()).mean_value();
}

// ---------------------------------------------------------------- operations

int puct_select(const SearchTree &tree, NodeId id, const SearchConfig &config)
{
	const SearchNode &node = tree.node(id);
	if (!node.expanded || node.pruned)
		throw ContractViolation("puct_select: node is not an expanded live node");
	const double total = static_cast<double>(tree.child_visit_sum(id));
	double c = config.c_puct;
	if (config.c_base > 0.0)
		c += std::log((total + config.c_base + 1.0) / config.c_base);
	const double sqrt_total = std::sqrt(total);

	int best_action = -1;
	double best_score = -std::numeric_limits<double>::infinity();
	for (const auto &[action, child_id] : node.children) {
		const SearchNode &child = tree.node(child_id);
		if (child.pruned)
			continue;
		const double score =
		    child.mean_value() + c * child.prior * sqrt_total / (1.0 + static_cast<double>(child.visit_count));
		if (score > best_score) {
			best_score = score;
			best_action = action;
		}
	}
	if (best_action < 0)
		throw ContractViolation("puct_select: node has no live children");
	return best_action;
}

void expand(SearchTree &tree, NodeId id, std::span<const int> legal, std::span<const double> priors,
            EnvState model_state, double reward, const SearchConfig &config, std::mt19937_64 &rng)
{
	SearchNode &node = tree.node(id);
	if (node.expanded)
		throw ContractViolation("expand: node " + std::to_string(id) + " is already expanded");
	if (legal.empty())
		throw ContractViolation("expand: empty legal action set");
	if (legal.size() != priors.size())
		throw ContractViolation("expand: priors do not align with legal actions");

	std::vector<std::size_t> chosen(legal.size());
	for (std::size_t i = 0; i < chosen.size(); ++i)
		chosen[i] = i;
	if (config.sampled_actions && static_cast<std::size_t>(*config.sampled_actions) < legal.size()) {
		std::vector<double> weight(priors.begin(), priors.end());
		std::vector<std::size_t> pool = chosen;
		chosen.clear();
		for (int k = 0; k < *config.sampled_actions; ++k) {
			double total = 0.0;
			for (std::size_t i : pool)
				total += weight[i];
			std::size_t pick = pool.size() - 1;
			if (total > 0.0) {
				double u = uniform01(rng) * total;
				for (std::size_t j = 0; j < pool.size(); ++j) {
					u -= weight[pool[j]];
					if (u < 0.0) {
						pick = j;
						break;
					}
				}
			} else {
				pick = uniform_index(rng, pool.size());
			}
			chosen.push_back(pool[pick]);
			pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
		}
		std::sort(chosen.begin(), chosen.end());
	}

	node.model_state = std::move(model_state);
	node.reward = reward;
	node.expanded = true;
	node.legal_actions.assign(legal.begin(), legal.end());
	for (std::size_t i : chosen)
		tree.add_child(id, legal[i], priors[i]);
}

void mark_terminal(SearchTree &tree, NodeId id, EnvState model_state, double reward)
{
	SearchNode &node = tree.node(id);
	if (node.expanded)
		throw ContractViolation("mark_terminal: node " + std::to_string(id) + " is already expanded");
	node.model_state = std::move(model_state);
	node.reward = reward;
	node.expanded = true;
	node.terminal = true;
	node.legal_actions.clear();
}

void backpropagate(SearchTree &tree, const SearchPath &path, double leaf_value, double gamma, bool two_player,
                   std::optional<double> q_bound)
{
	double g = leaf_value;
	for (auto it = path.nodes.rbegin(); it != path.nodes.rend(); ++it) {
		SearchNode &node = tree.node(*it);
		g = node.reward + gamma * (two_player ? -g : g);
		node.visit_count += 1;
		node.value_sum += g;
		if (q_bound && std::abs(node.mean_value()) > *q_bound * (1.0 + 1e-12))
			throw ContractViolation("backpropagate: |Q| of node " + std::to_string(node.id) + " = " +
			                        std::to_string(node.mean_value()) + " exceeds bound " +
			                        std::to_string(*q_bound));
	}
}

VisitDelta prune(SearchTree &tree, const SearchPath &victim, const SearchPath &survivor)
{
	if (victim.length() != survivor.length() || victim.length() == 0)
		throw std::invalid_argument("prune: paths must be non-empty and of equal length");
	if (tree.node(victim.nodes.front()).parent != tree.node(survivor.nodes.front()).parent)
		throw std::invalid_argument("prune: paths do not start from the same parent");
	if (victim.nodes == survivor.nodes)
		throw std::invalid_argument("prune: victim and survivor are the same path");
	for (NodeId id : victim.nodes)
		if (tree.node(id).pruned)
			throw ContractViolation("prune: victim path is not live");
	for (NodeId id : survivor.nodes)
		if (tree.node(id).pruned)
			throw ContractViolation("prune: survivor path is not live");

	VisitDelta delta;
	std::size_t k = 0;
	while (victim.nodes[k] == survivor.nodes[k])
		++k;
	delta.shared_prefix = k;
	for (std::size_t i = k; i < victim.length(); ++i) {
		const SearchNode &v = tree.node(victim.nodes[i]);
		SearchNode &s = tree.node(survivor.nodes[i]);
		s.visit_count += v.visit_count;
		s.value_sum += v.value_sum;
		delta.visits_merged += v.visit_count;
		delta.value_merged += v.value_sum;
	}

	const NodeId cut = victim.nodes[k];
	std::vector<NodeId> stack{cut};
	while (!stack.empty()) {
		const NodeId id = stack.back();
		stack.pop_back();
		SearchNode &n = tree.node(id);
		if (!n.pruned) {
			n.pruned = true;
			++delta.nodes_pruned;
		}
		for (const auto &[a, c] : n.children)
			stack.push_back(c);
		n.children.clear();
	}
	SearchNode &parent = tree.node(*tree.node(cut).parent);
	parent.children.erase(tree.node(cut).action_from_parent);
	return delta;
}

std::map<int, double> collect_policy(const SearchTree &tree)
{
	const SearchNode &root = tree.node(tree.root());
	if (!root.expanded)
		throw ContractViolation("collect_policy: root is not expanded");
	std::map<int, double> policy;
	const double visits = static_cast<double>(tree.child_visit_sum(tree.root()));
	double prior_total = 0.0;
	for (const auto &[a, c] : root.children)
		prior_total += tree.node(c).prior;
	const std::size_t live = root.children.size();
	for (const auto &[a, c] : root.children) {
		const SearchNode &child = tree.node(c);
		if (visits > 0.0)
			policy[a] = static_cast<double>(child.visit_count) / visits;
		else if (prior_total > 0.0)
			policy[a] = child.prior / prior_total;
		else
			policy[a] = 1.0 / static_cast<double>(live);
	}
	return policy;
}

// ---------------------------------------------------------------- S_L

std::uint64_t SearchedPathList::add(SearchPath path)
{
	for (const auto &p : paths_)
		if (p.nodes == path.nodes)
			return p.id;
	path.id = next_id_++;
	paths_.push_back(std::move(path));
	return paths_.back().id;
}

bool SearchedPathList::remove(std::uint64_t id)
{
	auto it = std::find_if(paths_.begin(), paths_.end(), [id](const SearchPath &p) { return p.id == id; });
	if (it == paths_.end())
		return false;
	paths_.erase(it);
	return true;
}

std::size_t SearchedPathList::purge_pruned(const SearchTree &tree)
{
	const auto before = paths_.size();
	std::erase_if(paths_, [&](const SearchPath &p) {
		return std::any_of(p.nodes.begin(), p.nodes.end(), [&](NodeId id) { return tree.node(id).pruned; });
	});
	return before - paths_.size();
}

const SearchPath *SearchedPathList::find(std::uint64_t id) const
{
	for (const auto &p : paths_)
		if (p.id == id)
			return &p;
	return nullptr;
}

} // namespace ptsa
