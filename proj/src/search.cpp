#include "ptsa/search.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>
#include <unordered_map>

#include "ptsa/common.hpp"
#include "ptsa/verification.hpp"

namespace ptsa {

SearchAborted::SearchAborted(int simulation, const std::string &what)
    : std::runtime_error("simulation " + std::to_string(simulation) + ": " + what), simulation_(simulation)
{
}

namespace {

struct Context
{
	const Model &model;
	const Environment &env;
	const SearchConfig &config;
	std::mt19937_64 rng;
	double gamma;
	bool two_player;
	double r_max;
	double v_max;
	std::size_t expansion_calls = 0;

	Context(const Model &m, const SearchConfig &c)
	    : model(m), env(m.environment()), config(c), rng(c.seed), gamma(env.discount()),
	      two_player(env.two_player()), r_max(env.reward_bound()), v_max(m.value_bound())
	{
	}

	// Largest |G| a node can accumulate on a path of this length.
	double q_bound(std::size_t length) const
	{
		const double gl = std::pow(gamma, static_cast<double>(length));
		const double rewards = gamma < 1.0 ? r_max * (1.0 - gl) / (1.0 - gamma) : r_max * static_cast<double>(length);
		return rewards + gl * v_max;
	}
};

// Returns false when the root state is terminal.
bool expand_root(Context &ctx, SearchTree &tree, const EnvState &root_state)
{
	Prediction p = ctx.model.initial_inference(root_state);
	++ctx.expansion_calls;
	if (p.terminal) {
		mark_terminal(tree, tree.root(), std::move(p.state), 0.0);
		return false;
	}
	expand(tree, tree.root(), p.legal, p.priors, std::move(p.state), 0.0, ctx.config, ctx.rng);
	return true;
}

SearchPath simulate(Context &ctx, SearchTree &tree)
{
	SearchPath path;
	NodeId id = tree.root();
	while (tree.node(id).expanded && !tree.node(id).terminal) {
		const int a = puct_select(tree, id, ctx.config);
		id = tree.node(id).children.at(a);
		path.nodes.push_back(id);
	}
	double leaf = 0.0;
	if (!tree.node(id).expanded) {
		const SearchNode &parent = tree.node(*tree.node(id).parent);
		Prediction p = ctx.model.recurrent_inference(*parent.model_state, tree.node(id).action_from_parent);
		++ctx.expansion_calls;
		if (p.terminal) {
			mark_terminal(tree, id, std::move(p.state), p.reward);
		} else {
			leaf = p.value;
			expand(tree, id, p.legal, p.priors, std::move(p.state), p.reward, ctx.config, ctx.rng);
		}
	}
	path.terminal_value = leaf;
	backpropagate(tree, path, leaf, ctx.gamma, ctx.two_player, ctx.q_bound(path.length()));
	return path;
}

double root_value(const SearchTree &tree)
{
	double w = 0.0;
	std::int64_t n = 0;
	for (const auto &[a, c] : tree.node(tree.root()).children) {
		w += tree.node(c).value_sum;
		n += tree.node(c).visit_count;
	}
	return n > 0 ? w / static_cast<double>(n) : 0.0;
}

void finish(SearchResult &out, const SearchedPathList &paths, const Context &ctx,
            std::chrono::steady_clock::time_point start)
{
	RunMetrics &m = out.metrics;
	m.searched_paths = paths.paths_added();
	m.aggregation_percentage =
	    m.searched_paths > 0 ? 100.0 * static_cast<double>(m.aggregated_paths) / static_cast<double>(m.searched_paths)
	                         : 0.0;
	m.expanded_nodes = out.tree.live_expanded_count();
	m.expansion_calls = ctx.expansion_calls;
	double depth = 0.0;
	for (const auto &p : paths.paths())
		depth += static_cast<double>(p.length());
	m.average_search_depth = paths.size() > 0 ? depth / static_cast<double>(paths.size()) : 0.0;
	m.root_value = root_value(out.tree);
	if (out.tree.node(out.tree.root()).expanded && !out.tree.node(out.tree.root()).terminal)
		out.policy = collect_policy(out.tree);
	out.live_paths = paths.paths();
	m.wall_time = std::chrono::steady_clock::now() - start;
}

// Q rows seen by the abstraction, per q_source. Model and oracle rows never
// change for a node, so they are cached.
class RowSource
{
public:
	RowSource(const Context &ctx, const ValueTables *tables) : ctx_(ctx), tables_(tables)
	{
		if (ctx.config.q_source == QSource::Oracle && !tables)
			throw std::invalid_argument("ptsa_search: q_source oracle needs value tables");
	}

	const QRow &row(const SearchTree &tree, NodeId id)
	{
		if (ctx_.config.q_source != QSource::Tree) {
			auto it = cache_.find(id);
			if (it != cache_.end())
				return it->second;
		}
		const SearchNode &node = tree.node(id);
		QRow r;
		if (node.expanded && !node.terminal && !node.children.empty()) {
			std::vector<int> actions;
			std::vector<double> q;
			// Tree rows cover the node's children; model and oracle rows cover
			// every legal action, so sampled subsets stay comparable.
			if (ctx_.config.q_source == QSource::Tree) {
				for (const auto &[a, c] : node.children) {
					actions.push_back(a);
					q.push_back(tree.node(c).mean_value());
				}
			} else {
				actions = node.legal_actions;
				for (int a : actions) {
					if (ctx_.config.q_source == QSource::Oracle) {
						q.push_back(tables_->q(oracle_index(node), a));
					} else {
						const Prediction p = ctx_.model.recurrent_inference(*node.model_state, a);
						const double v = p.terminal ? 0.0 : p.value;
						q.push_back(p.reward + ctx_.gamma * (ctx_.two_player ? -v : v));
					}
				}
			}
			r = QRow::from_values(std::move(actions), std::move(q));
			if (ctx_.config.q_source == QSource::Oracle)
				r.v = tables_->v_star[oracle_index(node)];
		}
		if (ctx_.config.q_source == QSource::Tree) {
			scratch_.push_back(std::move(r));
			return scratch_.back();
		}
		return cache_.emplace(id, std::move(r)).first->second;
	}

	void clear_scratch() { scratch_.clear(); }

private:
	int oracle_index(const SearchNode &node) const
	{
		const auto idx = ctx_.env.tabular_index(*node.model_state);
		if (!idx)
			throw std::invalid_argument("ptsa_search: q_source oracle needs a tabular environment");
		return *idx;
	}

	const Context &ctx_;
	const ValueTables *tables_;
	std::unordered_map<NodeId, QRow> cache_;
	std::deque<QRow> scratch_;
};

std::int64_t event_state(const Context &ctx, const SearchNode &node)
{
	if (!node.model_state)
		return -1;
	if (const auto idx = ctx.env.tabular_index(*node.model_state))
		return *idx;
	return static_cast<std::int64_t>(ctx.env.state_key(*node.model_state));
}

double event_value(const Context &ctx, const SearchTree &tree, const SearchPath &path, const ValueTables *tables)
{
	const SearchNode &last = tree.node(path.nodes.back());
	if (tables && last.model_state)
		if (const auto idx = ctx.env.tabular_index(*last.model_state))
			return tables->v_star[*idx];
	return last.mean_value();
}

} // namespace

SearchResult ptsa_search(const Model &model, const EnvState &root_state, const SearchConfig &config,
                         const ValueTables *tables, std::optional<int> stop_after)
{
	const auto start = std::chrono::steady_clock::now();
	Context ctx(model, config);
	config.validate(ctx.env.action_count());
	SearchResult out;
	SearchedPathList paths;
	RunMetrics &m = out.metrics;
	const int sims = stop_after ? std::min(*stop_after, config.simulations) : config.simulations;

	if (!expand_root(ctx, out.tree, root_state)) {
		finish(out, paths, ctx, start);
		return out;
	}

	const AbstractionFn *fn = config.abstraction ? &*config.abstraction : nullptr;
	std::optional<RowSource> rows;
	std::optional<AggregationDecider> decide;
	if (fn) {
		rows.emplace(ctx, tables);
		decide.emplace(fn->decision);
	}

	for (int sim = 0; sim < sims; ++sim) {
		try {
			SearchPath path = simulate(ctx, out.tree);
			++m.simulations;
			const std::uint64_t before = paths.paths_added();
			const std::uint64_t id_s = paths.add(std::move(path));
			std::size_t comparisons = 0;
			if (fn && paths.paths_added() != before) {
				const std::size_t limit = paths.size();
				const std::size_t length = paths.find(id_s)->length();
				std::vector<std::uint64_t> candidates;
				for (const auto &p : paths.paths())
					if (p.id != id_s && p.length() == length)
						candidates.push_back(p.id);
				for (std::uint64_t id_i : candidates) {
					const SearchPath *bi = paths.find(id_i);
					if (!bi)
						continue;
					const SearchPath bs_copy = *paths.find(id_s);
					const SearchPath bi_copy = *bi;
					++comparisons;
					std::size_t k = 0;
					while (k < length && bi_copy.nodes[k] == bs_copy.nodes[k])
						++k;
					std::vector<const QRow *> ra, rb;
					for (std::size_t i = k; i < length; ++i) {
						ra.push_back(&rows->row(out.tree, bi_copy.nodes[i]));
						rb.push_back(&rows->row(out.tree, bs_copy.nodes[i]));
					}
					AggregationEvent e = path_agg_prob(ra, rb, *fn);
					rows->clear_scratch();
					e.sim_index = sim;
					e.path_a = id_i;
					e.path_b = id_s;
					for (std::size_t i = k; i < length; ++i) {
						e.states_a.push_back(event_state(ctx, out.tree.node(bi_copy.nodes[i])));
						e.states_b.push_back(event_state(ctx, out.tree.node(bs_copy.nodes[i])));
					}
					e.value_a = event_value(ctx, out.tree, bi_copy, tables);
					e.value_b = event_value(ctx, out.tree, bs_copy, tables);
					const bool merge = (*decide)(e);
					out.events.push_back(e);
					if (!merge)
						continue;
					// b_j = argmin(b.V); a tie removes b_i
					const bool victim_is_i = path_value(out.tree, bi_copy) <= path_value(out.tree, bs_copy);
					const SearchPath &victim = victim_is_i ? bi_copy : bs_copy;
					const SearchPath &survivor = victim_is_i ? bs_copy : bi_copy;
					prune(out.tree, victim, survivor);
					paths.remove(victim.id);
					paths.purge_pruned(out.tree);
					++m.aggregated_paths;
					if (!victim_is_i)
						break;
				}
				if (comparisons > limit)
					throw ContractViolation("aggregation sweep made " + std::to_string(comparisons) +
					                        " comparisons with |S_L| = " + std::to_string(limit));
			}
			m.comparisons_histogram[comparisons] += 1;
			m.max_comparisons = std::max(m.max_comparisons, comparisons);
		} catch (const SearchAborted &) {
			throw;
		} catch (const std::exception &e) {
			throw SearchAborted(sim, e.what());
		}
	}

	if (fn) {
		m.aggregation_error_measured = aggregation_error(std::span<const AggregationEvent>(out.events));
		if (fn->kind == AbstractionKind::PhiQPsiAlpha)
			m.zeta = fn->zeta;
		else if (ctx.gamma < 1.0)
			m.zeta = loss_bound(*fn, ctx.r_max, ctx.gamma);
		if (m.zeta && ctx.env.action_count() >= 2 && config.simulations >= 1)
			m.aggregation_error_bound =
			    error_bound(ctx.env.action_count(), config.simulations, *m.zeta, listed_transitive(fn->kind));
	}
	finish(out, paths, ctx, start);
	return out;
}

SearchResult baseline_search(const Model &model, const EnvState &root_state, const SearchConfig &config,
                             std::optional<int> stop_after)
{
	const auto start = std::chrono::steady_clock::now();
	Context ctx(model, config);
	config.validate(ctx.env.action_count());
	SearchResult out;
	SearchedPathList paths;
	const int sims = stop_after ? std::min(*stop_after, config.simulations) : config.simulations;
	if (expand_root(ctx, out.tree, root_state)) {
		for (int sim = 0; sim < sims; ++sim) {
			try {
				paths.add(simulate(ctx, out.tree));
			} catch (const std::exception &e) {
				throw SearchAborted(sim, e.what());
			}
			++out.metrics.simulations;
			out.metrics.comparisons_histogram[0] += 1;
		}
	}
	finish(out, paths, ctx, start);
	return out;
}

} // namespace ptsa
