#include "ptsa/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "ptsa/common.hpp"
#include "ptsa/metrics_io.hpp"
#include "ptsa/verification.hpp"

namespace ptsa {

namespace {

using json = nlohmann::json;

const char *env_kind_name(EnvironmentConfig::Kind k)
{
	switch (k) {
	case EnvironmentConfig::Kind::RandomMdp:
		return "random_mdp";
	case EnvironmentConfig::Kind::SymmetricMdp:
		return "symmetric_mdp";
	case EnvironmentConfig::Kind::Gomoku:
		return "gomoku";
	case EnvironmentConfig::Kind::CartPole:
		return "cartpole";
	case EnvironmentConfig::Kind::MdpFile:
		return "mdp_file";
	}
	return "random_mdp";
}

EnvironmentConfig::Kind env_kind_from(const std::string &name)
{
	for (auto k : {EnvironmentConfig::Kind::RandomMdp, EnvironmentConfig::Kind::SymmetricMdp,
	               EnvironmentConfig::Kind::Gomoku, EnvironmentConfig::Kind::CartPole,
	               EnvironmentConfig::Kind::MdpFile})
		if (name == env_kind_name(k))
			return k;
	throw std::invalid_argument("unknown environment kind '" + name + "'");
}

json env_to_json(const EnvironmentConfig &e)
{
	json j{{"kind", env_kind_name(e.kind)}};
	switch (e.kind) {
	case EnvironmentConfig::Kind::RandomMdp:
		j["stochastic"] = e.stochastic;
		j["gamma"] = e.gamma;
		[[fallthrough]];
	case EnvironmentConfig::Kind::SymmetricMdp:
		j["seed"] = e.seed;
		j["states"] = e.states;
		j["actions"] = e.actions;
		j["sparsity"] = e.sparsity;
		j["start_state"] = e.start_state;
		break;
	case EnvironmentConfig::Kind::Gomoku:
		j["size"] = e.size;
		j["win_length"] = e.win_length;
		break;
	case EnvironmentConfig::Kind::CartPole:
		j["actions"] = e.cartpole_actions;
		break;
	case EnvironmentConfig::Kind::MdpFile:
		j["path"] = e.path;
		j["start_state"] = e.start_state;
		break;
	}
	return j;
}

EnvironmentConfig env_from_json(const json &j)
{
	EnvironmentConfig e;
	e.kind = env_kind_from(j.value("kind", std::string("random_mdp")));
	e.seed = j.value("seed", e.seed);
	e.states = j.value("states", e.states);
	e.sparsity = j.value("sparsity", e.sparsity);
	e.gamma = j.value("gamma", e.gamma);
	e.stochastic = j.value("stochastic", e.stochastic);
	e.start_state = j.value("start_state", e.start_state);
	e.size = j.value("size", e.size);
	e.win_length = j.value("win_length", e.win_length);
	e.path = j.value("path", e.path);
	if (e.kind == EnvironmentConfig::Kind::CartPole)
		e.cartpole_actions = j.value("actions", e.cartpole_actions);
	else
		e.actions = j.value("actions", e.actions);
	return e;
}

json model_to_json(const ModelConfig &m)
{
	return {{"kind", m.kind == ModelConfig::Kind::Noisy ? "noisy" : "oracle"},
	        {"value_sigma", m.value_sigma},
	        {"prior_sigma", m.prior_sigma},
	        {"seed", m.seed},
	        {"rollout_depth", m.rollout_depth},
	        {"rollouts", m.rollouts}};
}

ModelConfig model_from_json(const json &j)
{
	ModelConfig m;
	const std::string kind = j.value("kind", std::string("oracle"));
	if (kind == "noisy")
		m.kind = ModelConfig::Kind::Noisy;
	else if (kind != "oracle")
		throw std::invalid_argument("unknown model kind '" + kind + "'");
	m.value_sigma = j.value("value_sigma", m.value_sigma);
	m.prior_sigma = j.value("prior_sigma", m.prior_sigma);
	m.seed = j.value("seed", m.seed);
	m.rollout_depth = j.value("rollout_depth", m.rollout_depth);
	m.rollouts = j.value("rollouts", m.rollouts);
	return m;
}

int argmax_action(const std::map<int, double> &policy)
{
	int best = -1;
	double p = -1.0;
	for (const auto &[a, q] : policy)
		if (q > p) {
			p = q;
			best = a;
		}
	return best;
}

int sample_action(const std::map<int, double> &policy, std::mt19937_64 &rng)
{
	double u = uniform01(rng);
	int last = -1;
	for (const auto &[a, q] : policy) {
		last = a;
		u -= q;
		if (u < 0.0)
			return a;
	}
	return last;
}

double mean(const std::vector<double> &v)
{
	return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(const std::vector<double> &v)
{
	if (v.size() < 2)
		return 0.0;
	const double m = mean(v);
	double s = 0.0;
	for (double x : v)
		s += (x - m) * (x - m);
	return std::sqrt(s / static_cast<double>(v.size() - 1));
}

} // namespace

// ---------------------------------------------------------------- config

void RunConfig::validate() const
{
	if (episodes < 0 || max_moves < 0 || temperature_moves < 0)
		throw std::invalid_argument("run config: episodes, max_moves and temperature_moves must be non-negative");
	if (!(value_tolerance > 0.0))
		throw std::invalid_argument("run config: value_tolerance must be positive");
	if (model.value_sigma < 0.0 || model.prior_sigma < 0.0)
		throw std::invalid_argument("run config: noise sigmas must be non-negative");
	if (search.abstraction)
		search.abstraction->validate();
}

json run_config_to_json(const RunConfig &c)
{
	json search = search_config_to_json(c.search);
	search.erase("abstraction");
	return {{"schema_version", kConfigSchemaVersion},
	        {"environment", env_to_json(c.environment)},
	        {"search", std::move(search)},
	        {"abstraction", c.search.abstraction ? abstraction_to_json(*c.search.abstraction) : json(nullptr)},
	        {"model", model_to_json(c.model)},
	        {"episodes", c.episodes},
	        {"max_moves", c.max_moves},
	        {"temperature_moves", c.temperature_moves},
	        {"seed", c.seed},
	        {"value_tolerance", c.value_tolerance},
	        {"output_path", c.output_path}};
}

RunConfig run_config_from_json(const json &doc)
{
	const int version = doc.value("schema_version", kConfigSchemaVersion);
	if (version != kConfigSchemaVersion)
		throw std::invalid_argument("run config: unsupported schema_version " + std::to_string(version));
	RunConfig c;
	if (doc.contains("environment"))
		c.environment = env_from_json(doc["environment"]);
	if (doc.contains("search"))
		c.search = search_config_from_json(doc["search"]);
	if (doc.contains("abstraction") && !doc["abstraction"].is_null())
		c.search.abstraction = abstraction_from_json(doc["abstraction"]);
	if (doc.contains("model"))
		c.model = model_from_json(doc["model"]);
	c.episodes = doc.value("episodes", c.episodes);
	c.max_moves = doc.value("max_moves", c.max_moves);
	c.temperature_moves = doc.value("temperature_moves", c.temperature_moves);
	c.seed = doc.value("seed", c.seed);
	c.value_tolerance = doc.value("value_tolerance", c.value_tolerance);
	c.output_path = doc.value("output_path", c.output_path);
	c.validate();
	return c;
}

RunConfig load_run_config(const std::string &path)
{
	return run_config_from_json(json::parse(read_text(path)));
}

// ---------------------------------------------------------------- task

Task::Task(const EnvironmentConfig &e, const ModelConfig &m, double value_tolerance)
{
	std::optional<TabularMdp> mdp;
	switch (e.kind) {
	case EnvironmentConfig::Kind::RandomMdp:
		mdp = random_mdp(e.seed, e.states, e.actions, e.sparsity, RandomMdpOptions{e.gamma, e.stochastic});
		break;
	case EnvironmentConfig::Kind::SymmetricMdp:
		mdp = symmetric_mdp(e.seed, e.states, e.actions, e.sparsity);
		break;
	case EnvironmentConfig::Kind::MdpFile:
		mdp = mdp_from_json(json::parse(read_text(e.path)));
		break;
	case EnvironmentConfig::Kind::Gomoku:
		env_ = std::make_unique<GomokuEnv>(e.size, e.win_length);
		break;
	case EnvironmentConfig::Kind::CartPole: {
		CartPoleParams params;
		params.action_count = e.cartpole_actions;
		env_ = std::make_unique<CartPoleDiscrete>(params);
		break;
	}
	}
	if (mdp) {
		tables_ = std::make_unique<ValueTables>(value_iteration(*mdp, value_tolerance));
		env_ = std::make_unique<TabularEnv>(std::move(*mdp), e.start_state);
	}
	oracle_ = std::make_unique<ModelOracle>(*env_, tables_.get(), RolloutOptions{m.rollout_depth, m.rollouts, m.seed});
	if (m.kind == ModelConfig::Kind::Noisy)
		noisy_ = std::make_unique<NoisyModel>(*oracle_, m.value_sigma, m.prior_sigma, m.seed);
}

const TabularMdp *Task::mdp() const
{
	const auto *tab = dynamic_cast<const TabularEnv *>(env_.get());
	return tab ? &tab->mdp() : nullptr;
}

// ---------------------------------------------------------------- episodes

std::uint64_t move_seed(std::uint64_t run_seed, int episode, int move)
{
	return hash_combine(hash_combine(run_seed, static_cast<std::uint64_t>(episode)), static_cast<std::uint64_t>(move));
}

SearchResult run_search(const Task &task, const EnvState &state, const SearchConfig &config)
{
	if (config.abstraction)
		return ptsa_search(task.model(), state, config, task.tables());
	return baseline_search(task.model(), state, config);
}

EpisodeResult run_episode(const RunConfig &config, const Task &task, int episode)
{
	const auto start = std::chrono::steady_clock::now();
	const Environment &env = task.env();
	EpisodeResult out;
	out.episode = episode;
	std::mt19937_64 rng(hash_combine(move_seed(config.seed, episode, -1), 0x5eed));
	EnvState state = env.initial_state();

	for (int move = 0; move < config.max_moves && !env.is_terminal(state); ++move) {
		SearchConfig sc = config.search;
		sc.seed = move_seed(config.seed, episode, move);
		SearchResult r = run_search(task, state, sc);

		MoveRecord rec;
		rec.episode = episode;
		rec.move = move;
		const bool sample = !env.two_player() && move < config.temperature_moves;
		rec.action = sample ? sample_action(r.policy, rng) : argmax_action(r.policy);
		StepResult step;
		try {
			step = env.step(state, rec.action);
		} catch (const std::exception &e) {
			throw std::runtime_error("episode " + std::to_string(episode) + " move " + std::to_string(move) + ": " +
			                         e.what());
		}
		rec.reward = step.reward;
		state = std::move(step.next);
		if (env.two_player() && !env.is_terminal(state)) {
			const auto legal = env.legal_actions(state);
			StepResult reply = env.step(state, legal[uniform_index(rng, legal.size())]);
			rec.reward -= reply.reward;
			state = std::move(reply.next);
			++out.opponent_moves;
		}
		out.episode_return += rec.reward;
		r.metrics.episode_return = out.episode_return;
		rec.metrics = std::move(r.metrics);
		rec.policy = std::move(r.policy);
		rec.events = std::move(r.events);
		out.moves.push_back(std::move(rec));
	}
	out.terminal = env.is_terminal(state);
	out.wall_time = std::chrono::steady_clock::now() - start;
	return out;
}

// ---------------------------------------------------------------- speedup

std::vector<AbstractionFn> default_speedup_abstractions()
{
	return {AbstractionFn::a_star(),          AbstractionFn::a_star_eps(0.5), AbstractionFn::q_star(),
	        AbstractionFn::q_star_eps(0.5),   AbstractionFn::q_bucket(0.2),   AbstractionFn::q_psi_alpha(0.7)};
}

json speedup_config_to_json(const SpeedupConfig &c)
{
	json arms = json::array();
	for (const auto &fn : c.abstractions)
		arms.push_back(abstraction_to_json(fn));
	json base = run_config_to_json(c.base);
	base["abstraction"] = nullptr;
	return {{"schema_version", kConfigSchemaVersion},
	        {"base", std::move(base)},
	        {"abstractions", std::move(arms)},
	        {"seeds", c.seeds},
	        {"target_return", c.target_return},
	        {"window", c.window},
	        {"max_episodes", c.max_episodes},
	        {"output_path", c.output_path}};
}

SpeedupConfig speedup_config_from_json(const json &doc)
{
	SpeedupConfig c;
	if (doc.contains("base"))
		c.base = run_config_from_json(doc["base"]);
	c.base.search.abstraction.reset();
	if (doc.contains("abstractions"))
		for (const auto &a : doc["abstractions"])
			c.abstractions.push_back(abstraction_from_json(a));
	else
		c.abstractions = default_speedup_abstractions();
	c.seeds = doc.value("seeds", c.seeds);
	c.target_return = doc.value("target_return", c.target_return);
	c.window = doc.value("window", c.window);
	c.max_episodes = doc.value("max_episodes", c.max_episodes);
	c.output_path = doc.value("output_path", c.output_path);
	if (c.seeds < 1 || c.window < 1 || c.max_episodes < c.window)
		throw std::invalid_argument("speedup config: need seeds >= 1 and max_episodes >= window >= 1");
	return c;
}

namespace {

struct ArmRun
{
	std::optional<int> episodes;  // empty when censored
	double wall_seconds = 0.0;
	double aggregation_percentage = 0.0;
	double expanded_nodes = 0.0;
	double search_depth = 0.0;
};

ArmRun run_arm(const SpeedupConfig &c, const std::optional<AbstractionFn> &fn, int seed_index)
{
	RunConfig rc = c.base;
	rc.search.abstraction = fn;
	rc.seed = hash_combine(c.base.seed, static_cast<std::uint64_t>(seed_index));
	const Task task(rc.environment, rc.model, rc.value_tolerance);
	ArmRun out;
	std::vector<double> returns, agg, nodes, depth;
	for (int ep = 0; ep < c.max_episodes; ++ep) {
		const EpisodeResult r = run_episode(rc, task, ep);
		out.wall_seconds += r.wall_time.count();
		returns.push_back(r.episode_return);
		for (const auto &m : r.moves) {
			agg.push_back(m.metrics.aggregation_percentage);
			nodes.push_back(static_cast<double>(m.metrics.expanded_nodes));
			depth.push_back(m.metrics.average_search_depth);
		}
		if (static_cast<int>(returns.size()) >= c.window) {
			const double window_mean =
			    std::accumulate(returns.end() - c.window, returns.end(), 0.0) / static_cast<double>(c.window);
			if (window_mean >= c.target_return) {
				out.episodes = ep + 1;
				break;
			}
		}
	}
	out.aggregation_percentage = mean(agg);
	out.expanded_nodes = mean(nodes);
	out.search_depth = mean(depth);
	return out;
}

} // namespace

json speedup_study(const SpeedupConfig &c)
{
	std::vector<ArmRun> baseline;
	for (int s = 0; s < c.seeds; ++s)
		baseline.push_back(run_arm(c, std::nullopt, s));

	auto row = [&](const std::string &name, const std::vector<ArmRun> &runs) {
		std::vector<double> ep_ratio, wall_ratio, episodes, wall, agg, nodes, depth;
		int censored = 0;
		for (std::size_t s = 0; s < runs.size(); ++s) {
			agg.push_back(runs[s].aggregation_percentage);
			nodes.push_back(runs[s].expanded_nodes);
			depth.push_back(runs[s].search_depth);
			if (!runs[s].episodes) {
				++censored;
				continue;
			}
			episodes.push_back(*runs[s].episodes);
			wall.push_back(runs[s].wall_seconds);
			if (baseline[s].episodes) {
				ep_ratio.push_back(static_cast<double>(*baseline[s].episodes) / *runs[s].episodes);
				wall_ratio.push_back(baseline[s].wall_seconds / std::max(runs[s].wall_seconds, 1e-12));
			}
		}
		return json{{"abstraction", name},
		            {"seeds", runs.size()},
		            {"censored", censored},
		            {"episodes_to_target_mean", mean(episodes)},
		            {"wall_time_to_target_mean", mean(wall)},
		            {"speedup_episodes_mean", mean(ep_ratio)},
		            {"speedup_episodes_std", stddev(ep_ratio)},
		            {"speedup_wall_time_mean", mean(wall_ratio)},
		            {"speedup_wall_time_std", stddev(wall_ratio)},
		            {"paired_seeds", ep_ratio.size()},
		            {"aggregation_percentage_mean", mean(agg)},
		            {"expanded_nodes_mean", mean(nodes)},
		            {"average_search_depth_mean", mean(depth)}};
	};

	json rows = json::array();
	rows.push_back(row("none", baseline));
	for (const auto &fn : c.abstractions) {
		std::vector<ArmRun> runs;
		for (int s = 0; s < c.seeds; ++s)
			runs.push_back(run_arm(c, fn, s));
		rows.push_back(row(std::string(to_string(fn.kind)), runs));
	}
	return {{"schema_version", kMetricsSchemaVersion},
	        {"config", speedup_config_to_json(c)},
	        {"rows", std::move(rows)}};
}

// ---------------------------------------------------------------- verify

namespace {

ValueTables planted_chain_tables()
{
	ValueTables t;
	t.state_count = 3;
	t.action_count = 1;
	t.q_star = {0.0, 0.4, 0.8};
	t.v_star = t.q_star;
	return t;
}

bool is_planted(const std::array<int, 3> &c)
{
	return (c == std::array<int, 3>{0, 1, 2}) || (c == std::array<int, 3>{2, 1, 0});
}

json triple_json(const std::optional<std::array<int, 3>> &t)
{
	return t ? json(*t) : json(nullptr);
}

} // namespace

VerifyReport verify_suite(std::uint64_t seed)
{
	VerifyReport out;
	json checks = json::array();
	auto record = [&](json check, bool passed) {
		check["passed"] = passed;
		out.passed = out.passed && passed;
		checks.push_back(std::move(check));
	};

	// Transitivity of the six kinds on random tables.
	std::vector<ValueTables> tables;
	for (int k = 0; k < 3; ++k)
		tables.push_back(value_iteration(random_mdp(hash_combine(seed, k), 20, 3, 0.5), 1e-10));
	const AbstractionFn kinds[] = {AbstractionFn::a_star(),        AbstractionFn::a_star_eps(0.5),
	                               AbstractionFn::q_star(),        AbstractionFn::q_star_eps(0.5),
	                               AbstractionFn::q_bucket(0.2),   AbstractionFn::q_psi_alpha(0.7)};
	for (const auto &fn : kinds) {
		for (std::size_t k = 0; k < tables.size(); ++k) {
			const auto r = check_transitivity(fn, tables[k], 10000, hash_combine(seed, 100 + k));
			json c{{"check", "transitivity_random"},
			       {"abstraction", to_string(fn.kind)},
			       {"table", k},
			       {"transitive", r.passed},
			       {"counterexample", triple_json(r.counterexample)},
			       {"triples_checked", r.triples_checked}};
			// Only the kinds listed as transitive must pass; the rest are recorded.
			record(std::move(c), !listed_transitive(fn.kind) || r.passed);
		}
	}

	// Planted epsilon-chain.
	const ValueTables planted = planted_chain_tables();
	for (const auto &fn : {AbstractionFn::a_star_eps(0.5), AbstractionFn::q_star_eps(0.5)}) {
		const auto r = check_transitivity(fn, planted, 100, seed);
		record({{"check", "transitivity_planted"},
		        {"abstraction", to_string(fn.kind)},
		        {"counterexample", triple_json(r.counterexample)}},
		       !r.passed && r.counterexample && is_planted(*r.counterexample));
	}

	// Node- vs path-level transitivity.
	for (const auto &fn : kinds) {
		if (!fn.deterministic())
			continue;
		const auto r = check_path_node_equivalence(fn, tables[0], 50, hash_combine(seed, 200));
		record({{"check", "path_node_equivalence"},
		        {"abstraction", to_string(fn.kind)},
		        {"trees", r.trees_checked},
		        {"node_transitive_trees", r.node_transitive_trees},
		        {"exceptions", r.exceptions}},
		       r.passed);
	}
	{
		const auto r = check_path_node_equivalence(AbstractionFn::q_star_eps(0.5), planted, 20, seed);
		record({{"check", "path_node_equivalence_planted"},
		        {"trees", r.trees_checked},
		        {"node_transitive_trees", r.node_transitive_trees},
		        {"exceptions", r.exceptions}},
		       r.passed);
	}

	// Transitivity probability on the diagonal.
	{
		bool ok = std::abs(prob_transitivity(0, 0, 0) - 1.0) < 1e-15 && std::abs(prob_transitivity(1, 1, 1) - 1.0) < 1e-15;
		double lowest = 1.0, at = 0.0;
		for (int i = 1; i < 100; ++i) {
			const double p = i / 100.0;
			const double v = prob_transitivity(p, p, p);
			if (!(v >= 0.0 && v <= 1.0))
				ok = false;
			if (v < lowest) {
				lowest = v;
				at = p;
			}
		}
		ok = ok && lowest < 1.0;
		record({{"check", "prob_transitivity_grid"}, {"minimum", lowest}, {"argmin", at}}, ok);
	}

	// Measured aggregation error against the bound on live searches.
	{
		SearchConfig sc;
		sc.simulations = 30;
		sc.c_puct = 1.25;
		sc.q_source = QSource::Oracle;
		for (const auto &fn : {AbstractionFn::q_star(), AbstractionFn::a_star(), AbstractionFn::q_bucket(0.2),
		                       AbstractionFn::q_star_eps(0.5)}) {
			int violations = 0, aggregations = 0;
			double worst_ratio = 0.0;
			for (int k = 0; k < 10; ++k) {
				EnvironmentConfig ec;
				ec.kind = EnvironmentConfig::Kind::SymmetricMdp;
				ec.seed = hash_combine(seed, 300 + k);
				ec.states = 12;
				ec.actions = 3;
				ec.sparsity = 0.5;
				const Task task(ec, ModelConfig{});
				sc.abstraction = fn;
				sc.seed = hash_combine(seed, 400 + k);
				const auto r = ptsa_search(task.model(), task.env().initial_state(), sc, task.tables());
				aggregations += static_cast<int>(r.metrics.aggregated_paths);
				const double bound = r.metrics.aggregation_error_bound.value_or(0.0);
				const double measured = r.metrics.aggregation_error_measured;
				const bool ok = bound == 0.0 ? measured == 0.0 : measured < bound;
				violations += ok ? 0 : 1;
				if (bound > 0.0)
					worst_ratio = std::max(worst_ratio, measured / bound);
			}
			record({{"check", "aggregation_error_bound"},
			        {"abstraction", to_string(fn.kind)},
			        {"runs", 10},
			        {"aggregations", aggregations},
			        {"violations", violations},
			        {"worst_measured_over_bound", worst_ratio}},
			       violations == 0);
		}
	}

	// Greedy clustering against exhaustive minimum partitions.
	{
		int mismatches = 0;
		const int instances = 50;
		for (int k = 0; k < instances; ++k) {
			std::mt19937_64 rng(hash_combine(seed, 500 + k));
			const ValueTables &t = tables[k % tables.size()];
			const std::size_t n = 1 + uniform_index(rng, 8);
			std::vector<std::vector<int>> paths(n);
			for (auto &p : paths) {
				p.resize(1 + uniform_index(rng, 2));
				for (int &s : p)
					s = static_cast<int>(uniform_index(rng, 4));
			}
			for (const auto &fn : {AbstractionFn::q_star(), AbstractionFn::q_bucket(2.0), AbstractionFn::a_star()}) {
				const auto greedy = smallest_abstract_space(paths, fn, t);
				const auto exact = minimum_partition_size(
				    n, [&](std::size_t i, std::size_t j) { return paths_aggregable(paths[i], paths[j], fn, t); });
				mismatches += greedy.clusters.size() == exact ? 0 : 1;
			}
		}
		record({{"check", "smallest_abstract_space"}, {"instances", instances}, {"mismatches", mismatches}},
		       mismatches == 0);
	}

	out.report = {{"schema_version", kMetricsSchemaVersion},
	              {"seed", seed},
	              {"passed", out.passed},
	              {"checks", std::move(checks)}};
	return out;
}

} // namespace ptsa
