#include "ptsa/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "ptsa/common.hpp"

namespace ptsa {

double TabularMdp::r_max() const
{
	double m = 0.0;
	for (double r : rewards)
		m = std::max(m, std::abs(r));
	return m;
}

void TabularMdp::validate() const
{
	if (state_count <= 0 || action_count <= 0)
		throw std::invalid_argument("mdp: state_count and action_count must be positive");
	if (!(gamma >= 0.0 && gamma < 1.0))
		throw std::invalid_argument("mdp: gamma must lie in [0, 1), got " + std::to_string(gamma));
	const auto rows = static_cast<std::size_t>(state_count) * action_count;
	if (rewards.size() != rows)
		throw std::invalid_argument("mdp: reward table has wrong size");
	if (terminal.size() != static_cast<std::size_t>(state_count))
		throw std::invalid_argument("mdp: terminal flags have wrong size");
	if (stochastic) {
		if (transition_probs.size() != rows * state_count)
			throw std::invalid_argument("mdp: transition table has wrong size");
	} else if (next_state.size() != rows) {
		throw std::invalid_argument("mdp: successor table has wrong size");
	}
	for (int s = 0; s < state_count; ++s) {
		for (int a = 0; a < action_count; ++a) {
			if (!std::isfinite(reward(s, a)))
				throw std::invalid_argument("mdp: non-finite reward at state " + std::to_string(s));
			if (stochastic) {
				const auto p = transition_row(s, a);
				double sum = 0.0;
				for (double x : p) {
					if (x < 0.0)
						throw std::invalid_argument("mdp: negative transition probability");
					sum += x;
				}
				if (std::abs(sum - 1.0) > 1e-9)
					throw std::invalid_argument("mdp: transition row (" + std::to_string(s) + ", " +
					                            std::to_string(a) + ") sums to " + std::to_string(sum));
				if (is_terminal(s) && std::abs(p[s] - 1.0) > 1e-9)
					throw std::invalid_argument("mdp: terminal state must be absorbing");
			} else {
				const int ns = successor(s, a);
				if (ns < 0 || ns >= state_count)
					throw std::invalid_argument("mdp: successor out of range at state " + std::to_string(s));
				if (is_terminal(s) && ns != s)
					throw std::invalid_argument("mdp: terminal state must be absorbing");
			}
			if (is_terminal(s) && reward(s, a) != 0.0)
				throw std::invalid_argument("mdp: terminal state must have zero reward");
		}
	}
}

namespace {

double expected_next_value(const TabularMdp &mdp, int s, int a, std::span<const double> v)
{
	if (!mdp.stochastic)
		return v[mdp.successor(s, a)];
	const auto p = mdp.transition_row(s, a);
	double acc = 0.0;
	for (int t = 0; t < mdp.state_count; ++t)
		acc += p[t] * v[t];
	return acc;
}

} // namespace

std::vector<double> bellman_backup(const TabularMdp &mdp, std::span<const double> v)
{
	std::vector<double> out(mdp.state_count, 0.0);
	for (int s = 0; s < mdp.state_count; ++s) {
		if (mdp.is_terminal(s))
			continue;
		double best = -std::numeric_limits<double>::infinity();
		for (int a = 0; a < mdp.action_count; ++a)
			best = std::max(best, mdp.reward(s, a) + mdp.gamma * expected_next_value(mdp, s, a, v));
		out[s] = best;
	}
	return out;
}

ValueTables value_iteration(const TabularMdp &mdp, double tol)
{
	if (!(tol > 0.0))
		throw std::invalid_argument("value_iteration: tol must be positive");
	mdp.validate();

	ValueTables t;
	t.state_count = mdp.state_count;
	t.action_count = mdp.action_count;
	std::vector<double> v(mdp.state_count, 0.0);
	bool converged = false;
	for (int sweep = 1; sweep <= kValueIterationCap; ++sweep) {
		std::vector<double> next = bellman_backup(mdp, v);
		double delta = 0.0;
		for (int s = 0; s < mdp.state_count; ++s)
			delta = std::max(delta, std::abs(next[s] - v[s]));
		v = std::move(next);
		t.residual_history.push_back(delta);
		t.sweeps = sweep;
		if (!std::isfinite(delta))
			break;
		if (delta <= tol) {
			converged = true;
			break;
		}
	}
	if (!converged)
		throw std::runtime_error("value_iteration: no convergence after " + std::to_string(t.sweeps) +
		                         " sweeps (malformed MDP?)");

	t.residual = t.residual_history.back();
	t.v_star = v;
	t.q_star.assign(static_cast<std::size_t>(mdp.state_count) * mdp.action_count, 0.0);
	for (int s = 0; s < mdp.state_count; ++s) {
		if (mdp.is_terminal(s))
			continue;
		for (int a = 0; a < mdp.action_count; ++a)
			t.q_star[mdp.row(s, a)] = mdp.reward(s, a) + mdp.gamma * expected_next_value(mdp, s, a, v);
	}
	return t;
}

TabularMdp random_mdp(std::uint64_t seed, int state_count, int action_count, double sparsity,
                      RandomMdpOptions options)
{
	if (state_count < 2 || action_count < 2)
		throw std::invalid_argument("random_mdp: need at least 2 states and 2 actions");
	if (!(sparsity > 0.0 && sparsity <= 1.0))
		throw std::invalid_argument("random_mdp: sparsity must lie in (0, 1]");

	std::mt19937_64 rng(seed);
	TabularMdp m;
	m.state_count = state_count;
	m.action_count = action_count;
	m.gamma = options.gamma;
	m.stochastic = options.stochastic;
	m.seed = seed;
	const auto rows = static_cast<std::size_t>(state_count) * action_count;
	m.rewards.assign(rows, 0.0);
	m.terminal.assign(state_count, 0);
	m.terminal[state_count - 1] = 1;
	if (m.stochastic)
		m.transition_probs.assign(rows * state_count, 0.0);
	else
		m.next_state.assign(rows, 0);

	const int support = std::max(1, static_cast<int>(std::lround(sparsity * state_count)));
	std::vector<int> pool(state_count);
	for (int s = 0; s < state_count; ++s) {
		for (int a = 0; a < action_count; ++a) {
			const auto r = m.row(s, a);
			if (m.is_terminal(s)) {
				if (m.stochastic)
					m.transition_probs[r * state_count + s] = 1.0;
				else
					m.next_state[r] = s;
				continue;
			}
			m.rewards[r] = 2.0 * uniform01(rng) - 1.0;
			std::iota(pool.begin(), pool.end(), 0);
			for (int k = 0; k < support; ++k) {
				const auto j = k + uniform_index(rng, static_cast<std::size_t>(state_count - k));
				std::swap(pool[k], pool[j]);
			}
			if (!m.stochastic) {
				m.next_state[r] = pool[uniform_index(rng, static_cast<std::size_t>(support))];
				continue;
			}
			std::vector<double> w(support);
			double total = 0.0;
			for (auto &x : w) {
				x = 0.05 + uniform01(rng);
				total += x;
			}
			for (int k = 0; k < support; ++k)
				m.transition_probs[r * state_count + pool[k]] = w[k] / total;
		}
	}
	m.validate();
	return m;
}

TabularMdp symmetric_mdp(std::uint64_t seed, int state_count, int action_count, double sparsity)
{
	if (state_count < 4)
		throw std::invalid_argument("symmetric_mdp: need at least 4 states");
	TabularMdp m = random_mdp(seed, state_count, action_count, sparsity);
	m.next_state[m.row(0, 0)] = 1;
	m.next_state[m.row(0, 1)] = 2;
	m.rewards[m.row(0, 1)] = m.rewards[m.row(0, 0)];
	for (int a = 0; a < action_count; ++a) {
		m.next_state[m.row(2, a)] = m.next_state[m.row(1, a)];
		m.rewards[m.row(2, a)] = m.rewards[m.row(1, a)];
	}
	m.validate();
	return m;
}

nlohmann::json mdp_to_json(const TabularMdp &mdp)
{
	using nlohmann::json;
	json transitions = json::array();
	json rewards = json::array();
	for (int s = 0; s < mdp.state_count; ++s) {
		json trow = json::array();
		json rrow = json::array();
		for (int a = 0; a < mdp.action_count; ++a) {
			rrow.push_back(mdp.reward(s, a));
			if (mdp.stochastic) {
				const auto p = mdp.transition_row(s, a);
				trow.push_back(json(std::vector<double>(p.begin(), p.end())));
			} else {
				trow.push_back(mdp.successor(s, a));
			}
		}
		transitions.push_back(std::move(trow));
		rewards.push_back(std::move(rrow));
	}
	json terminals = json::array();
	for (int s = 0; s < mdp.state_count; ++s)
		if (mdp.is_terminal(s))
			terminals.push_back(s);
	return json{{"version", kMdpSchemaVersion}, {"state_count", mdp.state_count},
	            {"action_count", mdp.action_count}, {"gamma", mdp.gamma},
	            {"transitions", std::move(transitions)}, {"rewards", std::move(rewards)},
	            {"terminals", std::move(terminals)}, {"seed", mdp.seed}};
}

TabularMdp mdp_from_json(const nlohmann::json &doc)
{
	if (doc.at("version").get<int>() != kMdpSchemaVersion)
		throw std::invalid_argument("mdp json: unsupported version " + doc.at("version").dump());
	TabularMdp m;
	m.state_count = doc.at("state_count").get<int>();
	m.action_count = doc.at("action_count").get<int>();
	m.gamma = doc.at("gamma").get<double>();
	m.seed = doc.at("seed").get<std::uint64_t>();
	const auto &transitions = doc.at("transitions");
	const auto &rewards = doc.at("rewards");
	if (transitions.size() != static_cast<std::size_t>(m.state_count) ||
	    rewards.size() != static_cast<std::size_t>(m.state_count))
		throw std::invalid_argument("mdp json: table row count does not match state_count");
	m.stochastic = m.state_count > 0 && !transitions.at(0).empty() && transitions.at(0).at(0).is_array();
	const auto rows = static_cast<std::size_t>(m.state_count) * m.action_count;
	m.rewards.resize(rows);
	if (m.stochastic)
		m.transition_probs.resize(rows * m.state_count);
	else
		m.next_state.resize(rows);
	for (int s = 0; s < m.state_count; ++s) {
		if (transitions[s].size() != static_cast<std::size_t>(m.action_count) ||
		    rewards[s].size() != static_cast<std::size_t>(m.action_count))
			throw std::invalid_argument("mdp json: row width does not match action_count");
		for (int a = 0; a < m.action_count; ++a) {
			m.rewards[m.row(s, a)] = rewards[s][a].get<double>();
			if (m.stochastic) {
				const auto p = transitions[s][a].get<std::vector<double>>();
				if (p.size() != static_cast<std::size_t>(m.state_count))
					throw std::invalid_argument("mdp json: probability vector has wrong length");
				std::copy(p.begin(), p.end(), m.transition_probs.begin() + m.row(s, a) * m.state_count);
			} else {
				m.next_state[m.row(s, a)] = transitions[s][a].get<int>();
			}
		}
	}
	m.terminal.assign(m.state_count, 0);
	for (const auto &t : doc.at("terminals")) {
		const int s = t.get<int>();
		if (s < 0 || s >= m.state_count)
			throw std::invalid_argument("mdp json: terminal index out of range");
		m.terminal[s] = 1;
	}
	m.validate();
	return m;
}

} // namespace ptsa
