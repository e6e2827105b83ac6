#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

namespace ptsa {

// Finite MDP with exact tables. Rows are indexed state * action_count + action.
// Deterministic MDPs fill next_state; stochastic ones fill transition_probs
// with one length-state_count probability vector per (state, action).
struct TabularMdp
{
	int state_count = 0;
	int action_count = 0;
	double gamma = 0.9;
	bool stochastic = false;
	std::vector<int> next_state;
	std::vector<double> transition_probs;
	std::vector<double> rewards;
	std::vector<std::uint8_t> terminal;
	std::uint64_t seed = 0;

	std::size_t row(int s, int a) const { return static_cast<std::size_t>(s) * action_count + a; }
	double reward(int s, int a) const { return rewards[row(s, a)]; }
	bool is_terminal(int s) const { return terminal[s] != 0; }
	int successor(int s, int a) const { return next_state[row(s, a)]; }
	std::span<const double> transition_row(int s, int a) const
	{
		return {transition_probs.data() + row(s, a) * state_count, static_cast<std::size_t>(state_count)};
	}
	double r_max() const;

	// Throws std::invalid_argument describing the first broken invariant.
	void validate() const;

	bool operator==(const TabularMdp &) const = default;
};

struct ValueTables
{
	int state_count = 0;
	int action_count = 0;
	std::vector<double> v_star;
	std::vector<double> q_star;
	double residual = 0.0;
	int sweeps = 0;
	std::vector<double> residual_history;

	double q(int s, int a) const { return q_star[static_cast<std::size_t>(s) * action_count + a]; }
	std::span<const double> q_row(int s) const
	{
		return {q_star.data() + static_cast<std::size_t>(s) * action_count, static_cast<std::size_t>(action_count)};
	}
};

inline constexpr int kValueIterationCap = 100000;

// Jacobi sweeps until the sup-norm change drops to tol. Throws
// std::runtime_error if the cap is reached.
ValueTables value_iteration(const TabularMdp &mdp, double tol);

// One application of the Bellman optimality operator to v.
std::vector<double> bellman_backup(const TabularMdp &mdp, std::span<const double> v);

struct RandomMdpOptions
{
	double gamma = 0.9;
	bool stochastic = false;
};

// Rewards are uniform in [-1, 1]; the last state is terminal. Successors of
// each row are drawn from a random support of round(sparsity * state_count)
// states.
TabularMdp random_mdp(std::uint64_t seed, int state_count, int action_count, double sparsity,
                      RandomMdpOptions options = {});

// random_mdp whose state 0 reaches states 1 and 2 through actions 0 and 1,
// where state 2 is a copy of state 1. The two sibling subtrees therefore have
// bit-identical Q* rows.
TabularMdp symmetric_mdp(std::uint64_t seed, int state_count, int action_count, double sparsity = 1.0);

inline constexpr int kMdpSchemaVersion = 1;

nlohmann::json mdp_to_json(const TabularMdp &mdp);
TabularMdp mdp_from_json(const nlohmann::json &doc);

} // namespace ptsa
