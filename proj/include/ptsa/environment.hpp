#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ptsa/mdp.hpp"

namespace ptsa {

struct MdpState
{
	int id = 0;
	bool operator==(const MdpState &) const = default;
};

enum class Stone : std::uint8_t { Empty = 0, Black = 1, White = 2 };

inline Stone opponent(Stone p) { return p == Stone::Black ? Stone::White : Stone::Black; }

struct GomokuState
{
	int size = 5;
	int win_length = 4;
	std::vector<Stone> board;
	Stone to_move = Stone::Black;
	Stone winner = Stone::Empty;
	int stones = 0;

	static GomokuState empty(int size = 5, int win_length = 4);

	bool decided() const { return winner != Stone::Empty || stones == size * size; }
	Stone at(int row, int col) const { return board[static_cast<std::size_t>(row) * size + col]; }
	bool operator==(const GomokuState &) const = default;
};

struct CartPoleState
{
	double x = 0.0;
	double x_dot = 0.0;
	double theta = 0.0;
	double theta_dot = 0.0;
	int steps = 0;
	bool done = false;
	bool operator==(const CartPoleState &) const = default;
};

using EnvState = std::variant<MdpState, GomokuState, CartPoleState>;

struct StepResult
{
	EnvState next;
	double reward = 0.0;
	bool terminal = false;
};

class Environment
{
public:
	virtual ~Environment() = default;

	virtual int action_count() const = 0;
	virtual double discount() const = 0;
	virtual bool two_player() const = 0;
	virtual double reward_bound() const = 0;
	virtual EnvState initial_state() const = 0;
	virtual std::vector<int> legal_actions(const EnvState &state) const = 0;
	virtual bool is_terminal(const EnvState &state) const = 0;
	// Throws ContractViolation on an illegal action.
	virtual StepResult step(const EnvState &state, int action) const = 0;
	virtual std::uint64_t state_key(const EnvState &state) const = 0;
	// Row index into oracle value tables, when the environment is tabular.
	virtual std::optional<int> tabular_index(const EnvState &) const { return std::nullopt; }
	virtual std::string describe(const EnvState &state) const = 0;
};

StepResult env_step(const Environment &env, const EnvState &state, int action);

class TabularEnv final : public Environment
{
public:
	explicit TabularEnv(TabularMdp mdp, int start_state = 0);

	const TabularMdp &mdp() const { return mdp_; }

	int action_count() const override { return mdp_.action_count; }
	double discount() const override { return mdp_.gamma; }
	bool two_player() const override { return false; }
	double reward_bound() const override { return mdp_.r_max(); }
	EnvState initial_state() const override { return MdpState{start_}; }
	std::vector<int> legal_actions(const EnvState &state) const override;
	bool is_terminal(const EnvState &state) const override;
	StepResult step(const EnvState &state, int action) const override;
	std::uint64_t state_key(const EnvState &state) const override;
	std::optional<int> tabular_index(const EnvState &state) const override;
	std::string describe(const EnvState &state) const override;

private:
	TabularMdp mdp_;
	int start_;
};

// Rewards are +1 to the mover on a win and 0 otherwise, paid at the terminal
// move only; the loser's -1 arises from the sign flip between plies.
class GomokuEnv final : public Environment
{
public:
	explicit GomokuEnv(int size = 5, int win_length = 4);

	int size() const { return size_; }
	int win_length() const { return win_length_; }

	int action_count() const override { return size_ * size_; }
	double discount() const override { return 1.0; }
	bool two_player() const override { return true; }
	double reward_bound() const override { return 1.0; }
	EnvState initial_state() const override { return GomokuState::empty(size_, win_length_); }
	std::vector<int> legal_actions(const EnvState &state) const override;
	bool is_terminal(const EnvState &state) const override;
	StepResult step(const EnvState &state, int action) const override;
	std::uint64_t state_key(const EnvState &state) const override;
	std::string describe(const EnvState &state) const override;

private:
	int size_;
	int win_length_;
};

struct CartPoleParams
{
	int action_count = 100;
	double force_min = -10.0;
	double force_max = 10.0;
	int step_limit = 200;
	double gamma = 0.997;
	double gravity = 9.8;
	double cart_mass = 1.0;
	double pole_mass = 0.1;
	double pole_half_length = 0.5;
	double dt = 0.02;
	double x_threshold = 2.4;
	double theta_threshold = 12.0 * 2.0 * 3.14159265358979323846 / 360.0;
	double initial_theta = 0.03;
};

// Frictionless cart-pole, explicit Euler, discretized force. Every step pays
// reward 1 (survival convention), including the one that ends the episode.
class CartPoleDiscrete final : public Environment
{
public:
	explicit CartPoleDiscrete(CartPoleParams params = {});

	const CartPoleParams &params() const { return params_; }
	double force(int action) const;

	int action_count() const override { return params_.action_count; }
	double discount() const override { return params_.gamma; }
	bool two_player() const override { return false; }
	double reward_bound() const override { return 1.0; }
	EnvState initial_state() const override;
	std::vector<int> legal_actions(const EnvState &state) const override;
	bool is_terminal(const EnvState &state) const override;
	StepResult step(const EnvState &state, int action) const override;
	std::uint64_t state_key(const EnvState &state) const override;
	std::string describe(const EnvState &state) const override;

private:
	CartPoleParams params_;
};

} // namespace ptsa
