#include "ptsa/environment.hpp"

#include <bit>
#include <cmath>
#include <sstream>

#include "ptsa/common.hpp"

namespace ptsa {

StepResult env_step(const Environment &env, const EnvState &state, int action)
{
	return env.step(state, action);
}

namespace {

[[noreturn]] void illegal(const Environment &env, const EnvState &state, int action)
{
	throw ContractViolation("illegal action " + std::to_string(action) + " in state " + env.describe(state));
}

template <typename T> const T &as(const EnvState &state, const char *env_name)
{
	if (const T *p = std::get_if<T>(&state))
		return *p;
	throw ContractViolation(std::string(env_name) + ": state belongs to a different environment");
}

} // namespace

// ---------------------------------------------------------------- tabular

TabularEnv::TabularEnv(TabularMdp mdp, int start_state) : mdp_(std::move(mdp)), start_(start_state)
{
	mdp_.validate();
	if (start_ < 0 || start_ >= mdp_.state_count)
		throw std::invalid_argument("TabularEnv: start state out of range");
}

std::vector<int> TabularEnv::legal_actions(const EnvState &state) const
{
	if (is_terminal(state))
		return {};
	std::vector<int> out(mdp_.action_count);
	for (int a = 0; a < mdp_.action_count; ++a)
		out[a] = a;
	return out;
}

bool TabularEnv::is_terminal(const EnvState &state) const
{
	return mdp_.is_terminal(as<MdpState>(state, "tabular").id);
}

StepResult TabularEnv::step(const EnvState &state, int action) const
{
	const int s = as<MdpState>(state, "tabular").id;
	if (action < 0 || action >= mdp_.action_count || mdp_.is_terminal(s))
		illegal(*this, state, action);
	int next = 0;
	if (mdp_.stochastic) {
		// Successor is a fixed function of (state, action, mdp seed) so the
		// tree model stays deterministic.
		const auto p = mdp_.transition_row(s, action);
		const double u = unit_double(hash_combine(hash_combine(mdp_.seed, s), action));
		double acc = 0.0;
		next = mdp_.state_count - 1;
		for (int t = 0; t < mdp_.state_count; ++t) {
			acc += p[t];
			if (u < acc) {
				next = t;
				break;
			}
		}
	} else {
		next = mdp_.successor(s, action);
	}
	return {MdpState{next}, mdp_.reward(s, action), mdp_.is_terminal(next)};
}

std::uint64_t TabularEnv::state_key(const EnvState &state) const
{
	return static_cast<std::uint64_t>(as<MdpState>(state, "tabular").id);
}

std::optional<int> TabularEnv::tabular_index(const EnvState &state) const
{
	return as<MdpState>(state, "tabular").id;
}

std::string TabularEnv::describe(const EnvState &state) const
{
	return "mdp-state " + std::to_string(as<MdpState>(state, "tabular").id);
}

// ---------------------------------------------------------------- gomoku

GomokuState GomokuState::empty(int size, int win_length)
{
	GomokuState g;
	g.size = size;
	g.win_length = win_length;
	g.board.assign(static_cast<std::size_t>(size) * size, Stone::Empty);
	return g;
}

GomokuEnv::GomokuEnv(int size, int win_length) : size_(size), win_length_(win_length)
{
	if (size < 2 || win_length < 2 || win_length > size)
		throw std::invalid_argument("GomokuEnv: need 2 <= win_length <= size");
}

std::vector<int> GomokuEnv::legal_actions(const EnvState &state) const
{
	const auto &g = as<GomokuState>(state, "gomoku");
	std::vector<int> out;
	if (g.decided())
		return out;
	for (int i = 0; i < g.size * g.size; ++i)
		if (g.board[i] == Stone::Empty)
			out.push_back(i);
	return out;
}

bool GomokuEnv::is_terminal(const EnvState &state) const
{
	return as<GomokuState>(state, "gomoku").decided();
}

namespace {

bool completes_line(const GomokuState &g, int row, int col)
{
	const Stone p = g.at(row, col);
	constexpr int dirs[4][2] = {{0, 1}, {1, 0}, {1, 1}, {1, -1}};
	for (const auto &d : dirs) {
		int run = 1;
		for (int sign : {1, -1}) {
			int r = row + sign * d[0];
			int c = col + sign * d[1];
			while (r >= 0 && r < g.size && c >= 0 && c < g.size && g.at(r, c) == p) {
				++run;
				r += sign * d[0];
				c += sign * d[1];
			}
		}
		if (run >= g.win_length)
			return true;
	}
	return false;
}

} // namespace

StepResult GomokuEnv::step(const EnvState &state, int action) const
{
	const auto &g = as<GomokuState>(state, "gomoku");
	if (g.decided() || action < 0 || action >= g.size * g.size || g.board[action] != Stone::Empty)
		illegal(*this, state, action);
	GomokuState next = g;
	next.board[action] = g.to_move;
	++next.stones;
	double reward = 0.0;
	if (completes_line(next, action / g.size, action % g.size)) {
		next.winner = g.to_move;
		reward = 1.0;
	}
	next.to_move = opponent(g.to_move);
	const bool terminal = next.decided();
	return {std::move(next), reward, terminal};
}

std::uint64_t GomokuEnv::state_key(const EnvState &state) const
{
	const auto &g = as<GomokuState>(state, "gomoku");
	std::uint64_t h = hash_combine(static_cast<std::uint64_t>(g.size), static_cast<std::uint64_t>(g.to_move));
	for (Stone s : g.board)
		h = hash_combine(h, static_cast<std::uint64_t>(s));
	return h;
}

std::string GomokuEnv::describe(const EnvState &state) const
{
	const auto &g = as<GomokuState>(state, "gomoku");
	std::string out;
	for (int r = 0; r < g.size; ++r) {
		for (int c = 0; c < g.size; ++c)
			out += ".XO"[static_cast<int>(g.at(r, c))];
		out += '/';
	}
	out += g.to_move == Stone::Black ? " X to move" : " O to move";
	return out;
}

// ---------------------------------------------------------------- cartpole

CartPoleDiscrete::CartPoleDiscrete(CartPoleParams params) : params_(params)
{
	if (params_.action_count < 2)
		throw std::invalid_argument("CartPoleDiscrete: need at least 2 actions");
	if (!(params_.force_max > params_.force_min))
		throw std::invalid_argument("CartPoleDiscrete: empty force interval");
	if (params_.step_limit < 1)
		throw std::invalid_argument("CartPoleDiscrete: step limit must be positive");
}

double CartPoleDiscrete::force(int action) const
{
	const double t = static_cast<double>(action) / (params_.action_count - 1);
	return params_.force_min + t * (params_.force_max - params_.force_min);
}

EnvState CartPoleDiscrete::initial_state() const
{
	CartPoleState s;
	s.theta = params_.initial_theta;
	return s;
}

std::vector<int> CartPoleDiscrete::legal_actions(const EnvState &state) const
{
	if (is_terminal(state))
		return {};
	std::vector<int> out(params_.action_count);
	for (int a = 0; a < params_.action_count; ++a)
		out[a] = a;
	return out;
}

bool CartPoleDiscrete::is_terminal(const EnvState &state) const
{
	return as<CartPoleState>(state, "cartpole").done;
}

StepResult CartPoleDiscrete::step(const EnvState &state, int action) const
{
	const auto &s = as<CartPoleState>(state, "cartpole");
	if (s.done || action < 0 || action >= params_.action_count)
		illegal(*this, state, action);
	const auto &p = params_;
	const double f = force(action);
	const double total_mass = p.cart_mass + p.pole_mass;
	const double pole_mass_length = p.pole_mass * p.pole_half_length;
	const double cos_t = std::cos(s.theta);
	const double sin_t = std::sin(s.theta);
	const double temp = (f + pole_mass_length * s.theta_dot * s.theta_dot * sin_t) / total_mass;
	const double theta_acc = (p.gravity * sin_t - cos_t * temp) /
	                         (p.pole_half_length * (4.0 / 3.0 - p.pole_mass * cos_t * cos_t / total_mass));
	const double x_acc = temp - pole_mass_length * theta_acc * cos_t / total_mass;

	CartPoleState n;
	n.x = s.x + p.dt * s.x_dot;
	n.x_dot = s.x_dot + p.dt * x_acc;
	n.theta = s.theta + p.dt * s.theta_dot;
	n.theta_dot = s.theta_dot + p.dt * theta_acc;
	n.steps = s.steps + 1;
	n.done = std::abs(n.x) > p.x_threshold || std::abs(n.theta) > p.theta_threshold || n.steps >= p.step_limit;
	const bool terminal = n.done;
	return {n, 1.0, terminal};
}

std::uint64_t CartPoleDiscrete::state_key(const EnvState &state) const
{
	const auto &s = as<CartPoleState>(state, "cartpole");
	std::uint64_t h = splitmix64(static_cast<std::uint64_t>(s.steps));
	for (double v : {s.x, s.x_dot, s.theta, s.theta_dot})
		h = hash_combine(h, std::bit_cast<std::uint64_t>(v));
	return hash_combine(h, s.done ? 1 : 0);
}

std::string CartPoleDiscrete::describe(const EnvState &state) const
{
	const auto &s = as<CartPoleState>(state, "cartpole");
	std::ostringstream os;
	os << "cartpole(x=" << s.x << ", x_dot=" << s.x_dot << ", theta=" << s.theta << ", theta_dot=" << s.theta_dot
	   << ", step=" << s.steps << (s.done ? ", done)" : ")");
	return os.str();
}

} // namespace ptsa
