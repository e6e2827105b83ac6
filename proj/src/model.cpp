#include "ptsa/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "ptsa/common.hpp"

namespace ptsa {

Prediction model_predict(const Model &model, const EnvState &state, int action)
{
	return model.recurrent_inference(state, action);
}

// ---------------------------------------------------------------- oracle

ModelOracle::ModelOracle(const Environment &env, const ValueTables *tables, RolloutOptions rollout)
    : env_(env), tables_(tables), rollout_(rollout)
{
	if (rollout_.depth < 1 || rollout_.rollouts < 1)
		throw std::invalid_argument("ModelOracle: rollout depth and count must be positive");
	if (tables_ && (tables_->state_count < 1 || tables_->action_count != env_.action_count()))
		throw std::invalid_argument("ModelOracle: value tables do not match the environment");
}

Prediction ModelOracle::initial_inference(const EnvState &state) const
{
	return predict(state, 0.0);
}

Prediction ModelOracle::recurrent_inference(const EnvState &state, int action) const
{
	StepResult r = env_.step(state, action);
	return predict(std::move(r.next), r.reward);
}

Prediction ModelOracle::predict(EnvState state, double reward) const
{
	Prediction p;
	p.reward = reward;
	p.terminal = env_.is_terminal(state);
	if (!p.terminal) {
		p.legal = env_.legal_actions(state);
		const auto index = env_.tabular_index(state);
		if (tables_ && index) {
			p.value = tables_->v_star[*index];
			std::vector<double> q;
			q.reserve(p.legal.size());
			for (int a : p.legal)
				q.push_back(tables_->q(*index, a));
			p.priors = softmax_q(p.legal, q).probs;
		} else {
			p.value = rollout_value(state);
			p.priors.assign(p.legal.size(), 1.0 / static_cast<double>(p.legal.size()));
		}
	}
	p.state = std::move(state);
	return p;
}

double ModelOracle::rollout_value(const EnvState &state) const
{
	const double gamma = env_.discount();
	const bool two_player = env_.two_player();
	const std::uint64_t key = hash_combine(env_.state_key(state), rollout_.seed);
	double total = 0.0;
	for (int k = 0; k < rollout_.rollouts; ++k) {
		std::mt19937_64 rng(hash_combine(key, static_cast<std::uint64_t>(k)));
		EnvState cur = state;
		double g = 0.0, weight = 1.0;
		for (int d = 0; d < rollout_.depth && !env_.is_terminal(cur); ++d) {
			const auto legal = env_.legal_actions(cur);
			StepResult r = env_.step(cur, legal[uniform_index(rng, legal.size())]);
			g += weight * r.reward;
			weight *= two_player ? -gamma : gamma;
			cur = std::move(r.next);
		}
		total += g;
	}
	return total / rollout_.rollouts;
}

double ModelOracle::value_bound() const
{
	const double r_max = env_.reward_bound();
	const double gamma = env_.discount();
	double horizon = 0.0, w = 1.0;
	for (int d = 0; d < rollout_.depth; ++d, w *= gamma)
		horizon += w;
	double bound = r_max * horizon;
	if (tables_ && gamma < 1.0)
		bound = std::max(bound, r_max / (1.0 - gamma));
	return bound;
}

// ---------------------------------------------------------------- noise

NoisyModel::NoisyModel(const Model &inner, double value_sigma, double prior_sigma, std::uint64_t seed)
    : inner_(inner), value_sigma_(value_sigma), prior_sigma_(prior_sigma), seed_(seed)
{
	if (!(value_sigma >= 0.0) || !(prior_sigma >= 0.0))
		throw std::invalid_argument("NoisyModel: sigmas must be non-negative");
}

Prediction NoisyModel::initial_inference(const EnvState &state) const
{
	Prediction p = inner_.initial_inference(state);
	perturb(p, hash_combine(hash_combine(environment().state_key(state), ~0ULL), seed_));
	return p;
}

Prediction NoisyModel::recurrent_inference(const EnvState &state, int action) const
{
	Prediction p = inner_.recurrent_inference(state, action);
	perturb(p, hash_combine(hash_combine(environment().state_key(state), static_cast<std::uint64_t>(action)), seed_));
	return p;
}

void NoisyModel::perturb(Prediction &p, std::uint64_t key) const
{
	if (p.terminal)
		return;
	if (value_sigma_ > 0.0)
		p.value += value_sigma_ * hashed_normal(hash_combine(key, 1));
	if (prior_sigma_ > 0.0 && !p.priors.empty()) {
		double total = 0.0;
		for (std::size_t i = 0; i < p.priors.size(); ++i) {
			const double z = hashed_normal(hash_combine(hash_combine(key, 2), static_cast<std::uint64_t>(p.legal[i])));
			p.priors[i] *= std::exp(prior_sigma_ * z);
			total += p.priors[i];
		}
		for (double &x : p.priors)
			x /= total;
	}
}

double NoisyModel::value_bound() const
{
	return inner_.value_bound() + kNormalMagnitudeBound * value_sigma_;
}

// ---------------------------------------------------------------- scoring

IncorrectAggregation incorrect_aggregation_rate(std::span<const AggregationEvent> events, const ValueTables &tables)
{
	const AbstractionFn exact = AbstractionFn::a_star();
	IncorrectAggregation out;
	for (const auto &e : events) {
		if (!e.decided)
			continue;
		++out.decided;
		if (e.states_a.size() != e.states_b.size())
			throw std::invalid_argument("incorrect_aggregation_rate: event paths differ in length");
		for (std::size_t i = 0; i < e.states_a.size(); ++i)
			if (!eval_predicate(static_cast<int>(e.states_a[i]), static_cast<int>(e.states_b[i]), exact, tables)) {
				++out.incorrect;
				break;
			}
	}
	out.vacuous = out.decided == 0;
	out.rate = out.vacuous ? 0.0 : static_cast<double>(out.incorrect) / static_cast<double>(out.decided);
	return out;
}

} // namespace ptsa
