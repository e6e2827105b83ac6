#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "ptsa/abstraction.hpp"
#include "ptsa/environment.hpp"
#include "ptsa/mdp.hpp"

namespace ptsa {

// What the search sees after entering a state: reward paid on entry, a value
// estimate from the perspective of the player to move there, and priors over
// the legal actions (aligned with `legal`).
struct Prediction
{
	EnvState state;
	double reward = 0.0;
	double value = 0.0;
	std::vector<int> legal;
	std::vector<double> priors;
	bool terminal = false;
};

class Model
{
public:
	virtual ~Model() = default;

	virtual const Environment &environment() const = 0;
	virtual Prediction initial_inference(const EnvState &state) const = 0;
	// Throws ContractViolation when the action is illegal in `state`.
	virtual Prediction recurrent_inference(const EnvState &state, int action) const = 0;
	// Upper bound on |value| over every prediction this model can make.
	virtual double value_bound() const = 0;
};

Prediction model_predict(const Model &model, const EnvState &state, int action);

struct RolloutOptions
{
	int depth = 20;
	int rollouts = 4;
	std::uint64_t seed = 0;
};

// Exact dynamics. Tabular environments with tables report V* of the entered
// state and softmax(Q*) priors; everything else gets the mean discounted
// return of seeded uniform-random rollouts and uniform priors.
class ModelOracle final : public Model
{
public:
	explicit ModelOracle(const Environment &env, const ValueTables *tables = nullptr, RolloutOptions rollout = {});

	const Environment &environment() const override { return env_; }
	Prediction initial_inference(const EnvState &state) const override;
	Prediction recurrent_inference(const EnvState &state, int action) const override;
	double value_bound() const override;

	double rollout_value(const EnvState &state) const;
	const ValueTables *tables() const { return tables_; }

private:
	Prediction predict(EnvState state, double reward) const;

	const Environment &env_;
	const ValueTables *tables_;
	RolloutOptions rollout_;
};

// Gaussian noise on values and logit-space Gaussian noise on priors, hashed
// from (state, action, seed). Zero sigmas pass the inner model through
// untouched.
class NoisyModel final : public Model
{
public:
	NoisyModel(const Model &inner, double value_sigma, double prior_sigma, std::uint64_t seed);

	const Environment &environment() const override { return inner_.environment(); }
	Prediction initial_inference(const EnvState &state) const override;
	Prediction recurrent_inference(const EnvState &state, int action) const override;
	double value_bound() const override;

	double value_sigma() const { return value_sigma_; }
	double prior_sigma() const { return prior_sigma_; }

private:
	void perturb(Prediction &p, std::uint64_t key) const;

	const Model &inner_;
	double value_sigma_;
	double prior_sigma_;
	std::uint64_t seed_;
};

struct IncorrectAggregation
{
	double rate = 0.0;
	std::size_t decided = 0;
	std::size_t incorrect = 0;
	bool vacuous = true;  // no decided events
};

// Share of decided events where some aligned state pair fails phi_a* under
// the true tables.
IncorrectAggregation incorrect_aggregation_rate(std::span<const AggregationEvent> events, const ValueTables &tables);

} // namespace ptsa
