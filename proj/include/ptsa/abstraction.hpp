#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ptsa/mdp.hpp"

namespace ptsa {

enum class AbstractionKind {
	PhiAStar,       // a*1 = a*2 and V*(s1) = V*(s2)
	PhiAStarEps,    // a*1 = a*2 and |V*(s1) - V*(s2)| <= eps
	PhiQStar,       // max_a |Q*(s1,a) - Q*(s2,a)| = 0
	PhiQStarEps,    // max_a |Q*(s1,a) - Q*(s2,a)| <= eps
	PhiQBucket,     // ceil(Q*(s1,a)/d) = ceil(Q*(s2,a)/d) for all a
	PhiQPsiAlpha,   // probability abstraction: alpha * (1 - JS(softmax Q1 || softmax Q2))
};

inline constexpr AbstractionKind kAllAbstractionKinds[] = {
    AbstractionKind::PhiAStar,    AbstractionKind::PhiAStarEps, AbstractionKind::PhiQStar,
    AbstractionKind::PhiQStarEps, AbstractionKind::PhiQBucket,  AbstractionKind::PhiQPsiAlpha};

std::string_view to_string(AbstractionKind kind);
AbstractionKind abstraction_kind_from_string(std::string_view name);

// Whether the predicate is known to be transitive; the probability
// abstraction is reported as not guaranteed.
bool listed_transitive(AbstractionKind kind);

struct DecisionMode
{
	enum class Kind { Threshold, Bernoulli };
	Kind kind = Kind::Threshold;
	double tau = 0.5;
	std::uint64_t seed = 0;

	static DecisionMode threshold(double tau = 0.5) { return {Kind::Threshold, tau, 0}; }
	static DecisionMode bernoulli(std::uint64_t seed) { return {Kind::Bernoulli, 0.5, seed}; }
	bool operator==(const DecisionMode &) const = default;
};

// Equality predicates compare within this tolerance.
inline constexpr double kExactTolerance = 1e-9;

struct AbstractionFn
{
	AbstractionKind kind = AbstractionKind::PhiQPsiAlpha;
	std::optional<double> alpha;
	std::optional<double> epsilon;
	std::optional<double> bucket;
	DecisionMode decision;
	// Loss bound used by the aggregation-error check; only meaningful (and
	// only settable) for the probability abstraction.
	std::optional<double> zeta;

	static AbstractionFn a_star();
	static AbstractionFn a_star_eps(double epsilon);
	static AbstractionFn q_star();
	static AbstractionFn q_star_eps(double epsilon);
	static AbstractionFn q_bucket(double d);
	static AbstractionFn q_psi_alpha(double alpha, DecisionMode decision = DecisionMode::threshold());

	bool deterministic() const { return kind != AbstractionKind::PhiQPsiAlpha; }
	// Throws std::invalid_argument when a parameter is missing, out of range,
	// or set for a kind that does not use it.
	void validate() const;

	bool operator==(const AbstractionFn &) const = default;
};

nlohmann::json abstraction_to_json(const AbstractionFn &fn);
AbstractionFn abstraction_from_json(const nlohmann::json &doc);

// Q values over a node's legal actions plus the node value V used by the
// a* predicates (V* for oracle rows, max Q otherwise).
struct QRow
{
	std::vector<int> actions;
	std::vector<double> q;
	double v = 0.0;

	static QRow from_values(std::vector<int> actions, std::vector<double> q);
	int best_action() const;
	bool empty() const { return actions.empty(); }
};

QRow table_row(const ValueTables &tables, int state);

struct ValueDistribution
{
	std::vector<int> support;
	std::vector<double> probs;
};

ValueDistribution softmax_q(std::span<const int> actions, std::span<const double> q);
inline ValueDistribution softmax_q(const QRow &row) { return softmax_q(row.actions, row.q); }

// Base-2 Jensen-Shannon divergence, in [0, 1]. Throws on mismatched supports.
double js_divergence(const ValueDistribution &p, const ValueDistribution &q);

// alpha * (1 - D_JS); 0 when the action sets differ or either row is empty.
double node_agg_prob(const QRow &a, const QRow &b, double alpha);

// 1 - prod(1 - p_i).
double combine_node_probs(std::span<const double> per_node);

bool node_predicate(const QRow &a, const QRow &b, const AbstractionFn &fn);
bool eval_predicate(int sa, int sb, const AbstractionFn &fn, const ValueTables &tables);

struct AggregationEvent
{
	int sim_index = 0;
	std::uint64_t path_a = 0;
	std::uint64_t path_b = 0;
	double probability = 0.0;
	std::vector<double> per_node_probs;
	bool decided = false;
	// Environment state keys (tabular index for MDPs) of the compared nodes.
	std::vector<std::int64_t> states_a;
	std::vector<std::int64_t> states_b;
	double value_a = 0.0;
	double value_b = 0.0;
};

using RowPath = std::span<const QRow *const>;

// Aggregation event for two aligned node sequences. The probability
// abstraction combines node probabilities with 1 - prod(1 - p_i); the
// deterministic kinds use the per-node conjunction, with 0/1 node values.
AggregationEvent path_agg_prob(RowPath a, RowPath b, const AbstractionFn &fn);

// Threshold: probability >= tau. Bernoulli: one uniform draw < probability.
bool decide_aggregate(AggregationEvent &event, const DecisionMode &mode, std::mt19937_64 &rng);

class AggregationDecider
{
public:
	explicit AggregationDecider(DecisionMode mode) : mode_(mode), rng_(mode.seed) {}
	bool operator()(AggregationEvent &event) { return decide_aggregate(event, mode_, rng_); }

private:
	DecisionMode mode_;
	std::mt19937_64 rng_;
};

nlohmann::json event_to_json(const AggregationEvent &event);
AggregationEvent event_from_json(const nlohmann::json &doc);

} // namespace ptsa
