#include "ptsa/abstraction.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ptsa/common.hpp"

namespace ptsa {

namespace {

struct KindName
{
	AbstractionKind kind;
	std::string_view name;
};

constexpr KindName kKindNames[] = {
    {AbstractionKind::PhiAStar, "phi_a_star"},         {AbstractionKind::PhiAStarEps, "phi_a_star_eps"},
    {AbstractionKind::PhiQStar, "phi_q_star"},         {AbstractionKind::PhiQStarEps, "phi_q_star_eps"},
    {AbstractionKind::PhiQBucket, "phi_q_d"},          {AbstractionKind::PhiQPsiAlpha, "phi_q_psi_alpha"},
};

} // namespace

std::string_view to_string(AbstractionKind kind)
{
	for (const auto &k : kKindNames)
		if (k.kind == kind)
			return k.name;
	return "unknown";
}

AbstractionKind abstraction_kind_from_string(std::string_view name)
{
	for (const auto &k : kKindNames)
		if (k.name == name)
			return k.kind;
	throw std::invalid_argument("unknown abstraction kind '" + std::string(name) + "'");
}

bool listed_transitive(AbstractionKind kind)
{
	switch (kind) {
	case AbstractionKind::PhiAStar:
	case AbstractionKind::PhiQStar:
	case AbstractionKind::PhiQBucket:
		return true;
	default:
		return false;
	}
}

AbstractionFn AbstractionFn::a_star() { return {AbstractionKind::PhiAStar, {}, {}, {}, {}, {}}; }
AbstractionFn AbstractionFn::a_star_eps(double eps) { return {AbstractionKind::PhiAStarEps, {}, eps, {}, {}, {}}; }
AbstractionFn AbstractionFn::q_star() { return {AbstractionKind::PhiQStar, {}, {}, {}, {}, {}}; }
AbstractionFn AbstractionFn::q_star_eps(double eps) { return {AbstractionKind::PhiQStarEps, {}, eps, {}, {}, {}}; }
AbstractionFn AbstractionFn::q_bucket(double d) { return {AbstractionKind::PhiQBucket, {}, {}, d, {}, {}}; }

AbstractionFn AbstractionFn::q_psi_alpha(double alpha, DecisionMode decision)
{
	return {AbstractionKind::PhiQPsiAlpha, alpha, {}, {}, decision, {}};
}

void AbstractionFn::validate() const
{
	const bool wants_alpha = kind == AbstractionKind::PhiQPsiAlpha;
	const bool wants_eps = kind == AbstractionKind::PhiAStarEps || kind == AbstractionKind::PhiQStarEps;
	const bool wants_bucket = kind == AbstractionKind::PhiQBucket;
	const std::string name(to_string(kind));
	if (alpha.has_value() != wants_alpha)
		throw std::invalid_argument(name + ": alpha is " + (wants_alpha ? "required" : "not applicable"));
	if (epsilon.has_value() != wants_eps)
		throw std::invalid_argument(name + ": epsilon is " + (wants_eps ? "required" : "not applicable"));
	if (bucket.has_value() != wants_bucket)
		throw std::invalid_argument(name + ": d is " + (wants_bucket ? "required" : "not applicable"));
	if (zeta.has_value() && !wants_alpha)
		throw std::invalid_argument(name + ": zeta is derived from the predicate, not configured");
	if (alpha && !(*alpha >= 0.0 && *alpha <= 1.0))
		throw std::invalid_argument(name + ": alpha must lie in [0, 1]");
	if (epsilon && !(*epsilon >= 0.0))
		throw std::invalid_argument(name + ": epsilon must be non-negative");
	if (bucket && !(*bucket > 0.0))
		throw std::invalid_argument(name + ": d must be positive");
	if (zeta && !(*zeta >= 0.0))
		throw std::invalid_argument(name + ": zeta must be non-negative");
	if (decision.kind == DecisionMode::Kind::Threshold && !(decision.tau > 0.0 && decision.tau <= 1.0))
		throw std::invalid_argument(name + ": tau must lie in (0, 1]");
}

nlohmann::json abstraction_to_json(const AbstractionFn &fn)
{
	nlohmann::json j{{"kind", std::string(to_string(fn.kind))}};
	if (fn.alpha)
		j["alpha"] = *fn.alpha;
	if (fn.epsilon)
		j["epsilon"] = *fn.epsilon;
	if (fn.bucket)
		j["d"] = *fn.bucket;
	if (fn.zeta)
		j["zeta"] = *fn.zeta;
	if (fn.decision.kind == DecisionMode::Kind::Threshold)
		j["decision"] = {{"mode", "threshold"}, {"tau", fn.decision.tau}};
	else
		j["decision"] = {{"mode", "bernoulli"}, {"seed", fn.decision.seed}};
	return j;
}

AbstractionFn abstraction_from_json(const nlohmann::json &doc)
{
	AbstractionFn fn;
	fn.kind = abstraction_kind_from_string(doc.at("kind").get<std::string>());
	if (doc.contains("alpha"))
		fn.alpha = doc["alpha"].get<double>();
	if (doc.contains("epsilon"))
		fn.epsilon = doc["epsilon"].get<double>();
	if (doc.contains("d"))
		fn.bucket = doc["d"].get<double>();
	if (doc.contains("zeta"))
		fn.zeta = doc["zeta"].get<double>();
	if (doc.contains("decision")) {
		const auto &d = doc["decision"];
		const auto mode = d.at("mode").get<std::string>();
		if (mode == "threshold")
			fn.decision = DecisionMode::threshold(d.value("tau", 0.5));
		else if (mode == "bernoulli")
			fn.decision = DecisionMode::bernoulli(d.value("seed", std::uint64_t{0}));
		else
			throw std::invalid_argument("unknown decision mode '" + mode + "'");
	}
	fn.validate();
	return fn;
}

// ---------------------------------------------------------------- rows

QRow QRow::from_values(std::vector<int> actions, std::vector<double> q)
{
	QRow r{std::move(actions), std::move(q), 0.0};
	if (!r.q.empty())
		r.v = *std::max_element(r.q.begin(), r.q.end());
	return r;
}

int QRow::best_action() const
{
	if (q.empty())
		return -1;
	return actions[std::max_element(q.begin(), q.end()) - q.begin()];
}

QRow table_row(const ValueTables &tables, int state)
{
	if (state < 0 || state >= tables.state_count)
		throw std::invalid_argument("state " + std::to_string(state) + " is not covered by the value tables");
	QRow r;
	const auto q = tables.q_row(state);
	r.q.assign(q.begin(), q.end());
	r.actions.resize(r.q.size());
	for (std::size_t a = 0; a < r.actions.size(); ++a)
		r.actions[a] = static_cast<int>(a);
	r.v = tables.v_star[state];
	return r;
}

// ---------------------------------------------------------------- formulas

ValueDistribution softmax_q(std::span<const int> actions, std::span<const double> q)
{
	if (q.empty())
		throw std::invalid_argument("softmax_q: empty action set");
	if (actions.size() != q.size())
		throw std::invalid_argument("softmax_q: action and value counts differ");
	const double top = *std::max_element(q.begin(), q.end());
	if (!std::isfinite(top))
		throw std::invalid_argument("softmax_q: non-finite Q value");
	ValueDistribution d;
	d.support.assign(actions.begin(), actions.end());
	d.probs.resize(q.size());
	double total = 0.0;
	for (std::size_t i = 0; i < q.size(); ++i) {
		if (!std::isfinite(q[i]))
			throw std::invalid_argument("softmax_q: non-finite Q value");
		d.probs[i] = std::exp(q[i] - top);
		total += d.probs[i];
	}
	for (double &p : d.probs)
		p /= total;
	return d;
}

double js_divergence(const ValueDistribution &p, const ValueDistribution &q)
{
	if (p.support != q.support || p.probs.size() != q.probs.size())
		throw std::invalid_argument("js_divergence: distributions have different supports");
	double kl_p = 0.0;
	double kl_q = 0.0;
	for (std::size_t i = 0; i < p.probs.size(); ++i) {
		const double m = 0.5 * (p.probs[i] + q.probs[i]);
		if (p.probs[i] > 0.0)
			kl_p += p.probs[i] * std::log2(p.probs[i] / m);
		if (q.probs[i] > 0.0)
			kl_q += q.probs[i] * std::log2(q.probs[i] / m);
	}
	return std::clamp(0.5 * (kl_p + kl_q), 0.0, 1.0);
}

double node_agg_prob(const QRow &a, const QRow &b, double alpha)
{
	if (a.empty() || b.empty() || a.actions != b.actions)
		return 0.0;
	return alpha * (1.0 - js_divergence(softmax_q(a), softmax_q(b)));
}

double combine_node_probs(std::span<const double> per_node)
{
	double miss = 1.0;
	for (double p : per_node)
		miss *= 1.0 - p;
	return 1.0 - miss;
}

bool node_predicate(const QRow &a, const QRow &b, const AbstractionFn &fn)
{
	if (fn.kind == AbstractionKind::PhiQPsiAlpha)
		return node_agg_prob(a, b, fn.alpha.value_or(0.0)) >= fn.decision.tau;
	if (a.empty() || b.empty() || a.actions != b.actions)
		return false;

	double max_gap = 0.0;
	for (std::size_t i = 0; i < a.q.size(); ++i)
		max_gap = std::max(max_gap, std::abs(a.q[i] - b.q[i]));

	switch (fn.kind) {
	case AbstractionKind::PhiAStar:
		return a.best_action() == b.best_action() && std::abs(a.v - b.v) <= kExactTolerance;
	case AbstractionKind::PhiAStarEps:
		return a.best_action() == b.best_action() && std::abs(a.v - b.v) <= *fn.epsilon;
	case AbstractionKind::PhiQStar:
		return max_gap <= kExactTolerance;
	case AbstractionKind::PhiQStarEps:
		return max_gap <= *fn.epsilon;
	case AbstractionKind::PhiQBucket:
		for (std::size_t i = 0; i < a.q.size(); ++i)
			if (std::ceil(a.q[i] / *fn.bucket) != std::ceil(b.q[i] / *fn.bucket))
				return false;
		return true;
	case AbstractionKind::PhiQPsiAlpha:
		break;
	}
	return false;
}

bool eval_predicate(int sa, int sb, const AbstractionFn &fn, const ValueTables &tables)
{
	return node_predicate(table_row(tables, sa), table_row(tables, sb), fn);
}

AggregationEvent path_agg_prob(RowPath a, RowPath b, const AbstractionFn &fn)
{
	if (a.size() != b.size())
		throw std::invalid_argument("path_agg_prob: paths have different lengths");
	if (a.empty())
		throw std::invalid_argument("path_agg_prob: empty paths");
	AggregationEvent e;
	e.per_node_probs.resize(a.size());
	if (fn.kind == AbstractionKind::PhiQPsiAlpha) {
		for (std::size_t i = 0; i < a.size(); ++i)
			e.per_node_probs[i] = node_agg_prob(*a[i], *b[i], *fn.alpha);
		e.probability = combine_node_probs(e.per_node_probs);
		return e;
	}
	bool all = true;
	for (std::size_t i = 0; i < a.size(); ++i) {
		const bool holds = node_predicate(*a[i], *b[i], fn);
		e.per_node_probs[i] = holds ? 1.0 : 0.0;
		all = all && holds;
	}
	e.probability = all ? 1.0 : 0.0;
	return e;
}

bool decide_aggregate(AggregationEvent &event, const DecisionMode &mode, std::mt19937_64 &rng)
{
	if (!(event.probability >= 0.0 && event.probability <= 1.0))
		throw ContractViolation("decide_aggregate: probability outside [0, 1]");
	if (mode.kind == DecisionMode::Kind::Threshold)
		event.decided = event.probability >= mode.tau;
	else
		event.decided = uniform01(rng) < event.probability;
	return event.decided;
}

nlohmann::json event_to_json(const AggregationEvent &e)
{
	return nlohmann::json{{"sim_index", e.sim_index}, {"path_a", e.path_a},      {"path_b", e.path_b},
	                      {"prob", e.probability},    {"per_node_probs", e.per_node_probs},
	                      {"decided", e.decided},     {"states_a", e.states_a},  {"states_b", e.states_b},
	                      {"value_a", e.value_a},     {"value_b", e.value_b}};
}

AggregationEvent event_from_json(const nlohmann::json &doc)
{
	AggregationEvent e;
	e.sim_index = doc.at("sim_index").get<int>();
	e.path_a = doc.at("path_a").get<std::uint64_t>();
	e.path_b = doc.at("path_b").get<std::uint64_t>();
	e.probability = doc.at("prob").get<double>();
	e.per_node_probs = doc.at("per_node_probs").get<std::vector<double>>();
	e.decided = doc.at("decided").get<bool>();
	e.states_a = doc.value("states_a", std::vector<std::int64_t>{});
	e.states_b = doc.value("states_b", std::vector<std::int64_t>{});
	e.value_a = doc.value("value_a", 0.0);
	e.value_b = doc.value("value_b", 0.0);
	return e;
}

} // namespace ptsa
