#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ptsa/abstraction.hpp"
#include "ptsa/mdp.hpp"
#include "ptsa/model.hpp"
#include "ptsa/search_tree.hpp"

namespace ptsa {

// A simulation failed; carries the simulation index.
class SearchAborted : public std::runtime_error
{
public:
	SearchAborted(int simulation, const std::string &what);
	int simulation() const { return simulation_; }

private:
	int simulation_;
};

struct RunMetrics
{
	int simulations = 0;
	std::uint64_t searched_paths = 0;    // distinct paths added to S_L
	std::uint64_t aggregated_paths = 0;  // positive aggregation decisions
	double aggregation_percentage = 0.0;
	std::size_t expanded_nodes = 0;      // live expanded nodes at the end
	std::size_t expansion_calls = 0;
	double average_search_depth = 0.0;   // mean live S_L path length
	std::size_t max_comparisons = 0;
	std::map<std::size_t, int> comparisons_histogram;  // comparisons per simulation -> count
	double aggregation_error_measured = 0.0;
	std::optional<double> aggregation_error_bound;
	std::optional<double> zeta;
	double root_value = 0.0;
	double episode_return = 0.0;
	std::chrono::duration<double> wall_time{0.0};
};

struct SearchResult
{
	SearchTree tree;
	std::map<int, double> policy;
	RunMetrics metrics;
	std::vector<AggregationEvent> events;
	std::vector<SearchPath> live_paths;
};

// Search loop with the abstraction sweep after every simulation. `tables`
// supplies the oracle Q rows (q_source = oracle) and the path values used by
// the aggregation error; it may be null otherwise. `stop_after` ends the loop
// early, after that many simulations.
SearchResult ptsa_search(const Model &model, const EnvState &root_state, const SearchConfig &config,
                         const ValueTables *tables = nullptr, std::optional<int> stop_after = std::nullopt);

// Plain PUCT (or sampled) search; never touches the abstraction.
SearchResult baseline_search(const Model &model, const EnvState &root_state, const SearchConfig &config,
                             std::optional<int> stop_after = std::nullopt);

} // namespace ptsa
