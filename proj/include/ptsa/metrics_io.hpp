#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ptsa/harness.hpp"
#include "ptsa/search.hpp"

namespace ptsa {

inline constexpr int kMetricsSchemaVersion = 1;

// Deterministic fields only (no wall time).
nlohmann::json metrics_to_json(const RunMetrics &metrics);

// One JSONL record per search.
nlohmann::json search_record(const MoveRecord &move, std::string_view abstraction);
std::vector<nlohmann::json> search_records(const std::vector<EpisodeResult> &episodes, std::string_view abstraction);

struct EpisodeSummary
{
	int episode = 0;
	int moves = 0;
	int simulations = 0;
	double episode_return = 0.0;
	std::uint64_t searched_paths = 0;
	std::uint64_t aggregated_paths = 0;
	double mean_aggregation_percentage = 0.0;
	double mean_expanded_nodes = 0.0;
	double mean_search_depth = 0.0;
};

std::vector<EpisodeSummary> summarize(const std::vector<nlohmann::json> &records);
std::string summary_csv(const std::vector<EpisodeSummary> &rows);

std::string to_jsonl(const std::vector<nlohmann::json> &records);
std::vector<nlohmann::json> parse_jsonl(const std::string &text);

// Throws std::runtime_error naming the path on I/O failure.
void write_text(const std::string &path, const std::string &text);
std::string read_text(const std::string &path);

// Writes <prefix>.jsonl and <prefix>.csv.
void emit_metrics(const std::vector<nlohmann::json> &records, const std::string &prefix);

std::vector<nlohmann::json> event_records(const std::vector<EpisodeResult> &episodes);

} // namespace ptsa
