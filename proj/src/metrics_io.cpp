#include "ptsa/metrics_io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace ptsa {

using json = nlohmann::json;

json metrics_to_json(const RunMetrics &m)
{
	json hist = json::object();
	for (const auto &[k, v] : m.comparisons_histogram)
		hist[std::to_string(k)] = v;
	return {{"simulations", m.simulations},
	        {"searched_paths", m.searched_paths},
	        {"aggregated_paths", m.aggregated_paths},
	        {"aggregation_percentage", m.aggregation_percentage},
	        {"expanded_nodes", m.expanded_nodes},
	        {"expansion_calls", m.expansion_calls},
	        {"average_search_depth", m.average_search_depth},
	        {"max_comparisons", m.max_comparisons},
	        {"comparisons_histogram", std::move(hist)},
	        {"aggregation_error_measured", m.aggregation_error_measured},
	        {"aggregation_error_bound",
	         m.aggregation_error_bound ? json(*m.aggregation_error_bound) : json(nullptr)},
	        {"zeta", m.zeta ? json(*m.zeta) : json(nullptr)},
	        {"root_value", m.root_value},
	        {"episode_return", m.episode_return}};
}

json search_record(const MoveRecord &move, std::string_view abstraction)
{
	json j = metrics_to_json(move.metrics);
	j["schema_version"] = kMetricsSchemaVersion;
	j["episode"] = move.episode;
	j["move"] = move.move;
	j["action"] = move.action;
	j["reward"] = move.reward;
	j["abstraction"] = std::string(abstraction);
	std::size_t decided = 0;
	for (const auto &e : move.events)
		decided += e.decided ? 1 : 0;
	j["events"] = move.events.size();
	j["decided_events"] = decided;
	return j;
}

std::vector<json> search_records(const std::vector<EpisodeResult> &episodes, std::string_view abstraction)
{
	std::vector<json> out;
	for (const auto &ep : episodes)
		for (const auto &m : ep.moves)
			out.push_back(search_record(m, abstraction));
	return out;
}

std::vector<json> event_records(const std::vector<EpisodeResult> &episodes)
{
	std::vector<json> out;
	for (const auto &ep : episodes)
		for (const auto &m : ep.moves)
			for (const auto &e : m.events) {
				json j = event_to_json(e);
				j["schema_version"] = kMetricsSchemaVersion;
				j["episode"] = ep.episode;
				j["move"] = m.move;
				out.push_back(std::move(j));
			}
	return out;
}

std::vector<EpisodeSummary> summarize(const std::vector<json> &records)
{
	std::map<int, EpisodeSummary> rows;
	for (const auto &r : records) {
		const int ep = r.at("episode").get<int>();
		EpisodeSummary &s = rows[ep];
		s.episode = ep;
		s.moves += 1;
		s.simulations += r.at("simulations").get<int>();
		s.episode_return += r.at("reward").get<double>();
		s.searched_paths += r.at("searched_paths").get<std::uint64_t>();
		s.aggregated_paths += r.at("aggregated_paths").get<std::uint64_t>();
		s.mean_aggregation_percentage += r.at("aggregation_percentage").get<double>();
		s.mean_expanded_nodes += r.at("expanded_nodes").get<double>();
		s.mean_search_depth += r.at("average_search_depth").get<double>();
	}
	std::vector<EpisodeSummary> out;
	for (auto &[ep, s] : rows) {
		s.mean_aggregation_percentage /= s.moves;
		s.mean_expanded_nodes /= s.moves;
		s.mean_search_depth /= s.moves;
		out.push_back(s);
	}
	return out;
}

std::string summary_csv(const std::vector<EpisodeSummary> &rows)
{
	std::string out = "schema_version,episode,moves,simulations,episode_return,searched_paths,aggregated_paths,"
	                  "mean_aggregation_percentage,mean_expanded_nodes,mean_search_depth\n";
	char line[512];
	for (const auto &s : rows) {
		std::snprintf(line, sizeof line, "%d,%d,%d,%d,%.12g,%llu,%llu,%.12g,%.12g,%.12g\n", kMetricsSchemaVersion,
		              s.episode, s.moves, s.simulations, s.episode_return,
		              static_cast<unsigned long long>(s.searched_paths),
		              static_cast<unsigned long long>(s.aggregated_paths), s.mean_aggregation_percentage,
		              s.mean_expanded_nodes, s.mean_search_depth);
		out += line;
	}
	return out;
}

std::string to_jsonl(const std::vector<json> &records)
{
	std::string out;
	for (const auto &r : records) {
		out += r.dump();
		out += '\n';
	}
	return out;
}

std::vector<json> parse_jsonl(const std::string &text)
{
	std::vector<json> out;
	std::istringstream in(text);
	std::string line;
	while (std::getline(in, line))
		if (!line.empty())
			out.push_back(json::parse(line));
	return out;
}

void write_text(const std::string &path, const std::string &text)
{
	std::ofstream f(path, std::ios::binary | std::ios::trunc);
	if (!f)
		throw std::runtime_error("cannot open '" + path + "' for writing: " + std::strerror(errno));
	f << text;
	f.close();
	if (!f)
		throw std::runtime_error("write to '" + path + "' failed");
}

std::string read_text(const std::string &path)
{
	std::ifstream f(path, std::ios::binary);
	if (!f)
		throw std::runtime_error("cannot open '" + path + "' for reading: " + std::strerror(errno));
	std::ostringstream ss;
	ss << f.rdbuf();
	return ss.str();
}

void emit_metrics(const std::vector<json> &records, const std::string &prefix)
{
	write_text(prefix + ".jsonl", to_jsonl(records));
	write_text(prefix + ".csv", summary_csv(summarize(records)));
}

} // namespace ptsa
