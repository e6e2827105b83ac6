#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ptsa/harness.hpp"
#include "ptsa/metrics_io.hpp"

using namespace ptsa;
using json = nlohmann::json;

namespace {

int cmd_run(const std::string &config_path, const std::string &out_override)
{
	RunConfig config = load_run_config(config_path);
	if (!out_override.empty())
		config.output_path = out_override;
	const Task task(config.environment, config.model, config.value_tolerance);
	const std::string name = config.search.abstraction ? std::string(to_string(config.search.abstraction->kind)) : "none";

	std::vector<EpisodeResult> episodes;
	double wall = 0.0;
	for (int ep = 0; ep < config.episodes; ++ep) {
		episodes.push_back(run_episode(config, task, ep));
		wall += episodes.back().wall_time.count();
	}
	const auto records = search_records(episodes, name);
	emit_metrics(records, config.output_path);
	write_text(config.output_path + ".events.jsonl", to_jsonl(event_records(episodes)));

	json eps = json::array();
	for (const auto &s : summarize(records))
		eps.push_back({{"episode", s.episode},
		               {"moves", s.moves},
		               {"episode_return", s.episode_return},
		               {"mean_aggregation_percentage", s.mean_aggregation_percentage},
		               {"mean_expanded_nodes", s.mean_expanded_nodes},
		               {"mean_search_depth", s.mean_search_depth}});
	const json report{{"schema_version", kMetricsSchemaVersion},
	                  {"config", run_config_to_json(config)},
	                  {"episodes", std::move(eps)},
	                  {"wall_time_seconds", wall}};
	write_text(config.output_path + ".report.json", report.dump(2) + "\n");

	for (const auto &ep : episodes)
		std::printf("episode %d: %zu moves, return %.6g\n", ep.episode, ep.moves.size(), ep.episode_return);
	std::printf("wrote %s.{jsonl,csv,events.jsonl,report.json}\n", config.output_path.c_str());
	return 0;
}

int cmd_verify(std::uint64_t seed, const std::string &out)
{
	const VerifyReport v = verify_suite(seed);
	for (const auto &c : v.report["checks"]) {
		std::string label = c["check"].get<std::string>();
		if (c.contains("abstraction"))
			label += " " + c["abstraction"].get<std::string>();
		if (c.contains("table"))
			label += " table " + std::to_string(c["table"].get<int>());
		std::printf("%s %s\n", c["passed"].get<bool>() ? "PASS" : "FAIL", label.c_str());
	}
	std::vector<json> lines;
	std::string csv = "schema_version,check,abstraction,passed\n";
	for (const auto &c : v.report["checks"]) {
		json line = c;
		line["schema_version"] = kMetricsSchemaVersion;
		lines.push_back(std::move(line));
		csv += std::to_string(kMetricsSchemaVersion) + "," + c["check"].get<std::string>() + "," +
		       c.value("abstraction", std::string()) + "," + (c["passed"].get<bool>() ? "true" : "false") + "\n";
	}
	write_text(out + ".jsonl", to_jsonl(lines));
	write_text(out + ".csv", csv);
	write_text(out + ".report.json", v.report.dump(2) + "\n");
	std::printf("%s (%s.{jsonl,csv,report.json})\n", v.passed ? "all checks passed" : "verification FAILED",
	            out.c_str());
	return v.passed ? 0 : 1;
}

int cmd_speedup(const std::string &config_path, const std::string &out_override)
{
	SpeedupConfig config = speedup_config_from_json(json::parse(read_text(config_path)));
	if (!out_override.empty())
		config.output_path = out_override;
	const json report = speedup_study(config);
	write_text(config.output_path + ".report.json", report.dump(2) + "\n");
	std::vector<json> lines;
	for (const auto &r : report["rows"]) {
		json line = r;
		line["schema_version"] = kMetricsSchemaVersion;
		// wall-clock fields vary between runs
		line.erase("wall_time_to_target_mean");
		line.erase("speedup_wall_time_mean");
		line.erase("speedup_wall_time_std");
		lines.push_back(std::move(line));
	}
	write_text(config.output_path + ".jsonl", to_jsonl(lines));

	std::string csv = "schema_version,abstraction,seeds,censored,episodes_to_target_mean,speedup_episodes_mean,"
	                  "speedup_episodes_std,speedup_wall_time_mean,speedup_wall_time_std,aggregation_percentage_mean,"
	                  "expanded_nodes_mean\n";
	char line[512];
	for (const auto &r : report["rows"]) {
		std::snprintf(line, sizeof line, "%d,%s,%d,%d,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g\n", kMetricsSchemaVersion,
		              r["abstraction"].get<std::string>().c_str(), r["seeds"].get<int>(), r["censored"].get<int>(),
		              r["episodes_to_target_mean"].get<double>(), r["speedup_episodes_mean"].get<double>(),
		              r["speedup_episodes_std"].get<double>(), r["speedup_wall_time_mean"].get<double>(),
		              r["speedup_wall_time_std"].get<double>(), r["aggregation_percentage_mean"].get<double>(),
		              r["expanded_nodes_mean"].get<double>());
		csv += line;
		std::fputs(line, stdout);
	}
	write_text(config.output_path + ".csv", csv);
	return 0;
}

int cmd_dump_tree(const std::string &config_path, int sims, const std::string &out)
{
	const RunConfig config = load_run_config(config_path);
	const Task task(config.environment, config.model, config.value_tolerance);
	SearchConfig sc = config.search;
	sc.seed = move_seed(config.seed, 0, 0);
	const EnvState root = task.env().initial_state();
	const SearchResult r = sc.abstraction ? ptsa_search(task.model(), root, sc, task.tables(), sims)
	                                      : baseline_search(task.model(), root, sc, sims);
	const std::string text = r.tree.to_json().dump(2) + "\n";
	if (out.empty())
		std::fputs(text.c_str(), stdout);
	else
		write_text(out, text);
	return 0;
}

} // namespace

int main(int argc, char **argv)
{
	CLI::App app{"Tree search with path abstraction: runs, verification and speedup studies"};
	app.require_subcommand(1);

	// one output variable per subcommand: default_val writes through immediately
	std::string config_path, run_out, verify_out, speedup_out, dump_out;
	std::uint64_t seed = 0;
	int sims = 0;

	auto *run = app.add_subcommand("run", "play episodes from a run config and write metrics");
	run->add_option("--config", config_path, "run config (JSON)")->required()->check(CLI::ExistingFile);
	run->add_option("--out", run_out, "output prefix (overrides output_path)");

	auto *verify = app.add_subcommand("verify", "run the transitivity / error-bound / clustering checks");
	verify->add_option("--seed", seed, "suite seed")->required();
	verify->add_option("--out", verify_out, "report prefix")->default_val("ptsa_verify");

	auto *speedup = app.add_subcommand("speedup", "episodes-to-target comparison against no abstraction");
	speedup->add_option("--config", config_path, "speedup config (JSON)")->required()->check(CLI::ExistingFile);
	speedup->add_option("--out", speedup_out, "output prefix (overrides output_path)");

	auto *dump = app.add_subcommand("dump-tree", "serialize the first search tree after k simulations");
	dump->add_option("--config", config_path, "run config (JSON)")->required()->check(CLI::ExistingFile);
	dump->add_option("--sim", sims, "simulations to run")->required()->check(CLI::NonNegativeNumber);
	dump->add_option("--out", dump_out, "write to this file instead of stdout");

	CLI11_PARSE(app, argc, argv);

	try {
		if (*run)
			return cmd_run(config_path, run_out);
		if (*verify)
			return cmd_verify(seed, verify_out);
		if (*speedup)
			return cmd_speedup(config_path, speedup_out);
		if (*dump)
			return cmd_dump_tree(config_path, sims, dump_out);
	} catch (const std::exception &e) {
		std::fprintf(stderr, "ptsa: %s\n", e.what());
		return 2;
	}
	return 0;
}
