#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ptsa/environment.hpp"
#include "ptsa/mdp.hpp"
#include "ptsa/model.hpp"
#include "ptsa/search.hpp"

namespace ptsa {

inline constexpr int kConfigSchemaVersion = 1;

struct EnvironmentConfig
{
	enum class Kind { RandomMdp, SymmetricMdp, Gomoku, CartPole, MdpFile };
	Kind kind = Kind::RandomMdp;
	// random_mdp / symmetric_mdp
	std::uint64_t seed = 1;
	int states = 20;
	int actions = 4;
	double sparsity = 0.5;
	double gamma = 0.9;
	bool stochastic = false;
	int start_state = 0;
	// gomoku
	int size = 5;
	int win_length = 4;
	// cartpole
	int cartpole_actions = 100;
	// mdp_file
	std::string path;

	bool operator==(const EnvironmentConfig &) const = default;
};

struct ModelConfig
{
	enum class Kind { Oracle, Noisy };
	Kind kind = Kind::Oracle;
	double value_sigma = 0.0;
	double prior_sigma = 0.0;
	std::uint64_t seed = 0;
	int rollout_depth = 20;
	int rollouts = 4;

	bool operator==(const ModelConfig &) const = default;
};

struct RunConfig
{
	EnvironmentConfig environment;
	SearchConfig search;  // search.abstraction is the run's abstraction
	ModelConfig model;
	int episodes = 1;
	int max_moves = 200;
	// control/MDP tasks sample the visit distribution for this many moves
	int temperature_moves = 10;
	std::uint64_t seed = 0;
	double value_tolerance = 1e-10;
	std::string output_path = "ptsa_run";

	void validate() const;
	bool operator==(const RunConfig &) const = default;
};

nlohmann::json run_config_to_json(const RunConfig &config);
RunConfig run_config_from_json(const nlohmann::json &doc);
RunConfig load_run_config(const std::string &path);

// Built environment plus oracle tables and the (possibly noisy) model.
class Task
{
public:
	Task(const EnvironmentConfig &env, const ModelConfig &model, double value_tolerance = 1e-10);

	const Environment &env() const { return *env_; }
	const Model &model() const { return noisy_ ? static_cast<const Model &>(*noisy_) : *oracle_; }
	const ValueTables *tables() const { return tables_.get(); }
	const TabularMdp *mdp() const;

private:
	std::unique_ptr<Environment> env_;
	std::unique_ptr<ValueTables> tables_;
	std::unique_ptr<ModelOracle> oracle_;
	std::unique_ptr<NoisyModel> noisy_;
};

// Per-move search seed.
std::uint64_t move_seed(std::uint64_t run_seed, int episode, int move);

// Runs ptsa_search when an abstraction is configured, baseline_search otherwise.
SearchResult run_search(const Task &task, const EnvState &state, const SearchConfig &config);

struct MoveRecord
{
	int episode = 0;
	int move = 0;
	int action = -1;
	double reward = 0.0;
	RunMetrics metrics;
	std::map<int, double> policy;
	std::vector<AggregationEvent> events;
};

struct EpisodeResult
{
	int episode = 0;
	std::vector<MoveRecord> moves;
	double episode_return = 0.0;  // undiscounted; +1/-1/0 for the agent in board games
	bool terminal = false;
	int opponent_moves = 0;
	std::chrono::duration<double> wall_time{0.0};
};

// Fresh tree per move. In two-player games the agent moves first and a
// uniform-random opponent replies.
EpisodeResult run_episode(const RunConfig &config, const Task &task, int episode);

struct SpeedupConfig
{
	RunConfig base;  // base.search.abstraction is ignored
	std::vector<AbstractionFn> abstractions;  // compared against no abstraction
	int seeds = 5;
	double target_return = 0.0;
	int window = 3;
	int max_episodes = 20;
	std::string output_path = "ptsa_speedup";
};

// eps 0.5, d 0.2, alpha 0.7 for the six kinds.
std::vector<AbstractionFn> default_speedup_abstractions();

nlohmann::json speedup_config_to_json(const SpeedupConfig &config);
SpeedupConfig speedup_config_from_json(const nlohmann::json &doc);

// Episodes (and wall time) until the moving mean return over `window`
// episodes reaches the target; ratios are baseline / abstraction per seed.
nlohmann::json speedup_study(const SpeedupConfig &config);

struct VerifyReport
{
	nlohmann::json report;
	bool passed = true;
};

VerifyReport verify_suite(std::uint64_t seed);

} // namespace ptsa
