// ead: entropy-adaptive decoding runner.
//
//   ead generate       --config run.ini [overrides]
//   ead sweep          --config run.ini [--taus 0,0.25,inf] [overrides]
//   ead replay         FILE [--tau ...]
//   ead validate-table [--csv]
//   ead mock-server    --config run.ini --role small --port 8080

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "ead/app.hpp"

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

struct Overrides {
  std::optional<std::string> tau;
  std::optional<std::size_t> window;
  std::optional<std::size_t> min_duration;
  std::optional<double> temperature;
  std::optional<std::size_t> max_tokens;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> initial_role;
  bool greedy = false;
  std::optional<std::string> trace_out;
  std::optional<std::string> csv_out;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--tau", tau, "Entropy threshold in bits, or 'inf'");
    cmd.add_option("--window", window, "Rolling entropy window size")->check(CLI::PositiveNumber);
    cmd.add_option("--min-duration", min_duration, "Minimum tokens between switches")->check(CLI::PositiveNumber);
    cmd.add_option("--temperature", temperature, "Sampling temperature (> 0)");
    cmd.add_option("--max-tokens", max_tokens, "Tokens to generate")->check(CLI::PositiveNumber);
    cmd.add_option("--seed", seed, "Base random seed");
    cmd.add_option("--initial-role", initial_role, "small or large")->check(CLI::IsMember({"small", "large"}));
    cmd.add_flag("--greedy", greedy, "Argmax decoding instead of sampling");
    cmd.add_option("--trace-out", trace_out, "Trace JSONL output path");
    cmd.add_option("--csv-out", csv_out, "Sweep CSV output path");
  }

  void apply(ead::RunSpec& spec) const {
    auto& g = spec.generation;
    if (tau) g.switching.tau = ead::parse_tau(*tau);
    if (window) g.switching.window = *window;
    if (min_duration) g.switching.min_duration = *min_duration;
    if (temperature) g.temperature = ead::Temperature(*temperature);
    if (max_tokens) g.max_tokens = *max_tokens;
    if (seed) g.seed = *seed;
    if (initial_role) g.switching.initial_role = *initial_role == "large" ? ead::ModelRole::Large : ead::ModelRole::Small;
    if (greedy) g.greedy = true;
    if (trace_out) spec.trace_out = *trace_out;
    if (csv_out) spec.csv_out = *csv_out;
    spec.validate();
  }
};

int serve(const ead::ProviderSpec& pspec, const std::string& host, int port, const std::string& port_file) {
  std::shared_ptr<const ead::ModelProvider> provider = ead::build_provider(pspec);
  ead::MockServer server(provider);
  const int bound = server.start(host, port);
  std::cout << "serving " << provider->meta().name << " on " << server.endpoint() << std::endl;
  if (!port_file.empty()) std::ofstream(port_file) << bound << '\n';
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  server.stop();
  std::cout << "stopped after " << server.requests_served() << " logit requests" << std::endl;
  return ead::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropy-adaptive decoding: switch between a small and a large model on rolling entropy"};
  app.require_subcommand(1);

  std::string config_path;
  bool print_config = false;
  Overrides overrides;

  auto* gen = app.add_subcommand("generate", "Run one generation and write its trace");
  gen->add_option("--config", config_path, "Run config (INI)")->required();
  std::string logits_out;
  gen->add_option("--logits-out", logits_out, "Also record raw logits per step");
  gen->add_flag("--print-config", print_config, "Print the effective config and exit");
  overrides.add_to(*gen);

  auto* sweep = app.add_subcommand("sweep", "Run a tau sweep and write an aggregated CSV");
  sweep->add_option("--config", config_path, "Run config (INI)")->required();
  std::optional<std::string> taus;
  std::optional<std::size_t> repetitions;
  unsigned threads = 0;
  sweep->add_option("--taus", taus, "Comma-separated thresholds (default 0,0.03125,...,1,inf)");
  sweep->add_option("--repetitions", repetitions, "Runs per tau")->check(CLI::PositiveNumber);
  sweep->add_option("--threads", threads, "Worker threads (0 = hardware)");
  sweep->add_flag("--print-config", print_config, "Print the effective config and exit");
  overrides.add_to(*sweep);

  auto* rep = app.add_subcommand("replay", "Replay the switching automaton over a trace or entropy file");
  std::string replay_path;
  rep->add_option("file", replay_path, "Trace JSONL or entropy file (one value per line)")->required();
  std::optional<std::string> r_tau;
  std::optional<std::size_t> r_window;
  std::optional<std::size_t> r_min;
  std::optional<std::string> r_role;
  rep->add_option("--tau", r_tau, "Entropy threshold in bits, or 'inf'");
  rep->add_option("--window", r_window, "Rolling window size")->check(CLI::PositiveNumber);
  rep->add_option("--min-duration", r_min, "Minimum tokens between switches")->check(CLI::PositiveNumber);
  rep->add_option("--initial-role", r_role, "small or large")->check(CLI::IsMember({"small", "large"}));

  auto* table = app.add_subcommand("validate-table", "Recompute the published parameter-ratio column");
  bool csv = false;
  std::optional<std::size_t> corrupt_row;
  table->add_flag("--csv", csv, "Machine-readable output");
  table->add_option("--corrupt-row", corrupt_row, "Test hook: perturb one embedded row")->group("");

  auto* mock = app.add_subcommand("mock-server", "Serve one configured model over the logit protocol");
  mock->add_option("--config", config_path, "Run config (INI)")->required();
  std::string role = "small";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string port_file;
  mock->add_option("--role", role, "Which [small]/[large] section to serve")->check(CLI::IsMember({"small", "large"}));
  mock->add_option("--host", host, "Bind address");
  mock->add_option("--port", port, "Port (0 = any free port)");
  mock->add_option("--port-file", port_file, "Write the bound port to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return ead::kExitConfig;
  }

  try {
    if (*table) return ead::cmd_validate_table(csv, std::cout, corrupt_row);

    if (*rep) {
      ead::ReplayOverrides ro;
      if (r_tau) ro.tau = ead::parse_tau(*r_tau);
      ro.window = r_window;
      ro.min_duration = r_min;
      if (r_role) ro.initial_role = *r_role == "large" ? ead::ModelRole::Large : ead::ModelRole::Small;
      return ead::cmd_replay(replay_path, ro, std::cout, std::cerr);
    }

    ead::RunSpec spec = ead::load_run_spec(config_path);
    overrides.apply(spec);

    if (*mock) return serve(role == "large" ? spec.large : spec.small, host, port, port_file);

    if (*sweep) {
      if (taus) spec.taus = ead::detail::parse_tau_list(*taus);
      if (repetitions) spec.repetitions = *repetitions;
      spec.validate();
    }
    if (print_config) {
      std::cout << ead::print_run_spec(spec);
      return ead::kExitOk;
    }
    if (*gen) return ead::cmd_generate(spec, std::cout, std::cerr, logits_out);
    return ead::cmd_sweep(spec, std::cout, std::cerr, threads);
  } catch (const ead::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ead::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ead::kExitConfig;
  }
}
