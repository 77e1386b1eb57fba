// hat_server: run the teleoperation loop behind a WebSocket, or headless from
// an input file.
//
//   hat_server --scenario fetch_redbull --bindings day6 --listen 127.0.0.1:8765
//   hat_server --headless input.jsonl --log-dir logs
//   hat_server --replay logs/session.jsonl

#include "hat/hat.hpp"
#include "hat/server.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <memory>

namespace {

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

std::string session_log_path(const std::string& dir, const std::string& scenario) {
  std::filesystem::create_directories(dir);
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", std::localtime(&now));
  return (std::filesystem::path(dir) / (scenario + "-" + stamp + ".jsonl")).string();
}

void print_summary(const hat::OutboundSnapshot& snapshot, const hat::SessionMetrics& metrics) {
  hat::json out = {{"final_snapshot", hat::to_json_value(snapshot)}, {"metrics", hat::to_json_value(metrics)}};
  std::cout << out.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Head-orientation teleoperation server"};

  std::string config_file, scenario, bindings, axis, log_dir, listen, headless, replay_file, metrics_csv;
  double rate = 0.0;
  app.add_option("--config", config_file, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--scenario", scenario, "scenario name");
  app.add_option("--bindings", bindings, "click bindings preset")->check(CLI::IsMember({"day1", "day3", "day6"}));
  app.add_option("--axis", axis, "head axis preset")->check(CLI::IsMember({"pitch-yaw", "pitch-roll"}));
  app.add_option("--rate", rate, "tick rate in Hz")->check(CLI::PositiveNumber);
  app.add_option("--log-dir", log_dir, "directory for session logs");
  app.add_option("--listen", listen, "HOST:PORT to listen on");
  auto* headless_opt = app.add_option("--headless", headless, "run from an input script or session log, no network")
                           ->check(CLI::ExistingFile);
  app.add_option("--replay", replay_file, "verify a session log by re-running it")
      ->check(CLI::ExistingFile)
      ->excludes(headless_opt);
  app.add_option("--metrics-csv", metrics_csv, "append a metrics row to this CSV file");
  app.add_flag("--list-scenarios", "print built-in scenario names and exit");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.count("--list-scenarios")) {
      for (const auto& name : hat::scenario_names()) std::cout << name << '\n';
      return 0;
    }

    hat::ServerConfig config = config_file.empty() ? hat::ServerConfig{} : hat::load_config_file(config_file);
    if (!scenario.empty()) {
      config.scenario = scenario;
      config.scene_file.clear();
    }
    if (!bindings.empty()) config.bindings = hat::ClickBindings::preset(bindings);
    if (!axis.empty()) config.axes = hat::AxisAssignment::preset(axis);
    if (rate > 0.0) config.rate_hz = rate;
    if (!log_dir.empty()) config.log_dir = log_dir;
    if (!listen.empty()) config.listen = listen;
    config.validate();
    const hat::Scenario scene = hat::resolve_scenario(config);

    auto write_metrics = [&](const hat::SessionMetrics& m) {
      if (metrics_csv.empty()) return;
      const bool fresh = !std::filesystem::exists(metrics_csv);
      std::ofstream out(metrics_csv, std::ios::app);
      if (fresh) out << hat::metrics_csv_header() << '\n';
      out << hat::metrics_csv_row(scene.name, m) << '\n';
    };

    if (!replay_file.empty()) {
      const hat::SessionLog log = hat::read_session_log(replay_file);
      const hat::ReplayResult r = hat::replay(log, config, scene);
      std::cout << "replayed " << log.records().size() << " ticks, final digest " << hat::world_digest(r.final_world)
                << '\n';
      write_metrics(r.metrics);
      return 0;
    }

    std::unique_ptr<hat::SessionWriter> writer;
    hat::TeleopPipeline probe(config, scene);
    if (!config.log_dir.empty())
      writer = std::make_unique<hat::SessionWriter>(session_log_path(config.log_dir, scene.name), probe.header());

    if (!headless.empty()) {
      std::ifstream in(headless);
      const hat::InputScript script = hat::read_input_script(in);
      const hat::HeadlessResult r = hat::run_headless(config, scene, script, writer.get());
      print_summary(r.final_snapshot, r.metrics);
      write_metrics(r.metrics);
      return 0;
    }

    hat::TeleopServer server(config, scene);
    server.start(writer.get());
    std::cerr << "listening on port " << server.port() << " (scenario " << scene.name << ", " << config.rate_hz
              << " Hz)\n";
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
    write_metrics(hat::compute_metrics(server.log(), scene));
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "hat_server: " << e.what() << '\n';
    return 1;
  }
}
