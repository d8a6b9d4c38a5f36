#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <boost/version.hpp>

#include "CLI11.hpp"
#include "lifi/config.hpp"
#include "lifi/dataset.hpp"
#include "lifi/harness.hpp"
#include "lifi/lstm.hpp"
#include "lifi/problem_file.hpp"
#include "lifi/zf_ccp.hpp"

#ifndef LIFI_VERSION
#define LIFI_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace lifi;

namespace {

struct Options {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out_dir = ".";
  bool text = false;
  bool deterministic = false;
  std::vector<std::string> overrides;
  std::string dataset, model, problem, samples;
  std::string experiment = "all";
  std::string solver = "ccp";
};

Config resolve_config(const Options& o) {
  Config c = o.config_path.empty() ? default_config() : load_config(o.config_path);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set_key(c, detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1)));
  }
  if (o.seed_given) c.seed = o.seed;
  if (o.deterministic) c.threads = 1;
  finalize(c);
  return c;
}

std::string out_path(const Options& o, const std::string& name) {
  return (fs::path(o.out_dir) / name).string();
}

std::string input_base(const Options& o, const std::string& given, const std::string& name) {
  return given.empty() ? out_path(o, name) : given;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

void write_manifest(const Options& o, const Config& c, const std::string& command) {
  auto out = open_out(out_path(o, "run_manifest_" + command + ".txt"));
  out << "command: " << command << '\n'
      << "seed: " << c.seed << '\n'
      << "config_fingerprint: " << config_fingerprint(c) << '\n'
      << "setup_fingerprint: " << fingerprint(c.setup) << '\n'
      << "deterministic: " << (o.deterministic ? "true" : "false") << '\n'
      << "threads: " << c.threads << '\n'
      << "lifi_po_version: " << LIFI_VERSION << '\n'
      << "eigen_version: " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.'
      << EIGEN_MINOR_VERSION << '\n'
      << "boost_version: " << BOOST_VERSION / 100000 << '.' << BOOST_VERSION / 100 % 1000 << '.'
      << BOOST_VERSION % 100 << '\n'
      << "compiler: " << __VERSION__ << '\n'
      << "config:\n"
      << dump_config(c);
}

void check_model_matches(const LstmModel& model, const GeneratorSetup& setup) {
  const auto& m = model.meta;
  if (m.num_aps != static_cast<int>(setup.room.num_aps()) ||
      m.prior_slots != setup.dataset.prior_slots ||
      m.posterior_slots != setup.dataset.posterior_slots)
    throw ConfigError("model shape (M=" + std::to_string(m.num_aps) + ", N=" +
                      std::to_string(m.prior_slots) + ", L_max=" + std::to_string(m.posterior_slots) +
                      ") does not match the configured room and dataset");
  if (m.fingerprint != fingerprint(setup))
    std::cerr << "warning: model was trained on a different generator setup (fingerprint "
              << m.fingerprint << " vs " << fingerprint(setup) << ")\n";
}

int cmd_generate(const Options& o) {
  const Config c = resolve_config(o);
  fs::create_directories(o.out_dir);
  const Dataset d = build_dataset(c.setup.dataset.size, c.seed, c.setup, c.threads);
  save_dataset(d, out_path(o, "dataset"), o.text);
  write_manifest(o, c, "generate-dataset");
  std::cerr << "wrote " << d.meta.size << " samples to " << out_path(o, "dataset") << '\n';
  return 0;
}

int cmd_train(const Options& o) {
  const Config c = resolve_config(o);
  fs::create_directories(o.out_dir);
  const Dataset d = load_dataset(input_base(o, o.dataset, "dataset"));
  const TrainResult res = train(d, c.train, [](const EpochLoss& e) {
    std::cerr << "epoch " << e.epoch << " train_mse " << e.train << " validation_mse "
              << e.validation << '\n';
  });
  save_model(res.model, out_path(o, "model"));
  auto out = open_out(out_path(o, "loss_history.csv"));
  out << "epoch,train_mse,validation_mse\n";
  for (const auto& e : res.history)
    out << e.epoch << ',' << io::format_double(e.train) << ',' << io::format_double(e.validation)
        << '\n';
  write_manifest(o, c, "train");
  std::cerr << "best epoch " << res.best_epoch << '\n';
  return 0;
}

int cmd_evaluate(const Options& o) {
  const Config c = resolve_config(o);
  fs::create_directories(o.out_dir);
  const Dataset d = load_dataset(input_base(o, o.dataset, "dataset"));
  const LstmModel model = load_model(input_base(o, o.model, "model"));
  check_model_matches(model, c.setup);
  if (d.meta.fingerprint != fingerprint(c.setup))
    throw ConfigError("dataset was generated with a different setup than the configuration; "
                      "persistence needs the configured setup to regenerate trajectories");
  const auto rows = split(d).test;
  const Evaluation lstm = evaluate(model, d, rows, c.setup.room);
  const int n = d.meta.prior_slots;
  const Evaluation persist = evaluate(d, rows, [&](std::size_t r) {
    const Trajectory traj = sample_trajectory_for(sample_seed(d.meta.seed, r), c.setup);
    std::vector<Pose> out;
    for (int l = 1; l <= d.meta.posterior_slots; ++l)
      out.push_back(persistence_predict(traj[static_cast<std::size_t>(n - 1)], l));
    return out;
  });

  auto summary = open_out(out_path(o, "prediction_errors.csv"));
  summary << "horizon,predictor,samples,mean_position_error_m,mean_yaw_error_deg,"
             "mean_pitch_error_deg,mean_roll_error_deg\n";
  auto samples = open_out(out_path(o, "position_error_samples.csv"));
  samples << "predictor,horizon,row,position_error_m\n";
  for (const auto& [name, ev] : {std::pair{"lstm", &lstm}, std::pair{"persistence", &persist}}) {
    for (std::size_t l = 0; l < ev->horizons.size(); ++l) {
      const auto& h = ev->horizons[l];
      summary << l + 1 << ',' << name << ',' << h.position.size() << ','
              << io::format_double(h.mean_position) << ',' << io::format_double(h.mean_yaw) << ','
              << io::format_double(h.mean_pitch) << ',' << io::format_double(h.mean_roll) << '\n';
      for (std::size_t i = 0; i < h.position.size(); ++i)
        samples << name << ',' << l + 1 << ',' << rows[i] << ',' << io::format_double(h.position[i])
                << '\n';
      std::cerr << name << " L=" << l + 1 << " mean position error " << h.mean_position << " m\n";
    }
  }
  write_manifest(o, c, "evaluate-predictor");
  return 0;
}

int cmd_solve(const Options& o) {
  const Config c = resolve_config(o);
  if (o.problem.empty()) throw ConfigError("solve needs --problem <file>");
  fs::create_directories(o.out_dir);
  const ProblemSpec p = read_problem_file(o.problem);
  const PrecoderSolution s = solve_precoder(p, parse_solver(o.solver), c.scenario.solver);
  auto sol = open_out(out_path(o, "solution.txt"));
  write_solution(sol, s, !o.deterministic);
  auto trace = open_out(out_path(o, "solution_trace.csv"));
  write_trace_csv(trace, s);
  write_manifest(o, c, "solve");
  std::cerr << "objective " << s.objective << " nats/s/Hz with " << s.admitted.size()
            << " admitted users\n";
  return 0;
}

void write_experiment(const Options& o, const std::string& stem, const std::string& column,
                      const ExperimentResult& res, bool timing_file) {
  const bool with_timing = !o.deterministic;
  auto sweep = open_out(out_path(o, "sumrate_vs_" + stem + ".csv"));
  write_sweep_csv(sweep, column, res.rows, with_timing);
  auto trials = open_out(out_path(o, "trials_vs_" + stem + ".csv"));
  write_trials_csv(trials, column, res.trials, with_timing);
  if (timing_file && with_timing) {
    auto timing = open_out(out_path(o, "timing_vs_" + stem + ".csv"));
    write_timing_csv(timing, res.rows);
  }
}

void report(const ExperimentResult& res, const std::string& column) {
  for (const auto& r : res.rows)
    std::cerr << column << '=' << r.sweep_value << ' ' << to_string(r.case_id) << '/'
              << to_string(r.solver) << " sum rate " << r.sum_rate.mean << " +- "
              << r.sum_rate.half_width << '\n';
}

int cmd_experiment(const Options& o) {
  const Config c = resolve_config(o);
  if (o.experiment != "users" && o.experiment != "threshold" && o.experiment != "all")
    throw ConfigError("--experiment must be users, threshold or all");
  fs::create_directories(o.out_dir);
  const LstmModel model = load_model(input_base(o, o.model, "model"));
  check_model_matches(model, c.setup);
  const Environment env{c.setup, &model};
  if (o.experiment != "threshold") {
    const auto res = experiment_sumrate_vs_users(env, c.scenario, c.solvers);
    write_experiment(o, "users", "users", res, true);
    report(res, "users");
  }
  if (o.experiment != "users") {
    const auto res = experiment_sumrate_vs_threshold(env, c.scenario, c.solvers);
    write_experiment(o, "threshold", "rate_threshold_nats", res, false);
    report(res, "rate_threshold");
  }
  write_manifest(o, c, "run-po-experiment");
  return 0;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  return out;
}

int cmd_plot(const Options& o) {
  const std::string path = o.samples.empty() ? out_path(o, "position_error_samples.csv") : o.samples;
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'; run evaluate-predictor first");
  std::string line;
  std::getline(in, line);
  if (line.rfind("predictor,horizon,row,position_error_m", 0) != 0)
    throw ParseError(path + ": unexpected header");
  std::map<std::pair<std::string, int>, std::vector<double>> groups;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if (f.size() != 4) throw ParseError(where + ": expected 4 fields");
    groups[{f[0], static_cast<int>(io::parse_double(f[1], where))}].push_back(
        io::parse_double(f[3], where));
  }
  fs::create_directories(o.out_dir);
  auto out = open_out(out_path(o, "position_error_cdf.csv"));
  out << "predictor,horizon,position_error_m,cdf\n";
  for (auto& [key, v] : groups) {
    std::sort(v.begin(), v.end());
    for (std::size_t i = 0; i < v.size(); ++i)
      out << key.first << ',' << key.second << ',' << io::format_double(v[i]) << ','
          << io::format_double(static_cast<double>(i + 1) / static_cast<double>(v.size())) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Predictive-optimization precoding for multi-user LiFi uplink/downlink"};
  app.set_version_flag("--version", LIFI_VERSION);
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config_path, "INI configuration file (defaults when omitted)");
  app.add_option_function<std::uint64_t>(
      "--seed", [&](const std::uint64_t& s) { o.seed = s, o.seed_given = true; },
      "Master seed; overrides run.seed");
  app.add_option("--out-dir", o.out_dir, "Directory for output files")->capture_default_str();
  app.add_flag("--text", o.text, "Write the dataset as CSV instead of binary");
  app.add_flag("--deterministic", o.deterministic,
               "Single-threaded, no timing columns; identical seeds give identical files");
  app.add_option("--set", o.overrides, "Override a config key, e.g. --set scenario.slots=50");

  auto* gen = app.add_subcommand("generate-dataset", "Generate the SNR-window/pose dataset");
  auto* tr = app.add_subcommand("train", "Train the LSTM pose predictor");
  tr->add_option("--dataset", o.dataset, "Dataset base path (default <out-dir>/dataset)");
  auto* ev = app.add_subcommand("evaluate-predictor", "Score the LSTM and persistence predictors");
  ev->add_option("--dataset", o.dataset, "Dataset base path (default <out-dir>/dataset)");
  ev->add_option("--model", o.model, "Model base path (default <out-dir>/model)");
  auto* so = app.add_subcommand("solve", "Solve one precoding instance from a problem file");
  so->add_option("--problem", o.problem, "Problem file")->required();
  so->add_option("--solver", o.solver, "ccp, multistart or grid")->capture_default_str();
  auto* ex = app.add_subcommand("run-po-experiment", "Run the sum-rate sweeps over users and rate threshold");
  ex->add_option("--model", o.model, "Model base path (default <out-dir>/model)");
  ex->add_option("--experiment", o.experiment, "users, threshold or all")->capture_default_str();
  auto* pl = app.add_subcommand("plot-data", "Turn position-error samples into CDF tables");
  pl->add_option("--samples", o.samples,
                 "Samples CSV (default <out-dir>/position_error_samples.csv)");
  for (auto* sub : {gen, tr, ev, so, ex, pl}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_generate(o);
    if (tr->parsed()) return cmd_train(o);
    if (ev->parsed()) return cmd_evaluate(o);
    if (so->parsed()) return cmd_solve(o);
    if (ex->parsed()) return cmd_experiment(o);
    if (pl->parsed()) return cmd_plot(o);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
