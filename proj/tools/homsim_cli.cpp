// Command-line front end: scenario-driven scans, fits, the Fock oracle and
// link-budget reports. Exit codes: 0 success, 1 input error, 2 fit did not
// converge.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "homsim/analysis.hpp"
#include "homsim/fock.hpp"
#include "homsim/pipeline.hpp"
#include "homsim/scenario.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  int threads = static_cast<int>(std::thread::hardware_concurrency());
  std::string out_dir = ".";
};

homsim::Scenario load(const std::string& path, const GlobalOptions& opts) {
  auto scenario = homsim::load_scenario(path);
  if (opts.seed) scenario.seed = *opts.seed;
  if (scenario.n_bar_unusually_high())
    std::cerr << "warning: n_bar = " << scenario.wcs.n_bar
              << " is above 0.1; multi-photon terms will dominate\n";
  return scenario;
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << contents;
}

int emit_fit(const homsim::FitResult& fit, const fs::path& out_path) {
  const std::string text = homsim::fit_result_to_json(fit).dump(2) + "\n";
  write_file(out_path, text);
  std::cout << text;
  return fit.converged ? 0 : 2;
}

homsim::FockSource parse_source(const std::string& spec) {
  if (spec == "single") return homsim::FockSource::single();
  if (spec.rfind("coherent:", 0) == 0)
    return homsim::FockSource::coherent(std::stod(spec.substr(9)));
  throw CLI::ValidationError("source must be 'single' or 'coherent:<n_bar>'");
}

int cmd_run_scan(const std::string& scenario_path, const GlobalOptions& opts) {
  const auto scenario = load(scenario_path, opts);
  const auto gram = homsim::build_interferogram(scenario, opts.threads);

  fs::create_directories(opts.out_dir);
  {
    std::ofstream csv(fs::path(opts.out_dir) / "interferogram.csv");
    homsim::write_interferogram_csv(csv, gram);
  }
  const auto fit = homsim::fit_dip(gram, homsim::dip_initial_guess(gram));
  std::cout << "scan: " << gram.points.size() << " delay points, "
            << scenario.scan.integration_time_s << " s each\n";
  return emit_fit(fit, fs::path(opts.out_dir) / "dip_fit.json");
}

int cmd_fit_dip(const std::string& csv_path, const GlobalOptions& opts) {
  std::ifstream f(csv_path);
  if (!f) throw std::runtime_error("cannot open " + csv_path);
  const auto gram = homsim::read_interferogram_csv(f);
  const auto fit = homsim::fit_dip(gram, homsim::dip_initial_guess(gram));
  fs::create_directories(opts.out_dir);
  return emit_fit(fit, fs::path(opts.out_dir) / "dip_fit.json");
}

int cmd_fit_model(const std::string& csv_path, double bw_a_ghz, double bw_b_ghz,
                  const GlobalOptions& opts) {
  std::ifstream f(csv_path);
  if (!f) throw std::runtime_error("cannot open " + csv_path);
  std::vector<homsim::VisibilityPoint> points;
  std::string line;
  int row = 0;
  while (std::getline(f, line)) {
    ++row;
    if (line.empty() || (row == 1 && line.rfind("n_bar", 0) == 0)) continue;
    std::istringstream ls(line);
    std::string a, b, c;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') ||
        !std::getline(ls, c, ','))
      throw std::runtime_error(csv_path + ": malformed row " + std::to_string(row));
    try {
      points.push_back({std::stod(a), std::stod(b), std::stod(c)});
    } catch (const std::exception&) {
      throw std::runtime_error(csv_path + ": malformed row " + std::to_string(row));
    }
  }
  if (points.size() < 2)
    throw std::runtime_error(csv_path + ": need at least 2 points");
  const auto fit = homsim::fit_visibility_model(
      points, homsim::bandwidth_from_ghz(bw_a_ghz),
      homsim::bandwidth_from_ghz(bw_b_ghz));
  fs::create_directories(opts.out_dir);
  return emit_fit(fit, fs::path(opts.out_dir) / "model_fit.json");
}

int cmd_oracle(const std::string& a, const std::string& b, double overlap,
               int n_max) {
  homsim::FockOracleInput input;
  input.input_a = parse_source(a);
  input.input_b = parse_source(b);
  input.overlap = overlap;
  input.n_max = n_max;
  const auto r = homsim::fock_hom_oracle(input);
  json j;
  j["p_coincidence"] = r.p_coincidence;
  j["p_bunch_a"] = r.p_bunch_a;
  j["p_bunch_b"] = r.p_bunch_b;
  j["p_vacuum_or_single"] = r.p_vacuum_or_single;
  j["dip_visibility"] = homsim::oracle_dip_visibility(input);
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_link_budget(const std::string& scenario_path, const GlobalOptions& opts) {
  const auto s = load(scenario_path, opts);
  json j;
  j["launch_power_dbm"] = s.channel.launch_power_dbm;
  j["loss_db"] = s.link.loss_db;
  j["received_power_dbm"] =
      homsim::apply_loss_dbm(s.channel.launch_power_dbm, s.link.loss_db);
  j["transmittance"] = homsim::transmittance(s.link.loss_db);
  j["raman_noise_prob_per_pulse"] = homsim::raman_noise_prob_per_pulse(
      s.channel, s.link, s.clock.rep_rate_hz, s.bin_width_s());
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_export_timetags(const std::string& scenario_path, double delay_ps,
                        double duration_s, const GlobalOptions& opts) {
  const auto s = load(scenario_path, opts);
  const auto streams =
      homsim::simulate_streams(s, delay_ps * 1e-12, duration_s);
  fs::create_directories(opts.out_dir);
  auto dump = [&](const homsim::TimetagStream& stream) {
    const auto path = fs::path(opts.out_dir) /
                      (homsim::to_string(stream.detector) + ".tags");
    std::ofstream f(path);
    homsim::write_timetags(f, stream);
    std::cout << path.string() << ": " << stream.bins.size() << " tags\n";
  };
  dump(streams.herald);
  dump(streams.snspd1);
  dump(streams.snspd2);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HOM interference desk-scale simulator"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions opts;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "override scenario seed");
  app.add_option("--threads", opts.threads, "worker threads for scans");
  app.add_option("--out-dir", opts.out_dir, "output directory");

  std::string scenario_path, csv_path, src_a = "single", src_b = "single";
  double overlap = 1.0, bw_a_ghz = 5.5, bw_b_ghz = 5.0;
  double delay_ps = 0.0, duration_s = 1.0;
  int n_max = 4;

  auto* run_scan = app.add_subcommand("run-scan", "simulate a pump-delay scan and fit the dip");
  run_scan->add_option("scenario", scenario_path, "scenario file")->required();

  auto* fit_dip = app.add_subcommand("fit-dip", "fit a dip model to an interferogram CSV");
  fit_dip->add_option("csv", csv_path, "interferogram CSV")->required();

  auto* fit_model = app.add_subcommand("fit-model", "fit (mu, N_sys) to n_bar/visibility points");
  fit_model->add_option("csv", csv_path, "points CSV: n_bar,visibility,sigma")->required();
  fit_model->add_option("--bw-a-ghz", bw_a_ghz, "WCS bandwidth, GHz");
  fit_model->add_option("--bw-b-ghz", bw_b_ghz, "HSP bandwidth, GHz");

  auto* oracle = app.add_subcommand("oracle", "truncated Fock-space beamsplitter probabilities");
  oracle->add_option("--a", src_a, "port A source: single | coherent:<n_bar>");
  oracle->add_option("--b", src_b, "port B source");
  oracle->add_option("--overlap", overlap, "mode-overlap amplitude in [0,1]");
  oracle->add_option("--nmax", n_max, "coherent-state truncation");

  auto* link_budget = app.add_subcommand("link-budget", "loss and noise report for a scenario");
  link_budget->add_option("scenario", scenario_path, "scenario file")->required();

  auto* export_tags = app.add_subcommand("export-timetags", "simulate and write raw timetag streams");
  export_tags->add_option("scenario", scenario_path, "scenario file")->required();
  export_tags->add_option("--delay-ps", delay_ps, "pump delay, ps");
  export_tags->add_option("--duration-s", duration_s, "simulated duration, s");

  CLI11_PARSE(app, argc, argv);
  if (seed_opt->count() > 0) opts.seed = seed_value;

  try {
    if (run_scan->parsed()) return cmd_run_scan(scenario_path, opts);
    if (fit_dip->parsed()) return cmd_fit_dip(csv_path, opts);
    if (fit_model->parsed())
      return cmd_fit_model(csv_path, bw_a_ghz, bw_b_ghz, opts);
    if (oracle->parsed()) return cmd_oracle(src_a, src_b, overlap, n_max);
    if (link_budget->parsed()) return cmd_link_budget(scenario_path, opts);
    if (export_tags->parsed())
      return cmd_export_timetags(scenario_path, delay_ps, duration_s, opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
