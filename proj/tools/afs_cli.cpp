// Command-line front end: single-scene generation, batch/sweep/ablation
// harness runs, the mock critic server, and the invariant selftest.
//
// Exit codes: 0 success, 2 invalid configuration or usage, 3 critic failure,
// 4 selftest failure.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "afs/config_file.hpp"
#include "afs/critic_remote.hpp"
#include "afs/errors.hpp"
#include "afs/harness.hpp"
#include "afs/mock_critic.hpp"
#include "afs/pipeline.hpp"
#include "afs/search.hpp"
#include "afs/selftest.hpp"
#include "afs/stats.hpp"
#include "afs/text_format.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitCritic = 3;
constexpr int kExitSelftest = 4;

struct CommonArgs {
  std::string config_path;
  std::uint64_t seed = 1;
  std::size_t trials = 100;
  std::string family;      // empty: take the config file's family
  std::string out_dir;
  std::string critic;      // "", "oracle", "remote"
  std::string critic_url;  // overrides CRITIC_URL for --critic remote
};

void add_common_flags(CLI::App& cmd, CommonArgs& args, bool with_trials) {
  cmd.add_option("--config", args.config_path,
                 "Run configuration file (key=value sections)");
  cmd.add_option("--seed", args.seed, "Base seed");
  if (with_trials) {
    cmd.add_option("--trials", args.trials, "Trials per cell");
  }
  cmd.add_option("--family", args.family,
                 "Task family: attribute, spatial, complex");
  cmd.add_option("--out", args.out_dir, "Directory for CSV/JSON outputs");
  cmd.add_option("--critic", args.critic, "Critic backend: oracle or remote")
      ->check(CLI::IsMember({"oracle", "remote"}));
  cmd.add_option("--critic-url", args.critic_url,
                 "Remote critic base URL (overrides CRITIC_URL)");
}

afs::RunConfig resolve_config(const CommonArgs& args) {
  afs::RunConfig rc;
  if (!args.config_path.empty()) {
    rc = afs::load_run_config_file(args.config_path);
  }
  if (!args.family.empty()) rc.family = args.family;
  if (args.critic == "oracle") {
    rc.pipeline.critic_mode = afs::CriticMode::kOracle;
  } else if (args.critic == "remote") {
    rc.pipeline.critic_mode = afs::CriticMode::kRemote;
  }
  rc.pipeline.validate();
  rc.difficulty.validate();
  return rc;
}

// nullptr means "use the built-in oracle".
std::unique_ptr<afs::RemoteCritic> make_remote_critic(
    const CommonArgs& args, const afs::RunConfig& rc) {
  if (rc.pipeline.critic_mode != afs::CriticMode::kRemote) return nullptr;
  afs::RemoteConfig remote;
  if (args.critic_url.empty()) {
    remote = afs::RemoteConfig::from_env();  // throws if CRITIC_URL is unset
  } else {
    try {
      remote = afs::RemoteConfig::from_env();  // timeout/retry tuning
    } catch (const afs::InvalidArgument&) {
      // CRITIC_URL unset is fine when the URL comes from the flag.
    }
    remote.base_url = args.critic_url;
  }
  return std::make_unique<afs::RemoteCritic>(remote);
}

std::filesystem::path prepare_out_dir(const std::string& dir) {
  std::filesystem::path p(dir);
  std::filesystem::create_directories(p);
  return p;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) {
    throw afs::InvalidArgument("cannot open output file: " + p.string());
  }
  return out;
}

void print_batch_summary(std::ostream& os, const afs::BatchReport& r) {
  double wall = 0.0;
  for (const afs::TrialResult& t : r.results) wall += t.wall_ms;
  os << "family " << r.family << ": " << r.successes << "/" << r.trials
     << " ok (rate " << afs::text::fmt17(r.success_rate()) << ", mean score "
     << afs::text::fmt17(r.mean_score()) << ", mean retries "
     << afs::text::fmt17(r.mean_retries()) << ", aborts " << r.aborts
     << ")\n"
     << "selections: base " << r.selections[0] << ", steer "
     << r.selections[1] << ", explore " << r.selections[2] << "\n"
     << "wall: " << afs::text::fmt17(wall / 1000.0) << " s\n";
}

void write_summary_csv(std::ostream& os, const std::string& parameter,
                       const std::vector<afs::SweepRow>& rows) {
  os << "parameter,value,feasible,trials,successes,failures,aborts,"
        "success_rate,mean_score,mean_retries\n";
  for (const afs::SweepRow& row : rows) {
    os << parameter << ',' << row.label << ',' << (row.feasible ? 1 : 0);
    if (!row.feasible) {
      os << ",0,0,0,0,nan,nan,nan\n";
      continue;
    }
    const afs::BatchReport& r = row.report;
    os << ',' << r.trials << ',' << r.successes << ',' << r.failures << ','
       << r.aborts << ',' << afs::text::fmt17(r.success_rate()) << ','
       << afs::text::fmt17(r.mean_score()) << ','
       << afs::text::fmt17(r.mean_retries()) << '\n';
  }
}

void write_sweep_outputs(const CommonArgs& args, const afs::RunConfig& rc,
                         const std::string& parameter, const std::string& tag,
                         const std::vector<afs::SweepPoint>& points,
                         const std::vector<afs::SweepRow>& rows) {
  afs::write_sweep_summary(std::cout, parameter, rows);
  if (args.out_dir.empty()) return;
  const auto dir = prepare_out_dir(args.out_dir);

  auto trials = open_out(dir / (tag + "_trials.csv"));
  afs::write_csv_header(trials);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].feasible) continue;
    afs::write_trial_rows(trials, rc.family, points[i].config,
                          parameter + "=" + rows[i].label, rows[i].report);
  }
  auto summary = open_out(dir / (tag + "_summary.csv"));
  write_summary_csv(summary, parameter, rows);
  std::cout << "wrote " << (dir / (tag + "_trials.csv")).string() << " and "
            << (dir / (tag + "_summary.csv")).string() << "\n";
}

int cmd_generate(const CommonArgs& args) {
  const afs::RunConfig rc = resolve_config(args);
  const auto critic = make_remote_critic(args, rc);
  const afs::TaskFamily family = afs::make_family(rc.family, rc.difficulty);
  const afs::SceneBundle bundle = family.make();

  const afs::GenerationResult gen =
      afs::generate(bundle.scene, bundle.model, bundle.decoder, rc.pipeline,
                    args.seed, critic.get());
  std::cout << gen.to_json().dump(2) << "\n";

  if (!args.out_dir.empty()) {
    const auto dir = prepare_out_dir(args.out_dir);
    auto result = open_out(dir / "result.json");
    result << gen.to_json().dump(2) << "\n";
    auto stages = open_out(dir / "stages.jsonl");
    for (const afs::AttemptRecord& attempt : gen.attempts) {
      for (const afs::SearchStageResult& stage : attempt.stages) {
        afs::write_stage_jsonl(stages, stage);
      }
    }
  }
  return kExitOk;
}

int cmd_batch(const CommonArgs& args) {
  const afs::RunConfig rc = resolve_config(args);
  const auto critic = make_remote_critic(args, rc);
  const afs::TaskFamily family = afs::make_family(rc.family, rc.difficulty);

  const afs::BatchReport report =
      afs::run_batch(family, rc.pipeline, args.trials, args.seed,
                     critic.get());
  print_batch_summary(std::cout, report);

  if (!args.out_dir.empty()) {
    const auto dir = prepare_out_dir(args.out_dir);
    auto trials = open_out(dir / "trials.csv");
    afs::write_csv_header(trials);
    afs::write_trial_rows(trials, rc.family, rc.pipeline, "batch", report);
    std::cout << "wrote " << (dir / "trials.csv").string() << "\n";
  }
  // A batch where every generation aborted almost certainly means the remote
  // critic is down; surface that as a critic failure.
  if (report.trials > 0 && report.aborts == report.trials) return kExitCritic;
  return kExitOk;
}

int cmd_sweep(const CommonArgs& args, const std::string& parameter,
              const std::vector<std::string>& values) {
  const afs::RunConfig rc = resolve_config(args);
  const auto critic = make_remote_critic(args, rc);
  const afs::TaskFamily family = afs::make_family(rc.family, rc.difficulty);

  const auto points = afs::make_sweep(rc.pipeline, parameter, values);
  const auto rows = afs::run_sweep(family, rc.pipeline, parameter, values,
                                   args.trials, args.seed, critic.get());
  write_sweep_outputs(args, rc, parameter, "sweep_" + parameter, points, rows);
  return kExitOk;
}

int cmd_ablate(const CommonArgs& args, const std::string& preset,
               bool full_grid) {
  const afs::RunConfig rc = resolve_config(args);
  const auto critic = make_remote_critic(args, rc);

  std::string parameter;
  std::vector<std::string> values;
  std::vector<std::string> families = {rc.family};
  if (preset == "width") {
    parameter = "width";
    values = {"1", "2", "3"};
  } else if (preset == "eta") {
    parameter = "eta";
    values = full_grid ? std::vector<std::string>{"50", "200", "400"}
                       : std::vector<std::string>{"0.5", "2", "8", "32"};
  } else if (preset == "sigma") {
    parameter = "sigma";
    values = {"0.05", "0.1", "0.2", "0.4"};
  } else if (preset == "t_split") {
    // Single-stage branching early/mid/late, reported per family; spatial
    // and attribute tasks respond differently and both tables are emitted.
    parameter = "t_split";
    values = {"0.8", "0.6", "0.4"};
    families = {"attribute", "spatial"};
  } else {
    std::cerr << "unknown ablation preset: " << preset
              << " (expected width, eta, sigma, or t_split)\n";
    return kExitUsage;
  }

  for (const std::string& fam_name : families) {
    afs::RunConfig cell = rc;
    cell.family = fam_name;
    const afs::TaskFamily family = afs::make_family(fam_name, rc.difficulty);
    const auto points = afs::make_sweep(rc.pipeline, parameter, values);
    const auto rows = afs::run_sweep(family, rc.pipeline, parameter, values,
                                     args.trials, args.seed, critic.get());
    std::cout << "== family " << fam_name << " ==\n";
    const std::string tag = families.size() > 1
                                ? "ablate_" + preset + "_" + fam_name
                                : "ablate_" + preset;
    write_sweep_outputs(args, cell, parameter, tag, points, rows);
  }
  return kExitOk;
}

int cmd_mock_critic(const CommonArgs& args, int port) {
  const afs::RunConfig rc = resolve_config(args);
  const afs::TaskFamily family = afs::make_family(rc.family, rc.difficulty);
  afs::MockCriticServer server(port);
  server.set_scene(family.make().scene, rc.pipeline.rubric);
  std::cout << "mock critic (" << rc.family << " oracle) listening on "
            << server.url() << "\n"
            << "endpoints: POST /diagnose, /score, /refine\n";
  std::cout.flush();
  server.wait();
  return kExitOk;
}

int cmd_selftest() {
  bool all_ok = true;
  for (const afs::selftest::CheckResult& r : afs::selftest::run_core_checks()) {
    std::cout << afs::selftest::format_result(r) << "\n";
    all_ok = all_ok && r.passed;
  }
  return all_ok ? kExitOk : kExitSelftest;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop flow steering sandbox"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string sweep_parameter;
  std::vector<std::string> sweep_values;
  std::string ablate_preset;
  bool full_grid = false;
  int mock_port = 0;

  CLI::App* generate = app.add_subcommand(
      "generate", "Run one closed-loop generation and print the JSON record");
  add_common_flags(*generate, args, /*with_trials=*/false);

  CLI::App* batch = app.add_subcommand(
      "batch", "Run many seeded generations and report aggregate rates");
  add_common_flags(*batch, args, /*with_trials=*/true);

  CLI::App* sweep = app.add_subcommand(
      "sweep", "Paired-seed sweep over one pipeline parameter");
  sweep->add_option("parameter", sweep_parameter,
                    "One of: t_split, horizon, width, eta, sigma")
      ->required();
  sweep->add_option("values", sweep_values, "Cell values (t_split uses a|b)")
      ->required()
      ->expected(-1);
  add_common_flags(*sweep, args, /*with_trials=*/true);

  CLI::App* ablate = app.add_subcommand(
      "ablate", "Run a preset grid: width, eta, sigma, or t_split");
  ablate->add_option("preset", ablate_preset, "Preset grid name")->required();
  ablate->add_flag("--full-grid", full_grid,
                   "Use the large eta grid {50,200,400} instead of the "
                   "latent-scale default {0.5,2,8,32}");
  add_common_flags(*ablate, args, /*with_trials=*/true);

  CLI::App* mock = app.add_subcommand(
      "mock-critic", "Serve the oracle critic over HTTP for wire testing");
  mock->add_option("--port", mock_port, "Listen port (0 picks a free port)");
  add_common_flags(*mock, args, /*with_trials=*/false);

  CLI::App* selftest = app.add_subcommand(
      "selftest", "Run the fast acceptance checks and print one line each");
  (void)selftest;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (generate->parsed()) return cmd_generate(args);
    if (batch->parsed()) return cmd_batch(args);
    if (sweep->parsed()) return cmd_sweep(args, sweep_parameter, sweep_values);
    if (ablate->parsed()) return cmd_ablate(args, ablate_preset, full_grid);
    if (mock->parsed()) return cmd_mock_critic(args, mock_port);
    if (selftest->parsed()) return cmd_selftest();
  } catch (const afs::TransportError& e) {
    std::cerr << "critic transport failure: " << e.what() << "\n";
    return kExitCritic;
  } catch (const afs::ProtocolError& e) {
    std::cerr << "critic protocol failure: " << e.what() << "\n";
    return kExitCritic;
  } catch (const afs::AbortedGeneration& e) {
    std::cerr << "generation aborted: " << e.what() << "\n";
    return kExitCritic;
  } catch (const afs::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}
