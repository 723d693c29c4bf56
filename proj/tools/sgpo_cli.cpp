#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sgpo/errors.hpp"
#include "sgpo/harness.hpp"
#include "sgpo/version.hpp"

namespace {

using Json = nlohmann::json;

sgpo::ExperimentConfig load_checked(const std::string& path, sgpo::ExperimentKind want) {
  sgpo::ExperimentConfig cfg = sgpo::load_config(path);
  if (cfg.kind != want)
    throw sgpo::ConfigError("config kind in " + path + " does not match the subcommand");
  return cfg;
}

Json load_json_object(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw sgpo::IoError("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw sgpo::IoError("failed reading config file " + path);
  try {
    return Json::parse(buf.str());
  } catch (const Json::parse_error& e) {
    throw sgpo::ConfigError(std::string("malformed config JSON: ") + e.what());
  }
}

// Options given on the command line override the loaded config; overlaying the
// raw JSON before parsing keeps the canonical hash tied to the effective run.
Json& section(Json& root, const char* key) {
  Json& s = root[key];
  if (!s.is_null() && !s.is_object())
    throw sgpo::ConfigError(std::string("config field '") + key + "': expected an object");
  return s;
}

bool use(const CLI::App* sub, const char* flag, bool fresh) {
  return fresh || sub->count(flag) > 0;
}

sgpo::ExperimentConfig finish(const Json& j, const std::string& path,
                              sgpo::ExperimentKind want) {
  sgpo::ExperimentConfig cfg = sgpo::config_from_json(j.dump());
  if (cfg.kind != want)
    throw sgpo::ConfigError("config kind in " + path + " does not match the subcommand");
  return cfg;
}

// Runs every requested seed; returns 0 when all runs report ok, 3 otherwise.
int run_all_seeds(const sgpo::ExperimentConfig& cfg,
                  std::optional<std::uint64_t> seed_override) {
  const std::vector<std::uint64_t> seeds =
      seed_override ? std::vector<std::uint64_t>{*seed_override} : cfg.seeds;
  bool all_ok = true;
  for (std::uint64_t s : seeds) {
    const sgpo::RunManifest m = sgpo::run_experiment(cfg, s);
    all_ok = all_ok && m.ok;
    std::cout << "seed " << s << ": " << (m.ok ? "ok" : "FAILED") << " ("
              << m.wall_ms << " ms), outputs in "
              << sgpo::resolve_output_dir(cfg).string() << "\n";
  }
  return all_ok ? 0 : 3;
}

void print_verify_report(const sgpo::ExperimentConfig& cfg) {
  const auto path = sgpo::resolve_output_dir(cfg) / "verify_report.json";
  std::ifstream in(path);
  if (!in) return;
  std::ostringstream buf;
  buf << in.rdbuf();
  const Json reports = Json::parse(buf.str());
  for (const Json& r : reports) {
    std::cout << (r.at("pass").get<bool>() ? "pass  " : "FAIL  ")
              << r.at("id").get<std::string>() << "  min_slack="
              << r.at("min_slack").get<double>() << "  points="
              << r.at("points").get<long long>() << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"group-relative policy optimization on synthetic chain tasks"};
  app.set_version_flag("--version", std::string(sgpo::kVersion));
  app.require_subcommand(1);

  // dynamics
  std::string dyn_config;
  int dyn_iters = 200;
  double dyn_p0 = 0.5, dyn_q0 = 0.5, dyn_eta = 1.0;
  std::string dyn_out = "out/dynamics";
  CLI::App* dyn = app.add_subcommand(
      "dynamics", "closed-form SGPO/GRPO learning dynamics on the two-step task");
  dyn->add_option("--config", dyn_config,
                  "JSON config with kind \"dynamics\"; other options override it");
  dyn->add_option("--iters", dyn_iters, "number of update steps");
  dyn->add_option("--p0", dyn_p0, "initial step-1 correct probability");
  dyn->add_option("--q0", dyn_q0, "initial step-2 correct probability");
  dyn->add_option("--eta", dyn_eta, "step size");
  dyn->add_option("--out", dyn_out, "output directory");

  // train
  std::string train_config;
  std::uint64_t train_seed = 0;
  bool train_seed_set = false;
  CLI::App* train = app.add_subcommand("train", "sampled group-relative training loop");
  train->add_option("--config", train_config, "JSON config with kind \"train\"")->required();
  train->add_option("--seed", train_seed, "run a single seed instead of the config list")
      ->each([&](const std::string&) { train_seed_set = true; });

  // verify
  std::string verify_config;
  std::string verify_lemma;
  int verify_r1 = 10000, verify_r2 = 500;
  double verify_margin = 1e-12;
  std::string verify_out = "out/verify";
  CLI::App* verify = app.add_subcommand("verify", "numeric lemma certificates");
  verify->add_option("--config", verify_config,
                     "JSON config with kind \"verify\"; other options override it");
  verify->add_option("--lemma", verify_lemma, "run a single lemma id");
  int verify_res_both = 0;
  verify->add_option("--resolution", verify_res_both,
                     "grid points for every check (overrides the per-kind options)");
  verify->add_option("--resolution-1d", verify_r1, "grid points for 1-d checks");
  verify->add_option("--resolution-2d", verify_r2, "grid points per axis for 2-d checks");
  verify->add_option("--margin", verify_margin, "required minimum slack");
  verify->add_option("--out", verify_out, "output directory");

  // estimator-check
  std::string est_config;
  long long est_samples = 1'000'000;
  int est_group = 2;
  double est_p = 0.5, est_q = 0.5, est_tol = 3e-3;
  std::string est_reward = "SGPO";
  std::string est_out = "out/estimator_check";
  std::uint64_t est_seed = 0;
  bool est_seed_set = false;
  CLI::App* est = app.add_subcommand(
      "estimator-check", "Monte-Carlo gradient estimate against the exact enumeration");
  est->add_option("--config", est_config,
                  "JSON config with kind \"estimator_check\"; other options override it");
  est->add_option("--samples", est_samples, "Monte-Carlo group draws");
  est->add_option("--group-size", est_group, "trajectories per group");
  est->add_option("--p", est_p, "step-1 correct probability");
  est->add_option("--q", est_q, "step-2 correct probability");
  est->add_option("--reward", est_reward, "GRPO or SGPO")
      ->check(CLI::IsMember({"GRPO", "SGPO"}));
  est->add_option("--tolerance", est_tol, "per-coordinate tolerance");
  est->add_option("--out", est_out, "output directory");
  est->add_option("--seed", est_seed, "RNG seed")->each([&](const std::string&) {
    est_seed_set = true;
  });

  // sweep
  std::string sweep_config;
  std::uint64_t sweep_seed = 0;
  bool sweep_seed_set = false;
  CLI::App* sweep = app.add_subcommand("sweep", "cartesian expansion over config axes");
  sweep->add_option("--config", sweep_config, "JSON config with kind \"sweep\"")->required();
  sweep->add_option("--seed", sweep_seed, "run a single seed instead of the config list")
      ->each([&](const std::string&) { sweep_seed_set = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(dyn)) {
      const bool fresh = dyn_config.empty();
      Json j = fresh ? Json{{"kind", "dynamics"}} : load_json_object(dyn_config);
      if (use(dyn, "--out", fresh)) j["output_dir"] = dyn_out;
      if (use(dyn, "--iters", fresh)) section(j, "dynamics")["iterations"] = dyn_iters;
      if (use(dyn, "--p0", fresh)) section(j, "dynamics")["p0"] = dyn_p0;
      if (use(dyn, "--q0", fresh)) section(j, "dynamics")["q0"] = dyn_q0;
      if (use(dyn, "--eta", fresh)) section(j, "dynamics")["eta"] = dyn_eta;
      return run_all_seeds(finish(j, dyn_config, sgpo::ExperimentKind::kDynamics),
                           std::nullopt);
    }
    if (app.got_subcommand(train)) {
      const sgpo::ExperimentConfig cfg =
          load_checked(train_config, sgpo::ExperimentKind::kTrain);
      return run_all_seeds(cfg, train_seed_set
                                    ? std::optional<std::uint64_t>(train_seed)
                                    : std::nullopt);
    }
    if (app.got_subcommand(verify)) {
      const bool fresh = verify_config.empty();
      Json j = fresh ? Json{{"kind", "verify"}} : load_json_object(verify_config);
      if (verify->count("--resolution")) verify_r1 = verify_r2 = verify_res_both;
      if (use(verify, "--out", fresh)) j["output_dir"] = verify_out;
      if (use(verify, "--resolution-1d", fresh) || verify->count("--resolution"))
        section(j, "verify")["resolution_1d"] = verify_r1;
      if (use(verify, "--resolution-2d", fresh) || verify->count("--resolution"))
        section(j, "verify")["resolution_2d"] = verify_r2;
      if (use(verify, "--margin", fresh)) section(j, "verify")["margin"] = verify_margin;
      if (verify->count("--lemma")) section(j, "verify")["lemma"] = verify_lemma;
      const sgpo::ExperimentConfig cfg =
          finish(j, verify_config, sgpo::ExperimentKind::kVerify);
      const int rc = run_all_seeds(cfg, std::nullopt);
      print_verify_report(cfg);
      return rc;
    }
    if (app.got_subcommand(est)) {
      const bool fresh = est_config.empty();
      Json j = fresh ? Json{{"kind", "estimator_check"}} : load_json_object(est_config);
      if (use(est, "--out", fresh)) j["output_dir"] = est_out;
      if (use(est, "--samples", fresh)) section(j, "estimator")["samples"] = est_samples;
      if (use(est, "--group-size", fresh)) section(j, "estimator")["group_size"] = est_group;
      if (use(est, "--p", fresh)) section(j, "estimator")["p"] = est_p;
      if (use(est, "--q", fresh)) section(j, "estimator")["q"] = est_q;
      if (use(est, "--tolerance", fresh)) section(j, "estimator")["tolerance"] = est_tol;
      if (use(est, "--reward", fresh))
        section(section(j, "estimator"), "reward")["kind"] = est_reward;
      const sgpo::ExperimentConfig cfg =
          finish(j, est_config, sgpo::ExperimentKind::kEstimatorCheck);
      return run_all_seeds(cfg, est_seed_set ? std::optional<std::uint64_t>(est_seed)
                                             : std::nullopt);
    }
    if (app.got_subcommand(sweep)) {
      const sgpo::ExperimentConfig cfg =
          load_checked(sweep_config, sgpo::ExperimentKind::kSweep);
      return run_all_seeds(cfg, sweep_seed_set
                                    ? std::optional<std::uint64_t>(sweep_seed)
                                    : std::nullopt);
    }
  } catch (const sgpo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const sgpo::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const sgpo::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
