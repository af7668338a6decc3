#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "lig/lig.hpp"

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string dataset_text(const lig::JointActionDataset& d) {
  std::ostringstream s;
  lig::write_dataset(s, d);
  return s.str();
}

nlohmann::json ne_json(const lig::EquilibriaSet& ne) {
  nlohmann::json list = nlohmann::json::array();
  for (auto idx : ne.members()) list.push_back(lig::JointAction::from_index(ne.n(), idx).to_string());
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning linear influence games from joint-action data"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a synthetic truth game and train/validation/test samples");
  lig::SyntheticSpec spec;
  std::string gen_config, gen_out = ".";
  gen->add_option("--config", gen_config, "Experiment config file supplying the synthetic keys");
  gen->add_option("--n", spec.n, "Players");
  gen->add_option("--density", spec.density, "Edge probability");
  gen->add_option("--p-plus", spec.p_plus, "Probability an edge weight is +1");
  gen->add_option("--q", spec.q_g, "Mixture parameter of the truth");
  gen->add_option("--m-train", spec.m_train);
  gen->add_option("--m-val", spec.m_val);
  gen->add_option("--m-test", spec.m_test);
  gen->add_option("--seed", spec.seed);
  gen->add_option("--truth", spec.truth, "random | two_pairs | four_blocks");
  gen->add_option("--out", gen_out, "Output directory");

  // census
  auto* census = app.add_subcommand("census", "Count the distinct equilibria sets of all influence games");
  int census_n = 4;
  std::string census_cache;
  census->add_option("--n", census_n, "Players (at most 4)");
  census->add_option("--cache", census_cache, "Cache file for the tie-aware census");

  // train
  auto* train = app.add_subcommand("train", "Train a single method on a dataset file");
  std::string train_data, train_method = "sim_logistic", train_out, train_cache;
  double train_rho = 0.0006;
  std::uint64_t train_seed = 0;
  train->add_option("--data", train_data, "Dataset file (one line of +/- per sample)")->required();
  train->add_option("--method", train_method,
                    "sample_picking | exhaustive | sigmoid_ml | sigmoid_mepe | ind_svm | sim_svm | ind_logistic | sim_logistic");
  train->add_option("--rho", train_rho, "L1 regularization strength");
  train->add_option("--seed", train_seed);
  train->add_option("--census-cache", train_cache, "Census cache for exhaustive search");
  train->add_option("--out", train_out, "Write the learned model as JSON here instead of stdout");

  // experiment
  auto* experiment = app.add_subcommand("experiment", "Run the full train/validate/test pipeline from a config file");
  std::string exp_config, exp_out = "report.json", exp_csv;
  experiment->add_option("--config", exp_config, "key = value config file")->required();
  experiment->add_option("--out", exp_out, "JSON report path");
  experiment->add_option("--csv", exp_csv, "CSV mirror path");

  // bounds
  auto* bounds = app.add_subcommand("bounds", "Generalization and equilibrium-proportion bounds");
  int b_n = 20;
  std::size_t b_m = 50;
  double b_delta = 0.05, b_qbar = 0.7;
  int b_trials = 0;
  std::uint64_t b_seed = 0;
  bounds->add_option("--n", b_n);
  bounds->add_option("--m", b_m);
  bounds->add_option("--delta", b_delta);
  bounds->add_option("--q-bar", b_qbar);
  bounds->add_option("--mc-trials", b_trials, "Also estimate the expected true proportion by Monte Carlo");
  bounds->add_option("--seed", b_seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      if (!gen_config.empty()) {
        auto cfg = lig::parse_experiment_config(lig::read_key_values_file(gen_config));
        spec = cfg.synthetic;
      }
      const auto inst = lig::gen_synthetic(spec);
      std::filesystem::create_directories(gen_out);
      const std::filesystem::path dir(gen_out);
      nlohmann::json truth = lig::game_to_json(inst.truth);
      truth["q"] = spec.q_g;
      truth["seed"] = inst.truth_seed;
      truth["equilibria"] = ne_json(inst.truth_ne);
      write_file(dir / "truth.json", truth.dump(2) + "\n");
      write_file(dir / "train.txt", dataset_text(inst.train));
      write_file(dir / "val.txt", dataset_text(inst.val));
      write_file(dir / "test.txt", dataset_text(inst.test));
      std::cout << "truth: n=" << inst.truth.n() << " |NE|=" << inst.truth_ne.size() << " seed=" << inst.truth_seed
                << " attempts=" << inst.attempts << "\nwrote " << (dir / "truth.json").string() << ", train.txt, val.txt, test.txt\n";
    } else if (*census) {
      const auto tie = lig::cached_census(census_n, census_cache, false);
      const auto strict = lig::enumerate_influence_games(census_n, true);
      std::cout << "n=" << census_n << " tie_aware=" << tie.members.size() << " strict=" << strict.members.size()
                << " weight_bound=" << tie.weight_bound << "\n";
    } else if (*train) {
      const auto data = lig::read_dataset_file(train_data);
      lig::ExperimentConfig cfg;
      cfg.metrics_cap = std::min(data.n(), lig::kModelKlCap);
      const auto method = lig::parse_method(train_method);
      std::optional<lig::GameCensus> c;
      if (method == lig::Method::exhaustive && data.n() <= lig::kCensusCap) c = lig::cached_census(data.n(), train_cache);
      const auto model = lig::detail::fit_method(method, train_rho, data, cfg, train_seed, c ? &*c : nullptr);
      nlohmann::json j = model.game ? lig::game_to_json(*model.game) : nlohmann::json{{"n", data.n()}};
      j["method"] = train_method;
      j["rho"] = train_rho;
      j["q"] = model.q;
      j["degenerate_players"] = model.degenerate_players;
      j["converged"] = model.converged;
      if (model.ne) {
        j["equilibria"] = ne_json(*model.ne);
        j["train_loglik"] = lig::avg_log_likelihood(*model.ne, lig::detail::evaluation_q(model.q, data.m()), data);
      }
      if (train_out.empty()) {
        std::cout << j.dump(2) << "\n";
      } else {
        write_file(train_out, j.dump(2) + "\n");
        std::cout << "wrote " << train_out << "\n";
      }
    } else if (*experiment) {
      auto cfg = lig::parse_experiment_config(lig::read_key_values_file(exp_config));
      // relative votes paths are taken from the config file's directory
      if (!cfg.votes_file.empty() && std::filesystem::path(cfg.votes_file).is_relative())
        cfg.votes_file = (std::filesystem::path(exp_config).parent_path() / cfg.votes_file).string();
      const auto report = lig::run_experiment(cfg);
      write_file(exp_out, lig::report_to_json(report).dump(2) + "\n");
      if (!exp_csv.empty()) write_file(exp_csv, lig::report_to_csv(report));
      std::cout << "wrote " << exp_out << " (" << report.rows.size() << " rows)\n";
    } else if (*bounds) {
      const auto g = lig::generalization_bound(b_n, b_m, b_delta, b_qbar);
      std::cout << std::setprecision(10) << "n=" << g.n << " m=" << g.m << " delta=" << g.delta << " q_bar=" << g.q_bar
                << "\ngeneralization_slack=" << g.bound_value << "\nvc_term=" << g.vc_term
                << "\ntpe_bound=" << lig::tpe_bound(b_n, b_delta) << "\n";
      if (b_trials > 0) {
        const auto mc = lig::monte_carlo_expected_pi(b_n, b_trials, b_seed);
        std::cout << "mc_mean_pi=" << mc.mean << " ci99=[" << mc.ci_low << ", " << mc.ci_high << "]"
                  << " range=[" << std::pow(0.5, b_n) << ", " << std::pow(0.75, b_n) << "]\n";
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
