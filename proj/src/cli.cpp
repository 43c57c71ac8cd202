#include <tboost/bounds.hpp>
#include <tboost/cli.hpp>
#include <tboost/experiment.hpp>
#include <tboost/text.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <sstream>

namespace tboost::cli {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Commands {
  std::ostream& out;
  std::ostream& err;
  std::function<void()> action;

  void gen_moons(CLI::App& app) {
    auto* cmd = app.add_subcommand("gen-moons", "Write a two-moons dataset as CSV");
    auto n = std::make_shared<std::size_t>(500);
    auto noise = std::make_shared<double>(0.1);
    auto seed = std::make_shared<std::uint64_t>(0);
    auto path = std::make_shared<std::string>();
    cmd->add_option("--n", *n, "Number of examples")->capture_default_str();
    cmd->add_option("--noise", *noise, "Gaussian feature noise")->capture_default_str();
    cmd->add_option("--seed", *seed)->capture_default_str();
    cmd->add_option("--out", *path)->required();
    cmd->callback([=, this] {
      action = [=] { save_csv(*path, make_moons(*n, *noise, *seed)); };
    });
  }

  void split_cmd(CLI::App& app) {
    auto* cmd = app.add_subcommand(
        "split", "Split a dataset, and optionally a triplet file over it, into train and test");
    struct Opts {
      std::string data, train_out, test_out, triplets, train_triplets, test_triplets;
      double fraction = 0.3;
      std::uint64_t seed = 0;
      bool header = false;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--data", o->data)->required();
    cmd->add_flag("--header", o->header, "Skip the first CSV line");
    cmd->add_option("--test-fraction", o->fraction)->capture_default_str();
    cmd->add_option("--seed", o->seed)->capture_default_str();
    cmd->add_option("--train-out", o->train_out)->required();
    cmd->add_option("--test-out", o->test_out)->required();
    auto* t = cmd->add_option("--triplets", o->triplets, "Triplet file over the whole dataset");
    cmd->add_option("--train-triplets-out", o->train_triplets)->needs(t);
    cmd->add_option("--test-triplets-out", o->test_triplets)->needs(t);
    cmd->callback([=, this] {
      action = [=] {
        auto ds = load_csv(o->data, o->header);
        auto parts = split(ds, o->fraction, o->seed);
        save_csv(o->train_out, parts.train);
        save_csv(o->test_out, parts.test);
        if (!o->triplets.empty()) {
          auto ts = load_triplets(o->triplets);
          if (ts.n() != ds.size()) throw Error("triplet file does not match the dataset");
          auto [train_ts, test_ts] = partition(ts, parts.train_ids, parts.test_ids);
          if (!o->train_triplets.empty()) save_triplets(o->train_triplets, train_ts);
          if (!o->test_triplets.empty()) save_test_triplets(o->test_triplets, test_ts);
        }
      };
    });
  }

  void gen_triplets(CLI::App& app) {
    auto* cmd = app.add_subcommand("gen-triplets", "Generate, subsample and corrupt triplets");
    struct Opts {
      std::string data, metric = "euclidean", out, test_data, test_out;
      double proportion = 1.0, noise = 0.0;
      std::uint64_t seed = 0;
      bool header = false;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--data", o->data, "Training CSV with features")->required();
    cmd->add_flag("--header", o->header, "Skip the first CSV line");
    cmd->add_option("--metric", o->metric)
        ->check(CLI::IsMember({"euclidean", "cityblock", "cosine"}))
        ->capture_default_str();
    cmd->add_option("--proportion", o->proportion)->check(CLI::Range(0.0, 1.0))->capture_default_str();
    cmd->add_option("--noise", o->noise)->check(CLI::Range(0.0, 1.0))->capture_default_str();
    cmd->add_option("--seed", o->seed)->capture_default_str();
    cmd->add_option("--out", o->out)->required();
    auto* td = cmd->add_option("--test-data", o->test_data, "Test CSV; anchors of test triplets");
    cmd->add_option("--test-out", o->test_out)->needs(td);
    td->needs(cmd->get_option("--test-out"));
    cmd->callback([=, this] {
      action = [=] {
        auto train = load_csv(o->data, o->header);
        TripletProtocol proto{parse_metric(o->metric), o->proportion, o->noise, o->seed};
        save_triplets(o->out, protocol_triplets(train, proto));
        if (!o->test_data.empty()) {
          auto test = load_csv(o->test_data, o->header, train.labels(), true);
          save_test_triplets(o->test_out, protocol_test_triplets(train, test, proto));
        }
      };
    });
  }

  void gen_triplets_ratings(CLI::App& app) {
    auto* cmd = app.add_subcommand("gen-triplets-ratings", "Triplets from a user x item rating table");
    struct Opts {
      std::string ratings, out;
      std::optional<std::size_t> n_items;
      std::optional<std::uint64_t> limit;
      std::uint64_t seed = 0;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--ratings", o->ratings, "Lines 'user item rating'")->required();
    cmd->add_option("--n-items", o->n_items, "Item count (default: largest id + 1)");
    cmd->add_option("--candidate-limit", o->limit, "Examine this many random candidates");
    cmd->add_option("--seed", o->seed)->capture_default_str();
    cmd->add_option("--out", o->out)->required();
    cmd->callback([=, this] {
      action = [=] {
        auto table = load_ratings(o->ratings, o->n_items);
        save_triplets(o->out, generate_from_ratings(table, o->limit, o->seed));
      };
    });
  }

  void add_noise_cmd(CLI::App& app) {
    auto* cmd = app.add_subcommand("add-noise", "Swap a fixed fraction of triplets");
    struct Opts {
      std::string in, out;
      double rate = 0.1;
      std::uint64_t seed = 0;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--triplets", o->in, "Training or test triplet file")->required();
    cmd->add_option("--rate", o->rate)->check(CLI::Range(0.0, 1.0))->capture_default_str();
    cmd->add_option("--seed", o->seed)->capture_default_str();
    cmd->add_option("--out", o->out)->required();
    cmd->callback([=, this] {
      action = [=] {
        std::istringstream in(slurp(o->in));
        if (in.str().rfind("testtriplets", 0) == 0) {
          save_test_triplets(o->out, add_noise(read_test_triplets(in), o->rate, o->seed));
        } else {
          save_triplets(o->out, add_noise(read_triplets(in), o->rate, o->seed));
        }
      };
    });
  }

  void train_cmd(CLI::App& app) {
    auto* cmd = app.add_subcommand("train", "Boost triplet classifiers");
    struct Opts {
      std::string data, triplets, model, stats;
      std::size_t rounds = 1000, every = 0;
      std::uint64_t seed = 0;
      bool keep_zero = false, header = false;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--data", o->data, "Training labels CSV")->required();
    cmd->add_flag("--header", o->header, "Skip the first CSV line");
    cmd->add_option("--triplets", o->triplets)->required();
    cmd->add_option("--rounds", o->rounds)->capture_default_str();
    cmd->add_option("--seed", o->seed)->capture_default_str();
    cmd->add_option("--out-model", o->model)->required();
    cmd->add_flag("--keep-zero-alpha", o->keep_zero, "Keep classifiers whose weight is zero");
    cmd->add_option("--stats-every", o->every, "Checkpoint interval (default rounds/10)");
    cmd->add_option("--stats-out", o->stats, "Per-round statistics CSV");
    cmd->callback([=, this] {
      action = [=, this] {
        if (o->rounds < 1) throw Error("--rounds must be at least 1");
        auto ds = load_csv(o->data, o->header);
        auto ts = load_triplets(o->triplets);
        BoostConfig cfg;
        cfg.rounds = o->rounds;
        cfg.seed = o->seed;
        cfg.keep_zero_alpha = o->keep_zero;
        cfg.stats_every = o->every ? o->every : std::max<std::size_t>(1, o->rounds / 10);
        cfg.on_checkpoint = [this](const Checkpoint& c) {
          out << "round=" << c.round << " train_error=" << text::format_double(c.train_error)
              << " bound=" << text::format_double(c.bound) << '\n';
        };
        auto model = train(ds, ts, cfg);
        save_model(o->model, model);
        if (!o->stats.empty()) {
          auto f = open_out(o->stats);
          write_round_stats(f, model);
        }
        err << "kept " << model.classifiers.size() << " of " << model.rounds_run
            << " classifiers\n";
      };
    });
  }

  void predict_cmd(CLI::App& app) {
    auto* cmd = app.add_subcommand("predict", "Predict labels of test examples");
    struct Opts {
      std::string model, tests, out, policy = "random";
      std::uint64_t seed = 0;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--model", o->model)->required();
    cmd->add_option("--test-triplets", o->tests)->required();
    cmd->add_option("--policy", o->policy)
        ->check(CLI::IsMember({"random", "fixed_lowest"}))
        ->capture_default_str();
    cmd->add_option("--seed", o->seed)->capture_default_str();
    cmd->add_option("--out", o->out, "Predictions CSV (default: standard output)");
    cmd->callback([=, this] {
      action = [=, this] {
        auto model = load_model(o->model);
        auto tests = load_test_triplets(o->tests);
        if (o->out.empty()) {
          write_predictions(out, model, tests, parse_policy(o->policy), o->seed);
        } else {
          auto f = open_out(o->out);
          write_predictions(f, model, tests, parse_policy(o->policy), o->seed);
        }
      };
    });
  }

  void evaluate_cmd(CLI::App& app) {
    auto* cmd = app.add_subcommand("evaluate", "Accuracy, abstention and ranking metrics");
    struct Opts {
      std::string model, tests, labels, policy = "random", json;
      std::uint64_t seed = 0;
      std::size_t k = 5;
      bool header = false;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--model", o->model)->required();
    cmd->add_option("--test-triplets", o->tests)->required();
    cmd->add_option("--labels", o->labels, "Test labels CSV")->required();
    cmd->add_flag("--header", o->header, "Skip the first CSV line");
    cmd->add_option("--policy", o->policy)
        ->check(CLI::IsMember({"random", "fixed_lowest"}))
        ->capture_default_str();
    cmd->add_option("--seed", o->seed)->capture_default_str();
    cmd->add_option("--k", o->k, "Cutoff of recall@k")->capture_default_str();
    cmd->add_option("--json", o->json, "Append the report as a JSON line to this file");
    cmd->callback([=, this] {
      action = [=, this] {
        auto model = load_model(o->model);
        auto tests = load_test_triplets(o->tests);
        auto truth = load_csv(o->labels, o->header, model.labels, false);
        auto report = evaluate(model, tests, truth, {parse_policy(o->policy), o->seed, o->k});
        write_report(out, report, model.labels);
        if (!o->json.empty()) {
          std::ofstream f(o->json, std::ios::app);
          if (!f) throw Error("cannot write '" + o->json + "'");
          f << report_json(report, model.labels) << '\n';
        }
      };
    });
  }

  void experiment_cmd(CLI::App& app) {
    auto* cmd = app.add_subcommand("experiment", "Run a proportion x noise x repetition grid");
    auto spec = std::make_shared<std::string>();
    auto threads = std::make_shared<std::size_t>(0);
    cmd->add_option("--spec", *spec, "key = value experiment file")->required();
    cmd->add_option("--threads", *threads, "Workers (0 = all cores)")->capture_default_str();
    cmd->callback([=, this] {
      action = [=, this] {
        auto s = load_experiment_spec(*spec);
        auto rows = run_experiment(s, *threads);
        if (s.out.empty()) {
          write_experiment(out, rows);
        } else {
          auto f = open_out(s.out);
          write_experiment(f, rows);
        }
      };
    });
  }

  void bound_cmd(CLI::App& app) {
    auto* cmd = app.add_subcommand(
        "bound", "Training-error and margin bounds from round statistics, or the abstention bound");
    struct Opts {
      std::string stats;
      std::size_t L = 2, n = 0;
      std::vector<double> thetas;
      std::optional<double> p;
      double rounds = 1;
    };
    auto o = std::make_shared<Opts>();
    auto* st = cmd->add_option("--stats", o->stats, "CSV written by train --stats-out");
    cmd->add_option("--num-labels", o->L)->capture_default_str();
    cmd->add_option("--n", o->n, "Number of training examples")->required();
    cmd->add_option("--theta", o->thetas, "Margin levels")->needs(st)->delimiter(',');
    auto* p = cmd->add_option("--p", o->p, "Triplet availability (abstention bound)");
    cmd->add_option("--rounds", o->rounds, "Classifier count C (abstention bound)")->needs(p);
    st->excludes(p);
    cmd->callback([=, this] {
      action = [=, this] {
        if (o->p) {
          out << "abstention_bound=" << text::format_g17(abstention_bound(o->n, *o->p, o->rounds))
              << '\n';
          return;
        }
        if (o->stats.empty()) throw Error("give --stats or --p");
        std::ifstream in(o->stats);
        if (!in) throw Error("cannot open '" + o->stats + "'");
        auto stats = read_round_stats(in);
        out << "training_error_bound=" << text::format_g17(training_error_bound(o->L, stats))
            << '\n';
        for (double theta : o->thetas)
          out << "margin_bound[" << text::format_double(theta)
              << "]=" << text::format_g17(empirical_margin_bound(o->L, stats, o->n, theta))
              << '\n';
      };
    });
  }

  void simulate_cmd(CLI::App& app) {
    auto* cmd = app.add_subcommand("simulate-abstention", "Monte Carlo abstention frequency");
    struct Opts {
      std::size_t n = 10, C = 5, trials = 100000;
      double p = 0.1;
      std::uint64_t seed = 0;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--n", o->n)->capture_default_str();
    cmd->add_option("--p", o->p)->check(CLI::Range(0.0, 1.0))->capture_default_str();
    cmd->add_option("--rounds", o->C, "Classifier count C")->capture_default_str();
    cmd->add_option("--trials", o->trials)->capture_default_str();
    cmd->add_option("--seed", o->seed)->capture_default_str();
    cmd->callback([=, this] {
      action = [=, this] {
        auto e = simulate_abstention(o->n, o->p, o->C, o->trials, o->seed);
        out << "estimate=" << text::format_g17(e.mean) << '\n'
            << "stderr=" << text::format_g17(e.stderr_) << '\n'
            << "bound=" << text::format_g17(abstention_bound(o->n, o->p, static_cast<double>(o->C)))
            << '\n';
      };
    });
  }

  void surface_cmd(CLI::App& app) {
    auto* cmd = app.add_subcommand("bound-surface", "Abstention bound over a (k, beta) grid");
    struct Opts {
      std::size_t n = 100;
      std::string k_grid = "0:0.1:2.9", beta_grid = "0:0.1:2", out;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--n", o->n)->capture_default_str();
    cmd->add_option("--k-grid", o->k_grid, "'a,b,c' or 'start:step:stop'")->capture_default_str();
    cmd->add_option("--beta-grid", o->beta_grid)->capture_default_str();
    cmd->add_option("--out", o->out, "CSV path (default: standard output)");
    cmd->callback([=, this] {
      action = [=, this] {
        auto ks = parse_grid(o->k_grid), betas = parse_grid(o->beta_grid);
        std::vector<SurfaceRow> skipped;
        auto rows = bound_surface(o->n, ks, betas, &skipped);
        for (const auto& s : skipped)
          err << "skipped k=" << text::format_double(s.k) << " beta=" << text::format_double(s.beta)
              << ": p=" << text::format_double(s.bound) << " > 1\n";
        if (o->out.empty()) {
          write_surface(out, rows);
        } else {
          auto f = open_out(o->out);
          write_surface(f, rows);
        }
      };
    });
  }

  void limit_cmd(CLI::App& app) {
    auto* cmd = app.add_subcommand("bound-limit", "Large-n limit of the abstention bound");
    auto k = std::make_shared<double>();
    auto beta = std::make_shared<double>();
    cmd->add_option("--k", *k)->required();
    cmd->add_option("--beta", *beta)->required();
    cmd->callback([=, this] {
      action = [=, this] {
        auto l = abstention_limit(*k, *beta);
        out << "limit=" << limit_name(l) << '\n' << "value=" << text::format_g17(limit_value(l)) << '\n';
      };
    });
  }
};

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app("Multi-class boosting from triplet comparisons", "tripletboost");
  app.require_subcommand(1);
  Commands cmds{out, err, {}};
  cmds.gen_moons(app);
  cmds.split_cmd(app);
  cmds.gen_triplets(app);
  cmds.gen_triplets_ratings(app);
  cmds.add_noise_cmd(app);
  cmds.train_cmd(app);
  cmds.predict_cmd(app);
  cmds.evaluate_cmd(app);
  cmds.experiment_cmd(app);
  cmds.bound_cmd(app);
  cmds.simulate_cmd(app);
  cmds.surface_cmd(app);
  cmds.limit_cmd(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }
  try {
    if (cmds.action) cmds.action();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"tripletboost"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

} // namespace tboost::cli
