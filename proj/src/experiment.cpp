#include <tboost/experiment.hpp>
#include <tboost/text.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

namespace tboost {

TripletStore protocol_triplets(const Dataset& train, const TripletProtocol& proto) {
  auto ts = generate_subsampled(train, proto.metric, proto.proportion, derive_seed(proto.seed, 0));
  return add_noise(ts, proto.noise, derive_seed(proto.seed, 1));
}

TestTripletSet protocol_test_triplets(const Dataset& train, const Dataset& test,
                                      const TripletProtocol& proto) {
  auto tx = generate_test_subsampled(train, test, proto.metric, proto.proportion,
                                     derive_seed(proto.seed, 2));
  return add_noise(tx, proto.noise, derive_seed(proto.seed, 3));
}

std::vector<double> parse_grid(std::string_view s) {
  std::vector<double> out;
  auto bad = [&] { return Error("malformed grid '" + std::string(s) + "'"); };
  auto parts = text::split(s, ':');
  if (parts.size() == 3) {
    auto start = text::parse_double(parts[0]), step = text::parse_double(parts[1]),
         stop = text::parse_double(parts[2]);
    if (!start || !step || !stop || !(*step > 0) || *stop < *start) throw bad();
    auto count = static_cast<std::size_t>(std::floor((*stop - *start) / *step + 1e-9)) + 1;
    for (std::size_t t = 0; t < count; ++t) out.push_back(*start + static_cast<double>(t) * *step);
    return out;
  }
  if (parts.size() != 1) throw bad();
  for (auto item : text::split(s, ',')) {
    auto v = text::parse_double(item);
    if (!v) throw bad();
    out.push_back(*v);
  }
  return out;
}

ExperimentSpec read_experiment_spec(std::istream& in) {
  ExperimentSpec spec;
  std::string line;
  std::size_t row = 0;
  auto fractions = [](std::string_view v, const std::string& where) {
    auto grid = parse_grid(v);
    for (double x : grid)
      if (!(x >= 0 && x <= 1)) throw Error("values must lie in [0, 1]" + where);
    return grid;
  };
  while (std::getline(in, line)) {
    ++row;
    auto view = std::string_view(line);
    view = text::trim(view.substr(0, view.find('#')));
    if (view.empty()) continue;
    auto where = " at line " + std::to_string(row);
    auto kv = text::key_value(view);
    if (!kv) throw Error("expected key = value" + where);
    auto [key, value] = *kv;
    auto number = [&](auto parsed) {
      if (!parsed) throw Error("bad value for '" + std::string(key) + "'" + where);
      return *parsed;
    };
    if (key == "data") spec.data = value;
    else if (key == "header") spec.header = value == "true" || value == "1";
    else if (key == "moons_n") spec.moons_n = number(text::parse_uint<std::size_t>(value));
    else if (key == "moons_noise") spec.moons_noise = number(text::parse_double(value));
    else if (key == "metric") spec.metric = parse_metric(value);
    else if (key == "proportions") spec.proportions = fractions(value, where);
    else if (key == "noise") spec.noise_levels = fractions(value, where);
    else if (key == "rounds") spec.rounds = number(text::parse_uint<std::size_t>(value));
    else if (key == "repetitions") spec.repetitions = number(text::parse_uint<std::size_t>(value));
    else if (key == "seed") spec.seed = number(text::parse_uint<std::uint64_t>(value));
    else if (key == "test_fraction") spec.test_fraction = number(text::parse_double(value));
    else if (key == "out") spec.out = value;
    else throw Error("unknown key '" + std::string(key) + "'" + where);
  }
  if (spec.data.empty()) throw Error("experiment spec needs 'data'");
  if (spec.proportions.empty()) spec.proportions = {1.0};
  if (spec.noise_levels.empty()) spec.noise_levels = {0.0};
  if (spec.repetitions < 1) throw Error("repetitions must be at least 1");
  if (spec.rounds < 1) throw Error("rounds must be at least 1");
  return spec;
}

ExperimentSpec load_experiment_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_experiment_spec(in);
}

CellSeeds derive_cell_seeds(std::uint64_t seed, std::size_t repetition) {
  auto r = derive_seed(seed, repetition);
  return {r, derive_seed(r, 0), derive_seed(r, 1), derive_seed(r, 2), derive_seed(r, 3),
          derive_seed(r, 4)};
}

std::vector<ExperimentRow> run_experiment(const ExperimentSpec& spec, std::size_t threads) {
  std::optional<Dataset> file_data;
  if (spec.data != "moons") file_data = load_csv(spec.data, spec.header);

  struct Cell {
    std::size_t rep, p, eta;
  };
  std::vector<Cell> cells;
  for (std::size_t r = 0; r < spec.repetitions; ++r)
    for (std::size_t p = 0; p < spec.proportions.size(); ++p)
      for (std::size_t e = 0; e < spec.noise_levels.size(); ++e) cells.push_back({r, p, e});

  std::vector<ExperimentRow> rows(cells.size());
  auto run_cell = [&](const Cell& cell) {
    auto seeds = derive_cell_seeds(spec.seed, cell.rep);
    auto ds = file_data ? *file_data : make_moons(spec.moons_n, spec.moons_noise, seeds.data);
    auto parts = split(ds, spec.test_fraction, seeds.split);
    TripletProtocol proto{spec.metric, spec.proportions[cell.p], spec.noise_levels[cell.eta],
                          seeds.triplets};
    auto ts = protocol_triplets(parts.train, proto);
    auto tx = protocol_test_triplets(parts.train, parts.test, proto);
    BoostConfig cfg;
    cfg.rounds = spec.rounds;
    cfg.seed = seeds.boost;
    auto model = train(parts.train, ts, cfg);
    EvalOptions opt;
    opt.seed = seeds.eval;
    auto report = evaluate(model, tx, parts.test, opt);
    return ExperimentRow{spec.metric, proto.proportion, proto.noise, seeds.repetition,
                         report.accuracy, report.abstention_rate};
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, cells.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t c; (c = next++) < cells.size();) {
      try {
        rows[c] = run_cell(cells[c]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = cells.size();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::vector<std::size_t> order(cells.size());
  for (std::size_t c = 0; c < order.size(); ++c) order[c] = c;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto &x = cells[a], &y = cells[b];
    return std::tie(x.p, x.eta, x.rep) < std::tie(y.p, y.eta, y.rep);
  });
  std::vector<ExperimentRow> sorted;
  for (auto c : order) sorted.push_back(rows[c]);
  return sorted;
}

void write_experiment(std::ostream& out, const std::vector<ExperimentRow>& rows) {
  out << "metric,proportion,noise,seed,accuracy,abstention_rate\n";
  for (const auto& r : rows)
    out << metric_name(r.metric) << ',' << text::format_double(r.proportion) << ','
        << text::format_double(r.noise) << ',' << r.seed << ',' << text::format_double(r.accuracy)
        << ',' << text::format_double(r.abstention_rate) << '\n';
}

} // namespace tboost
