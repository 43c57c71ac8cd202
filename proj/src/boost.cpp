#include <tboost/boost.hpp>
#include <tboost/text.hpp>

#include <cmath>
#include <fstream>

namespace tboost {

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Index drawn proportionally to `mass` among entries accepted by `eligible`.
template <class Eligible>
std::optional<Id> draw(const std::vector<double>& mass, Eligible&& eligible,
                       std::mt19937_64& rng) {
  double total = 0;
  std::optional<Id> last;
  for (Id i = 0; i < mass.size(); ++i) {
    if (!eligible(i)) continue;
    total += mass[i];
    if (mass[i] > 0) last = i;
  }
  if (!last) return std::nullopt;
  auto u = uniform01(rng) * total;
  double acc = 0;
  for (Id i = 0; i < mass.size(); ++i) {
    if (!eligible(i)) continue;
    acc += mass[i];
    if (u < acc && mass[i] > 0) return i;
  }
  return last;
}

bool has_two_truth_sets(const Dataset& ds) {
  for (std::size_t i = 1; i < ds.size(); ++i)
    if (ds.truth(i) != ds.truth(0)) return true;
  return false;
}

/// True when `scores` has a unique maximum and it is one of `truth`.
bool correct(std::span<const double> scores, LabelMask truth) {
  std::size_t best = 0;
  bool unique = true;
  for (std::size_t y = 1; y < scores.size(); ++y) {
    if (scores[y] > scores[best]) {
      best = y;
      unique = true;
    } else if (scores[y] == scores[best]) {
      unique = false;
    }
  }
  return unique && contains(truth, best);
}

} // namespace

WeightDistribution init_weights(std::size_t n, std::size_t L) {
  if (n == 0) throw Error("weights need at least one example");
  if (L < 2) throw Error("weights need at least two labels");
  return WeightDistribution(n, L, 1.0 / (static_cast<double>(n) * static_cast<double>(L)));
}

std::pair<Id, Id> sample_reference_pair(const Dataset& ds, const WeightDistribution& w,
                                        std::mt19937_64& rng) {
  if (ds.size() != w.n()) throw Error("weights do not match dataset");
  std::vector<double> mass(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) mass[i] = w.marginal(i);
  auto j = draw(mass, [](Id) { return true; }, rng);
  if (!j) throw Error("weight distribution has no mass");
  auto yj = ds.truth(*j);
  auto k = draw(mass, [&](Id i) { return ds.truth(i) != yj; }, rng);
  if (!k) throw Error("no example with a different label: single-class dataset");
  return {*j, *k};
}

double update_weights(WeightDistribution& w, const TripletClassifier& h,
                      std::span<const Firing> fired, const Dataset& ds) {
  if (!std::isfinite(h.alpha)) throw Error("classifier weight is not finite");
  if (h.alpha == 0.0 || fired.empty()) return 1.0;
  auto right = std::exp(-h.alpha), wrong = std::exp(h.alpha);
  auto L = w.num_labels();
  for (const auto& f : fired) {
    auto predicted = h.predict(f.forward);
    auto truth = ds.truth(f.example);
    auto r = w.row(f.example);
    for (std::size_t y = 0; y < L; ++y)
      r[y] *= contains(truth, y) == contains(predicted, y) ? right : wrong;
  }
  auto z = w.total();
  if (!(z > 0) || !std::isfinite(z)) throw Error("weight normalizer is not positive");
  for (double& v : w.values()) v /= z;
  return z;
}

double update_weights(WeightDistribution& w, const TripletClassifier& h, const TripletStore& ts,
                      const Dataset& ds) {
  return update_weights(w, h, firings(ts, h.j, h.k), ds);
}

double StrongModel::alpha_sum() const {
  double s = 0;
  for (const auto& c : classifiers) s += c.alpha;
  return s;
}

StrongModel train(const Dataset& ds, const TripletStore& ts, const BoostConfig& cfg) {
  if (cfg.rounds < 1) throw Error("number of rounds must be at least 1");
  if (ds.size() != ts.n())
    throw Error("triplet store covers " + std::to_string(ts.n()) + " examples, dataset has " +
                std::to_string(ds.size()));
  if (ds.num_labels() < 2 || !has_two_truth_sets(ds))
    throw Error("training needs at least two classes");

  auto n = ds.size(), L = ds.num_labels();
  auto w = init_weights(n, L);
  std::mt19937_64 rng(cfg.seed);
  PairIndex index(ts);

  StrongModel model;
  model.labels = ds.labels();
  model.n_train = n;
  model.round_stats.reserve(cfg.rounds);

  std::vector<double> scores(n * L, 0.0);
  std::vector<Firing> fired;
  double log_z = 0;
  for (std::size_t c = 1; c <= cfg.rounds; ++c) {
    auto [j, k] = sample_reference_pair(ds, w, rng);
    index.firings(j, k, fired);
    TripletClassifier h{j, k, 0, 0, 0.0};
    std::tie(h.oj, h.ok) = select_labels(fired, ds, w);
    auto [wp, wm] = round_weights(h, fired, ds, w);
    h.alpha = classifier_alpha(wp, wm, n);
    auto z = update_weights(w, h, fired, ds);
    log_z += std::log(z);
    model.round_stats.push_back({j, k, wp, wm, z, h.alpha});
    model.rounds_run = c;

    if (h.alpha != 0.0 || cfg.keep_zero_alpha) {
      model.classifiers.push_back(h);
      for (const auto& f : fired) {
        auto set = h.predict(f.forward);
        for (std::size_t y = 0; y < L; ++y)
          if (contains(set, y)) scores[f.example * L + y] += h.alpha;
      }
    }

    if (cfg.on_checkpoint && cfg.stats_every > 0 && (c % cfg.stats_every == 0 || c == cfg.rounds)) {
      std::size_t errors = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (!correct(std::span<const double>(scores).subspan(i * L, L), ds.truth(i))) ++errors;
      cfg.on_checkpoint({c, static_cast<double>(errors) / static_cast<double>(n),
                         static_cast<double>(L) / 2.0 * std::exp(log_z)});
    }
  }
  return model;
}

namespace {

std::string hex(LabelMask m) {
  char buf[17];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, m, 16);
  return std::string(buf, ptr);
}

} // namespace

void write_model(std::ostream& out, const StrongModel& model) {
  out << "tripletboost-model v1 L=" << model.num_labels() << " n=" << model.n_train
      << " C=" << model.rounds_run << '\n';
  for (std::size_t y = 0; y < model.num_labels(); ++y) {
    const auto& name = model.labels.name(y);
    if (name.find_first_of("\t\n\r") != std::string::npos)
      throw Error("label names may not contain tabs or line breaks");
    out << (y ? "\t" : "") << name;
  }
  out << '\n';
  for (const auto& c : model.classifiers)
    out << c.j << ' ' << c.k << ' ' << text::format_double(c.alpha) << ' ' << hex(c.oj) << ' '
        << hex(c.ok) << '\n';
}

StrongModel read_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("missing model header");
  auto toks = text::tokens(line);
  if (toks.empty() || toks[0] != "tripletboost-model") throw Error("not a model file");
  if (toks.size() < 2 || toks[1] != "v1")
    throw Error("unsupported model version '" + std::string(toks.size() > 1 ? toks[1] : "") +
                "'");
  auto field = [&](std::size_t pos, std::string_view key) -> std::size_t {
    if (toks.size() != 5) throw Error("malformed model header");
    auto kv = text::key_value(toks[pos]);
    std::optional<std::size_t> v;
    if (kv && kv->first == key) v = text::parse_uint<std::size_t>(kv->second);
    if (!v) throw Error("malformed model header");
    return *v;
  };
  auto L = field(2, "L"), n = field(3, "n"), rounds = field(4, "C");

  StrongModel model;
  model.n_train = n;
  model.rounds_run = rounds;
  if (!std::getline(in, line)) throw Error("missing label line");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> names;
  for (auto name : text::split(line, '\t')) names.emplace_back(name);
  if (names.size() != L) throw Error("label line does not match L=" + std::to_string(L));
  model.labels = LabelDict(std::move(names));
  if (L > max_labels) throw Error("more than 64 labels");

  auto valid = all_labels(L);
  std::size_t row = 2;
  while (std::getline(in, line)) {
    ++row;
    auto t = text::tokens(line);
    if (t.empty()) continue;
    auto where = " at line " + std::to_string(row);
    if (t.size() != 5) throw Error("malformed classifier" + where);
    auto j = text::parse_uint<Id>(t[0]), k = text::parse_uint<Id>(t[1]);
    auto alpha = text::parse_double(t[2]);
    auto oj = text::parse_uint<LabelMask>(t[3], 16), ok = text::parse_uint<LabelMask>(t[4], 16);
    if (!j || !k || !alpha || !oj || !ok || !std::isfinite(*alpha))
      throw Error("malformed classifier" + where);
    if (*j >= n || *k >= n || *j == *k) throw Error("reference pair out of range" + where);
    if ((*oj & ~valid) || (*ok & ~valid)) throw Error("label set out of range" + where);
    model.classifiers.push_back({*j, *k, *oj, *ok, *alpha});
  }
  if (model.classifiers.size() > rounds) throw Error("more classifiers than rounds run");
  return model;
}

void save_model(const std::string& path, const StrongModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  write_model(out, model);
}

StrongModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_model(in);
}

void write_round_stats(std::ostream& out, const StrongModel& model) {
  out << "round,j,k,w_plus,w_minus,z,alpha\n";
  for (std::size_t c = 0; c < model.round_stats.size(); ++c) {
    const auto& s = model.round_stats[c];
    out << c + 1 << ',' << s.j << ',' << s.k << ',' << text::format_double(s.w_plus) << ','
        << text::format_double(s.w_minus) << ',' << text::format_double(s.z) << ','
        << text::format_double(s.alpha) << '\n';
  }
}

std::vector<RoundStats> read_round_stats(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || text::trim(line) != "round,j,k,w_plus,w_minus,z,alpha")
    throw Error("not a round statistics file");
  std::vector<RoundStats> stats;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (text::trim(line).empty()) continue;
    auto f = text::split(text::trim(line), ',');
    auto where = " at line " + std::to_string(row);
    if (f.size() != 7) throw Error("malformed round statistics" + where);
    auto j = text::parse_uint<Id>(f[1]), k = text::parse_uint<Id>(f[2]);
    auto wp = text::parse_double(f[3]), wm = text::parse_double(f[4]);
    auto z = text::parse_double(f[5]), alpha = text::parse_double(f[6]);
    if (!j || !k || !wp || !wm || !z || !alpha) throw Error("malformed round statistics" + where);
    stats.push_back({*j, *k, *wp, *wm, *z, *alpha});
  }
  return stats;
}

} // namespace tboost
