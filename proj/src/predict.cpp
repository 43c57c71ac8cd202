#include <tboost/predict.hpp>
#include <tboost/text.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace tboost {

namespace {

void check_pair(const Triplet& t, std::size_t n_train) {
  if (t.near >= n_train || t.far >= n_train)
    throw Error("pair id out of range: (" + std::to_string(t.near) + ", " +
                std::to_string(t.far) + ") with " + std::to_string(n_train) +
                " training examples");
  if (t.near == t.far) throw Error("pair with identical reference points");
}

void fire(Prediction& p, const TripletClassifier& c, bool forward) {
  auto set = c.predict(forward);
  for (std::size_t y = 0; y < p.scores.size(); ++y)
    if (contains(set, y)) p.scores[y] += c.alpha;
  p.fired_alpha += c.alpha;
  ++p.matched;
}

void finish(Prediction& p) {
  if (p.matched == 0) return;
  p.label = static_cast<std::size_t>(
      std::max_element(p.scores.begin(), p.scores.end()) - p.scores.begin());
}

} // namespace

Scorer::Scorer(const StrongModel& model) : model_(&model) {
  if (model.classifiers.size() > std::numeric_limits<std::uint32_t>::max())
    throw Error("too many classifiers");
  keys_.reserve(model.classifiers.size());
  for (std::uint32_t c = 0; c < model.classifiers.size(); ++c) {
    const auto& h = model.classifiers[c];
    keys_.push_back({std::min(h.j, h.k), std::max(h.j, h.k), c});
  }
  std::sort(keys_.begin(), keys_.end(), [](const Key& a, const Key& b) {
    if (a.lo != b.lo) return a.lo < b.lo;
    if (a.hi != b.hi) return a.hi < b.hi;
    return a.index < b.index;
  });
}

Prediction Scorer::score(std::span<const Triplet> tx) const {
  const auto& model = *model_;
  struct Hit {
    std::uint32_t index;
    bool forward;
  };
  std::vector<Hit> hits;
  for (const auto& t : tx) {
    check_pair(t, model.n_train);
    std::pair key{t.lo(), t.hi()};
    auto it = std::lower_bound(keys_.begin(), keys_.end(), key, [](const Key& k, auto v) {
      return k.lo != v.first ? k.lo < v.first : k.hi < v.second;
    });
    for (; it != keys_.end() && it->lo == key.first && it->hi == key.second; ++it)
      hits.push_back({it->index, model.classifiers[it->index].j == t.near});
  }
  std::sort(hits.begin(), hits.end(), [](Hit a, Hit b) { return a.index < b.index; });

  Prediction p;
  p.scores.assign(model.num_labels(), 0.0);
  for (std::size_t h = 0; h < hits.size(); ++h) {
    if (h > 0 && hits[h].index == hits[h - 1].index)
      throw Error("reference pair listed twice for one example");
    fire(p, model.classifiers[hits[h].index], hits[h].forward);
  }
  finish(p);
  return p;
}

Prediction score(const StrongModel& model, std::span<const Triplet> tx) {
  return Scorer(model).score(tx);
}

Prediction score_naive(const StrongModel& model, std::span<const Triplet> tx) {
  for (const auto& t : tx) check_pair(t, model.n_train);
  Prediction p;
  p.scores.assign(model.num_labels(), 0.0);
  for (const auto& c : model.classifiers) {
    for (const auto& t : tx) {
      if (t.near == c.j && t.far == c.k) {
        fire(p, c, true);
        break;
      }
      if (t.near == c.k && t.far == c.j) {
        fire(p, c, false);
        break;
      }
    }
  }
  finish(p);
  return p;
}

std::vector<double> multilabel_scores(const StrongModel& model, std::span<const Triplet> tx) {
  return score(model, tx).scores;
}

TiePolicy parse_policy(std::string_view name) {
  if (name == "random") return TiePolicy::random;
  if (name == "fixed_lowest") return TiePolicy::fixed_lowest;
  throw Error("unknown tie policy '" + std::string(name) + "'");
}

std::size_t resolve(const Prediction& p, TiePolicy policy, std::mt19937_64& rng) {
  auto L = p.scores.size();
  if (L == 0) throw Error("prediction without labels");
  std::vector<std::size_t> candidates;
  if (p.abstained()) {
    candidates.resize(L);
    std::iota(candidates.begin(), candidates.end(), std::size_t{0});
  } else {
    auto top = *std::max_element(p.scores.begin(), p.scores.end());
    for (std::size_t y = 0; y < L; ++y)
      if (p.scores[y] == top) candidates.push_back(y);
  }
  if (policy == TiePolicy::fixed_lowest || candidates.size() == 1) return candidates.front();
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  return candidates[pick(rng)];
}

std::vector<std::size_t> rank_labels(std::span<const double> scores, TiePolicy policy,
                                     std::mt19937_64& rng) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (policy == TiePolicy::random) std::shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

std::vector<double> signed_votes(const Prediction& p) {
  std::vector<double> f(p.scores.size());
  for (std::size_t y = 0; y < f.size(); ++y) f[y] = 2.0 * p.scores[y] - p.fired_alpha;
  return f;
}

std::vector<Prediction> training_predictions(const StrongModel& model, const TripletStore& ts) {
  if (ts.n() != model.n_train) throw Error("triplet store does not match the model");
  Scorer scorer(model);
  std::vector<Prediction> out;
  out.reserve(ts.n());
  for (std::size_t i = 0; i < ts.n(); ++i) out.push_back(scorer.score(ts.anchored(i)));
  return out;
}

double training_error(const StrongModel& model, const Dataset& ds, const TripletStore& ts) {
  if (ds.size() != ts.n()) throw Error("dataset does not match triplet store");
  auto preds = training_predictions(model, ts);
  std::size_t errors = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& s = preds[i].scores;
    auto top = std::max_element(s.begin(), s.end());
    bool unique = std::count(s.begin(), s.end(), *top) == 1;
    if (!unique || !contains(ds.truth(i), static_cast<std::size_t>(top - s.begin()))) ++errors;
  }
  return static_cast<double>(errors) / static_cast<double>(ds.size());
}

EvalReport evaluate(const StrongModel& model, const TestTripletSet& tests, const Dataset& truth,
                    const EvalOptions& opt, std::vector<std::size_t>* resolved) {
  if (tests.n_train() != model.n_train)
    throw Error("test triplets reference " + std::to_string(tests.n_train()) +
                " training examples, model has " + std::to_string(model.n_train));
  if (truth.size() != tests.n_test())
    throw Error("label file has " + std::to_string(truth.size()) + " examples, test triplets " +
                std::to_string(tests.n_test()));
  if (!(truth.labels() == model.labels)) throw Error("label dictionary differs from the model");
  if (truth.size() == 0) throw Error("no test examples");

  auto L = model.num_labels();
  EvalReport r;
  r.n = truth.size();
  r.k = opt.k;
  std::vector<std::size_t> hits(L, 0), counts(L, 0);
  std::size_t correct = 0, abstained = 0;
  double precision = 0, recall = 0;
  std::mt19937_64 rng(opt.seed);
  Scorer scorer(model);
  if (resolved) resolved->clear();
  for (std::size_t x = 0; x < truth.size(); ++x) {
    auto p = scorer.score(tests.of(x));
    auto y = resolve(p, opt.policy, rng);
    if (resolved) resolved->push_back(y);
    abstained += p.abstained();
    ++counts[truth.label(x)];
    if (y == truth.label(x)) {
      ++correct;
      ++hits[y];
    }
    auto ranking = rank_labels(p.scores, opt.policy, rng);
    auto set = truth.truth(x);
    precision += contains(set, ranking.front());
    std::size_t found = 0;
    for (std::size_t t = 0; t < std::min(r.k, L); ++t) found += contains(set, ranking[t]);
    recall += static_cast<double>(found) / static_cast<double>(std::popcount(set));
  }
  auto n = static_cast<double>(r.n);
  r.accuracy = static_cast<double>(correct) / n;
  r.abstention_rate = static_cast<double>(abstained) / n;
  r.precision_at_1 = precision / n;
  r.recall_at_k = recall / n;
  r.per_class_accuracy.resize(L);
  for (std::size_t y = 0; y < L; ++y)
    r.per_class_accuracy[y] = counts[y] ? static_cast<double>(hits[y]) / counts[y] : std::nan("");
  return r;
}

void write_report(std::ostream& out, const EvalReport& r, const LabelDict& labels) {
  auto num = [](double v) { return std::isnan(v) ? std::string("nan") : text::format_double(v); };
  out << "n=" << r.n << '\n'
      << "accuracy=" << num(r.accuracy) << '\n'
      << "abstention_rate=" << num(r.abstention_rate) << '\n'
      << "precision_at_1=" << num(r.precision_at_1) << '\n'
      << "recall_at_" << r.k << '=' << num(r.recall_at_k) << '\n';
  for (std::size_t y = 0; y < r.per_class_accuracy.size(); ++y)
    out << "accuracy[" << labels.name(y) << "]=" << num(r.per_class_accuracy[y]) << '\n';
}

std::string report_json(const EvalReport& r, const LabelDict& labels) {
  nlohmann::json per_class = nlohmann::json::object();
  for (std::size_t y = 0; y < r.per_class_accuracy.size(); ++y) {
    auto v = r.per_class_accuracy[y];
    per_class[labels.name(y)] = std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v);
  }
  nlohmann::json j = {{"n", r.n},
                      {"accuracy", r.accuracy},
                      {"abstention_rate", r.abstention_rate},
                      {"precision_at_1", r.precision_at_1},
                      {"recall_at_k", r.recall_at_k},
                      {"k", r.k},
                      {"per_class_accuracy", per_class}};
  return j.dump();
}

void write_predictions(std::ostream& out, const StrongModel& model, const TestTripletSet& tests,
                       TiePolicy policy, std::uint64_t seed) {
  if (tests.n_train() != model.n_train) throw Error("test triplets do not match the model");
  auto L = model.num_labels();
  out << "example_id,label,abstained";
  for (std::size_t y = 0; y < L; ++y) out << ",score_" << y;
  out << '\n';
  std::mt19937_64 rng(seed);
  Scorer scorer(model);
  for (std::size_t x = 0; x < tests.n_test(); ++x) {
    auto p = scorer.score(tests.of(x));
    auto y = resolve(p, policy, rng);
    out << x << ',' << model.labels.name(y) << ',' << (p.abstained() ? 1 : 0);
    for (double s : p.scores) out << ',' << text::format_double(s);
    out << '\n';
  }
}

} // namespace tboost
