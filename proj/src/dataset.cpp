#include <tboost/dataset.hpp>
#include <tboost/text.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

namespace tboost {

LabelDict::LabelDict(std::vector<std::string> names) {
  for (auto& name : names) {
    if (find(name)) throw Error("duplicate label '" + name + "'");
    intern(name);
  }
}

std::size_t LabelDict::intern(std::string_view name) {
  if (auto id = find(name)) return *id;
  names_.emplace_back(name);
  index_.emplace(names_.back(), names_.size() - 1);
  return names_.size() - 1;
}

std::optional<std::size_t> LabelDict::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Dataset::Dataset(LabelDict dict, std::vector<std::size_t> labels,
                 std::vector<LabelMask> truth, std::vector<double> features,
                 std::size_t dim)
    : dict_(std::move(dict)), labels_(std::move(labels)), truth_(std::move(truth)),
      features_(std::move(features)), dim_(dim) {
  if (dict_.size() > max_labels)
    throw Error("at most " + std::to_string(max_labels) + " labels supported");
  if (truth_.empty()) {
    truth_.reserve(labels_.size());
    for (auto y : labels_) truth_.push_back(y < max_labels ? label_bit(y) : 0);
  }
  if (truth_.size() != labels_.size()) throw Error("truth sets do not match labels");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] >= dict_.size())
      throw Error("label id out of range at example " + std::to_string(i));
    if (!contains(truth_[i], labels_[i]) || (truth_[i] & ~all_labels(dict_.size())))
      throw Error("inconsistent truth set at example " + std::to_string(i));
  }
  if (dim_ == 0 && !features_.empty()) throw Error("features given without dimension");
  if (features_.size() != labels_.size() * dim_)
    throw Error("feature matrix does not match example count");
}

bool Dataset::is_multilabel() const {
  return std::any_of(truth_.begin(), truth_.end(),
                     [](LabelMask m) { return std::popcount(m) > 1; });
}

Dataset Dataset::subset(std::span<const std::size_t> ids) const {
  std::vector<std::size_t> labels;
  std::vector<LabelMask> truth;
  std::vector<double> feats;
  labels.reserve(ids.size());
  truth.reserve(ids.size());
  feats.reserve(ids.size() * dim_);
  for (auto i : ids) {
    if (i >= size()) throw Error("subset index out of range");
    labels.push_back(labels_[i]);
    truth.push_back(truth_[i]);
    auto f = this->features(i);
    feats.insert(feats.end(), f.begin(), f.end());
  }
  return Dataset(dict_, std::move(labels), std::move(truth), std::move(feats), dim_);
}

Dataset read_csv(std::istream& in, bool has_header, LabelDict dict, bool extend_dict) {
  std::vector<std::size_t> labels;
  std::vector<LabelMask> truth;
  std::vector<double> features;
  std::optional<std::size_t> dim;
  std::string line;
  std::size_t row = 0;
  if (has_header && std::getline(in, line)) ++row;
  while (std::getline(in, line)) {
    ++row;
    auto view = text::trim(line);
    if (view.empty()) continue;
    auto fields = text::split(view, ',');
    auto where = " at row " + std::to_string(row);

    std::size_t primary = 0;
    LabelMask mask = 0;
    auto names = text::split(fields[0], '|');
    for (std::size_t t = 0; t < names.size(); ++t) {
      auto name = text::trim(names[t]);
      if (name.empty()) throw Error("malformed row" + where + ": empty label");
      std::size_t id;
      if (extend_dict) {
        id = dict.intern(name);
      } else if (auto found = dict.find(name)) {
        id = *found;
      } else {
        throw Error("unknown label '" + std::string(name) + "'" + where);
      }
      if (id >= max_labels) throw Error("more than 64 labels" + where);
      if (t == 0) primary = id;
      mask |= label_bit(id);
    }

    auto d = fields.size() - 1;
    if (!dim) {
      dim = d;
    } else if (*dim != d) {
      throw Error("inconsistent dimension" + where);
    }
    for (std::size_t c = 1; c < fields.size(); ++c) {
      auto v = text::parse_double(fields[c]);
      if (!v) throw Error("malformed row" + where + ": bad number '" +
                          std::string(text::trim(fields[c])) + "'");
      features.push_back(*v);
    }
    labels.push_back(primary);
    truth.push_back(mask);
  }
  if (labels.empty()) throw Error("empty dataset");
  return Dataset(std::move(dict), std::move(labels), std::move(truth), std::move(features),
                 dim.value_or(0));
}

Dataset load_csv(const std::string& path, bool has_header, LabelDict dict, bool extend_dict) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_csv(in, has_header, std::move(dict), extend_dict);
}

void write_csv(std::ostream& out, const Dataset& ds) {
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << ds.labels().name(ds.label(i));
    for (std::size_t y = 0; y < ds.num_labels(); ++y)
      if (y != ds.label(i) && contains(ds.truth(i), y)) out << '|' << ds.labels().name(y);
    for (double v : ds.features(i)) out << ',' << text::format_double(v);
    out << '\n';
  }
}

void save_csv(const std::string& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  write_csv(out, ds);
}

Split split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction <= 1.0))
    throw Error("test fraction must lie in [0, 1]");
  auto n = ds.size();
  auto n_test = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * test_fraction - 1e-9));
  n_test = std::min(n_test, n);

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  Split s;
  s.test_ids.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  s.train_ids.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
  std::sort(s.test_ids.begin(), s.test_ids.end());
  std::sort(s.train_ids.begin(), s.train_ids.end());
  s.train = ds.subset(s.train_ids);
  s.test = ds.subset(s.test_ids);
  return s;
}

Dataset make_moons(std::size_t n, double noise, std::uint64_t seed) {
  if (n < 2) throw Error("moons needs at least two examples");
  auto n_outer = n / 2;
  auto n_inner = n - n_outer;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, noise);

  auto angle = [](std::size_t t, std::size_t count) {
    return count <= 1 ? 0.0
                      : std::numbers::pi * static_cast<double>(t) /
                            static_cast<double>(count - 1);
  };
  std::vector<std::pair<std::array<double, 2>, std::size_t>> points;
  for (std::size_t t = 0; t < n_outer; ++t) {
    auto a = angle(t, n_outer);
    points.push_back({{std::cos(a), std::sin(a)}, 0});
  }
  for (std::size_t t = 0; t < n_inner; ++t) {
    auto a = angle(t, n_inner);
    points.push_back({{1.0 - std::cos(a), 0.5 - std::sin(a)}, 1});
  }
  std::shuffle(points.begin(), points.end(), rng);

  LabelDict dict(std::vector<std::string>{"0", "1"});
  std::vector<std::size_t> labels;
  std::vector<double> features;
  for (auto& [xy, y] : points) {
    features.push_back(xy[0] + (noise > 0 ? gauss(rng) : 0.0));
    features.push_back(xy[1] + (noise > 0 ? gauss(rng) : 0.0));
    labels.push_back(y);
  }
  return Dataset(std::move(dict), std::move(labels), {}, std::move(features), 2);
}

} // namespace tboost
