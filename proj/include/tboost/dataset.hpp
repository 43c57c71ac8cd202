/// @file  dataset.hpp
/// @brief Labeled examples, the label dictionary, CSV I/O and splits.

#pragma once

#include <tboost/common.hpp>

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tboost {

/// Dense label ids 0..L-1 assigned in first-occurrence order.
class LabelDict {
public:
  LabelDict() = default;
  explicit LabelDict(std::vector<std::string> names);

  /// Returns the id of `name`, inserting it if absent.
  std::size_t intern(std::string_view name);
  std::optional<std::size_t> find(std::string_view name) const;

  const std::string& name(std::size_t id) const { return names_.at(id); }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }

  bool operator==(const LabelDict& other) const { return names_ == other.names_; }

private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// A set of labeled examples. Feature vectors are optional; the learner only
/// ever looks at labels, the triplet generators look at features.
///
/// Each example has a primary label and a truth set. For single-label data
/// the truth set is exactly {primary}; multi-label rows ("a|b") keep the
/// first listed label as primary.
class Dataset {
public:
  Dataset() = default;
  Dataset(LabelDict dict, std::vector<std::size_t> labels,
          std::vector<LabelMask> truth = {}, std::vector<double> features = {},
          std::size_t dim = 0);

  std::size_t size() const { return labels_.size(); }
  std::size_t num_labels() const { return dict_.size(); }
  const LabelDict& labels() const { return dict_; }

  std::size_t label(std::size_t i) const { return labels_[i]; }
  LabelMask truth(std::size_t i) const { return truth_[i]; }
  const std::vector<std::size_t>& label_ids() const { return labels_; }
  bool is_multilabel() const;

  bool has_features() const { return dim_ > 0; }
  std::size_t dim() const { return dim_; }
  std::span<const double> features(std::size_t i) const {
    return {features_.data() + i * dim_, dim_};
  }

  /// Examples `ids` in the given order, same label dictionary.
  Dataset subset(std::span<const std::size_t> ids) const;

  bool operator==(const Dataset& other) const = default;

private:
  LabelDict dict_;
  std::vector<std::size_t> labels_;
  std::vector<LabelMask> truth_;
  std::vector<double> features_;
  std::size_t dim_ = 0;
};

/// Parses "label,f1,...,fD" rows. Label-only rows give a feature-free
/// dataset. Passing a dictionary maps labels through it; unknown labels are
/// then an error unless `extend_dict` is set.
Dataset read_csv(std::istream& in, bool has_header, LabelDict dict = {},
                 bool extend_dict = true);
Dataset load_csv(const std::string& path, bool has_header, LabelDict dict = {},
                 bool extend_dict = true);

void write_csv(std::ostream& out, const Dataset& ds);
void save_csv(const std::string& path, const Dataset& ds);

struct Split {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_ids;  ///< indices into the source dataset
  std::vector<std::size_t> test_ids;
};

/// Uniform (unstratified) split with ceil(n * test_fraction) test examples.
/// Both parts keep source order.
Split split(const Dataset& ds, double test_fraction, std::uint64_t seed);

/// Two interleaved half circles with isotropic Gaussian feature noise,
/// labels "0" (outer) and "1" (inner), shuffled.
Dataset make_moons(std::size_t n, double noise, std::uint64_t seed);

} // namespace tboost
