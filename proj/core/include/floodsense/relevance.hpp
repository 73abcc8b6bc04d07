#pragma once

// Multinomial naive Bayes relevance classifier (Immediate vs Other) over
// unigram and bigram counts, with split and k-fold evaluation.
//
// Tokenisation is frozen: ASCII-lowercase, split on Unicode whitespace,
// URLs -> "<url>", @mentions -> "<mention>", "#tag" -> "tag", and leading or
// trailing punctuation stripped. Bigrams join adjacent tokens with a single
// space, so they can never collide with a unigram.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace floodsense::relevance {

class RelevanceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Label : std::uint8_t { Other = 0, Immediate = 1 };

std::string_view to_string(Label label);
/// "Immediate"/"Other" in any case, or "1"/"0".
std::optional<Label> parse_label(std::string_view s);

struct LabeledExample {
  std::string text;
  Label label = Label::Other;
};

inline constexpr double kDefaultSmoothing = 0.5;

std::vector<std::string> tokenize(std::string_view text);

/// Unigrams and adjacent-token bigrams with their counts.
using FeatureBag = std::map<std::string, std::size_t>;
FeatureBag vectorize(std::string_view text);

struct Prediction {
  Label label = Label::Other;
  /// Winning minus losing joint log-likelihood; zero on a tie.
  double margin = 0.0;
  /// Normalised log P(class | text), indexed by Label.
  std::array<double, 2> log_posterior{};
};

class NBModel {
 public:
  /// Needs at least one example of each class and smoothing > 0.
  static NBModel train(std::span<const LabeledExample> examples, double smoothing = kDefaultSmoothing);

  double smoothing() const { return smoothing_; }
  std::size_t vocabulary_size() const { return features_.size(); }
  const std::vector<std::string>& features() const { return features_; }
  std::optional<std::size_t> feature_index(std::string_view feature) const;

  double class_log_prior(Label c) const { return log_prior_[static_cast<std::size_t>(c)]; }
  double feature_log_likelihood(Label c, std::size_t index) const {
    return log_likelihood_[static_cast<std::size_t>(c)][index];
  }

  /// log P(class) + sum over in-vocabulary features of count * log P(f | class).
  /// Out-of-vocabulary features are skipped.
  std::array<double, 2> joint_log_likelihood(std::string_view text) const;

  /// Ties go to Other.
  Prediction predict(std::string_view text) const;
  bool is_relevant(std::string_view text) const { return predict(text).label == Label::Immediate; }

  /// Versioned text format; doubles are written as hex floats so a
  /// save/load round trip is exact.
  void save(std::ostream& out) const;
  static NBModel load(std::istream& in);
  void save_file(const std::filesystem::path& path) const;
  static NBModel load_file(const std::filesystem::path& path);

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };

  void build_index();

  double smoothing_ = kDefaultSmoothing;
  std::vector<std::string> features_;
  std::unordered_map<std::string, std::uint32_t, Hash, std::equal_to<>> index_;
  std::array<double, 2> log_prior_{};
  std::array<std::vector<double>, 2> log_likelihood_;
};

/// Immediate is the positive class.
struct ConfusionMatrix {
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tp = 0;

  void add(Label actual, Label predicted);
  std::size_t total() const { return tn + fp + fn + tp; }
  double precision() const;
  double recall() const;
  double accuracy() const;
  ConfusionMatrix& operator+=(const ConfusionMatrix& o);

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Seeded Fisher-Yates permutation of 0..n-1 (mt19937_64, rejection
/// sampling), identical on every platform.
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

struct SplitEvaluation {
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
};

/// Shuffle, train on the first floor(train_fraction * n), test on the rest.
SplitEvaluation evaluate_split(std::span<const LabeledExample> examples, double train_fraction,
                               std::uint64_t seed, double smoothing = kDefaultSmoothing);

/// Sum of the per-fold confusion matrices of k contiguous folds over a
/// seeded shuffle. Throws when a training fold misses a class.
ConfusionMatrix cross_validate(std::span<const LabeledExample> examples, std::size_t k,
                               std::uint64_t seed, double smoothing = kDefaultSmoothing);

/// One "label<TAB>text" record per line; blank lines and lines starting with
/// '#' are ignored. Throws RelevanceError naming the offending line.
std::vector<LabeledExample> load_training_corpus(const std::filesystem::path& path);
std::vector<LabeledExample> parse_training_corpus(std::istream& in);

}  // namespace floodsense::relevance
