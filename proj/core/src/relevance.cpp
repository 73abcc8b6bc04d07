#include "floodsense/relevance.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "floodsense/text.hpp"

namespace floodsense::relevance {
namespace {

constexpr std::string_view kMagic = "floodsense-nb";
constexpr int kFormatVersion = 1;

// Strips punctuation code points from the ends of a token. A leading '@' or
// '#' survives so mentions and hashtags can be recognised afterwards.
std::string_view strip_punct(std::string_view t, bool keep_marker) {
  while (!t.empty()) {
    std::size_t start = t.size() - 1;
    while (start > 0 && (static_cast<unsigned char>(t[start]) & 0xC0) == 0x80) --start;
    if (!text::is_punct(text::decode_utf8(t, start).code_point)) break;
    t = t.substr(0, start);
  }
  while (!t.empty()) {
    if (keep_marker && (t[0] == '@' || t[0] == '#')) break;
    const auto d = text::decode_utf8(t, 0);
    if (!text::is_punct(d.code_point)) break;
    t = t.substr(d.length);
  }
  return t;
}

std::string hex(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::hex);
  return std::string(buf, ptr);
}

double unhex(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::hex);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw RelevanceError("model file: bad number '" + std::string(s) + "'");
  }
  return v;
}

template <typename Fn>
void for_each_feature(const std::vector<std::string>& tokens, std::string& scratch, Fn&& fn) {
  for (const auto& t : tokens) fn(std::string_view(t));
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    scratch.assign(tokens[i - 1]);
    scratch.push_back(' ');
    scratch.append(tokens[i]);
    fn(std::string_view(scratch));
  }
}

constexpr std::size_t idx(Label l) { return static_cast<std::size_t>(l); }

}  // namespace

std::string_view to_string(Label label) { return label == Label::Immediate ? "Immediate" : "Other"; }

std::optional<Label> parse_label(std::string_view s) {
  const auto lower = text::ascii_lower(text::trim(s));
  if (lower == "immediate" || lower == "1") return Label::Immediate;
  if (lower == "other" || lower == "0") return Label::Other;
  return std::nullopt;
}

std::vector<std::string> tokenize(std::string_view input) {
  std::vector<std::string> out;
  for (std::string_view raw : text::split_whitespace(input)) {
    std::string lower = text::ascii_lower(raw);
    std::string_view t = lower;
    if (t.starts_with("http://") || t.starts_with("https://") || t.starts_with("www.")) {
      out.emplace_back("<url>");
      continue;
    }
    t = strip_punct(t, true);
    if (t.empty()) continue;
    if (t[0] == '@') {
      if (!strip_punct(t.substr(1), false).empty()) out.emplace_back("<mention>");
      continue;
    }
    if (t[0] == '#') {
      while (!t.empty() && t[0] == '#') t.remove_prefix(1);
      t = strip_punct(t, false);
      if (t.empty()) continue;
    }
    out.emplace_back(t);
  }
  return out;
}

FeatureBag vectorize(std::string_view input) {
  FeatureBag bag;
  std::string scratch;
  for_each_feature(tokenize(input), scratch, [&](std::string_view f) { ++bag[std::string(f)]; });
  return bag;
}

NBModel NBModel::train(std::span<const LabeledExample> examples, double smoothing) {
  if (!(smoothing > 0.0) || !std::isfinite(smoothing)) {
    throw RelevanceError("smoothing parameter must be positive and finite");
  }
  std::array<std::size_t, 2> docs{};
  std::map<std::string, std::array<double, 2>> counts;
  std::string scratch;
  for (const auto& ex : examples) {
    ++docs[idx(ex.label)];
    for_each_feature(tokenize(ex.text), scratch,
                     [&](std::string_view f) { counts[std::string(f)][idx(ex.label)] += 1.0; });
  }
  if (docs[0] == 0 || docs[1] == 0) {
    throw RelevanceError("training data must contain both Immediate and Other examples");
  }

  NBModel m;
  m.smoothing_ = smoothing;
  const double n_docs = static_cast<double>(docs[0] + docs[1]);
  for (std::size_t c = 0; c < 2; ++c) m.log_prior_[c] = std::log(static_cast<double>(docs[c]) / n_docs);

  const double vocab = static_cast<double>(counts.size());
  std::array<double, 2> totals{};
  for (const auto& [f, cc] : counts) {
    totals[0] += cc[0];
    totals[1] += cc[1];
  }
  m.features_.reserve(counts.size());
  for (auto& ll : m.log_likelihood_) ll.reserve(counts.size());
  for (const auto& [f, cc] : counts) {
    m.features_.push_back(f);
    for (std::size_t c = 0; c < 2; ++c) {
      m.log_likelihood_[c].push_back(std::log((cc[c] + smoothing) / (totals[c] + smoothing * vocab)));
    }
  }
  m.build_index();
  return m;
}

void NBModel::build_index() {
  index_.clear();
  index_.reserve(features_.size());
  for (std::size_t i = 0; i < features_.size(); ++i) index_.emplace(features_[i], static_cast<std::uint32_t>(i));
}

std::optional<std::size_t> NBModel::feature_index(std::string_view feature) const {
  const auto it = index_.find(feature);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::array<double, 2> NBModel::joint_log_likelihood(std::string_view input) const {
  std::array<double, 2> score = log_prior_;
  std::string scratch;
  for_each_feature(tokenize(input), scratch, [&](std::string_view f) {
    const auto it = index_.find(f);
    if (it == index_.end()) return;
    score[0] += log_likelihood_[0][it->second];
    score[1] += log_likelihood_[1][it->second];
  });
  return score;
}

Prediction NBModel::predict(std::string_view input) const {
  const auto joint = joint_log_likelihood(input);
  Prediction p;
  const double diff = joint[1] - joint[0];
  p.label = diff > 0.0 ? Label::Immediate : Label::Other;
  p.margin = std::abs(diff);
  const double hi = std::max(joint[0], joint[1]);
  const double norm = hi + std::log(std::exp(joint[0] - hi) + std::exp(joint[1] - hi));
  p.log_posterior = {joint[0] - norm, joint[1] - norm};
  return p;
}

void NBModel::save(std::ostream& out) const {
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "smoothing " << hex(smoothing_) << '\n';
  out << "prior Other " << hex(log_prior_[0]) << '\n';
  out << "prior Immediate " << hex(log_prior_[1]) << '\n';
  out << "features " << features_.size() << '\n';
  for (std::size_t i = 0; i < features_.size(); ++i) {
    out << features_[i] << '\t' << hex(log_likelihood_[0][i]) << '\t' << hex(log_likelihood_[1][i]) << '\n';
  }
}

NBModel NBModel::load(std::istream& in) {
  auto fail = [](const std::string& what) -> RelevanceError { return RelevanceError("model file: " + what); };
  std::string line;
  auto next = [&]() -> std::string {
    if (!std::getline(in, line)) throw fail("unexpected end of file");
    return line;
  };
  auto field = [&](std::string_view prefix) -> std::string {
    const std::string l = next();
    if (!std::string_view(l).starts_with(prefix)) throw fail("expected '" + std::string(prefix) + "'");
    return l.substr(prefix.size());
  };

  {
    std::istringstream header(next());
    std::string magic;
    int version = 0;
    if (!(header >> magic >> version) || magic != kMagic) throw fail("not a floodsense model");
    if (version != kFormatVersion) throw fail("unsupported version " + std::to_string(version));
  }
  NBModel m;
  m.smoothing_ = unhex(field("smoothing "));
  m.log_prior_[0] = unhex(field("prior Other "));
  m.log_prior_[1] = unhex(field("prior Immediate "));
  std::size_t n = 0;
  {
    const std::string count = field("features ");
    auto [ptr, ec] = std::from_chars(count.data(), count.data() + count.size(), n);
    if (ec != std::errc{} || ptr != count.data() + count.size()) throw fail("bad feature count");
  }
  m.features_.reserve(n);
  for (auto& ll : m.log_likelihood_) ll.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string l = next();
    const auto t1 = l.find('\t');
    const auto t2 = t1 == std::string::npos ? std::string::npos : l.find('\t', t1 + 1);
    if (t2 == std::string::npos) throw fail("malformed feature line " + std::to_string(i + 1));
    m.features_.push_back(l.substr(0, t1));
    m.log_likelihood_[0].push_back(unhex(std::string_view(l).substr(t1 + 1, t2 - t1 - 1)));
    m.log_likelihood_[1].push_back(unhex(std::string_view(l).substr(t2 + 1)));
  }
  m.build_index();
  if (m.index_.size() != n) throw fail("duplicate features");
  return m;
}

void NBModel::save_file(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RelevanceError("cannot write model " + path.string());
  save(out);
}

NBModel NBModel::load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RelevanceError("cannot open model " + path.string());
  return load(in);
}

void ConfusionMatrix::add(Label actual, Label predicted) {
  if (actual == Label::Immediate) {
    ++(predicted == Label::Immediate ? tp : fn);
  } else {
    ++(predicted == Label::Immediate ? fp : tn);
  }
}

double ConfusionMatrix::precision() const {
  return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double ConfusionMatrix::recall() const {
  return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double ConfusionMatrix::accuracy() const {
  return total() == 0 ? 0.0 : static_cast<double>(tp + tn) / static_cast<double>(total());
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
  tn += o.tn;
  fp += o.fp;
  fn += o.fn;
  tp += o.tp;
  return *this;
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::uint64_t bound = i;
    const std::uint64_t limit = std::mt19937_64::max() - (std::mt19937_64::max() % bound);
    std::uint64_t draw;
    do {
      draw = rng();
    } while (draw >= limit);
    std::swap(order[i - 1], order[draw % bound]);
  }
  return order;
}

namespace {

ConfusionMatrix score(const NBModel& model, std::span<const LabeledExample> examples,
                      std::span<const std::size_t> test) {
  ConfusionMatrix cm;
  for (std::size_t i : test) cm.add(examples[i].label, model.predict(examples[i].text).label);
  return cm;
}

std::vector<LabeledExample> gather(std::span<const LabeledExample> examples, std::span<const std::size_t> ids) {
  std::vector<LabeledExample> out;
  out.reserve(ids.size());
  for (std::size_t i : ids) out.push_back(examples[i]);
  return out;
}

}  // namespace

SplitEvaluation evaluate_split(std::span<const LabeledExample> examples, double train_fraction,
                               std::uint64_t seed, double smoothing) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw RelevanceError("train fraction must lie strictly between 0 and 1");
  }
  const auto order = shuffled_indices(examples.size(), seed);
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(examples.size())));
  if (n_train == 0 || n_train == examples.size()) throw RelevanceError("split leaves an empty train or test set");

  const std::span<const std::size_t> train_ids(order.data(), n_train);
  const std::span<const std::size_t> test_ids(order.data() + n_train, order.size() - n_train);
  const auto train_set = gather(examples, train_ids);
  NBModel model;
  try {
    model = NBModel::train(train_set, smoothing);
  } catch (const RelevanceError&) {
    throw RelevanceError("split leaves a class empty in the training set");
  }
  SplitEvaluation ev;
  ev.confusion = score(model, examples, test_ids);
  ev.accuracy = ev.confusion.accuracy();
  ev.train_size = n_train;
  ev.test_size = test_ids.size();
  return ev;
}

ConfusionMatrix cross_validate(std::span<const LabeledExample> examples, std::size_t k, std::uint64_t seed,
                               double smoothing) {
  if (k < 2) throw RelevanceError("cross validation needs k >= 2");
  if (k > examples.size()) throw RelevanceError("more folds than examples");
  const auto order = shuffled_indices(examples.size(), seed);
  const std::size_t n = examples.size();
  ConfusionMatrix total;
  for (std::size_t fold = 0; fold < k; ++fold) {
    const std::size_t lo = fold * n / k;
    const std::size_t hi = (fold + 1) * n / k;
    std::vector<std::size_t> train_ids;
    train_ids.reserve(n - (hi - lo));
    train_ids.insert(train_ids.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(lo));
    train_ids.insert(train_ids.end(), order.begin() + static_cast<std::ptrdiff_t>(hi), order.end());
    NBModel model;
    try {
      model = NBModel::train(gather(examples, train_ids), smoothing);
    } catch (const RelevanceError&) {
      throw RelevanceError("fold " + std::to_string(fold + 1) + " training set misses a class");
    }
    total += score(model, examples, std::span<const std::size_t>(order.data() + lo, hi - lo));
  }
  return total;
}

std::vector<LabeledExample> parse_training_corpus(std::istream& in) {
  std::vector<LabeledExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw RelevanceError("line " + std::to_string(line_no) + ": expected label<TAB>text");
    const auto label = parse_label(std::string_view(line).substr(0, tab));
    if (!label) throw RelevanceError("line " + std::to_string(line_no) + ": unknown label");
    std::string body = line.substr(tab + 1);
    if (text::trim(body).empty()) throw RelevanceError("line " + std::to_string(line_no) + ": empty text");
    out.push_back({std::move(body), *label});
  }
  return out;
}

std::vector<LabeledExample> load_training_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RelevanceError("cannot open training corpus " + path.string());
  return parse_training_corpus(in);
}

}  // namespace floodsense::relevance
