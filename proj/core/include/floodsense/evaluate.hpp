#pragma once

// Scoring declared counties against recorded flood events: per-day
// precision/recall, F-beta, the (r, alpha, T, mode) sweep and the daily
// volume correlation.

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "floodsense/corpus.hpp"
#include "floodsense/detect.hpp"
#include "floodsense/gazetteer.hpp"
#include "floodsense/geojson.hpp"

namespace floodsense::evaluate {

class EvaluateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Severity { Minor = 1, Significant = 2, Severe = 3 };

std::string_view to_string(Severity s);
/// minor, significant (alias: major), severe, or 1/2/3.
std::optional<Severity> parse_severity(std::string_view s);

struct SeverityFactors {
  double minor = 1.0;
  double significant = 2.0;
  double severe = 3.0;

  double of(Severity s) const;
};

struct EventRecord {
  Day date{};
  std::string county;
  Severity severity = Severity::Minor;

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

/// Casefolded, punctuation removed, whitespace collapsed.
std::string normalize_county(std::string_view name);

/// Canonical county names plus aliases, matched after normalize_county.
class RegionRegistry {
 public:
  RegionRegistry() = default;
  explicit RegionRegistry(std::span<const std::string> names);
  static RegionRegistry from_regions(std::span<const Region> regions);

  /// Throws EvaluateError when the canonical name is unknown.
  void add_alias(std::string_view alias, std::string_view canonical);
  /// "alias,canonical" lines; '#' comments and a header line are allowed.
  void load_aliases(std::istream& in);
  void load_aliases(const std::filesystem::path& path);

  std::optional<std::string> resolve(std::string_view name) const;
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::map<std::string, std::string> lookup_;
};

/// CSV with header date,county,severity. Throws EvaluateError naming the
/// offending line.
std::vector<EventRecord> parse_truth(std::istream& in);
std::vector<EventRecord> load_truth(const std::filesystem::path& path);

struct DayMetrics {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  bool precision_undefined = false;  // nothing declared; precision reported as 0
  bool recall_undefined = false;     // nothing recorded; recall reported as 0
};

/// Unknown county names (in declarations or truth) raise EvaluateError
/// listing all of them.
DayMetrics day_metrics(std::span<const detect::CountyDeclaration> declarations,
                       std::span<const EventRecord> truth, const RegionRegistry& registry);

/// (1 + b^2) P R / (b^2 P + R); 0 when P = R = 0.
double f_beta(double precision, double recall, double beta);

struct ParamGrid {
  std::vector<double> r{1.0};
  std::vector<double> alpha{0.15};
  std::vector<double> threshold{0.1};
  std::vector<detect::FloodinessMode> modes{detect::FloodinessMode::Relative};

  std::size_t size() const { return r.size() * alpha.size() * threshold.size() * modes.size(); }
  /// Sorts and deduplicates every axis; throws EvaluateError when any axis
  /// is empty or holds an invalid value.
  void normalize();
};

struct SweepDay {
  Day date{};
  std::vector<Message> messages;  // already filtered
  std::vector<EventRecord> truth;
};

struct SweepRow {
  double r = 0.0;
  double alpha = 0.0;
  double threshold = 0.0;
  detect::FloodinessMode mode = detect::FloodinessMode::Relative;
  double avg_precision = 0.0;
  double avg_recall = 0.0;
  std::vector<double> f;  // one per beta
  std::size_t undefined_precision_days = 0;
};

struct SweepResult {
  std::vector<double> betas;
  std::vector<SweepRow> rows;  // r, alpha, T, mode order
  std::vector<std::size_t> argmax;  // row index per beta, first maximum wins
  std::size_t days = 0;

  /// r,alpha,T,mode,avg_precision,avg_recall,F<beta>...
  std::string to_csv() const;
  std::string summary_json() const;
};

struct SweepSetup {
  detect::GridSpec grid;
  detect::PopulationRaster population;
  std::vector<Region> counties;
  gazetteer::ResolveOptions resolve;
  std::optional<double> reference_max;
  unsigned threads = 1;
};

/// Days are processed in date order, so the result does not depend on the
/// order they are given in. Every day needs at least one truth record.
SweepResult sweep(std::span<const SweepDay> days, const gazetteer::Backend& backend, const SweepSetup& setup,
                  const RegionRegistry& registry, ParamGrid params, std::vector<double> betas = {1.0, 2.0});

/// Sample Pearson correlation. Throws EvaluateError for fewer than two
/// points, mismatched lengths or zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

std::map<Day, std::size_t> daily_counts(std::span<const Message> messages);

/// Sum over recorded counties of population x severity factor, per day.
/// County populations are keyed by canonical name.
std::map<Day, double> daily_event_scores(std::span<const EventRecord> truth,
                                         const std::map<std::string, double>& population,
                                         const RegionRegistry& registry, const SeverityFactors& factors = {});

struct Correlation {
  double r = 0.0;
  std::size_t days = 0;
};

/// Pearson r between message counts and event scores over the days present
/// in counts; days without records score 0.
Correlation daily_correlation(const std::map<Day, std::size_t>& counts, std::span<const EventRecord> truth,
                              const std::map<std::string, double>& population, const RegionRegistry& registry,
                              const SeverityFactors& factors = {});

}  // namespace floodsense::evaluate
