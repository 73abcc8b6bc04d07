#include "floodsense/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <set>
#include <sstream>

#include "floodsense/parallel.hpp"
#include "floodsense/text.hpp"
#include "json_util.hpp"

namespace floodsense::evaluate {
namespace {

using detail::format_double;
using detail::json;
using text::ascii_lower;
using text::normalize_name;
using text::trim;

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::string(trim(field)));
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(std::string(trim(field)));
  return out;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::string beta_label(double beta) { return "F" + format_double(beta); }

}  // namespace

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::Minor: return "minor";
    case Severity::Significant: return "significant";
    case Severity::Severe: return "severe";
  }
  return "minor";
}

std::optional<Severity> parse_severity(std::string_view s) {
  const auto v = ascii_lower(trim(s));
  if (v == "minor" || v == "1") return Severity::Minor;
  if (v == "significant" || v == "major" || v == "2") return Severity::Significant;
  if (v == "severe" || v == "3") return Severity::Severe;
  return std::nullopt;
}

double SeverityFactors::of(Severity s) const {
  switch (s) {
    case Severity::Minor: return minor;
    case Severity::Significant: return significant;
    case Severity::Severe: return severe;
  }
  return minor;
}

std::string normalize_county(std::string_view name) { return normalize_name(name); }

RegionRegistry::RegionRegistry(std::span<const std::string> names) {
  for (const auto& n : names) {
    const auto key = normalize_county(n);
    if (key.empty()) throw EvaluateError("empty county name");
    if (!lookup_.emplace(key, n).second) throw EvaluateError("duplicate county name: " + n);
    names_.push_back(n);
  }
}

RegionRegistry RegionRegistry::from_regions(std::span<const Region> regions) {
  std::vector<std::string> names;
  for (const auto& r : regions) names.push_back(r.name);
  return RegionRegistry(names);
}

void RegionRegistry::add_alias(std::string_view alias, std::string_view canonical) {
  auto target = resolve(canonical);
  if (!target) throw EvaluateError("alias target is not a known county: " + std::string(canonical));
  const auto key = normalize_county(alias);
  auto [it, inserted] = lookup_.emplace(key, *target);
  if (!inserted && it->second != *target) {
    throw EvaluateError("alias " + std::string(alias) + " already refers to " + it->second);
  }
}

void RegionRegistry::load_aliases(std::istream& in) {
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    line = strip_cr(line);
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto f = split_csv(t);
    if (f.size() != 2) throw EvaluateError("alias line " + std::to_string(n) + ": expected alias,canonical");
    if (n == 1 && ascii_lower(f[0]) == "alias") continue;
    add_alias(f[0], f[1]);
  }
}

void RegionRegistry::load_aliases(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open alias file " + path.string());
  load_aliases(in);
}

std::optional<std::string> RegionRegistry::resolve(std::string_view name) const {
  auto it = lookup_.find(normalize_county(name));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::vector<EventRecord> parse_truth(std::istream& in) {
  std::vector<EventRecord> out;
  std::string line;
  std::size_t n = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++n;
    line = strip_cr(line);
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (!header) {
      if (f.size() != 3 || ascii_lower(f[0]) != "date" || ascii_lower(f[1]) != "county" ||
          ascii_lower(f[2]) != "severity") {
        throw EvaluateError("truth line " + std::to_string(n) + ": expected header date,county,severity");
      }
      header = true;
      continue;
    }
    const auto where = "truth line " + std::to_string(n) + ": ";
    if (f.size() != 3) throw EvaluateError(where + "expected 3 fields");
    auto day = parse_day(f[0]);
    if (!day) throw EvaluateError(where + "bad date '" + f[0] + "'");
    auto sev = parse_severity(f[2]);
    if (!sev) throw EvaluateError(where + "bad severity '" + f[2] + "'");
    if (f[1].empty()) throw EvaluateError(where + "empty county");
    out.push_back({*day, f[1], *sev});
  }
  if (!header) throw EvaluateError("truth file is empty");
  return out;
}

std::vector<EventRecord> load_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open truth file " + path.string());
  return parse_truth(in);
}

DayMetrics day_metrics(std::span<const detect::CountyDeclaration> declarations,
                       std::span<const EventRecord> truth, const RegionRegistry& registry) {
  std::set<std::string> declared, recorded, unknown;
  for (const auto& d : declarations) {
    if (!d.flooded) continue;
    if (auto c = registry.resolve(d.county)) declared.insert(*c);
    else unknown.insert(d.county);
  }
  for (const auto& e : truth) {
    if (auto c = registry.resolve(e.county)) recorded.insert(*c);
    else unknown.insert(e.county);
  }
  if (!unknown.empty()) {
    std::string msg = "unknown county names:";
    for (const auto& u : unknown) msg += " '" + u + "'";
    throw EvaluateError(msg);
  }
  DayMetrics m;
  for (const auto& c : declared) {
    if (recorded.count(c)) ++m.tp;
    else ++m.fp;
  }
  m.fn = recorded.size() - m.tp;
  m.precision_undefined = declared.empty();
  m.recall_undefined = recorded.empty();
  m.precision = m.precision_undefined ? 0.0 : static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  m.recall = m.recall_undefined ? 0.0 : static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  return m;
}

double f_beta(double precision, double recall, double beta) {
  if (!(precision >= 0.0 && precision <= 1.0) || !(recall >= 0.0 && recall <= 1.0)) {
    throw std::invalid_argument("precision and recall must lie in [0, 1]");
  }
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be positive");
  if (precision == 0.0 && recall == 0.0) return 0.0;
  const double b2 = beta * beta;
  return (1.0 + b2) * precision * recall / (b2 * precision + recall);
}

void ParamGrid::normalize() {
  auto tidy = [](std::vector<double>& v, const char* name, bool unit) {
    if (v.empty()) throw EvaluateError(std::string("parameter grid has no values for ") + name);
    for (double x : v) {
      if (!(x >= 0.0) || !std::isfinite(x) || (unit && x > 1.0)) {
        throw EvaluateError(std::string("invalid value for ") + name + ": " + format_double(x));
      }
    }
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  tidy(r, "r", false);
  tidy(alpha, "alpha", false);
  tidy(threshold, "T", false);
  if (modes.empty()) throw EvaluateError("parameter grid has no floodiness modes");
  std::sort(modes.begin(), modes.end());
  modes.erase(std::unique(modes.begin(), modes.end()), modes.end());
}

std::string SweepResult::to_csv() const {
  std::ostringstream out;
  out << "r,alpha,T,mode,avg_precision,avg_recall";
  for (double b : betas) out << ',' << beta_label(b);
  out << '\n';
  for (const auto& row : rows) {
    out << format_double(row.r) << ',' << format_double(row.alpha) << ',' << format_double(row.threshold) << ','
        << detect::to_string(row.mode) << ',' << format_double(row.avg_precision) << ','
        << format_double(row.avg_recall);
    for (double f : row.f) out << ',' << format_double(f);
    out << '\n';
  }
  return out.str();
}

std::string SweepResult::summary_json() const {
  json best = json::array();
  for (std::size_t b = 0; b < betas.size() && b < argmax.size(); ++b) {
    const auto& row = rows[argmax[b]];
    best.push_back({{"beta", betas[b]},
                    {"F", row.f[b]},
                    {"avg_precision", row.avg_precision},
                    {"avg_recall", row.avg_recall},
                    {"r", row.r},
                    {"alpha", row.alpha},
                    {"T", row.threshold},
                    {"mode", std::string(detect::to_string(row.mode))},
                    {"row", argmax[b]}});
  }
  return json{{"days", days}, {"rows", rows.size()}, {"argmax", best}}.dump(2) + "\n";
}

SweepResult sweep(std::span<const SweepDay> days, const gazetteer::Backend& backend, const SweepSetup& setup,
                  const RegionRegistry& registry, ParamGrid params, std::vector<double> betas) {
  params.normalize();
  if (days.empty()) throw EvaluateError("sweep needs at least one day");
  if (betas.empty()) throw EvaluateError("sweep needs at least one beta");
  for (double b : betas) {
    if (!(b > 0.0) || !std::isfinite(b)) throw EvaluateError("beta must be positive");
  }

  std::vector<std::size_t> order(days.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return days[a].date < days[b].date; });
  for (auto d : order) {
    if (days[d].truth.empty()) throw EvaluateError("day " + format_day(days[d].date) + " has no truth records");
  }

  const geo::Grid base = setup.grid.make();
  const detect::CountyOverlay overlay(base, setup.counties);
  const std::size_t D = order.size();

  // Candidates do not depend on any swept parameter.
  std::vector<std::vector<CandidateSet>> candidates(D);
  for (std::size_t k = 0; k < D; ++k) {
    const auto& msgs = days[order[k]].messages;
    candidates[k].resize(msgs.size());
    parallel_chunks(msgs.size(), 256, setup.threads, [&](std::size_t, std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) candidates[k][i] = gather_candidates(msgs[i], backend, setup.resolve);
    });
  }

  const std::size_t R = params.r.size(), A = params.alpha.size(), T = params.threshold.size(),
                    M = params.modes.size();
  std::vector<geo::Grid> raw(R * D, base);
  parallel_chunks(R * D, 1, setup.threads, [&](std::size_t, std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const std::size_t ri = i / D, k = i % D;
      InferenceParams ip;
      ip.r = params.r[ri];
      auto batch = infer_gathered(days[order[k]].messages, candidates[k], ip);
      detect::accumulate(raw[i], std::span<const LocatedMessage>(batch.messages));
    }
  });

  SweepResult result;
  result.betas = betas;
  result.days = D;
  result.rows.resize(R * A * T * M);
  parallel_chunks(R * A * M, 1, setup.threads, [&](std::size_t, std::size_t lo, std::size_t hi) {
    for (std::size_t combo = lo; combo < hi; ++combo) {
      const std::size_t ri = combo / (A * M), ai = (combo / M) % A, mi = combo % M;
      detect::DetectParams dp;
      dp.alpha = params.alpha[ai];
      dp.mode = params.modes[mi];
      dp.reference_max = setup.reference_max;
      std::vector<double> psum(T, 0.0), rsum(T, 0.0);
      std::vector<std::size_t> undefined(T, 0);
      for (std::size_t k = 0; k < D; ++k) {
        const auto scaled = detect::scale_grid(raw[ri * D + k], setup.population, dp);
        for (std::size_t ti = 0; ti < T; ++ti) {
          const auto decl = detect::declare_counties(scaled.grid, overlay, params.threshold[ti]);
          const auto m = day_metrics(decl, days[order[k]].truth, registry);
          psum[ti] += m.precision;
          rsum[ti] += m.recall;
          undefined[ti] += m.precision_undefined;
        }
      }
      for (std::size_t ti = 0; ti < T; ++ti) {
        auto& row = result.rows[((ri * A + ai) * T + ti) * M + mi];
        row.r = params.r[ri];
        row.alpha = params.alpha[ai];
        row.threshold = params.threshold[ti];
        row.mode = params.modes[mi];
        row.avg_precision = psum[ti] / static_cast<double>(D);
        row.avg_recall = rsum[ti] / static_cast<double>(D);
        row.undefined_precision_days = undefined[ti];
        for (double b : betas) row.f.push_back(f_beta(row.avg_precision, row.avg_recall, b));
      }
    }
  });

  for (std::size_t b = 0; b < betas.size(); ++b) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < result.rows.size(); ++i) {
      if (result.rows[i].f[b] > result.rows[best].f[b]) best = i;
    }
    result.argmax.push_back(best);
  }
  return result;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw EvaluateError("correlation series differ in length");
  if (x.size() < 2) throw EvaluateError("correlation needs at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw EvaluateError("correlation undefined: a series has zero variance");
  return sxy / std::sqrt(sxx * syy);
}

std::map<Day, std::size_t> daily_counts(std::span<const Message> messages) {
  std::map<Day, std::size_t> out;
  for (const auto& m : messages) ++out[day_of(m.timestamp)];
  return out;
}

std::map<Day, double> daily_event_scores(std::span<const EventRecord> truth,
                                         const std::map<std::string, double>& population,
                                         const RegionRegistry& registry, const SeverityFactors& factors) {
  std::map<Day, double> out;
  std::set<std::string> missing;
  for (const auto& e : truth) {
    auto c = registry.resolve(e.county);
    if (!c) {
      missing.insert(e.county);
      continue;
    }
    auto p = population.find(*c);
    if (p == population.end()) {
      missing.insert(e.county);
      continue;
    }
    out[e.date] += p->second * factors.of(e.severity);
  }
  if (!missing.empty()) {
    std::string msg = "counties without a known population:";
    for (const auto& m : missing) msg += " '" + m + "'";
    throw EvaluateError(msg);
  }
  return out;
}

Correlation daily_correlation(const std::map<Day, std::size_t>& counts, std::span<const EventRecord> truth,
                              const std::map<std::string, double>& population, const RegionRegistry& registry,
                              const SeverityFactors& factors) {
  const auto scores = daily_event_scores(truth, population, registry, factors);
  std::vector<double> x, y;
  for (const auto& [day, n] : counts) {
    x.push_back(static_cast<double>(n));
    auto it = scores.find(day);
    y.push_back(it == scores.end() ? 0.0 : it->second);
  }
  return {pearson(x, y), x.size()};
}

}  // namespace floodsense::evaluate
