#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "floodsense/config.hpp"
#include "floodsense/corpus.hpp"
#include "floodsense/detect.hpp"
#include "floodsense/evaluate.hpp"
#include "floodsense/filters.hpp"
#include "floodsense/gazetteer.hpp"
#include "floodsense/geojson.hpp"
#include "floodsense/locate.hpp"
#include "floodsense/relevance.hpp"
#include "floodsense/render.hpp"
#include "floodsense/synthetic.hpp"
#include "floodsense/text.hpp"

#ifndef FLOODSENSE_VERSION
#define FLOODSENSE_VERSION "0.0.0"
#endif

namespace floodsense::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Everything a subcommand produces, held in memory until the command has
// succeeded so a failure leaves the output directory untouched.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

  void text(const std::string& name, std::string content) { add(name, std::move(content)); }
  void json_file(const std::string& name, const json& j) { add(name, j.dump(2) + "\n"); }
  void png(const std::string& name, render::Image image) { add(name, std::move(image)); }

  const fs::path& dir() const { return dir_; }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : files_) out.push_back(name);
    return out;
  }

  void commit() const {
    for (const auto& [name, content] : files_) {
      const auto path = dir_ / name;
      fs::create_directories(path.parent_path());
      if (const auto* s = std::get_if<std::string>(&content)) {
        std::ofstream out(path, std::ios::binary);
        out << *s;
        if (!out) throw IoError("cannot write " + path.string());
      } else {
        render::write_png(std::get<render::Image>(content), path);
      }
    }
  }

 private:
  void add(const std::string& name, std::variant<std::string, render::Image> content) {
    const fs::path rel(name);
    if (rel.is_absolute() || name.find("..") != std::string::npos) {
      throw std::logic_error("output names must stay inside the output directory");
    }
    files_[name] = std::move(content);
  }

  fs::path dir_;
  std::map<std::string, std::variant<std::string, render::Image>> files_;
};

struct Common {
  std::string out;
  std::string config;
  std::vector<std::string> sets;
  std::optional<unsigned> threads;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("-o,--out", c.out, "Output directory (created if missing)")->required();
  sub->add_option("-c,--config", c.config, "Flat JSON configuration file");
  sub->add_option("--set", c.sets, "Override a configuration value, key=value (repeatable)");
  sub->add_option("--threads", c.threads, "Worker threads, 0 for all cores");
  sub->add_option("--seed", c.seed, "Random seed recorded in every output");
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw UsageError(what + " path is empty");
  if (!fs::is_regular_file(path)) throw UsageError(what + " not found: " + path);
}

Config load_config(const Common& c) {
  Config cfg;
  if (!c.config.empty()) {
    require_file(c.config, "config file");
    cfg.merge_file(c.config);
  }
  for (const auto& s : c.sets) cfg.set_override(s);
  if (c.threads) cfg.set_override("threads=" + std::to_string(*c.threads));
  if (c.seed) cfg.set_override("seed=" + std::to_string(*c.seed));
  return cfg;
}

unsigned threads_of(const Config& cfg) { return static_cast<unsigned>(cfg.get_uint("threads")); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

FilterConfig filter_config(const Config& cfg, const std::string& denylist_path) {
  FilterConfig fc;
  const auto zones = cfg.get_string_list("timezones");
  fc.allowed_timezones = {zones.begin(), zones.end()};
  fc.bot_threshold_fraction = cfg.get_double("bot_threshold_fraction");
  for (const auto& a : cfg.get_string_list("bot_denylist")) fc.bot_denylist.insert(a);
  if (!denylist_path.empty()) {
    std::istringstream in(read_file(denylist_path));
    std::string line;
    while (std::getline(in, line)) {
      const auto t = std::string(text::trim(line));
      if (!t.empty() && t.front() != '#') fc.bot_denylist.insert(t);
    }
  }
  fc.blocklist_phrases = cfg.get_string_list("blocklist");
  fc.validate();
  return fc;
}

gazetteer::ResolveOptions resolve_options(const Config& cfg) {
  gazetteer::ResolveOptions o;
  const auto c = cfg.get_string_list("countries");
  o.countries = {c.begin(), c.end()};
  return o;
}

InferenceParams inference_params(const Config& cfg) {
  InferenceParams p;
  p.r = cfg.get_double("r");
  p.keep_all = cfg.get_bool("keep_all");
  p.validate();
  return p;
}

detect::FloodinessMode mode_of(const std::string& s) {
  auto m = detect::parse_mode(s);
  if (!m) throw ConfigError("mode must be 'relative' or 'absolute', not '" + s + "'");
  return *m;
}

detect::DetectParams detect_params(const Config& cfg) {
  detect::DetectParams p;
  p.alpha = cfg.get_double("alpha");
  p.threshold = cfg.get_double("T");
  p.mode = mode_of(cfg.get_string("mode"));
  p.reference_max = cfg.get_optional_double("reference_max");
  p.validate();
  return p;
}

detect::GridSpec grid_spec(const Config& cfg) {
  const auto b = cfg.get_double_list("bbox");
  if (b.size() != 4) throw ConfigError("bbox needs four numbers: lat_min, lat_max, lon_min, lon_max");
  detect::GridSpec g;
  g.bbox = {b[0], b[1], b[2], b[3]};
  g.rows = cfg.get_uint("grid_rows");
  g.cols = cfg.get_uint("grid_cols");
  (void)g.make();  // validates
  return g;
}

std::string messages_to_jsonl(std::span<const Message> messages) {
  std::string out;
  for (const auto& m : messages) out += to_record(m) + "\n";
  return out;
}

std::vector<Message> load_corpus(const std::string& path, Outputs* outputs) {
  auto result = ingest_file(path);
  if (outputs) outputs->text("ingest_report.json", result.report.to_json() + "\n");
  return std::move(result.messages);
}

relevance::NBModel load_model(const std::string& path) {
  if (!fs::is_regular_file(path)) {
    throw UsageError("model file not found: " + path +
                     "; run `floodsense train --training <file> --out <dir>` first");
  }
  return relevance::NBModel::load_file(path);
}

std::shared_ptr<const gazetteer::Backend> load_backend(const std::string& path, bool cache, const fs::path& out,
                                                       std::shared_ptr<gazetteer::CachingBackend>* caching) {
  auto fixture = std::make_shared<const gazetteer::FixtureBackend>(gazetteer::FixtureBackend::load(path));
  if (!cache) return fixture;
  auto c = std::make_shared<gazetteer::CachingBackend>(fixture, out / "gazetteer_cache.jsonl");
  if (caching) *caching = c;
  return c;
}

json manifest(const std::string& command, const Common& c, const Config& cfg,
              const std::map<std::string, std::string>& inputs, const Outputs& outputs) {
  json in = json::object();
  for (const auto& [k, v] : inputs) in[k] = v;
  auto names = outputs.names();
  names.push_back("run_manifest.json");
  std::sort(names.begin(), names.end());
  return json{{"tool", "floodsense"},
              {"version", FLOODSENSE_VERSION},
              {"command", command},
              {"inputs", in},
              {"config", c.config.empty() ? json(nullptr) : json(c.config)},
              {"overrides", c.sets},
              {"out", c.out},
              {"seed", cfg.get_uint("seed")},
              {"outputs", names}};
}

void finish(const std::string& command, const Common& c, const Config& cfg,
            const std::map<std::string, std::string>& inputs, Outputs& outputs) {
  outputs.text("effective_config.json", cfg.effective_json());
  outputs.json_file("run_manifest.json", manifest(command, c, cfg, inputs, outputs));
  outputs.commit();
}

json declarations_json(std::span<const detect::CountyDeclaration> decl) {
  json flooded = json::array();
  for (const auto& d : decl) {
    if (d.flooded) flooded.push_back(d.county);
  }
  return flooded;
}

// ---------------------------------------------------------------- commands

struct IngestArgs {
  Common common;
  std::string input;
};

int cmd_ingest_stats(const IngestArgs& a, std::ostream& out) {
  require_file(a.input, "input corpus");
  const auto cfg = load_config(a.common);
  Outputs o(a.common.out);
  const auto messages = load_corpus(a.input, &o);
  const auto stats = compute_stats(messages);
  json days = json::object();
  for (const auto& [d, n] : stats.per_day_counts) days[format_day(d)] = n;
  std::vector<std::pair<std::string, std::size_t>> authors(stats.per_author_counts.begin(),
                                                           stats.per_author_counts.end());
  std::stable_sort(authors.begin(), authors.end(), [](const auto& x, const auto& y) { return x.second > y.second; });
  json top = json::array();
  for (std::size_t i = 0; i < std::min<std::size_t>(10, authors.size()); ++i) {
    top.push_back({{"author", authors[i].first}, {"messages", authors[i].second}});
  }
  std::size_t retweets = 0, geotagged = 0, with_field = 0, with_zone = 0;
  for (const auto& m : messages) {
    retweets += m.is_retweet;
    geotagged += m.geotag.has_value();
    with_field += m.author_location.has_value();
    with_zone += m.author_timezone.has_value();
  }
  o.json_file("corpus_stats.json", {{"total", stats.total_count},
                                    {"authors", stats.per_author_counts.size()},
                                    {"retweets", retweets},
                                    {"geotagged", geotagged},
                                    {"with_location_field", with_field},
                                    {"with_timezone", with_zone},
                                    {"per_day", days},
                                    {"top_authors", top},
                                    {"seed", cfg.get_uint("seed")}});
  finish("ingest-stats", a.common, cfg, {{"input", a.input}}, o);
  out << "messages: " << stats.total_count << ", days: " << stats.per_day_counts.size() << "\n";
  return 0;
}

struct FilterArgs {
  Common common;
  std::string input;
  std::string model;
  std::string denylist;
};

int cmd_filter(const FilterArgs& a, std::ostream& out) {
  require_file(a.input, "input corpus");
  if (!a.denylist.empty()) require_file(a.denylist, "bot denylist");
  const auto cfg = load_config(a.common);
  const auto fc = filter_config(cfg, a.denylist);
  std::optional<relevance::NBModel> model;
  if (!a.model.empty()) model = load_model(a.model);
  Outputs o(a.common.out);
  auto messages = load_corpus(a.input, &o);
  auto result = run_cascade(std::move(messages), fc, model ? &*model : nullptr, threads_of(cfg));
  o.text("filtered.jsonl", messages_to_jsonl(result.messages));
  o.text("filter_trace.csv", result.trace.to_csv());
  o.text("filter_trace.json", result.trace.to_json() + "\n");
  std::string bots;
  for (const auto& b : result.flagged_bots) bots += b + "\n";
  o.text("flagged_bots.txt", bots);
  std::map<std::string, std::string> inputs{{"input", a.input}};
  if (!a.model.empty()) inputs["model"] = a.model;
  if (!a.denylist.empty()) inputs["denylist"] = a.denylist;
  finish("filter", a.common, cfg, inputs, o);
  out << result.trace.to_csv();
  return 0;
}

struct TrainArgs {
  Common common;
  std::string training;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  require_file(a.training, "training corpus");
  const auto cfg = load_config(a.common);
  const auto examples = relevance::load_training_corpus(a.training);
  const auto model = relevance::NBModel::train(examples, cfg.get_double("nb_smoothing"));
  std::ostringstream ss;
  model.save(ss);
  Outputs o(a.common.out);
  o.text("model.nb", ss.str());
  std::size_t immediate = 0;
  for (const auto& e : examples) immediate += e.label == relevance::Label::Immediate;
  o.json_file("train_summary.json", {{"examples", examples.size()},
                                     {"immediate", immediate},
                                     {"other", examples.size() - immediate},
                                     {"vocabulary", model.vocabulary_size()},
                                     {"smoothing", model.smoothing()},
                                     {"seed", cfg.get_uint("seed")}});
  finish("train", a.common, cfg, {{"training", a.training}}, o);
  out << "trained on " << examples.size() << " examples, vocabulary " << model.vocabulary_size() << "\n";
  return 0;
}

struct ClassifyArgs {
  Common common;
  std::string input;
  std::string model;
};

int cmd_classify(const ClassifyArgs& a, std::ostream& out) {
  require_file(a.input, "input corpus");
  const auto cfg = load_config(a.common);
  const auto model = load_model(a.model);
  Outputs o(a.common.out);
  const auto messages = load_corpus(a.input, &o);
  std::string csv = "id,label,margin\n";
  std::vector<Message> relevant;
  for (const auto& m : messages) {
    const auto p = model.predict(m.text);
    csv += m.id + "," + std::string(relevance::to_string(p.label)) + "," + fmt_double(p.margin) + "\n";
    if (p.label == relevance::Label::Immediate) relevant.push_back(m);
  }
  o.text("classified.csv", csv);
  o.text("relevant.jsonl", messages_to_jsonl(relevant));
  finish("classify", a.common, cfg, {{"input", a.input}, {"model", a.model}}, o);
  out << relevant.size() << " of " << messages.size() << " messages classified relevant\n";
  return 0;
}


struct CvArgs {
  Common common;
  std::string training;
  std::optional<std::size_t> folds;
};

int cmd_cross_validate(const CvArgs& a, std::ostream& out) {
  require_file(a.training, "training corpus");
  const auto cfg = load_config(a.common);
  const auto examples = relevance::load_training_corpus(a.training);
  const std::size_t k = a.folds ? *a.folds : cfg.get_uint("cv_folds");
  const auto seed = cfg.get_uint("seed");
  const auto cm = relevance::cross_validate(examples, k, seed, cfg.get_double("nb_smoothing"));
  Outputs o(a.common.out);
  o.json_file("cv.json", {{"folds", k},
                          {"seed", seed},
                          {"examples", examples.size()},
                          {"tn", cm.tn},
                          {"fp", cm.fp},
                          {"fn", cm.fn},
                          {"tp", cm.tp},
                          {"precision", cm.precision()},
                          {"recall", cm.recall()},
                          {"accuracy", cm.accuracy()}});
  finish("cross-validate", a.common, cfg, {{"training", a.training}}, o);
  out << "TN " << cm.tn << " FP " << cm.fp << " FN " << cm.fn << " TP " << cm.tp << "  precision "
      << fmt_double(cm.precision()) << " recall " << fmt_double(cm.recall()) << "\n";
  return 0;
}

struct LocateArgs {
  Common common;
  std::string input;
  std::string gazetteer;
  bool cache = false;
};

int cmd_locate(const LocateArgs& a, std::ostream& out) {
  require_file(a.input, "input corpus");
  require_file(a.gazetteer, "gazetteer");
  const auto cfg = load_config(a.common);
  std::shared_ptr<gazetteer::CachingBackend> caching;
  const auto backend = load_backend(a.gazetteer, a.cache, a.common.out, &caching);
  Outputs o(a.common.out);
  const auto messages = load_corpus(a.input, &o);
  const auto batch = infer_batch(messages, *backend, inference_params(cfg), resolve_options(cfg), threads_of(cfg));
  std::string lines;
  for (const auto& m : batch.messages) lines += located_to_jsonl(m) + "\n";
  o.text("located.jsonl", lines);
  o.text("location_stats.json", batch.stats.to_json() + "\n");
  finish("locate", a.common, cfg, {{"input", a.input}, {"gazetteer", a.gazetteer}}, o);
  if (caching) caching->flush();
  out << batch.stats.located << " of " << batch.stats.messages << " messages located\n";
  return 0;
}

std::vector<LocatedMessage> load_located(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<LocatedMessage> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(located_from_jsonl(line));
    } catch (const std::exception& e) {
      throw UsageError(path + " line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Region> load_counties(const std::string& path) {
  require_file(path, "counties file");
  return load_regions(path);
}

detect::PopulationRaster population_raster(const geo::Grid& grid, std::span<const Region> regions) {
  double total = 0.0;
  for (const auto& r : regions) total += r.population;
  if (!(total > 0.0)) {
    throw UsageError("the counties file carries no population values; population scaling needs them");
  }
  return detect::rasterize_population(grid, regions);
}

struct GridArgs {
  Common common;
  std::string located;
  std::string population;
  std::string window;
};

int cmd_grid(const GridArgs& a, std::ostream& out) {
  require_file(a.located, "located messages");
  const auto cfg = load_config(a.common);
  const auto spec = grid_spec(cfg);
  const auto params = detect_params(cfg);
  std::vector<Region> regions;
  if (!a.population.empty()) regions = load_counties(a.population);
  auto located = load_located(a.located);
  if (!a.window.empty()) {
    auto day = parse_day(a.window);
    if (!day) throw UsageError("--window expects YYYY-MM-DD, got " + a.window);
    const auto w = detect::TimeWindow::whole_day(*day);
    std::erase_if(located, [&](const LocatedMessage& m) { return !w.contains(m.timestamp); });
  }
  geo::Grid raw = spec.make();
  const auto report = detect::accumulate(raw, std::span<const LocatedMessage>(located), threads_of(cfg));
  geo::Grid grid = raw;
  bool no_signal = false;
  if (!regions.empty()) {
    auto scaled = detect::scale_grid(raw, population_raster(raw, regions), params);
    grid = std::move(scaled.grid);
    no_signal = scaled.no_signal;
  }
  Outputs o(a.common.out);
  o.text("raw_grid.csv", render::grid_to_csv(raw));
  o.text("grid.csv", render::grid_to_csv(grid));
  o.text("grid.geojson", render::grid_to_geojson(grid));
  o.png("grid.png", render::heatmap(grid, cfg.get_uint("png_cell_px")));
  o.json_file("accumulate.json", {{"points", report.points},
                                  {"polygons", report.polygons},
                                  {"single_cell_polygons", report.single_cell_polygons},
                                  {"clipped_polygons", report.clipped_polygons},
                                  {"outside", report.outside},
                                  {"mass", report.mass},
                                  {"scaled", !regions.empty()},
                                  {"no_signal", no_signal},
                                  {"max_height", grid.max_height()},
                                  {"seed", cfg.get_uint("seed")}});
  std::map<std::string, std::string> inputs{{"located", a.located}};
  if (!a.population.empty()) inputs["population"] = a.population;
  finish("grid", a.common, cfg, inputs, o);
  out << "accumulated " << report.points + report.polygons - report.outside << " shapes, max height "
      << fmt_double(grid.max_height()) << "\n";
  return 0;
}

struct DeclareArgs {
  Common common;
  std::string grid;
  std::string counties;
  std::string label;
};

int cmd_declare(const DeclareArgs& a, std::ostream& out) {
  require_file(a.grid, "grid CSV");
  const auto cfg = load_config(a.common);
  const auto counties = load_counties(a.counties);
  const auto grid = render::grid_from_csv(read_file(a.grid));
  const auto decl = detect::declare_counties(grid, counties, cfg.get_double("T"));
  Outputs o(a.common.out);
  o.text("declarations.csv", render::declarations_csv_header() + render::declarations_to_csv(a.label, decl));
  finish("declare", a.common, cfg, {{"grid", a.grid}, {"counties", a.counties}}, o);
  std::size_t flooded = 0;
  for (const auto& d : decl) flooded += d.flooded;
  out << flooded << " of " << decl.size() << " counties declared flooded\n";
  return 0;
}

evaluate::RegionRegistry registry_for(std::span<const Region> counties, const std::string& aliases) {
  auto reg = evaluate::RegionRegistry::from_regions(counties);
  if (!aliases.empty()) {
    require_file(aliases, "alias file");
    reg.load_aliases(fs::path(aliases));
  }
  return reg;
}

std::map<Day, std::vector<evaluate::EventRecord>> truth_by_day(std::span<const evaluate::EventRecord> truth) {
  std::map<Day, std::vector<evaluate::EventRecord>> out;
  for (const auto& e : truth) out[e.date].push_back(e);
  return out;
}

std::vector<double> betas_of(const Config& cfg) {
  auto b = cfg.get_double_list("betas");
  if (b.empty()) throw ConfigError("betas must not be empty");
  return b;
}

struct ValidateArgs {
  Common common;
  std::string declarations;
  std::string truth;
  std::string counties;
  std::string aliases;
};

int cmd_validate(const ValidateArgs& a, std::ostream& out) {
  require_file(a.declarations, "declarations CSV");
  require_file(a.truth, "truth file");
  const auto cfg = load_config(a.common);
  const auto counties = load_counties(a.counties);
  const auto registry = registry_for(counties, a.aliases);
  const auto windows = render::parse_declarations_csv(read_file(a.declarations));
  const auto truth = truth_by_day(evaluate::load_truth(a.truth));
  std::string csv = "date,tp,fp,fn,precision,recall,precision_undefined\n";
  double psum = 0.0, rsum = 0.0;
  std::size_t days = 0;
  for (const auto& [label, decl] : windows) {
    auto day = parse_day(label.substr(0, 10));
    if (!day) throw UsageError("declaration window '" + label + "' does not start with a date");
    auto it = truth.find(*day);
    if (it == truth.end()) continue;  // no recorded floods: not scorable
    const auto m = evaluate::day_metrics(decl, it->second, registry);
    csv += label + "," + std::to_string(m.tp) + "," + std::to_string(m.fp) + "," + std::to_string(m.fn) + "," +
           fmt_double(m.precision) + "," + fmt_double(m.recall) + "," + (m.precision_undefined ? "1" : "0") + "\n";
    psum += m.precision;
    rsum += m.recall;
    ++days;
  }
  if (days == 0) throw UsageError("no declaration window falls on a day with truth records");
  const double p = psum / static_cast<double>(days), r = rsum / static_cast<double>(days);
  json f = json::object();
  for (double b : betas_of(cfg)) f["F" + fmt_double(b)] = evaluate::f_beta(p, r, b);
  Outputs o(a.common.out);
  o.text("validation.csv", csv);
  o.json_file("validation.json",
              {{"days", days}, {"avg_precision", p}, {"avg_recall", r}, {"f_beta", f}, {"seed", cfg.get_uint("seed")}});
  finish("validate", a.common, cfg,
         {{"declarations", a.declarations}, {"truth", a.truth}, {"counties", a.counties}}, o);
  out << "days " << days << "  precision " << fmt_double(p) << "  recall " << fmt_double(r) << "\n";
  return 0;
}

struct SweepArgs {
  Common common;
  std::string input;
  std::string gazetteer;
  std::string counties;
  std::string truth;
  std::string aliases;
  std::string model;
  bool prefiltered = false;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
  require_file(a.input, "input corpus");
  require_file(a.gazetteer, "gazetteer");
  require_file(a.truth, "truth file");
  const auto cfg = load_config(a.common);
  const auto counties = load_counties(a.counties);
  const auto registry = registry_for(counties, a.aliases);
  std::optional<relevance::NBModel> model;
  if (!a.model.empty()) model = load_model(a.model);
  const auto backend = load_backend(a.gazetteer, false, {}, nullptr);
  Outputs o(a.common.out);
  auto messages = load_corpus(a.input, &o);
  if (!a.prefiltered) {
    auto cascade = run_cascade(std::move(messages), filter_config(cfg, ""), model ? &*model : nullptr,
                               threads_of(cfg));
    o.text("filter_trace.csv", cascade.trace.to_csv());
    messages = std::move(cascade.messages);
  }
  const auto truth = truth_by_day(evaluate::load_truth(a.truth));
  std::map<Day, std::vector<Message>> per_day;
  for (auto& m : messages) {
    const auto d = day_of(m.timestamp);
    if (truth.count(d)) per_day[d].push_back(std::move(m));
  }
  std::vector<evaluate::SweepDay> days;
  for (const auto& [d, recs] : truth) {
    // A truth day with no surviving messages still counts: nothing is declared.
    auto it = per_day.find(d);
    days.push_back({d, it == per_day.end() ? std::vector<Message>{} : std::move(it->second), recs});
  }
  const auto stats = compute_stats(messages);
  bool overlap = false;
  for (const auto& [d, _] : truth) overlap |= stats.per_day_counts.count(d) > 0;
  if (!overlap && !messages.empty()) throw UsageError("no overlapping dates between the corpus and the truth file");
  if (messages.empty()) throw UsageError("no messages survive filtering; nothing to sweep");

  evaluate::SweepSetup setup;
  setup.grid = grid_spec(cfg);
  const auto base = setup.grid.make();
  setup.population = population_raster(base, counties);
  setup.counties = counties;
  setup.resolve = resolve_options(cfg);
  setup.reference_max = cfg.get_optional_double("reference_max");
  setup.threads = threads_of(cfg);
  evaluate::ParamGrid params;
  params.r = cfg.get_double_list("sweep_r");
  params.alpha = cfg.get_double_list("sweep_alpha");
  params.threshold = cfg.get_double_list("sweep_T");
  params.modes.clear();
  for (const auto& m : cfg.get_string_list("sweep_modes")) params.modes.push_back(mode_of(m));
  const auto result = evaluate::sweep(days, *backend, setup, registry, params, betas_of(cfg));
  auto summary = json::parse(result.summary_json());
  summary["seed"] = cfg.get_uint("seed");
  o.text("sweep.csv", result.to_csv());
  o.json_file("sweep_summary.json", summary);
  std::map<std::string, std::string> inputs{
      {"input", a.input}, {"gazetteer", a.gazetteer}, {"counties", a.counties}, {"truth", a.truth}};
  if (!a.model.empty()) inputs["model"] = a.model;
  finish("sweep", a.common, cfg, inputs, o);
  for (std::size_t b = 0; b < result.betas.size(); ++b) {
    const auto& row = result.rows[result.argmax[b]];
    out << "F" << fmt_double(result.betas[b]) << " = " << fmt_double(row.f[b]) << " at r=" << fmt_double(row.r)
        << " alpha=" << fmt_double(row.alpha) << " T=" << fmt_double(row.threshold) << " "
        << detect::to_string(row.mode) << "\n";
  }
  return 0;
}

struct RenderArgs {
  Common common;
  std::string grid;
};

int cmd_render(const RenderArgs& a, std::ostream& out) {
  require_file(a.grid, "grid CSV");
  const auto cfg = load_config(a.common);
  const auto grid = render::grid_from_csv(read_file(a.grid));
  Outputs o(a.common.out);
  o.png("grid.png", render::heatmap(grid, cfg.get_uint("png_cell_px")));
  o.text("grid.geojson", render::grid_to_geojson(grid));
  finish("render", a.common, cfg, {{"grid", a.grid}}, o);
  out << "rendered " << grid.rows() << "x" << grid.cols() << " grid\n";
  return 0;
}

struct CorrelateArgs {
  Common common;
  std::string input;
  std::string truth;
  std::string counties;
  std::string aliases;
  std::string model;
};

int cmd_correlate(const CorrelateArgs& a, std::ostream& out) {
  require_file(a.input, "input corpus");
  require_file(a.truth, "truth file");
  const auto cfg = load_config(a.common);
  const auto counties = load_counties(a.counties);
  const auto registry = registry_for(counties, a.aliases);
  std::optional<relevance::NBModel> model;
  if (!a.model.empty()) model = load_model(a.model);
  const auto fc = filter_config(cfg, "");
  Outputs o(a.common.out);
  auto messages = load_corpus(a.input, &o);
  const auto truth = evaluate::load_truth(a.truth);
  std::map<std::string, double> population;
  for (const auto& c : counties) population[c.name] = c.population;
  const auto threads = threads_of(cfg);

  // Same stage order as the cascade, measured after each stage.
  const auto bots = [&] {
    auto b = detect_bots(messages, fc.bot_threshold_fraction);
    b.insert(fc.bot_denylist.begin(), fc.bot_denylist.end());
    return b;
  }();
  std::vector<std::pair<std::string, std::map<Day, std::size_t>>> stages;
  const auto all_days = evaluate::daily_counts(messages);
  auto with_zeros = [&](const std::map<Day, std::size_t>& c) {
    auto out = c;
    for (const auto& [d, _] : all_days) out.try_emplace(d, 0);
    return out;
  };
  stages.push_back({"all", all_days});
  messages = timezone_filter(std::move(messages), fc.allowed_timezones);
  stages.push_back({"timezone", with_zeros(evaluate::daily_counts(messages))});
  messages = bot_filter(std::move(messages), bots);
  stages.push_back({"bot", with_zeros(evaluate::daily_counts(messages))});
  messages = retweet_filter(std::move(messages));
  stages.push_back({"retweet", with_zeros(evaluate::daily_counts(messages))});
  messages = blocklist_filter(std::move(messages), fc.blocklist_phrases);
  stages.push_back({"blocklist", with_zeros(evaluate::daily_counts(messages))});
  if (model) {
    messages = relevance_filter(std::move(messages), *model, threads);
    stages.push_back({"relevance", with_zeros(evaluate::daily_counts(messages))});
  }
  std::string csv = "stage,days,pearson_r\n";
  json rows = json::array();
  for (const auto& [name, counts] : stages) {
    std::string r = "";
    json jr = nullptr;
    try {
      const auto c = evaluate::daily_correlation(counts, truth, population, registry);
      r = fmt_double(c.r);
      jr = c.r;
    } catch (const evaluate::EvaluateError& e) {
      if (std::string(e.what()).find("variance") == std::string::npos &&
          std::string(e.what()).find("two points") == std::string::npos) {
        throw;
      }
    }
    csv += name + "," + std::to_string(counts.size()) + "," + r + "\n";
    rows.push_back({{"stage", name}, {"days", counts.size()}, {"pearson_r", jr}});
  }
  o.text("correlation.csv", csv);
  o.json_file("correlation.json", {{"stages", rows}, {"seed", cfg.get_uint("seed")}});
  std::map<std::string, std::string> inputs{{"input", a.input}, {"truth", a.truth}, {"counties", a.counties}};
  if (!a.model.empty()) inputs["model"] = a.model;
  finish("correlate", a.common, cfg, inputs, o);
  out << csv;
  return 0;
}

struct PipelineArgs {
  Common common;
  std::string input;
  std::string gazetteer;
  std::string counties;
  std::string model;
  bool no_classify = false;
  std::vector<std::string> days;
};

struct Window {
  std::string label;
  detect::TimeWindow span;
};

std::vector<Window> windows_for(const std::set<Day>& days, std::uint64_t hours) {
  if (hours == 0 || 24 % hours != 0) throw ConfigError("window_hours must divide 24");
  std::vector<Window> out;
  for (const auto& d : days) {
    if (hours == 24) {
      out.push_back({format_day(d), detect::TimeWindow::whole_day(d)});
      continue;
    }
    for (std::uint64_t h = 0; h < 24; h += hours) {
      const auto start = Timestamp(d) + std::chrono::hours(h);
      std::string label = format_day(d) + "T" + (h < 10 ? "0" : "") + std::to_string(h);
      out.push_back({label, {start, start + std::chrono::hours(hours)}});
    }
  }
  return out;
}

int cmd_pipeline(const PipelineArgs& a, std::ostream& out) {
  require_file(a.input, "input corpus");
  require_file(a.gazetteer, "gazetteer");
  const auto cfg = load_config(a.common);
  std::optional<relevance::NBModel> model;
  if (!a.no_classify) {
    if (a.model.empty()) {
      throw UsageError("no relevance model given; run `floodsense train` first and pass --model, or use --no-classify");
    }
    model = load_model(a.model);
  }
  const auto counties = load_counties(a.counties);
  const auto spec = grid_spec(cfg);
  const auto params = detect_params(cfg);
  const auto inference = inference_params(cfg);
  const auto fc = filter_config(cfg, "");
  const auto threads = threads_of(cfg);
  const auto backend = load_backend(a.gazetteer, false, {}, nullptr);

  Outputs o(a.common.out);
  auto messages = load_corpus(a.input, &o);
  std::set<Day> days;
  if (a.days.empty()) {
    for (const auto& m : messages) days.insert(day_of(m.timestamp));
  } else {
    for (const auto& s : a.days) {
      auto d = parse_day(s);
      if (!d) throw UsageError("--day expects YYYY-MM-DD, got " + s);
      days.insert(*d);
    }
  }
  auto cascade = run_cascade(std::move(messages), fc, model ? &*model : nullptr, threads);
  o.text("filter_trace.csv", cascade.trace.to_csv());
  o.text("filter_trace.json", cascade.trace.to_json() + "\n");
  std::string bots;
  for (const auto& b : cascade.flagged_bots) bots += b + "\n";
  o.text("flagged_bots.txt", bots);

  const auto batch = infer_batch(cascade.messages, *backend, inference, resolve_options(cfg), threads);
  std::string located;
  for (const auto& m : batch.messages) located += located_to_jsonl(m) + "\n";
  o.text("located.jsonl", located);
  o.text("location_stats.json", batch.stats.to_json() + "\n");

  const geo::Grid base = spec.make();
  const auto raster = population_raster(base, counties);
  const detect::CountyOverlay overlay(base, counties);
  std::string declarations = render::declarations_csv_header();
  json summary = json::array();
  const auto png_px = cfg.get_uint("png_cell_px");
  for (const auto& w : windows_for(days, cfg.get_uint("window_hours"))) {
    std::vector<LocatedMessage> in_window;
    for (const auto& m : batch.messages) {
      if (w.span.contains(m.timestamp)) in_window.push_back(m);
    }
    geo::Grid raw = base;
    const auto report = detect::accumulate(raw, std::span<const LocatedMessage>(in_window), threads);
    const auto scaled = detect::scale_grid(raw, raster, params);
    const auto decl = detect::declare_counties(scaled.grid, overlay, params.threshold);
    declarations += render::declarations_to_csv(w.label, decl);
    o.text("grids/" + w.label + ".csv", render::grid_to_csv(scaled.grid));
    o.text("grids/" + w.label + ".geojson", render::grid_to_geojson(scaled.grid));
    o.png("grids/" + w.label + ".png", render::heatmap(scaled.grid, png_px));
    std::size_t located_here = 0;
    for (const auto& m : in_window) located_here += !m.locations.empty();
    summary.push_back({{"window", w.label},
                       {"messages", in_window.size()},
                       {"located", located_here},
                       {"mass", report.mass},
                       {"outside", report.outside},
                       {"no_signal", scaled.no_signal},
                       {"max_height", scaled.grid.max_height()},
                       {"flooded", declarations_json(decl)}});
  }
  o.text("declarations.csv", declarations);
  o.json_file("windows.json", {{"windows", summary},
                               {"alpha", params.alpha},
                               {"T", params.threshold},
                               {"r", inference.r},
                               {"mode", std::string(detect::to_string(params.mode))},
                               {"seed", cfg.get_uint("seed")}});
  std::map<std::string, std::string> inputs{
      {"input", a.input}, {"gazetteer", a.gazetteer}, {"counties", a.counties}};
  if (!a.model.empty()) inputs["model"] = a.model;
  finish("pipeline", a.common, cfg, inputs, o);
  out << cascade.trace.to_csv() << "located " << batch.stats.located << " of " << batch.stats.messages
      << " relevant messages over " << summary.size() << " windows\n";
  return 0;
}

struct SynthArgs {
  Common common;
  std::size_t days = 3;
  std::string start = "2015-10-28";
  std::size_t planted = 50;
  std::size_t background = 500;
  std::size_t training = 2000;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  const auto cfg = load_config(a.common);
  const auto start = parse_day(a.start);
  if (!start) throw UsageError("--start expects YYYY-MM-DD, got " + a.start);
  if (a.days == 0) throw UsageError("--days must be at least 1");
  synthetic::WorldSpec ws;
  ws.grid = grid_spec(cfg);
  const auto world = synthetic::make_world(ws);
  synthetic::CorpusSpec cs;
  cs.seed = cfg.get_uint("seed");
  cs.planted_per_event = a.planted;
  cs.background_per_day = a.background;
  for (std::size_t i = 0; i < a.days; ++i) {
    const Day d = *start + std::chrono::days(i);
    cs.days.push_back(d);
    const auto severity = static_cast<evaluate::Severity>(1 + i % 3);
    cs.events.push_back({d, (i * 5 + 3) % world.counties.size(), severity});
  }
  const auto corpus = synthetic::generate_corpus(world, cs);
  std::string truth = "date,county,severity\n";
  for (const auto& e : synthetic::planted_truth(world, cs)) {
    truth += format_day(e.date) + "," + e.county + "," + std::string(evaluate::to_string(e.severity)) + "\n";
  }
  std::string gaz;
  for (const auto& e : world.gazetteer) gaz += gazetteer::entry_to_json(e) + "\n";
  std::string training;
  for (const auto& e : synthetic::generate_training(world, a.training, cs.seed + 1)) {
    training += std::string(relevance::to_string(e.label)) + "\t" + e.text + "\n";
  }
  Outputs o(a.common.out);
  o.text("counties.geojson", regions_to_json(world.counties));
  o.text("gazetteer.jsonl", gaz);
  o.text("corpus.jsonl", messages_to_jsonl(corpus));
  o.text("truth.csv", truth);
  o.text("training.tsv", training);
  finish("synth", a.common, cfg, {}, o);
  out << "wrote " << corpus.size() << " messages over " << a.days << " days\n";
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Flood event detection from short social-media messages", "floodsense"};
  app.set_version_flag("--version", std::string("floodsense ") + FLOODSENSE_VERSION);
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* s_ingest = app.add_subcommand("ingest-stats", "Parse a corpus and report counts per day and author");
  add_common(s_ingest, ingest.common);
  s_ingest->add_option("-i,--input", ingest.input, "Corpus, one JSON record per line")->required();

  FilterArgs filter;
  auto* s_filter = app.add_subcommand("filter", "Run the timezone/bot/retweet/blocklist cascade");
  add_common(s_filter, filter.common);
  s_filter->add_option("-i,--input", filter.input, "Corpus, one JSON record per line")->required();
  s_filter->add_option("-m,--model", filter.model, "Relevance model; adds the classifier stage");
  s_filter->add_option("--denylist", filter.denylist, "Extra bot author ids, one per line");

  TrainArgs train;
  auto* s_train = app.add_subcommand("train", "Train the relevance classifier");
  add_common(s_train, train.common);
  s_train->add_option("-t,--training", train.training, "label<TAB>text lines")->required();

  ClassifyArgs classify;
  auto* s_classify = app.add_subcommand("classify", "Label every message Immediate or Other");
  add_common(s_classify, classify.common);
  s_classify->add_option("-i,--input", classify.input, "Corpus, one JSON record per line")->required();
  s_classify->add_option("-m,--model", classify.model, "Model written by train")->required();

  CvArgs cv;
  auto* s_cv = app.add_subcommand("cross-validate", "k-fold cross-validation of the classifier");
  add_common(s_cv, cv.common);
  s_cv->add_option("-t,--training", cv.training, "label<TAB>text lines")->required();
  s_cv->add_option("-k,--folds", cv.folds, "Number of folds (default: cv_folds)");

  LocateArgs locate;
  auto* s_locate = app.add_subcommand("locate", "Infer one location per message");
  add_common(s_locate, locate.common);
  s_locate->add_option("-i,--input", locate.input, "Corpus, one JSON record per line")->required();
  s_locate->add_option("-g,--gazetteer", locate.gazetteer, "Gazetteer fixture, JSON lines")->required();
  s_locate->add_flag("--cache", locate.cache, "Keep a lookup cache in the output directory");

  GridArgs grid;
  auto* s_grid = app.add_subcommand("grid", "Accumulate located messages onto the floodiness grid");
  add_common(s_grid, grid.common);
  s_grid->add_option("-l,--located", grid.located, "located.jsonl from locate")->required();
  s_grid->add_option("-p,--population", grid.population, "Counties GeoJSON with population; enables scaling");
  s_grid->add_option("-w,--window", grid.window, "Only messages from this UTC day, YYYY-MM-DD");

  DeclareArgs declare;
  auto* s_declare = app.add_subcommand("declare", "Threshold a grid into county declarations");
  add_common(s_declare, declare.common);
  s_declare->add_option("-G,--grid", declare.grid, "grid.csv from grid")->required();
  s_declare->add_option("--counties", declare.counties, "Counties GeoJSON")->required();
  s_declare->add_option("--label", declare.label, "Window label for the date column")->default_val("window");

  ValidateArgs validate;
  auto* s_validate = app.add_subcommand("validate", "Score declarations against flood records");
  add_common(s_validate, validate.common);
  s_validate->add_option("-d,--declarations", validate.declarations, "declarations.csv")->required();
  s_validate->add_option("--truth", validate.truth, "date,county,severity CSV")->required();
  s_validate->add_option("--counties", validate.counties, "Counties GeoJSON")->required();
  s_validate->add_option("--aliases", validate.aliases, "alias,canonical county names");

  SweepArgs sweep;
  auto* s_sweep = app.add_subcommand("sweep", "Precision/recall over an (r, alpha, T, mode) grid");
  add_common(s_sweep, sweep.common);
  s_sweep->add_option("-i,--input", sweep.input, "Corpus, one JSON record per line")->required();
  s_sweep->add_option("-g,--gazetteer", sweep.gazetteer, "Gazetteer fixture, JSON lines")->required();
  s_sweep->add_option("--counties", sweep.counties, "Counties GeoJSON with population")->required();
  s_sweep->add_option("--truth", sweep.truth, "date,county,severity CSV")->required();
  s_sweep->add_option("--aliases", sweep.aliases, "alias,canonical county names");
  s_sweep->add_option("-m,--model", sweep.model, "Relevance model for the cascade");
  s_sweep->add_flag("--prefiltered", sweep.prefiltered, "Input has already been through the cascade");

  RenderArgs rend;
  auto* s_render = app.add_subcommand("render", "PNG heatmap and GeoJSON of a grid CSV");
  add_common(s_render, rend.common);
  s_render->add_option("-G,--grid", rend.grid, "grid.csv")->required();

  CorrelateArgs corr;
  auto* s_corr = app.add_subcommand("correlate", "Daily message volume vs recorded flood impact, per filter stage");
  add_common(s_corr, corr.common);
  s_corr->add_option("-i,--input", corr.input, "Corpus, one JSON record per line")->required();
  s_corr->add_option("--truth", corr.truth, "date,county,severity CSV")->required();
  s_corr->add_option("--counties", corr.counties, "Counties GeoJSON with population")->required();
  s_corr->add_option("--aliases", corr.aliases, "alias,canonical county names");
  s_corr->add_option("-m,--model", corr.model, "Relevance model; adds the classifier stage");

  PipelineArgs pipe;
  auto* s_pipe = app.add_subcommand("pipeline", "Filter, classify, locate, grid and declare per window");
  add_common(s_pipe, pipe.common);
  s_pipe->add_option("-i,--input", pipe.input, "Corpus, one JSON record per line")->required();
  s_pipe->add_option("-g,--gazetteer", pipe.gazetteer, "Gazetteer fixture, JSON lines")->required();
  s_pipe->add_option("--counties", pipe.counties, "Counties GeoJSON with population")->required();
  s_pipe->add_option("-m,--model", pipe.model, "Relevance model written by train");
  s_pipe->add_flag("--no-classify", pipe.no_classify, "Skip the relevance classifier");
  s_pipe->add_option("--day", pipe.days, "Restrict to these UTC days (repeatable)");

  SynthArgs synth;
  auto* s_synth = app.add_subcommand("synth", "Write a synthetic world, corpus, truth and training set");
  add_common(s_synth, synth.common);
  s_synth->add_option("--days", synth.days, "Number of days")->default_val(3);
  s_synth->add_option("--start", synth.start, "First day, YYYY-MM-DD")->default_val("2015-10-28");
  s_synth->add_option("--planted", synth.planted, "Flood reports per planted event")->default_val(50);
  s_synth->add_option("--background", synth.background, "Background messages per day")->default_val(500);
  s_synth->add_option("--training", synth.training, "Labelled training examples")->default_val(2000);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version exit 0; every other parse failure is a usage error.
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*s_ingest) return cmd_ingest_stats(ingest, out);
    if (*s_filter) return cmd_filter(filter, out);
    if (*s_train) return cmd_train(train, out);
    if (*s_classify) return cmd_classify(classify, out);
    if (*s_cv) return cmd_cross_validate(cv, out);
    if (*s_locate) return cmd_locate(locate, out);
    if (*s_grid) return cmd_grid(grid, out);
    if (*s_declare) return cmd_declare(declare, out);
    if (*s_validate) return cmd_validate(validate, out);
    if (*s_sweep) return cmd_sweep(sweep, out);
    if (*s_render) return cmd_render(rend, out);
    if (*s_corr) return cmd_correlate(corr, out);
    if (*s_pipe) return cmd_pipeline(pipe, out);
    if (*s_synth) return cmd_synth(synth, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("floodsense");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace floodsense::cli
