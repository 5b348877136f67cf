#include "soc/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "soc/error.hpp"

namespace soc {

namespace {

std::string at_line(const fs::path& path, std::size_t line) {
  return path.filename().string() + ":" + std::to_string(line) + ": ";
}

struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

std::vector<std::string> split(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  for (;;) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::string f;
    if (i < s.size() && s[i] == '"') {
      for (++i; i < s.size(); ++i) {
        if (s[i] != '"') {
          f += s[i];
        } else if (i + 1 < s.size() && s[i + 1] == '"') {
          f += '"';
          ++i;
        } else {
          ++i;
          break;
        }
      }
      while (i < s.size() && s[i] != ',') ++i;
    } else {
      const std::size_t comma = std::min(s.find(',', i), s.size());
      f = s.substr(i, comma - i);
      while (!f.empty() && (f.back() == ' ' || f.back() == '\t')) f.pop_back();
      i = comma;
    }
    out.push_back(std::move(f));
    if (i >= s.size()) break;
    ++i;
  }
  return out;
}


// Reads a CSV file whose first line must equal `header`; blank lines are skipped.
std::vector<CsvRow> read_csv(const fs::path& path, std::string_view header) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::string line;
  std::size_t n = 0;
  std::vector<CsvRow> rows;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (n == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (!seen_header) {
      if (line != header)
        throw ValidationError(at_line(path, n) + "expected header '" + std::string(header) + "', found '" + line + "'");
      seen_header = true;
      continue;
    }
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    CsvRow row{n, split(line)};
    const std::size_t want = std::count(header.begin(), header.end(), ',') + 1;
    if (row.fields.size() != want)
      throw ValidationError(at_line(path, n) + "expected " + std::to_string(want) + " fields, found " +
                            std::to_string(row.fields.size()));
    rows.push_back(std::move(row));
  }
  if (!seen_header) throw ValidationError(path.string() + " is empty (missing header)");
  return rows;
}

double parse_double(const std::string& s, const fs::path& path, std::size_t line, std::string_view what) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || !std::isfinite(v))
    throw ValidationError(at_line(path, line) + "invalid " + std::string(what) + " '" + s + "'");
  return v;
}

int parse_int(const std::string& s, const fs::path& path, std::size_t line, std::string_view what) {
  int v = 0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw ValidationError(at_line(path, line) + "invalid " + std::string(what) + " '" + s + "'");
  return v;
}

std::map<std::string, std::size_t> index_by_id(const std::vector<PlotData>& plots) {
  std::map<std::string, std::size_t> idx;
  for (std::size_t p = 0; p < plots.size(); ++p) idx[plots[p].id] = p;
  return idx;
}

void write_lines(const fs::path& path, const std::string& text) { write_text(path, text); }

double json_bound(const Json& j, std::string_view context, std::string_view key, double fallback) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(std::string(key));
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
  }
  throw ValidationError(std::string(context) + ": '" + std::string(key) + "' must be a number, \"inf\" or \"-inf\"");
}

Json bound_json(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  return v;
}

double require_number(const Json& j, std::string_view context, std::string_view key) {
  if (!j.contains(key) || !j.at(std::string(key)).is_number())
    throw ValidationError(std::string(context) + ": missing numeric '" + std::string(key) + "'");
  return j.at(std::string(key)).get<double>();
}

void check_keys(const Json& j, std::string_view context, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ValidationError(std::string(context) + " must be an object");
  for (const auto& [k, v] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      throw ValidationError(std::string(context) + ": unknown key '" + k + "'");
  }
}

}  // namespace

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"") == std::string_view::npos) return std::string(s);
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
  if (!out) throw ValidationError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

Json read_json(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError(path.filename().string() + ": " + e.what());
  }
}

std::vector<PlotData> read_plot_table(const fs::path& path) {
  std::vector<PlotData> plots;
  std::set<std::string> seen;
  for (const auto& row : read_csv(path, kPlotsHeader)) {
    PlotData p;
    p.id = row.fields[0];
    p.treatment = row.fields[1];
    if (p.id.empty()) throw ValidationError(at_line(path, row.line) + "empty plot id");
    if (p.treatment.empty()) throw ValidationError(at_line(path, row.line) + "empty treatment");
    if (!seen.insert(p.id).second) throw ValidationError(at_line(path, row.line) + "duplicate plot id '" + p.id + "'");
    p.area = parse_double(row.fields[2], path, row.line, "area");
    if (!(p.area > 0.0)) throw ValidationError(at_line(path, row.line) + "area must be > 0");
    p.x = parse_double(row.fields[3], path, row.line, "x");
    p.y = parse_double(row.fields[4], path, row.line, "y");
    plots.push_back(std::move(p));
  }
  if (plots.empty()) throw ValidationError(path.filename().string() + ": no plots");
  return plots;
}

void write_plot_table(const fs::path& path, const std::vector<PlotData>& plots) {
  std::string s(kPlotsHeader);
  s += '\n';
  for (const auto& p : plots) {
    s += csv_field(p.id) + ',' + csv_field(p.treatment) + ',' + format_double(p.area) + ',' + format_double(p.x) + ',' + format_double(p.y) +
         '\n';
  }
  write_lines(path, s);
}

void read_forcing(const fs::path& path, std::vector<PlotData>& plots) {
  const auto idx = index_by_id(plots);
  std::vector<std::map<int, Forcing>> by_plot(plots.size());
  for (const auto& row : read_csv(path, kForcingHeader)) {
    auto it = idx.find(row.fields[0]);
    if (it == idx.end()) throw ValidationError(at_line(path, row.line) + "unknown plot id '" + row.fields[0] + "'");
    const int month = parse_int(row.fields[1], path, row.line, "month");
    if (month < 0) throw ValidationError(at_line(path, row.line) + "month must be >= 0");
    Forcing f;
    f.p = parse_double(row.fields[2], path, row.line, "P");
    f.m = parse_double(row.fields[3], path, row.line, "M");
    f.rate_mod = parse_double(row.fields[4], path, row.line, "rate_mod");
    try {
      f.validate();
    } catch (const ValidationError& e) {
      throw ValidationError(at_line(path, row.line) + e.what());
    }
    if (!by_plot[it->second].emplace(month, f).second)
      throw ValidationError(at_line(path, row.line) + "duplicate month " + std::to_string(month) + " for plot '" +
                            row.fields[0] + "'");
  }
  for (std::size_t p = 0; p < plots.size(); ++p) {
    const auto& m = by_plot[p];
    if (m.empty()) throw ValidationError(path.filename().string() + ": no forcing rows for plot '" + plots[p].id + "'");
    int expect = 0;
    plots[p].forcing.clear();
    for (const auto& [month, f] : m) {
      if (month != expect)
        throw ValidationError(path.filename().string() + ": forcing for plot '" + plots[p].id + "' is missing month " +
                              std::to_string(expect));
      plots[p].forcing.push_back(f);
      ++expect;
    }
  }
}

void write_forcing(const fs::path& path, const std::vector<PlotData>& plots) {
  std::string s(kForcingHeader);
  s += '\n';
  for (const auto& p : plots) {
    for (std::size_t t = 0; t < p.forcing.size(); ++t) {
      const auto& f = p.forcing[t];
      if (f.dt != 1.0) throw ValidationError("forcing files store monthly steps only (dt = 1)");
      s += csv_field(p.id) + ',' + std::to_string(t) + ',' + format_double(f.p) + ',' + format_double(f.m) + ',' +
           format_double(f.rate_mod) + '\n';
    }
  }
  write_lines(path, s);
}

void read_observations(const fs::path& path, std::vector<PlotData>& plots) {
  const auto idx = index_by_id(plots);
  for (auto& p : plots) p.observations.clear();
  for (const auto& row : read_csv(path, kObservationsHeader)) {
    auto it = idx.find(row.fields[0]);
    if (it == idx.end()) throw ValidationError(at_line(path, row.line) + "unknown plot id '" + row.fields[0] + "'");
    PlotData& pl = plots[it->second];
    Observation o;
    o.month = parse_int(row.fields[1], path, row.line, "month");
    try {
      o.type = parse_measure(row.fields[2]);
    } catch (const ValidationError& e) {
      throw ValidationError(at_line(path, row.line) + e.what());
    }
    o.value = parse_double(row.fields[3], path, row.line, "value");
    if (!(o.value > 0.0)) throw ValidationError(at_line(path, row.line) + "observation value must be > 0");
    if (!pl.forcing.empty() && (o.month < 0 || o.month > pl.months()))
      throw ValidationError(at_line(path, row.line) + "month " + std::to_string(o.month) + " outside 0.." +
                            std::to_string(pl.months()) + " for plot '" + pl.id + "'");
    pl.observations.push_back(o);
  }
}

void write_observations(const fs::path& path, const std::vector<PlotData>& plots) {
  std::string s(kObservationsHeader);
  s += '\n';
  for (const auto& p : plots) {
    for (const auto& o : p.observations) {
      s += csv_field(p.id) + ',' + std::to_string(o.month) + ',' + std::string(kMeasureNames[static_cast<std::size_t>(o.type)]) +
           ',' + format_double(o.value) + '\n';
    }
  }
  write_lines(path, s);
}

Json prior_to_json(const Prior& prior) {
  Json j;
  if (const auto* tn = std::get_if<TruncNormal>(&prior.dist)) {
    j = {{"family", "truncnormal"}, {"mu", tn->mu}, {"sigma", tn->sigma}, {"lo", bound_json(tn->lo)},
         {"hi", bound_json(tn->hi)}};
  } else if (const auto* ig = std::get_if<InverseGamma>(&prior.dist)) {
    j = {{"family", "invgamma"}, {"shape", ig->shape}, {"scale", ig->scale}};
  } else if (const auto* ln = std::get_if<LogNormal>(&prior.dist)) {
    j = {{"family", "lognormal"}, {"mu", ln->mu}, {"sigma2", ln->sigma2}};
  }
  if (prior.log_scale) j["log_scale"] = true;
  return j;
}

Prior prior_from_json(const Json& j, std::string_view context) {
  if (!j.is_object() || !j.contains("family") || !j["family"].is_string())
    throw ValidationError(std::string(context) + ": prior needs a string 'family'");
  const auto family = j["family"].get<std::string>();
  Prior p;
  if (family == "truncnormal") {
    check_keys(j, context, {"family", "mu", "sigma", "lo", "hi", "log_scale"});
    p.dist = TruncNormal{require_number(j, context, "mu"), require_number(j, context, "sigma"),
                         json_bound(j, context, "lo", -kInf), json_bound(j, context, "hi", kInf)};
  } else if (family == "invgamma") {
    check_keys(j, context, {"family", "shape", "scale", "log_scale"});
    p.dist = InverseGamma{require_number(j, context, "shape"), require_number(j, context, "scale")};
  } else if (family == "lognormal") {
    check_keys(j, context, {"family", "mu", "sigma2", "log_scale"});
    p.dist = LogNormal{require_number(j, context, "mu"), require_number(j, context, "sigma2")};
  } else {
    throw ValidationError(std::string(context) + ": unknown prior family '" + family +
                          "' (expected truncnormal, invgamma or lognormal)");
  }
  if (j.contains("log_scale")) {
    if (!j["log_scale"].is_boolean()) throw ValidationError(std::string(context) + ": 'log_scale' must be a boolean");
    p.log_scale = j["log_scale"].get<bool>();
  }
  try {
    validate(p.dist);
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(context) + ": " + e.what());
  }
  return p;
}

Json prior_table_to_json(const PriorTable& table) {
  Json params = Json::object();
  for (const auto& [name, prior] : table.parameters) params[name] = prior_to_json(prior);
  Json init = Json::object();
  for (std::size_t p = 0; p < table.plot_ids.size(); ++p) {
    Json row = Json::object();
    for (std::size_t k = 0; k < kPools; ++k) row[std::string(kPoolNames[k])] = prior_to_json(table.initial[p][k]);
    init[table.plot_ids[p]] = row;
  }
  return {{"parameters", params}, {"initial", init}};
}

void apply_prior_overrides(PriorTable& table, const Json& overrides) {
  if (overrides.is_null()) return;
  if (!overrides.is_object()) throw ValidationError("config 'priors' must be an object");
  for (const auto& [key, value] : overrides.items()) {
    const std::string context = "prior '" + key + "'";
    const Prior prior = prior_from_json(value, context);
    auto it = table.parameters.find(key);
    if (it != table.parameters.end()) {
      it->second = prior;
      continue;
    }
    // Initial conditions: "<pool>0" or "<pool>0[<plot id>]".
    bool matched = false;
    for (std::size_t k = 0; k < kPools && !matched; ++k) {
      const std::string stem = std::string(kPoolNames[k]) + "0";
      if (key == stem) {
        for (auto& row : table.initial) row[k] = prior;
        matched = true;
      } else if (key.starts_with(stem + "[") && key.ends_with("]")) {
        const std::string id = key.substr(stem.size() + 1, key.size() - stem.size() - 2);
        auto pit = std::find(table.plot_ids.begin(), table.plot_ids.end(), id);
        if (pit == table.plot_ids.end()) throw ValidationError(context + ": unknown plot id '" + id + "'");
        table.initial[pit - table.plot_ids.begin()][k] = prior;
        matched = true;
      }
    }
    if (!matched) throw ValidationError(context + ": no such parameter");
  }
}

fs::path ExperimentConfig::resolve(const std::string& file) const {
  const fs::path p(file);
  return p.is_absolute() ? p : base_dir / p;
}

ExperimentConfig parse_config(const Json& j, const fs::path& base_dir) {
  check_keys(j, "config",
             {"plots", "forcing", "observations", "scenario", "seed", "sampler", "treatments", "priors", "synthetic"});
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  auto str = [&j](const char* key, bool required) -> std::string {
    if (!j.contains(key)) {
      if (required) throw ValidationError(std::string("config: missing '") + key + "'");
      return {};
    }
    if (!j[key].is_string()) throw ValidationError(std::string("config: '") + key + "' must be a string");
    return j[key].get<std::string>();
  };
  cfg.plots_file = str("plots", true);
  cfg.forcing_file = str("forcing", false);
  cfg.observations_file = str("observations", false);
  if (j.contains("scenario")) {
    if (!j["scenario"].is_string()) throw ValidationError("config: 'scenario' must be a string");
    cfg.scenario = parse_scenario(j["scenario"].get<std::string>());
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ValidationError("config: 'seed' must be a nonnegative integer");
    cfg.sampler.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("sampler")) {
    const Json& s = j["sampler"];
    check_keys(s, "config 'sampler'", {"chains", "warmup", "iters", "thin", "max_depth", "target_accept"});
    auto get_int = [&s](const char* key, int& out) {
      if (!s.contains(key)) return;
      if (!s[key].is_number_integer()) throw ValidationError(std::string("config 'sampler': '") + key + "' must be an integer");
      out = s[key].get<int>();
    };
    get_int("chains", cfg.sampler.chains);
    get_int("warmup", cfg.sampler.warmup);
    get_int("iters", cfg.sampler.iters);
    get_int("thin", cfg.sampler.thin);
    get_int("max_depth", cfg.sampler.max_depth);
    if (s.contains("target_accept")) {
      if (!s["target_accept"].is_number()) throw ValidationError("config 'sampler': 'target_accept' must be a number");
      cfg.sampler.target_accept = s["target_accept"].get<double>();
    }
    cfg.sampler.validate();
  }
  if (j.contains("treatments")) {
    if (!j["treatments"].is_array()) throw ValidationError("config: 'treatments' must be an array of strings");
    for (const auto& t : j["treatments"]) {
      if (!t.is_string()) throw ValidationError("config: 'treatments' must be an array of strings");
      cfg.treatments.push_back(t.get<std::string>());
    }
  }
  if (j.contains("priors")) {
    if (!j["priors"].is_object()) throw ValidationError("config: 'priors' must be an object");
    cfg.prior_overrides = j["priors"];
  }
  if (j.contains("synthetic")) cfg.synthetic = j["synthetic"];
  return cfg;
}

ExperimentConfig read_config(const fs::path& path) {
  if (!fs::exists(path)) throw ValidationError("config file not found: " + path.string());
  return parse_config(read_json(path), path.parent_path());
}

Json config_to_json(const ExperimentConfig& cfg) {
  Json j;
  j["plots"] = cfg.plots_file;
  if (!cfg.forcing_file.empty()) j["forcing"] = cfg.forcing_file;
  if (!cfg.observations_file.empty()) j["observations"] = cfg.observations_file;
  j["scenario"] = std::string(to_string(cfg.scenario));
  j["seed"] = cfg.sampler.seed;
  j["sampler"] = {{"chains", cfg.sampler.chains},       {"warmup", cfg.sampler.warmup},
                  {"iters", cfg.sampler.iters},         {"thin", cfg.sampler.thin},
                  {"max_depth", cfg.sampler.max_depth}, {"target_accept", cfg.sampler.target_accept}};
  if (!cfg.treatments.empty()) j["treatments"] = cfg.treatments;
  if (!cfg.prior_overrides.empty()) j["priors"] = cfg.prior_overrides;
  if (!cfg.synthetic.is_null()) j["synthetic"] = cfg.synthetic;
  return j;
}

PriorTable build_priors(const std::vector<PlotData>& plots, const ExperimentConfig& cfg) {
  std::vector<std::string> ids;
  std::set<std::string> from_plots;
  for (const auto& p : plots) {
    ids.push_back(p.id);
    from_plots.insert(p.treatment);
  }
  std::vector<std::string> taus = cfg.treatments;
  if (taus.empty()) {
    taus.assign(from_plots.begin(), from_plots.end());
  } else {
    for (const auto& p : plots) {
      if (std::find(taus.begin(), taus.end(), p.treatment) == taus.end())
        throw ValidationError("plot '" + p.id + "' has unknown treatment '" + p.treatment + "'");
    }
  }
  PriorTable table = default_priors(ids, taus);
  apply_prior_overrides(table, cfg.prior_overrides);
  return apply_scenario(table, cfg.scenario);
}

Experiment load_experiment(const fs::path& config_path) {
  Experiment ex;
  ex.config = read_config(config_path);
  if (ex.config.forcing_file.empty()) throw ValidationError("config: missing 'forcing'");
  if (ex.config.observations_file.empty()) throw ValidationError("config: missing 'observations'");
  ex.plots = read_plot_table(ex.config.resolve(ex.config.plots_file));
  read_forcing(ex.config.resolve(ex.config.forcing_file), ex.plots);
  read_observations(ex.config.resolve(ex.config.observations_file), ex.plots);
  for (const auto& p : ex.plots) p.validate();
  ex.priors = build_priors(ex.plots, ex.config);
  return ex;
}

std::vector<fs::path> write_draws(const fs::path& dir, const std::vector<ChainDraws>& chains) {
  if (chains.empty()) throw ValidationError("no chains to export");
  std::vector<fs::path> paths;
  for (const auto& c : chains) {
    std::string s;
    for (std::size_t k = 0; k < c.names.size(); ++k) {
      if (k) s += ',';
      s += csv_field(c.names[k]);
    }
    s += '\n';
    for (Eigen::Index r = 0; r < c.draws.rows(); ++r) {
      for (Eigen::Index k = 0; k < c.draws.cols(); ++k) {
        if (k) s += ',';
        s += format_double(c.draws(r, k));
      }
      s += '\n';
    }
    const fs::path path = dir / ("chain_" + std::to_string(c.chain) + ".csv");
    write_text(path, s);
    paths.push_back(path);
  }
  return paths;
}

std::vector<ChainDraws> read_draws(const fs::path& dir) {
  std::vector<ChainDraws> chains;
  for (int k = 0;; ++k) {
    const fs::path path = dir / ("chain_" + std::to_string(k) + ".csv");
    if (!fs::exists(path)) break;
    std::ifstream in(path);
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path.string() + " is empty");
    ChainDraws c;
    c.chain = k;
    c.names = split(line);
    std::vector<std::vector<double>> rows;
    std::size_t n = 1;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      const auto f = split(line);
      if (f.size() != c.names.size()) throw ValidationError(at_line(path, n) + "wrong number of fields");
      std::vector<double> row;
      for (const auto& s : f) row.push_back(parse_double(s, path, n, "draw"));
      rows.push_back(std::move(row));
    }
    c.draws.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(c.names.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t j = 0; j < rows[r].size(); ++j) c.draws(r, j) = rows[r][j];
    }
    chains.push_back(std::move(c));
  }
  if (chains.empty()) throw ValidationError("no chain_<k>.csv files in " + dir.string());
  return chains;
}

Json summary_to_json(const SummaryRow& row) {
  Json j = {{"name", row.name}, {"mean", row.mean}, {"median", row.median}, {"q05", row.q05},
            {"q25", row.q25},   {"q75", row.q75},   {"q95", row.q95}};
  if (row.prob_negative) j["prob_negative"] = *row.prob_negative;
  if (row.rhat) {
    j["rhat"] = *row.rhat;
    j["converged"] = row.converged();
  } else {
    j["rhat"] = nullptr;
    j["converged"] = nullptr;
  }
  return j;
}

Json report_json(const std::vector<SummaryRow>& summaries, const std::vector<SummaryRow>& flux,
                 const std::vector<ChainDraws>& chains) {
  Json j;
  j["rhat_threshold"] = kRhatThreshold;
  Json rows = Json::array();
  Json bad = Json::array();
  for (const auto& r : summaries) {
    rows.push_back(summary_to_json(r));
    if (r.rhat && !r.converged()) bad.push_back(r.name);
  }
  for (const auto& r : flux) {
    if (r.rhat && !r.converged()) bad.push_back(r.name);
  }
  j["summaries"] = rows;
  Json fl = Json::array();
  for (const auto& r : flux) fl.push_back(summary_to_json(r));
  j["flux"] = fl;
  j["non_converged"] = bad;
  j["all_converged"] = bad.empty();
  Json cs = Json::array();
  for (const auto& c : chains) {
    cs.push_back({{"chain", c.chain},
                  {"kept_draws", c.draws.rows()},
                  {"step_size", c.step_size},
                  {"accept_rate", c.accept_rate},
                  {"divergences", c.divergences},
                  {"leapfrog_steps", c.leapfrog_steps}});
  }
  j["chains"] = cs;
  return j;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_manifest(const fs::path& out_dir, std::string_view command, std::uint64_t seed, const Json& config,
                    const std::vector<fs::path>& artifacts) {
  Json files = Json::array();
  std::vector<fs::path> sorted = artifacts;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& p : sorted) {
    const std::string bytes = read_text(p);
    files.push_back({{"path", fs::relative(p, out_dir).generic_string()},
                     {"bytes", bytes.size()},
                     {"fnv1a", hex64(fnv1a(bytes))}});
  }
  Json j = {{"command", std::string(command)},
            {"seed", seed},
            {"config_hash", hex64(fnv1a(config.dump()))},
            {"artifacts", files}};
  write_json(out_dir / "manifest.json", j);
}

}  // namespace soc
