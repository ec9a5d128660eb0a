#include "praclab/cli/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace praclab::cli {

using nlohmann::json;

std::string_view toString(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Analyze: return "analyze";
    case ExperimentKind::SolveWindow: return "solve-window";
    case ExperimentKind::FeintingSim: return "feinting-sim";
    case ExperimentKind::Latency: return "latency";
    case ExperimentKind::Covert: return "covert";
    case ExperimentKind::Aes: return "aes";
  }
  return "unknown";
}

std::optional<ExperimentKind> parseExperimentKind(std::string_view s) {
  for (auto k : {ExperimentKind::Analyze, ExperimentKind::SolveWindow, ExperimentKind::FeintingSim,
                 ExperimentKind::Latency, ExperimentKind::Covert, ExperimentKind::Aes})
    if (toString(k) == s) return k;
  return std::nullopt;
}

TbWindowSpec parseTbWindow(const std::string& text, const dram::TimingParams& timings) {
  if (text == "auto") return {true, 0};
  constexpr std::string_view suffix = "tREFI";
  try {
    std::size_t used = 0;
    if (text.size() > suffix.size() && text.compare(text.size() - suffix.size(), suffix.size(), suffix) == 0) {
      const std::string num = text.substr(0, text.size() - suffix.size());
      const double f = std::stod(num, &used);
      if (used != num.size() || !(f > 0)) throw std::invalid_argument("bad");
      return {false, static_cast<Ns>(std::llround(f * static_cast<double>(timings.tREFI)))};
    }
    const long long ns = std::stoll(text, &used);
    if (used != text.size() || ns <= 0) throw std::invalid_argument("bad");
    return {false, ns};
  } catch (const std::logic_error&) {
    throw ConfigError("tbWindow", fmt::format("expected \"auto\", \"<x>tREFI\" or a positive ns count, got \"{}\"", text));
  }
}

namespace {

// Reads one JSON object, remembering which keys were consumed so that
// leftovers can be reported as unknown fields.
class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return obj_.contains(key); }
  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* raw(const std::string& key) {
    used_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    const json* v = raw(key);
    if (!v) return;
    try {
      out = convert<T>(*v);
    } catch (const json::exception&) {
      throw ConfigError(field(key), fmt::format("wrong type ({})", v->type_name()));
    }
  }

  template <typename T>
  void getList(const std::string& key, std::vector<T>& out) {
    const json* v = raw(key);
    if (!v) return;
    if (!v->is_array()) throw ConfigError(field(key), "expected an array");
    std::vector<T> tmp;
    for (const auto& e : *v) {
      try {
        tmp.push_back(convert<T>(e));
      } catch (const json::exception&) {
        throw ConfigError(field(key), fmt::format("wrong element type ({})", e.type_name()));
      }
    }
    if (tmp.empty()) throw ConfigError(field(key), "must not be empty");
    out = std::move(tmp);
  }

  Reader child(const std::string& key) {
    used_.insert(key);
    return Reader(obj_.at(key), field(key));
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(field(it.key()), "unknown key");
  }

 private:
  template <typename T>
  static T convert(const json& v) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw json::type_error::create(302, "bool", nullptr);
      return v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw json::type_error::create(302, "integer", nullptr);
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)
          throw json::type_error::create(302, "unsigned", nullptr);
      }
      return v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw json::type_error::create(302, "number", nullptr);
      return v.get<T>();
    } else {
      if (!v.is_string()) throw json::type_error::create(302, "string", nullptr);
      return v.get<T>();
    }
  }

  const json& obj_;
  std::string path_;
  std::set<std::string> used_;
};

template <typename E, typename F>
E parseEnum(const std::string& field, const std::string& text, std::initializer_list<E> values, F name) {
  std::string options;
  for (E e : values) {
    if (name(e) == text) return e;
    options += (options.empty() ? "" : ", ") + std::string(name(e));
  }
  throw ConfigError(field, fmt::format("unknown value \"{}\" (expected one of: {})", text, options));
}

std::string_view resetName(prac::ResetPolicy p) { return p == prac::ResetPolicy::PerTrefw ? "per-trefw" : "on-mitigation-only"; }
std::string_view queueName(prac::QueuePolicy p) {
  return p == prac::QueuePolicy::SingleEntryFrequency ? "single-entry" : "oracle";
}
std::string_view optR1Name(analysis::OptR1Rule r) {
  return r == analysis::OptR1Rule::RefreshWindowIntervals ? "refresh-window-intervals" : "activation-budget";
}

analysis::Convention parseConvention(const std::string& field, const std::string& s) {
  return parseEnum(field, s,
                   {analysis::Convention::Raw, analysis::Convention::RefreshAware, analysis::Convention::Conservative},
                   [](auto c) { return analysis::toString(c); });
}

void readTimings(Reader r, dram::TimingParams& t) {
  r.get("tRC", t.tRC);
  r.get("tRFMab", t.tRFMab);
  r.get("tRFC", t.tRFC);
  r.get("tREFI", t.tREFI);
  r.get("tREFW", t.tREFW);
  r.get("tABOACT", t.tABOACT);
  r.get("readLatency", t.readLatency);
  r.finish();
}

void readPrac(Reader r, prac::PracConfig& p) {
  r.get("nBO", p.nBO);
  r.get("nMit", p.nMit);
  r.get("aboAct", p.aboAct);
  r.get("aboEnabled", p.aboEnabled);
  if (const json* v = r.raw("bat"); v && !v->is_null()) {
    if (!v->is_number_unsigned()) throw ConfigError(r.field("bat"), "expected a non-negative integer or null");
    p.bat = v->get<std::uint32_t>();
  }
  std::string s;
  if (r.has("resetPolicy")) {
    r.get("resetPolicy", s);
    p.resetPolicy = parseEnum(r.field("resetPolicy"), s, {prac::ResetPolicy::PerTrefw, prac::ResetPolicy::OnMitigationOnly},
                              resetName);
  }
  if (r.has("queuePolicy")) {
    r.get("queuePolicy", s);
    p.queuePolicy = parseEnum(r.field("queuePolicy"), s,
                              {prac::QueuePolicy::SingleEntryFrequency, prac::QueuePolicy::UpracOracle}, queueName);
  }
  r.finish();
}

}  // namespace

void ExperimentConfig::validate() const {
  auto wrap = [](const char* field, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(field, e.what());
    }
  };
  wrap("timings", [&] { timings.validate(); });
  wrap("geometry", [&] { geometry.validate(); });
  wrap("prac", [&] { prac.validate(); });
  if (defense == sim::Defense::AboAcb && !prac.bat) throw ConfigError("prac.bat", "required by defense abo+acb");
  if (tbWindow && tbWindow->automatic && defense != sim::Defense::Tprac && kind != ExperimentKind::FeintingSim)
    throw ConfigError("tbWindow", "\"auto\" requires defense \"tprac\"");
  if (trefPeriod && *trefPeriod < 1) throw ConfigError("trefPeriod", "must be >= 1");
  for (double w : analyze.tbWindowsTrefi)
    if (!(w > 0)) throw ConfigError("analyze.tbWindowsTrefi", "windows must be positive");
  if (analyze.rowsPerBank < 1) throw ConfigError("analyze.rowsPerBank", "must be positive");
  for (auto r : feintingSim.r1)
    if (r < 1 || r > geometry.rowsPerBank) throw ConfigError("feintingSim.r1", "R1 must be in [1, rowsPerBank]");
  for (int n : latency.nMit)
    if (n != 1 && n != 2 && n != 4) throw ConfigError("latency.nMit", "values must be 1, 2 or 4");
  for (auto n : covert.nBO)
    if (n < 16) throw ConfigError("covert.nBO", "values must be >= 16");
  if (covert.bits == 0) throw ConfigError("covert.bits", "must be positive");
  if (aes.encryptions < 0) throw ConfigError("aes.encryptions", "must be non-negative");
  for (const auto& k : aes.keys)
    if (k.size() != 32 || k.find_first_not_of("0123456789abcdefABCDEF") != std::string::npos)
      throw ConfigError("aes.keys", fmt::format("\"{}\" is not 32 hex digits", k));
}

ExperimentConfig parseConfig(const json& doc) {
  ExperimentConfig c;
  Reader r(doc, "");
  std::string s;
  if (r.has("experiment")) {
    r.get("experiment", s);
    c.kind = parseExperimentKind(s);
    if (!c.kind) throw ConfigError("experiment", fmt::format("unknown experiment \"{}\"", s));
  }
  r.get("seed", c.seed);
  if (r.has("timings")) readTimings(r.child("timings"), c.timings);
  if (r.has("geometry")) {
    Reader g = r.child("geometry");
    g.get("numBanks", c.geometry.numBanks);
    g.get("rowsPerBank", c.geometry.rowsPerBank);
    g.finish();
  }
  if (r.has("prac")) {
    c.nMitGiven = doc.at("prac").is_object() && doc.at("prac").contains("nMit");
    readPrac(r.child("prac"), c.prac);
  }
  if (r.has("defense")) {
    r.get("defense", s);
    c.defense = parseEnum("defense", s, {sim::Defense::AboOnly, sim::Defense::AboAcb, sim::Defense::Tprac},
                          [](auto d) { return sim::toString(d); });
  }
  if (const json* v = r.raw("tbWindow"); v && !v->is_null()) {
    if (v->is_string()) {
      c.tbWindowText = v->get<std::string>();
    } else if (v->is_number_integer()) {
      c.tbWindowText = std::to_string(v->get<std::int64_t>());
    } else {
      throw ConfigError("tbWindow", "expected a string or an integer ns count");
    }
  }
  if (const json* v = r.raw("trefPeriod"); v && !v->is_null()) {
    if (!v->is_number_integer()) throw ConfigError("trefPeriod", "expected an integer or null");
    c.trefPeriod = v->get<int>();
  }
  r.get("trefSkip", c.trefSkip);
  if (r.has("convention")) {
    r.get("convention", s);
    c.convention = parseConvention("convention", s);
  }
  if (r.has("solverConvention")) {
    r.get("solverConvention", s);
    c.solverConvention = parseConvention("solverConvention", s);
  }
  r.get("check", c.check);
  r.get("events", c.events);

  if (r.has("analyze")) {
    Reader a = r.child("analyze");
    a.getList("tbWindowsTrefi", c.analyze.tbWindowsTrefi);
    a.getList("reset", c.analyze.reset);
    a.get("rowsPerBank", c.analyze.rowsPerBank);
    a.get("maxActTrefw", c.analyze.maxActTrefw);
    if (a.has("optR1Rule")) {
      a.get("optR1Rule", s);
      c.analyze.optR1Rule = parseEnum(a.field("optR1Rule"), s,
                                      {analysis::OptR1Rule::RefreshWindowIntervals, analysis::OptR1Rule::ActivationBudget},
                                      optR1Name);
    }
    a.finish();
  }
  if (r.has("solveWindow")) {
    Reader a = r.child("solveWindow");
    a.getList("nBO", c.solveWindow.nBO);
    a.getList("reset", c.solveWindow.reset);
    a.get("rowsPerBank", c.solveWindow.rowsPerBank);
    a.finish();
  }
  if (r.has("feintingSim")) {
    Reader a = r.child("feintingSim");
    std::vector<std::string> names;
    a.getList("patterns", names);
    if (!names.empty()) {
      c.feintingSim.patterns.clear();
      for (const auto& n : names)
        c.feintingSim.patterns.push_back(parseEnum(
            a.field("patterns"), n,
            {analysis::AttackPattern::Feinting, analysis::AttackPattern::EqualActivations,
             analysis::AttackPattern::DelayedActivations, analysis::AttackPattern::EarlyAggressive,
             analysis::AttackPattern::Random},
            [](auto p) { return analysis::toString(p); }));
    }
    a.getList("r1", c.feintingSim.r1);
    a.get("windows", c.feintingSim.windows);
    a.get("decoyRounds", c.feintingSim.decoyRounds);
    a.get("noRefresh", c.feintingSim.noRefresh);
    a.finish();
  }
  if (r.has("latency")) {
    Reader a = r.child("latency");
    a.getList("nMit", c.latency.nMit);
    a.get("bursts", c.latency.bursts);
    a.get("idleGapNs", c.latency.idleGapNs);
    a.get("triggerActive", c.latency.triggerActive);
    a.finish();
  }
  if (r.has("covert")) {
    Reader a = r.child("covert");
    std::vector<std::string> names;
    a.getList("modes", names);
    if (!names.empty()) {
      c.covert.modes.clear();
      for (const auto& n : names)
        c.covert.modes.push_back(parseEnum(a.field("modes"), n,
                                           {attacks::CovertMode::ActivityBased, attacks::CovertMode::ActivationCountBased},
                                           [](auto m) { return attacks::toString(m); }));
    }
    a.getList("nBO", c.covert.nBO);
    a.get("bits", c.covert.bits);
    if (const json* v = a.raw("windowNs"); v && !v->is_null()) {
      if (!v->is_number_integer() || v->get<std::int64_t>() <= 0)
        throw ConfigError(a.field("windowNs"), "expected a positive integer or null");
      c.covert.windowNs = v->get<Ns>();
    }
    a.finish();
  }
  if (r.has("aes")) {
    Reader a = r.child("aes");
    a.get("encryptions", c.aes.encryptions);
    a.get("randomKeys", c.aes.randomKeys);
    a.getList("keys", c.aes.keys);
    int p = c.aes.fixedPlaintextByte;
    a.get("fixedPlaintextByte", p);
    if (p < 0 || p > 255) throw ConfigError(a.field("fixedPlaintextByte"), "must be in 0..255");
    c.aes.fixedPlaintextByte = static_cast<std::uint8_t>(p);
    a.finish();
  }
  r.finish();

  if (c.tbWindowText) {
    try {
      c.timings.validate();
    } catch (const Error& e) {
      throw ConfigError("timings", e.what());
    }
    c.tbWindow = parseTbWindow(*c.tbWindowText, c.timings);
  } else if (c.defense == sim::Defense::Tprac) {
    c.tbWindowText = "auto";
    c.tbWindow = TbWindowSpec{true, 0};
  }
  c.prac.trefPeriod = c.trefPeriod;
  c.validate();
  return c;
}

ExperimentConfig loadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", fmt::format("cannot read config file {}", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  if (buf.str().find_first_not_of(" \t\r\n") == std::string::npos) throw ConfigError("", "config file is empty");
  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ConfigError("", fmt::format("invalid JSON: {}", e.what()));
  }
  return parseConfig(doc);
}

json toJson(const ExperimentConfig& c) {
  json j;
  if (c.kind) j["experiment"] = toString(*c.kind);
  j["seed"] = c.seed;
  j["timings"] = {{"tRC", c.timings.tRC},       {"tRFMab", c.timings.tRFMab}, {"tRFC", c.timings.tRFC},
                  {"tREFI", c.timings.tREFI},   {"tREFW", c.timings.tREFW},   {"tABOACT", c.timings.tABOACT},
                  {"readLatency", c.timings.readLatency}};
  j["geometry"] = {{"numBanks", c.geometry.numBanks}, {"rowsPerBank", c.geometry.rowsPerBank}};
  j["prac"] = {{"nBO", c.prac.nBO},
               {"nMit", c.prac.nMit},
               {"aboAct", c.prac.aboAct},
               {"aboEnabled", c.prac.aboEnabled},
               {"bat", c.prac.bat ? json(*c.prac.bat) : json(nullptr)},
               {"resetPolicy", resetName(c.prac.resetPolicy)},
               {"queuePolicy", queueName(c.prac.queuePolicy)}};
  j["defense"] = sim::toString(c.defense);
  j["tbWindow"] = c.tbWindowText ? json(*c.tbWindowText) : json(nullptr);
  j["trefPeriod"] = c.trefPeriod ? json(*c.trefPeriod) : json(nullptr);
  j["trefSkip"] = c.trefSkip;
  j["convention"] = analysis::toString(c.convention);
  j["solverConvention"] = analysis::toString(c.solverConvention);
  j["check"] = c.check;
  j["events"] = c.events;
  json resets = json::array();
  for (bool b : c.analyze.reset) resets.push_back(b);
  j["analyze"] = {{"tbWindowsTrefi", c.analyze.tbWindowsTrefi},
                  {"reset", resets},
                  {"rowsPerBank", c.analyze.rowsPerBank},
                  {"maxActTrefw", c.analyze.maxActTrefw},
                  {"optR1Rule", optR1Name(c.analyze.optR1Rule)}};
  json sresets = json::array();
  for (bool b : c.solveWindow.reset) sresets.push_back(b);
  j["solveWindow"] = {{"nBO", c.solveWindow.nBO}, {"reset", sresets}, {"rowsPerBank", c.solveWindow.rowsPerBank}};
  json patterns = json::array();
  for (auto p : c.feintingSim.patterns) patterns.push_back(analysis::toString(p));
  j["feintingSim"] = {{"patterns", patterns},
                      {"r1", c.feintingSim.r1},
                      {"windows", c.feintingSim.windows},
                      {"decoyRounds", c.feintingSim.decoyRounds},
                      {"noRefresh", c.feintingSim.noRefresh}};
  j["latency"] = {{"nMit", c.latency.nMit},
                  {"bursts", c.latency.bursts},
                  {"idleGapNs", c.latency.idleGapNs},
                  {"triggerActive", c.latency.triggerActive}};
  json modes = json::array();
  for (auto m : c.covert.modes) modes.push_back(attacks::toString(m));
  j["covert"] = {{"modes", modes},
                 {"nBO", c.covert.nBO},
                 {"bits", c.covert.bits},
                 {"windowNs", c.covert.windowNs ? json(*c.covert.windowNs) : json(nullptr)}};
  j["aes"] = {{"encryptions", c.aes.encryptions},
              {"randomKeys", c.aes.randomKeys},
              {"keys", c.aes.keys},
              {"fixedPlaintextByte", c.aes.fixedPlaintextByte}};
  return j;
}

}  // namespace praclab::cli
