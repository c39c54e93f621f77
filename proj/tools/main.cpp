// Command-line front end: builds rejection regions, runs closed tests,
// evaluates power, exports integer programs, and dumps conditional
// distributions for multiple binary endpoints.

#include <CLI11.hpp>
#include <json.hpp>

#include "optexact/power.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

namespace {

using nlohmann::json;
using namespace optexact;

constexpr const char* kVersion = OPTEXACT_VERSION;

void fail(const std::string& message) { throw std::invalid_argument(message); }

// --- input loading ---------------------------------------------------------

struct DataOptions {
  std::string json_path;
  std::string csv_path;
  std::string treatment = "treatment";
  std::string control = "control";
};

void add_data_options(CLI::App* cmd, DataOptions& data) {
  cmd->add_option("--data", data.json_path,
                  "Aggregated dataset (JSON with k, categories, trt, ctr)");
  cmd->add_option("--csv", data.csv_path, "Subject-level CSV with header group,ep1,...,epk");
  cmd->add_option("--treatment", data.treatment, "Treatment group label in the CSV")
      ->capture_default_str();
  cmd->add_option("--control", data.control, "Control group label in the CSV")
      ->capture_default_str();
}

CrossTable load_table(const DataOptions& data) {
  if (data.json_path.empty() == data.csv_path.empty())
    fail("exactly one of --data and --csv is required");
  if (!data.json_path.empty()) {
    std::ifstream in(data.json_path);
    if (!in) fail("cannot open dataset '" + data.json_path + "'");
    return read_aggregated_json(in);
  }
  std::ifstream in(data.csv_path);
  if (!in) fail("cannot open dataset '" + data.csv_path + "'");
  return read_subject_csv(in, data.treatment, data.control);
}

// --- option grammars -------------------------------------------------------

// rates=<p_trt>/<p_ctr>[:<p_trt>/<p_ctr>...][,rho=<r>]
AlternativeSpec parse_alt(const std::string& text) {
  AlternativeSpec alt;
  std::stringstream parts(text);
  std::string part;
  bool saw_rates = false;
  while (std::getline(parts, part, ',')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) fail("malformed alternative term '" + part + "'");
    const std::string key = part.substr(0, eq);
    const std::string value = part.substr(eq + 1);
    if (key == "rates") {
      saw_rates = true;
      std::stringstream pairs(value);
      std::string pair;
      while (std::getline(pairs, pair, ':')) {
        const auto slash = pair.find('/');
        if (slash == std::string::npos)
          fail("alternative rates must be treatment/control pairs, got '" + pair + "'");
        try {
          alt.rates_trt.push_back(std::stod(pair.substr(0, slash)));
          alt.rates_ctr.push_back(std::stod(pair.substr(slash + 1)));
        } catch (const std::exception&) {
          fail("cannot parse alternative rate pair '" + pair + "'");
        }
      }
    } else if (key == "rho") {
      try {
        alt.rho = std::stod(value);
      } catch (const std::exception&) {
        fail("cannot parse correlation '" + value + "'");
      }
    } else {
      fail("unknown alternative term '" + key + "'");
    }
  }
  if (!saw_rates) fail("an alternative needs a rates=... term");
  return alt;
}

ObjectiveKind objective_from_name(const std::string& name) {
  if (name == "alpha") return ObjectiveKind::Alpha;
  if (name == "area") return ObjectiveKind::Area;
  if (name == "power") return ObjectiveKind::Power;
  fail("unknown objective '" + name + "' (expected alpha, area, or power)");
  return ObjectiveKind::Alpha;
}

const char* objective_name(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::Alpha: return "alpha";
    case ObjectiveKind::Area: return "area";
    case ObjectiveKind::Power: return "power";
  }
  return "unknown";
}

// <name>[+consonant][+lex=<objective>[:<objective>...]][+alt=pt/pc[:pt/pc...][,rho=r]]
MethodSpec parse_method(const std::string& text) {
  MethodSpec method;
  std::stringstream parts(text);
  std::string part;
  bool first = true;
  while (std::getline(parts, part, '+')) {
    if (first) {
      method.kind = method_from_name(part);
      first = false;
    } else if (part == "consonant") {
      method.consonance = is_joint_method(method.kind) ? ConsonanceMode::JointK2
                                                       : ConsonanceMode::BonferroniMonotone;
    } else if (part.rfind("lex=", 0) == 0) {
      std::stringstream objectives(part.substr(4));
      std::string name;
      while (std::getline(objectives, name, ':'))
        method.lex_tail.push_back(objective_from_name(name));
    } else if (part.rfind("alt=", 0) == 0) {
      method.alt = parse_alt("rates=" + part.substr(4));
    } else {
      fail("unknown method modifier '" + part + "'");
    }
  }
  if (first) fail("empty method name");
  method.label = text;
  return method;
}

std::vector<int> parse_subset(const std::string& text, int k) {
  std::vector<int> subset;
  std::stringstream parts(text);
  std::string part;
  while (std::getline(parts, part, ',')) {
    try {
      subset.push_back(std::stoi(part));
    } catch (const std::exception&) {
      fail("cannot parse endpoint index '" + part + "'");
    }
  }
  if (subset.empty()) fail("empty endpoint subset");
  for (std::size_t i = 0; i < subset.size(); ++i) {
    if (subset[i] < 0 || subset[i] >= k) fail("endpoint index out of range");
    if (i > 0 && subset[i] <= subset[i - 1]) fail("endpoint indices must be increasing");
  }
  return subset;
}

std::vector<int> all_endpoints(int k) {
  std::vector<int> all(static_cast<std::size_t>(k));
  std::iota(all.begin(), all.end(), 0);
  return all;
}

int default_threads() {
  if (const char* env = std::getenv("OPTEXACT_THREADS")) {
    try {
      return std::max(1, std::stoi(env));
    } catch (const std::exception&) {
      fail(std::string("cannot parse OPTEXACT_THREADS value '") + env + "'");
    }
  }
  return 1;
}

// --- output helpers --------------------------------------------------------

void write_output(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot open output file '" + path + "'");
  out << content;
}

json rat_json(const BigRat& value) {
  return json{{"ratio", rational_string(value)}, {"value", to_double(value)}};
}

json alt_json(const AlternativeSpec& alt) {
  if (alt.empty()) return nullptr;
  return json{{"rates_trt", alt.rates_trt}, {"rates_ctr", alt.rates_ctr}, {"rho", alt.rho}};
}

json table_json(const CrossTable& table) {
  const MarginVector m = margins(table);
  return json{{"k", table.k},
              {"n_trt", table.n_trt()},
              {"n_ctr", table.n_ctr()},
              {"margins", m.m}};
}

json members_json(const JointDistribution& dist, const Mask& members) {
  auto list = json::array();
  for (int i = 0; i < dist.size(); ++i)
    if (members.test(static_cast<std::size_t>(i)))
      list.push_back(dist.points[static_cast<std::size_t>(i)].t);
  return list;
}

json boundaries_json(const CriticalBoundaries& bounds) {
  auto contributions = json::array();
  for (const auto& s : bounds.contribution) contributions.push_back(rat_json(s));
  auto tested = json::array();
  for (std::size_t i = 0; i < bounds.c.size(); ++i) tested.push_back(bounds.tested(i));
  return json{{"c", bounds.c},
              {"tested", tested},
              {"contributions", contributions},
              {"spent", rat_json(bounds.sum())}};
}

// --- subcommands -----------------------------------------------------------

struct RegionArgs {
  DataOptions data;
  std::string method = "optimal-alpha";
  std::string alpha = "0.025";
  std::string alt;
  std::string lex;
  std::string split_threshold;
  bool consonant = false;
  std::uint64_t iter_cap = kDefaultIterationCap;
  long long support_limit = kDefaultSupportLimit;
  std::string out;
};

int run_region(const RegionArgs& args) {
  CrossTable table = load_table(args.data);
  table.validate();
  const int k = table.k;
  const BigRat alpha = parse_decimal(args.alpha);
  if (alpha < 0 || alpha > 1) fail("significance level must lie in [0, 1]");

  MethodSpec method = parse_method(args.method);
  if (!args.alt.empty()) method.alt = parse_alt(args.alt);
  if (args.consonant && method.consonance == ConsonanceMode::None)
    method.consonance = is_joint_method(method.kind) ? ConsonanceMode::JointK2
                                                     : ConsonanceMode::BonferroniMonotone;
  if (!args.lex.empty()) {
    std::stringstream names(args.lex);
    std::string name;
    while (std::getline(names, name, ','))
      method.lex_tail.push_back(objective_from_name(name));
  }
  validate_method_spec(method, k);

  const MarginVector M = margins(table);
  std::vector<MarginalTest> tests;
  for (int e = 0; e < k; ++e) tests.push_back(marginal_test(M, e));

  json out;
  out["version"] = kVersion;
  out["command"] = "region";
  out["config"] = json{{"alpha", rat_json(alpha)},
                       {"method", method_label(method)},
                       {"iter_cap", args.iter_cap},
                       {"support_limit", args.support_limit},
                       {"split_threshold",
                        args.split_threshold.empty() ? json(nullptr)
                                                     : json(args.split_threshold)},
                       {"alt", alt_json(method.alt)},
                       {"data", table_json(table)}};

  // An alternative is mandatory for the power objective; for every other
  // method it is optional and only adds the region's power to the report.
  if (!method.alt.empty()) method.alt.validate(k);
  const auto build_dist = [&]() {
    return method.alt.empty()
               ? joint_null_distribution(M, all_endpoints(k), args.support_limit)
               : joint_alt_distribution(M, method.alt.cells_trt(), method.alt.cells_ctr(),
                                        all_endpoints(k), args.support_limit);
  };

  int exit_code = 0;
  if (is_joint_method(method.kind)) {
    const JointDistribution dist = build_dist();
    const DominanceStructure dom = dominance(dist);

    Mask alive(static_cast<std::size_t>(dist.size()));
    alive.set();
    Mask forbidden;
    const Mask* forbidden_ptr = nullptr;
    if (method.consonance == ConsonanceMode::JointK2) {
      forbidden = consonance_forbidden_block(dist, tests, alpha);
      forbidden_ptr = &forbidden;
      alive &= ~forbidden;
    }

    RejectionRegion region;
    if (method.kind == MethodKind::GreedyRegion) {
      if (!args.split_threshold.empty())
        fail("--split-threshold applies to the optimizing joint methods only");
      region = greedy_region(dist, dom, ObjectiveKind::Alpha, GreedyOp::ArgMin, alpha,
                             forbidden_ptr ? &alive : nullptr);
      out["search"] = json{{"iterations", 0}, {"confirmed", true}};
    } else {
      Objective objective;
      objective.primary = method.kind == MethodKind::OptimalAlpha ? ObjectiveKind::Alpha
                          : method.kind == MethodKind::OptimalArea ? ObjectiveKind::Area
                                                                   : ObjectiveKind::Power;
      objective.lex_tail = method.lex_tail;
      SearchOptions search;
      search.max_iterations = args.iter_cap;
      search.forbidden = forbidden_ptr;
      OptResult result;
      if (!args.split_threshold.empty()) {
        const BigRat threshold = parse_decimal(args.split_threshold);
        result = small_prob_split(dist, dom, objective, alpha, threshold, search);
      } else {
        result = branch_and_bound(dist, dom, objective, alpha, search);
      }
      region = result.region;
      out["support"] = json{{"size", result.support_size},
                            {"v1", result.v1_size},
                            {"v2", result.v2_size},
                            {"forced", result.forced_size}};
      out["search"] =
          json{{"iterations", result.iterations}, {"confirmed", result.confirmed_optimal}};
      if (!result.confirmed_optimal) exit_code = 3;
    }
    out["region"] = json{{"size", region.size},
                         {"weight", region.weight.str()},
                         {"level", rat_json(dist.level(region.weight))},
                         {"power", dist.has_alt ? json(region.alt_power) : json(nullptr)},
                         {"members", members_json(dist, region.members)}};
  } else if (method.kind == MethodKind::MinP) {
    const JointDistribution dist = build_dist();
    const MinPResult mp = minp_region(dist, tests, alpha);
    const RejectionRegion region = make_region(dist, mp.members);
    out["search"] = json{{"iterations", 0}, {"confirmed", true}};
    out["region"] = json{{"size", region.size},
                         {"weight", region.weight.str()},
                         {"level", rat_json(dist.level(region.weight))},
                         {"power", dist.has_alt ? json(region.alt_power) : json(nullptr)},
                         {"members", members_json(dist, region.members)}};
    out["min_tail"] = json{{"cutoff", rat_json(mp.q_star)}, {"thresholds", mp.thresholds}};
  } else {
    std::map<unsigned, CriticalBoundaries> memo;
    const CriticalBoundaries bounds =
        subset_boundaries(tests, method, all_endpoints(k), alpha, memo);
    const JointDistribution dist = build_dist();
    const Mask members = boundary_region_mask(dist, bounds.c);
    const RejectionRegion region = make_region(dist, members);
    out["search"] = json{{"iterations", 0}, {"confirmed", true}};
    out["region"] = json{{"size", region.size},
                         {"weight", region.weight.str()},
                         {"level", rat_json(dist.level(region.weight))},
                         {"power", dist.has_alt ? json(region.alt_power) : json(nullptr)},
                         {"members", members_json(dist, region.members)}};
    out["boundaries"] = boundaries_json(bounds);
  }

  write_output(args.out, out.dump(2) + "\n");
  return exit_code;
}

struct TestArgs {
  DataOptions data;
  std::string method = "optimal-alpha";
  std::string alpha = "0.025";
  std::string alt;
  std::string lex;
  bool consonant = false;
  std::uint64_t iter_cap = kDefaultIterationCap;
  long long support_limit = kDefaultSupportLimit;
  std::string out;
};

int run_test(const TestArgs& args) {
  CrossTable table = load_table(args.data);
  table.validate();
  const BigRat alpha = parse_decimal(args.alpha);

  MethodSpec method = parse_method(args.method);
  if (!args.alt.empty()) method.alt = parse_alt(args.alt);
  if (args.consonant && method.consonance == ConsonanceMode::None)
    method.consonance = is_joint_method(method.kind) ? ConsonanceMode::JointK2
                                                     : ConsonanceMode::BonferroniMonotone;
  if (!args.lex.empty()) {
    std::stringstream names(args.lex);
    std::string name;
    while (std::getline(names, name, ','))
      method.lex_tail.push_back(objective_from_name(name));
  }

  ClosedTestOptions options;
  options.max_iterations = args.iter_cap;
  options.support_limit = args.support_limit;
  const ClosedTestReport report = closed_test(table, method, alpha, options);

  json out;
  out["version"] = kVersion;
  out["command"] = "test";
  out["config"] = json{{"alpha", rat_json(alpha)},
                       {"method", method_label(method)},
                       {"iter_cap", args.iter_cap},
                       {"support_limit", args.support_limit},
                       {"alt", alt_json(method.alt)},
                       {"data", table_json(table)}};
  out["observed"] = report.observed;

  auto subsets = json::array();
  for (const auto& subset : report.subsets)
    subsets.push_back(json{{"endpoints", subset.members},
                           {"rejected", subset.rejected},
                           {"p", rat_json(subset.p_value)},
                           {"p_below_alpha_outside", subset.p_below_alpha_outside},
                           {"confirmed", subset.confirmed},
                           {"iterations", subset.iterations}});
  out["subsets"] = std::move(subsets);

  auto endpoints = json::array();
  for (std::size_t e = 0; e < report.rejected.size(); ++e)
    endpoints.push_back(json{{"index", e},
                             {"rejected", static_cast<bool>(report.rejected[e])},
                             {"adjusted_p", rat_json(report.adjusted_p[e])}});
  out["endpoints"] = std::move(endpoints);
  out["global_p"] = rat_json(report.global_p);
  out["all_confirmed"] = report.all_confirmed;

  write_output(args.out, out.dump(2) + "\n");
  return report.all_confirmed ? 0 : 3;
}

struct PowerArgs {
  std::string scenario_path;
  std::vector<std::string> methods;
  std::string alpha = "0.025";
  bool exact = false;
  std::uint64_t sims = 0;
  std::uint64_t seed = 1;
  std::uint64_t iter_cap = kDefaultIterationCap;
  long long support_limit = kDefaultSupportLimit;
  int threads = 0;
  std::string out;
};

int run_power(const PowerArgs& args) {
  if (args.exact == (args.sims > 0)) fail("choose exactly one of --exact and --sims");

  PowerStudyConfig config;
  config.scenario = read_scenario_json(args.scenario_path);
  config.alpha = parse_decimal(args.alpha);
  config.max_iterations = args.iter_cap;
  config.support_limit = args.support_limit;
  config.n_sims = args.sims;
  config.seed = args.seed;
  config.threads = args.threads > 0 ? args.threads : default_threads();
  for (const auto& text : args.methods) config.methods.push_back(parse_method(text));
  if (config.methods.empty()) fail("at least one --method is required");

  const std::vector<PowerReport> reports =
      args.exact ? exact_power(config) : simulate_power(config);

  json out;
  out["version"] = kVersion;
  out["command"] = "power";
  json scenario{{"label", config.scenario.label},
                {"n_trt", config.scenario.n_trt},
                {"n_ctr", config.scenario.n_ctr},
                {"rates_trt", config.scenario.rates_trt},
                {"rates_ctr", config.scenario.rates_ctr},
                {"rho", config.scenario.rho}};
  json cfg{{"alpha", rat_json(config.alpha)},
           {"mode", args.exact ? "exact" : "simulate"},
           {"iter_cap", config.max_iterations},
           {"support_limit", config.support_limit},
           {"threads", config.threads},
           {"scenario", std::move(scenario)}};
  if (!args.exact) {
    cfg["sims"] = config.n_sims;
    cfg["seed"] = config.seed;
  }
  out["config"] = std::move(cfg);

  bool all_confirmed = true;
  auto rows = json::array();
  for (const auto& report : reports) {
    rows.push_back(json{{"method", report.label},
                        {"p_global", report.p_global},
                        {"p_any", report.p_any},
                        {"p_all", report.p_all},
                        {"p_elem", report.p_elem},
                        {"confirmed_share", report.confirmed_share},
                        {"iter_q50", report.iter_q50},
                        {"iter_q90", report.iter_q90},
                        {"iter_max", report.iter_max},
                        {"n_sims", report.n_sims},
                        {"mc_se", report.mc_se}});
    all_confirmed = all_confirmed && report.confirmed_share >= 1.0;
  }
  out["rows"] = std::move(rows);

  write_output(args.out, out.dump(2) + "\n");
  return all_confirmed ? 0 : 3;
}

struct ExportArgs {
  DataOptions data;
  std::string kind = "joint";
  std::string objective = "alpha";
  std::string alpha = "0.025";
  std::string alt;
  bool consonant = false;
  bool float_level = false;
  long long support_limit = kDefaultSupportLimit;
  std::string out;
};

int run_export(const ExportArgs& args) {
  CrossTable table = load_table(args.data);
  table.validate();
  const int k = table.k;
  const BigRat alpha = parse_decimal(args.alpha);
  const MarginVector M = margins(table);
  const ObjectiveKind objective = objective_from_name(args.objective);
  AlternativeSpec alt;
  if (!args.alt.empty()) alt = parse_alt(args.alt);

  std::string text;
  if (args.kind == "joint") {
    JointDistribution dist;
    if (objective == ObjectiveKind::Power) {
      if (alt.empty()) fail("the power objective needs --alt");
      alt.validate(k);
      dist = joint_alt_distribution(M, alt.cells_trt(), alt.cells_ctr(), all_endpoints(k),
                                    args.support_limit);
    } else {
      dist = joint_null_distribution(M, all_endpoints(k), args.support_limit);
    }
    const DominanceStructure dom = dominance(dist);
    Mask forbidden;
    const Mask* forbidden_ptr = nullptr;
    if (args.consonant) {
      if (k != 2) fail("joint consonance is defined for exactly two endpoints");
      std::vector<MarginalTest> tests;
      for (int e = 0; e < k; ++e) tests.push_back(marginal_test(M, e));
      forbidden = consonance_forbidden_block(dist, tests, alpha);
      forbidden_ptr = &forbidden;
    }
    Objective obj;
    obj.primary = objective;
    IlpExportOptions opts;
    opts.integer_level_row = !args.float_level;
    text = export_ilp(dist, dom, obj, alpha, forbidden_ptr, opts);
  } else if (args.kind == "bonf") {
    if (objective == ObjectiveKind::Area) fail("boundary programs support alpha and power only");
    std::vector<MarginalTest> tests;
    for (int e = 0; e < k; ++e) tests.push_back(marginal_test(M, e));
    BonfObjective obj;
    if (objective == ObjectiveKind::Power) {
      if (alt.empty()) fail("the power objective needs --alt");
      alt.validate(k);
      obj.kind = BonfObjectiveKind::PowerSum;
      obj.odds = alt.odds_ratios();
    }
    text = export_bonf_ilp(tests, obj, alpha);
  } else {
    fail("unknown program kind '" + args.kind + "' (expected joint or bonf)");
  }

  write_output(args.out, text);
  return 0;
}

struct DistArgs {
  DataOptions data;
  std::string subset;
  std::string alt;
  long long support_limit = kDefaultSupportLimit;
  std::string out;
};

int run_dist(const DistArgs& args) {
  CrossTable table = load_table(args.data);
  table.validate();
  const MarginVector M = margins(table);
  const std::vector<int> subset =
      args.subset.empty() ? all_endpoints(table.k) : parse_subset(args.subset, table.k);

  JointDistribution dist;
  if (!args.alt.empty()) {
    AlternativeSpec alt = parse_alt(args.alt);
    alt.validate(table.k);
    dist = joint_alt_distribution(M, alt.cells_trt(), alt.cells_ctr(), subset,
                                  args.support_limit);
  } else {
    dist = joint_null_distribution(M, subset, args.support_limit);
  }

  std::ostringstream body;
  dump_distribution_json(dist, body);
  write_output(args.out, body.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal exact rejection regions, closed testing, and power for "
               "multiple binary endpoints"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  RegionArgs region_args;
  auto* region_cmd =
      app.add_subcommand("region", "Construct the rejection region for the full endpoint set");
  add_data_options(region_cmd, region_args.data);
  region_cmd->add_option("--method", region_args.method,
                         "Construction (optimal-alpha, optimal-area, optimal-power, greedy, "
                         "bonf-unweighted, bonf-hkt, bonf-wt, bonf-optimal-alpha, "
                         "bonf-optimal-power, bonf-greedy, minp)")
      ->capture_default_str();
  region_cmd->add_option("--alpha", region_args.alpha, "Significance level")
      ->capture_default_str();
  region_cmd->add_option("--alt", region_args.alt,
                         "Assumed alternative: rates=pt/pc[:pt/pc...][,rho=r]");
  region_cmd->add_option("--lex", region_args.lex,
                         "Lexicographic refinements after the primary objective (comma list)");
  region_cmd->add_flag("--consonant", region_args.consonant,
                       "Constrain the construction to consonant regions");
  region_cmd->add_option("--iter-cap", region_args.iter_cap, "Search node budget")
      ->capture_default_str();
  region_cmd->add_option("--support-limit", region_args.support_limit,
                         "Maximum enumerated support size")
      ->capture_default_str();
  region_cmd->add_option("--split-threshold", region_args.split_threshold,
                         "Split off support points of smallest total mass before the search");
  region_cmd->add_option("--out", region_args.out, "Output file (default: stdout)");

  TestArgs test_args;
  auto* test_cmd = app.add_subcommand("test", "Closed testing of all endpoint subsets");
  add_data_options(test_cmd, test_args.data);
  test_cmd->add_option("--method", test_args.method, "Construction used for the subset tests")
      ->capture_default_str();
  test_cmd->add_option("--alpha", test_args.alpha, "Significance level")->capture_default_str();
  test_cmd->add_option("--alt", test_args.alt,
                       "Assumed alternative: rates=pt/pc[:pt/pc...][,rho=r]");
  test_cmd->add_option("--lex", test_args.lex, "Lexicographic refinements (comma list)");
  test_cmd->add_flag("--consonant", test_args.consonant, "Use the consonant variant");
  test_cmd->add_option("--iter-cap", test_args.iter_cap, "Search node budget")
      ->capture_default_str();
  test_cmd->add_option("--support-limit", test_args.support_limit,
                       "Maximum enumerated support size")
      ->capture_default_str();
  test_cmd->add_option("--out", test_args.out, "Output file (default: stdout)");

  PowerArgs power_args;
  auto* power_cmd = app.add_subcommand("power", "Unconditional power of one or more methods");
  power_cmd->add_option("--scenario", power_args.scenario_path, "Scenario JSON file")
      ->required();
  power_cmd->add_option("--method", power_args.methods,
                        "Method, optionally with modifiers "
                        "name[+consonant][+lex=a:b][+alt=pt/pc:pt/pc,rho=r]; repeatable")
      ->required();
  power_cmd->add_option("--alpha", power_args.alpha, "Significance level")->capture_default_str();
  power_cmd->add_flag("--exact", power_args.exact,
                      "Exact evaluation over all pooled margins (one or two endpoints)");
  power_cmd->add_option("--sims", power_args.sims, "Number of Monte Carlo draws");
  power_cmd->add_option("--seed", power_args.seed, "Simulation seed")->capture_default_str();
  power_cmd->add_option("--iter-cap", power_args.iter_cap, "Search node budget per region")
      ->capture_default_str();
  power_cmd->add_option("--support-limit", power_args.support_limit,
                        "Maximum enumerated support size")
      ->capture_default_str();
  power_cmd->add_option("--threads", power_args.threads,
                        "Worker threads (default: OPTEXACT_THREADS or 1)");
  power_cmd->add_option("--out", power_args.out, "Output file (default: stdout)");

  ExportArgs export_args;
  auto* export_cmd =
      app.add_subcommand("export-ilp", "Write the search as a 0/1 integer program (LP format)");
  add_data_options(export_cmd, export_args.data);
  export_cmd->add_option("--kind", export_args.kind, "Program family: joint or bonf")
      ->capture_default_str();
  export_cmd->add_option("--objective", export_args.objective, "alpha, area, or power")
      ->capture_default_str();
  export_cmd->add_option("--alpha", export_args.alpha, "Significance level")
      ->capture_default_str();
  export_cmd->add_option("--alt", export_args.alt,
                         "Assumed alternative: rates=pt/pc[:pt/pc...][,rho=r]");
  export_cmd->add_flag("--consonant", export_args.consonant,
                       "Exclude the non-consonant block (two endpoints, joint programs)");
  export_cmd->add_flag("--float-level", export_args.float_level,
                       "Probability-scaled level row instead of exact integer weights");
  export_cmd->add_option("--support-limit", export_args.support_limit,
                         "Maximum enumerated support size")
      ->capture_default_str();
  export_cmd->add_option("--out", export_args.out, "Output file (default: stdout)");

  DistArgs dist_args;
  auto* dist_cmd =
      app.add_subcommand("dist", "Dump the conditional joint distribution given the margins");
  add_data_options(dist_cmd, dist_args.data);
  dist_cmd->add_option("--subset", dist_args.subset,
                       "Endpoint indices to keep (comma list, default: all)");
  dist_cmd->add_option("--alt", dist_args.alt,
                       "Assumed alternative: rates=pt/pc[:pt/pc...][,rho=r]");
  dist_cmd->add_option("--support-limit", dist_args.support_limit,
                       "Maximum enumerated support size")
      ->capture_default_str();
  dist_cmd->add_option("--out", dist_args.out, "Output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (region_cmd->parsed()) return run_region(region_args);
    if (test_cmd->parsed()) return run_test(test_args);
    if (power_cmd->parsed()) return run_power(power_args);
    if (export_cmd->parsed()) return run_export(export_args);
    if (dist_cmd->parsed()) return run_dist(dist_args);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const SupportLimitError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
