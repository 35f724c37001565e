#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "unishrink/cli/app.hpp"
#include "unishrink/errors.hpp"
#include "unishrink/mcar.hpp"
#include "unishrink/sim_bench.hpp"

namespace unishrink::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::pair<Command, std::string_view> kCommands[] = {
    {Command::Simulate, "simulate"},         {Command::FitPrecision, "fit-precision"},
    {Command::FitRegression, "fit-regression"}, {Command::FitMcar, "fit-mcar"},
    {Command::ElicitPrior, "elicit-prior"},  {Command::Bench, "bench"},
};

[[noreturn]] void fail(const std::string& pointer, const std::string& message) {
  throw ConfigError(pointer + ": " + message);
}

std::string child(const std::string& pointer, std::string_view key) {
  return pointer + "/" + std::string(key);
}

std::string type_name(const Json& value) { return value.type_name(); }

bool is_count(const Json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

void only_keys(const Json& node, const std::string& pointer,
               std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : node.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      std::string names;
      for (auto a : allowed) names += (names.empty() ? "" : ", ") + std::string(a);
      fail(child(pointer, key), "unknown key (expected one of: " + names + ")");
    }
  }
}

/// The object at node[key], created empty when absent.
Json& section(Json& node, std::string_view key, const std::string& pointer) {
  Json& s = node[std::string(key)];
  if (s.is_null()) s = Json::object();
  if (!s.is_object()) fail(child(pointer, key), "expected an object, got " + type_name(s));
  return s;
}

double number(Json& node, std::string_view key, const std::string& pointer,
              std::optional<double> fallback) {
  const std::string k(key);
  if (!node.contains(k)) {
    if (!fallback) fail(child(pointer, key), "required number is missing");
    node[k] = *fallback;
  }
  const Json& v = node[k];
  if (!v.is_number()) fail(child(pointer, key), "expected a number, got " + type_name(v));
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(child(pointer, key), "must be finite");
  return x;
}

double positive(Json& node, std::string_view key, const std::string& pointer,
                std::optional<double> fallback) {
  const double x = number(node, key, pointer, fallback);
  if (!(x > 0.0)) fail(child(pointer, key), "must be positive");
  return x;
}

std::uint64_t count(Json& node, std::string_view key, const std::string& pointer,
                    std::optional<std::uint64_t> fallback) {
  const std::string k(key);
  if (!node.contains(k)) {
    if (!fallback) fail(child(pointer, key), "required integer is missing");
    node[k] = *fallback;
  }
  const Json& v = node[k];
  if (is_count(v)) return v.get<std::uint64_t>();
  if (v.is_number_integer()) fail(child(pointer, key), "must be non-negative");
  fail(child(pointer, key), "expected a non-negative integer, got " + type_name(v));
}

std::string text(Json& node, std::string_view key, const std::string& pointer,
                 std::optional<std::string> fallback) {
  const std::string k(key);
  if (!node.contains(k)) {
    if (!fallback) fail(child(pointer, key), "required string is missing");
    node[k] = *fallback;
  }
  const Json& v = node[k];
  if (!v.is_string()) fail(child(pointer, key), "expected a string, got " + type_name(v));
  return v.get<std::string>();
}

bool flag(Json& node, std::string_view key, const std::string& pointer, bool fallback) {
  const std::string k(key);
  if (!node.contains(k)) node[k] = fallback;
  const Json& v = node[k];
  if (!v.is_boolean()) fail(child(pointer, key), "expected true or false, got " + type_name(v));
  return v.get<bool>();
}

/// Makes node[key] an absolute path to an existing file.
void input_path(Json& node, std::string_view key, const std::string& pointer, const fs::path& base,
                bool required) {
  const std::string k(key);
  if (!node.contains(k)) {
    if (required) fail(child(pointer, key), "required input path is missing");
    return;
  }
  const fs::path given(text(node, key, pointer, std::nullopt));
  const fs::path resolved = fs::absolute(given.is_absolute() ? given : base / given).lexically_normal();
  if (!fs::is_regular_file(resolved)) {
    throw IoError(child(pointer, key) + ": no such file '" + resolved.string() + "'");
  }
  node[k] = resolved.string();
}

void default_tau(Json& tau, PriorFamily family) {
  switch (family) {
    case PriorFamily::ExponentialPower:
      tau = Json{{"gamma_inv_q", Json::array({1.0, 0.1})}};
      break;
    case PriorFamily::GeneralizedDoublePareto:
      tau = Json{{"uniform_transform", true}};
      break;
    default:
      tau = Json{{"half_cauchy", 1.0}};
  }
}

TauHyperPrior parse_tau(Json& tau, const std::string& pointer) {
  if (!tau.is_object() || tau.size() != 1) {
    fail(pointer,
         "expected exactly one of {\"fixed\": x}, {\"gamma_inv_q\": [a, b]}, "
         "{\"half_cauchy\": s}, {\"uniform_transform\": true}");
  }
  only_keys(tau, pointer, {"fixed", "gamma_inv_q", "half_cauchy", "uniform_transform"});
  if (tau.contains("fixed")) return FixedTau{positive(tau, "fixed", pointer, std::nullopt)};
  if (tau.contains("half_cauchy")) {
    return HalfCauchyTau{positive(tau, "half_cauchy", pointer, std::nullopt)};
  }
  if (tau.contains("uniform_transform")) {
    if (!flag(tau, "uniform_transform", pointer, true)) {
      fail(child(pointer, "uniform_transform"), "must be true when given");
    }
    return UniformOnTransform{};
  }
  const Json& ab = tau["gamma_inv_q"];
  const std::string p = child(pointer, "gamma_inv_q");
  if (!ab.is_array() || ab.size() != 2 || !ab[0].is_number() || !ab[1].is_number()) {
    fail(p, "expected [shape, rate]");
  }
  const double a = ab[0].get<double>();
  const double b = ab[1].get<double>();
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    fail(p, "shape and rate must be positive");
  }
  return GammaOnInversePowerQ{a, b};
}

void check_sampler(Json& doc, Command command) {
  Json& s = section(doc, "sampler", "");
  only_keys(s, "/sampler", {"iters", "burnin", "thin", "seed", "chains"});
  const auto iters = count(s, "iters", "/sampler", 15000);
  const auto burnin = count(s, "burnin", "/sampler", 5000);
  const auto thin = count(s, "thin", "/sampler", 1);
  count(s, "seed", "/sampler", 1);
  const auto chains = count(s, "chains", "/sampler", 1);
  if (command == Command::Simulate) return;
  if (iters <= burnin) {
    fail("/sampler/iters", "must exceed /sampler/burnin (" + std::to_string(iters) +
                               " <= " + std::to_string(burnin) + ")");
  }
  if (thin == 0) fail("/sampler/thin", "must be positive");
  if (thin > iters - burnin) fail("/sampler/thin", "leaves no kept draws");
  if (chains == 0) fail("/sampler/chains", "must be positive");
  if (command == Command::ElicitPrior && thin != 1) {
    fail("/sampler/thin", "prior elicitation keeps every post-burnin draw; thin must be 1");
  }
}

void check_ledger(Json& doc, const fs::path& base) {
  Json& l = section(doc, "ledger", "");
  only_keys(l, "/ledger", {"graph", "centers", "negative_edges", "boxes"});
  input_path(l, "graph", "/ledger", base, false);
  input_path(l, "centers", "/ledger", base, false);
  flag(l, "negative_edges", "/ledger", false);
  if (!l.contains("boxes")) l["boxes"] = Json::array();
  if (!l["boxes"].is_array()) fail("/ledger/boxes", "expected an array");
  for (std::size_t k = 0; k < l["boxes"].size(); ++k) {
    Json& box = l["boxes"][k];
    const std::string p = "/ledger/boxes/" + std::to_string(k);
    if (!box.is_object()) fail(p, "expected {\"i\", \"j\", \"lo\", \"hi\"}");
    only_keys(box, p, {"i", "j", "lo", "hi"});
    count(box, "i", p, std::nullopt);
    count(box, "j", p, std::nullopt);
    for (const char* end : {"lo", "hi"}) {
      if (!box.contains(end)) box[end] = nullptr;
      if (!box[end].is_null()) number(box, end, p, std::nullopt);
    }
    if (!box["lo"].is_null() && !box["hi"].is_null() && !(box["lo"].get<double>() < box["hi"].get<double>())) {
      fail(p, "lo must be below hi");
    }
  }
}

void check_regions(Json& node, const std::string& pointer, const fs::path& base) {
  const bool file = node.contains("adjacency");
  const bool grid = node.contains("lattice");
  if (file == grid) fail(pointer, "give exactly one of \"adjacency\" (CSV path) or \"lattice\" ([rows, cols])");
  if (file) {
    input_path(node, "adjacency", pointer, base, true);
    return;
  }
  const Json& rc = node["lattice"];
  if (!rc.is_array() || rc.size() != 2 || !is_count(rc[0]) || !is_count(rc[1]) ||
      rc[0].get<std::uint64_t>() * rc[1].get<std::uint64_t>() < 2) {
    fail(child(pointer, "lattice"), "expected [rows, cols] with at least two regions");
  }
}

void check_simulate(Json& doc) {
  Json& s = section(doc, "simulate", "");
  const std::string kind = text(s, "kind", "/simulate", "precision");
  if (kind == "precision") {
    only_keys(s, "/simulate", {"kind", "model", "p", "n", "alpha"});
    const auto model = count(s, "model", "/simulate", 1);
    if (model < 1 || model > 4) fail("/simulate/model", "must be 1, 2, 3 or 4");
    if (count(s, "p", "/simulate", 30) < 2) fail("/simulate/p", "must be at least 2");
    count(s, "n", "/simulate", 30);
    if (s.contains("alpha")) {
      const double a = number(s, "alpha", "/simulate", std::nullopt);
      if (!(a > 0.0 && a <= 1.0)) fail("/simulate/alpha", "must lie in (0, 1]");
      if (model < 3) fail("/simulate/alpha", "only models 3 and 4 use an edge probability");
    }
  } else if (kind == "regression") {
    only_keys(s, "/simulate", {"kind", "scenario", "configuration", "n", "noise_sd"});
    const auto scenario = text(s, "scenario", "/simulate", "independent");
    if (scenario != "independent" && scenario != "correlated") {
      fail("/simulate/scenario", "must be \"independent\" or \"correlated\"");
    }
    const auto c = count(s, "configuration", "/simulate", 1);
    if (c < 1 || c > 5) fail("/simulate/configuration", "must be 1..5");
    if (count(s, "n", "/simulate", 50) < 1) fail("/simulate/n", "must be positive");
    positive(s, "noise_sd", "/simulate", 3.0);
  } else {
    fail("/simulate/kind", "must be \"precision\" or \"regression\"");
  }
}

MCARVariant variant_of(const std::string& name) {
  if (name == "gv") return MCARVariant::GV;
  if (name == "wp1") return MCARVariant::WP1;
  if (name == "wp2") return MCARVariant::WP2;
  fail("/mcar/variant", "must be one of gv, wp1, wp2");
}

void check_row_prior(Json& node, const std::string& pointer) {
  Json& row = section(node, "row_prior", pointer);
  const std::string p = child(pointer, "row_prior");
  if (!row.contains("family")) row["family"] = "ep";
  if (!row.contains("tau")) row["tau"] = Json{{"fixed", 1.0}};
  const auto [spec, hyper] = parse_prior(row, p);
  if (!is_fixed(hyper)) fail(child(p, "tau"), "the row scale must be {\"fixed\": x}");
}

void check_mcar(Json& doc, const fs::path& base) {
  Json& m = section(doc, "mcar", "");
  only_keys(m, "/mcar", {"variant", "adjacency", "lattice", "wishart_df", "rho", "row_prior"});
  const auto variant = variant_of(text(m, "variant", "/mcar", "wp1"));
  check_regions(m, "/mcar", base);
  if (variant != MCARVariant::GV && m.contains("wishart_df")) {
    fail("/mcar/wishart_df", "only the gv variant uses a Wishart column precision");
  }
  if (variant != MCARVariant::WP2) {
    for (const char* key : {"rho", "row_prior"}) {
      if (m.contains(key)) fail(child("/mcar", key), "only the wp2 variant uses this setting");
    }
  }
  if (variant == MCARVariant::GV) {
    if (!(number(m, "wishart_df", "/mcar", 3.0) > 2.0)) fail("/mcar/wishart_df", "must exceed 2");
  }
  if (variant == MCARVariant::WP2) {
    number(m, "rho", "/mcar", 0.9);
    check_row_prior(m, "/mcar");
  }
}

void check_elicit(Json& doc, const fs::path& base) {
  Json& e = section(doc, "elicit", "");
  only_keys(e, "/elicit", {"adjacency", "lattice", "rho", "tau_values", "row_prior"});
  if (!e.contains("adjacency") && !e.contains("lattice")) e["lattice"] = Json::array({2, 5});
  check_regions(e, "/elicit", base);
  number(e, "rho", "/elicit", 0.9);
  if (!e.contains("tau_values")) e["tau_values"] = Json::array({0.1, 1.0, 10.0});
  const Json& taus = e["tau_values"];
  if (!taus.is_array() || taus.empty()) fail("/elicit/tau_values", "expected a non-empty array");
  for (std::size_t k = 0; k < taus.size(); ++k) {
    if (!taus[k].is_number() || !(taus[k].get<double>() > 0.0)) {
      fail("/elicit/tau_values/" + std::to_string(k), "must be a positive number");
    }
  }
  Json& row = section(e, "row_prior", "/elicit");
  only_keys(row, "/elicit/row_prior", {"family", "q", "nu", "alpha"});
  if (!row.contains("family")) row["family"] = "ep";
  row["tau"] = Json{{"fixed", 1.0}};
  parse_prior(row, "/elicit/row_prior");
  row.erase("tau");
}

void check_bench(Json& doc) {
  Json& b = section(doc, "bench", "");
  only_keys(b, "/bench", {"models", "p", "n", "replicates", "priors", "model_seed"});
  if (!b.contains("models")) b["models"] = Json::array({1, 2, 3, 4});
  if (!b.contains("n")) b["n"] = Json::array({30, 100});
  if (!b.contains("priors")) {
    b["priors"] = Json::array();
    for (const auto& prior : benchmark_priors()) b["priors"].push_back(prior.label);
  }
  for (const char* key : {"models", "n", "priors"}) {
    if (!b[key].is_array() || b[key].empty()) fail(child("/bench", key), "expected a non-empty array");
  }
  for (std::size_t k = 0; k < b["models"].size(); ++k) {
    const Json& m = b["models"][k];
    if (!is_count(m) || m.get<std::uint64_t>() < 1 || m.get<std::uint64_t>() > 4) {
      fail("/bench/models/" + std::to_string(k), "must be 1, 2, 3 or 4");
    }
  }
  for (std::size_t k = 0; k < b["n"].size(); ++k) {
    if (!is_count(b["n"][k])) fail("/bench/n/" + std::to_string(k), "expected a non-negative integer");
  }
  for (std::size_t k = 0; k < b["priors"].size(); ++k) {
    const Json& label = b["priors"][k];
    const std::string p = "/bench/priors/" + std::to_string(k);
    if (!label.is_string()) fail(p, "expected a prior label");
    try {
      benchmark_prior(label.get<std::string>());
    } catch (const InvalidSpec& e) {
      fail(p, e.what());
    }
  }
  if (count(b, "p", "/bench", 30) < 2) fail("/bench/p", "must be at least 2");
  if (count(b, "replicates", "/bench", 20) < 1) fail("/bench/replicates", "must be positive");
  count(b, "model_seed", "/bench", doc["sampler"]["seed"].get<std::uint64_t>());
}

}  // namespace

std::string_view command_name(Command command) noexcept {
  for (const auto& [c, name] : kCommands) {
    if (c == command) return name;
  }
  return "";
}

Command parse_command(std::string_view name) {
  for (const auto& [c, n] : kCommands) {
    if (n == name) return c;
  }
  throw ConfigError("/command: unknown command '" + std::string(name) + "'");
}

std::pair<PriorSpec, TauHyperPrior> parse_prior(Json& node, const std::string& pointer) {
  if (!node.is_object()) fail(pointer, "expected an object");
  only_keys(node, pointer, {"family", "q", "nu", "alpha", "tau"});
  const std::string family = text(node, "family", pointer, std::nullopt);
  std::optional<PriorSpec> spec;
  auto shape_only = [&](std::string_view key) {
    for (const char* other : {"q", "nu", "alpha"}) {
      if (other != key && node.contains(other)) {
        fail(child(pointer, other), "not a parameter of the " + family + " family");
      }
    }
  };
  if (family == "ep") {
    shape_only("q");
    spec = PriorSpec::exponential_power(positive(node, "q", pointer, 1.0));
  } else if (family == "student_t") {
    shape_only("nu");
    spec = PriorSpec::student_t(positive(node, "nu", pointer, 3.0));
  } else if (family == "gdp") {
    shape_only("alpha");
    spec = PriorSpec::generalized_double_pareto(positive(node, "alpha", pointer, 1.0));
  } else if (family == "log") {
    shape_only("");
    spec = PriorSpec::logarithmic();
  } else {
    fail(child(pointer, "family"), "unknown prior family '" + family +
                                       "' (expected one of: ep, student_t, gdp, log)");
  }
  Json& tau = node["tau"];
  if (tau.is_null()) default_tau(tau, spec->family());
  TauHyperPrior hyper = parse_tau(tau, child(pointer, "tau"));
  if (const auto* fixed = std::get_if<FixedTau>(&hyper)) spec = spec->with_tau(fixed->value);
  try {
    validate(hyper, *spec);
  } catch (const InvalidSpec& e) {
    fail(child(pointer, "tau"), e.what());
  }
  return {*spec, hyper};
}

RunConfig resolve_config(Command command, Json doc, const FlagOverrides& flags,
                         const fs::path& base_dir) {
  if (doc.is_null()) doc = Json::object();
  if (!doc.is_object()) fail("", "the configuration must be a JSON object");
  if (doc.contains("command")) {
    const Json& c = doc["command"];
    if (!c.is_string() || c.get<std::string>() != command_name(command)) {
      fail("/command", "does not match the requested command '" + std::string(command_name(command)) + "'");
    }
  }
  doc["command"] = std::string(command_name(command));
  doc["schema_version"] = kSchemaVersion;

  Json& sampler = section(doc, "sampler", "");
  if (flags.seed) sampler["seed"] = *flags.seed;
  if (flags.iters) sampler["iters"] = *flags.iters;
  if (flags.burnin) sampler["burnin"] = *flags.burnin;
  if (flags.thin) sampler["thin"] = *flags.thin;
  if (flags.chains) sampler["chains"] = *flags.chains;
  Json& io = section(doc, "io", "");
  if (flags.out) io["out"] = flags.out->string();

  std::set<std::string> allowed{"command", "schema_version", "sampler", "io"};
  check_sampler(doc, command);

  // Output directory: relative to the working directory when given as a
  // flag, to the config file otherwise.
  const fs::path out_given(text(io, "out", "/io", "out"));
  const fs::path out_base = flags.out ? fs::current_path() : base_dir;
  io["out"] = fs::absolute(out_given.is_absolute() ? out_given : out_base / out_given)
                  .lexically_normal()
                  .string();

  switch (command) {
    case Command::Simulate:
      only_keys(io, "/io", {"out"});
      allowed.insert("simulate");
      check_simulate(doc);
      break;
    case Command::FitPrecision:
      only_keys(io, "/io", {"out", "data"});
      input_path(io, "data", "/io", base_dir, true);
      allowed.insert({"prior", "ledger"});
      if (!doc.contains("prior")) doc["prior"] = Json{{"family", "ep"}, {"q", 1.0}};
      parse_prior(doc["prior"], "/prior");
      check_ledger(doc, base_dir);
      break;
    case Command::FitRegression:
      only_keys(io, "/io", {"out", "x", "y"});
      input_path(io, "x", "/io", base_dir, true);
      input_path(io, "y", "/io", base_dir, true);
      allowed.insert("prior");
      if (!doc.contains("prior")) doc["prior"] = Json{{"family", "ep"}, {"q", 0.2}};
      parse_prior(doc["prior"], "/prior");
      break;
    case Command::FitMcar:
      only_keys(io, "/io", {"out", "data", "replicates"});
      if (io.contains("data") == io.contains("replicates")) {
        fail("/io", "give exactly one of \"replicates\" (one CSV per replicate) or \"data\" (stacked CSV)");
      }
      if (io.contains("data")) {
        input_path(io, "data", "/io", base_dir, true);
      } else {
        Json& files = io["replicates"];
        if (!files.is_array() || files.empty()) fail("/io/replicates", "expected a non-empty array of paths");
        for (std::size_t k = 0; k < files.size(); ++k) {
          Json holder{{"path", files[k]}};
          input_path(holder, "path", "/io/replicates/" + std::to_string(k), base_dir, true);
          files[k] = holder["path"];
        }
      }
      allowed.insert({"prior", "mcar"});
      check_mcar(doc, base_dir);
      if (doc["mcar"]["variant"] == "gv") {
        if (doc.contains("prior")) fail("/prior", "the gv variant uses a Wishart column precision");
      } else {
        if (!doc.contains("prior")) doc["prior"] = Json{{"family", "log"}};
        parse_prior(doc["prior"], "/prior");
      }
      break;
    case Command::ElicitPrior:
      only_keys(io, "/io", {"out"});
      allowed.insert("elicit");
      check_elicit(doc, base_dir);
      break;
    case Command::Bench:
      only_keys(io, "/io", {"out"});
      allowed.insert("bench");
      check_bench(doc);
      break;
  }
  for (const auto& [key, value] : doc.items()) {
    if (!allowed.count(key)) {
      fail("/" + key, "not used by the " + std::string(command_name(command)) + " command");
    }
  }
  Json ordered = Json::object();
  for (const char* key : {"command", "schema_version", "sampler", "io"}) ordered[key] = doc[key];
  for (const auto& [key, value] : doc.items()) {
    if (!ordered.contains(key)) ordered[key] = value;
  }
  return RunConfig{command, std::move(ordered)};
}

RunConfig parse_config(Command command, const FlagOverrides& flags) {
  Json doc = Json::object();
  fs::path base = fs::current_path();
  if (flags.config) {
    std::ifstream in(*flags.config);
    if (!in) throw IoError("cannot read config file '" + flags.config->string() + "'");
    try {
      doc = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(flags.config->string() + ": " + e.what());
    }
    base = fs::absolute(*flags.config).parent_path();
  }
  return resolve_config(command, std::move(doc), flags, base);
}

std::uint64_t RunConfig::iters() const { return resolved.at("sampler").at("iters").get<std::uint64_t>(); }
std::uint64_t RunConfig::burnin() const { return resolved.at("sampler").at("burnin").get<std::uint64_t>(); }
std::uint64_t RunConfig::thin() const { return resolved.at("sampler").at("thin").get<std::uint64_t>(); }
std::uint64_t RunConfig::seed() const { return resolved.at("sampler").at("seed").get<std::uint64_t>(); }
std::uint64_t RunConfig::chains() const { return resolved.at("sampler").at("chains").get<std::uint64_t>(); }
fs::path RunConfig::out_dir() const { return resolved.at("io").at("out").get<std::string>(); }

int exit_code_for(const std::exception& error) noexcept {
  if (dynamic_cast<const IoError*>(&error)) return 4;
  if (dynamic_cast<const ConfigError*>(&error) || dynamic_cast<const InvalidSpec*>(&error) ||
      dynamic_cast<const RhoOutOfRange*>(&error)) {
    return 2;
  }
  if (dynamic_cast<const fs::filesystem_error*>(&error)) return 4;
  return 3;
}

Json error_document(const std::exception& error) {
  const auto* e = dynamic_cast<const Error*>(&error);
  return Json{{"error",
               {{"kind", e ? e->kind() : "internal_error"},
                {"message", error.what()},
                {"exit_code", exit_code_for(error)}}}};
}

}  // namespace unishrink::cli
