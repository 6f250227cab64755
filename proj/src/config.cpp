// config.cpp — schema table, validation, defaults, and environment overrides
#include "qlbe/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <string_view>
#include <vector>

namespace qlbe {

namespace {

enum class FieldType { number, integer, unsigned64, string, boolean };

struct FieldSpec {
  const char* group;
  const char* key;
  FieldType type;
};

// The whole schema in one place: every known key, its group, and its type.
// Unknown keys at either level are rejected by name.
constexpr FieldSpec schema[] = {
    {"physical", "beta", FieldType::number},
    {"physical", "m", FieldType::number},
    {"physical", "M", FieldType::number},
    {"physical", "n_gas", FieldType::number},
    {"potential", "kind", FieldType::string},
    {"potential", "coupling", FieldType::number},
    {"potential", "sigma", FieldType::number},
    {"potential", "q_max", FieldType::number},
    {"grid", "dimension", FieldType::integer},
    {"grid", "spacing", FieldType::number},
    {"grid", "half_extent", FieldType::integer},
    {"evolution", "dt", FieldType::number},
    {"evolution", "t_final", FieldType::number},
    {"evolution", "record_every", FieldType::integer},
    {"initial_state", "kind", FieldType::string},
    {"initial_state", "offset", FieldType::number},
    {"initial_state", "width", FieldType::number},
    {"initial_state", "path", FieldType::string},
    {"monte_carlo", "seed", FieldType::unsigned64},
    {"monte_carlo", "n_trajectories", FieldType::integer},
    {"monte_carlo", "q_min", FieldType::number},
    {"monte_carlo", "mode", FieldType::string},
    {"output", "directory", FieldType::string},
    {"output", "format", FieldType::string},
    {"output", "fields", FieldType::boolean},
};

[[noreturn]] void fail(const std::string& message) { throw ConfigError(message); }

std::string dotted(const FieldSpec& field) {
  return std::string(field.group) + "." + field.key;
}

const FieldSpec* find_field(std::string_view group, std::string_view key) {
  for (const auto& field : schema)
    if (group == field.group && key == field.key) return &field;
  return nullptr;
}

void check_type(const FieldSpec& field, const nlohmann::json& value) {
  switch (field.type) {
    case FieldType::number:
      if (!value.is_number()) fail(dotted(field) + " must be a number");
      if (!std::isfinite(value.get<double>())) fail(dotted(field) + " must be finite");
      break;
    case FieldType::integer:
      if (!value.is_number_integer()) fail(dotted(field) + " must be an integer");
      break;
    case FieldType::unsigned64:
      if (!value.is_number_unsigned() &&
          !(value.is_number_integer() && value.get<std::int64_t>() >= 0))
        fail(dotted(field) + " must be a nonnegative integer");
      break;
    case FieldType::string:
      if (!value.is_string()) fail(dotted(field) + " must be a string");
      break;
    case FieldType::boolean:
      if (!value.is_boolean()) fail(dotted(field) + " must be a boolean");
      break;
  }
}

void check_schema(const nlohmann::json& doc) {
  if (!doc.is_object()) fail("config root must be a JSON object");
  for (const auto& [group_name, group] : doc.items()) {
    bool known_group = false;
    for (const auto& field : schema) known_group |= group_name == field.group;
    if (!known_group) fail("unknown key \"" + group_name + "\"");
    if (!group.is_object()) fail(group_name + " must be an object of settings");
    for (const auto& [key, value] : group.items()) {
      const FieldSpec* field = find_field(group_name, key);
      if (!field) fail("unknown key \"" + group_name + "." + key + "\"");
      check_type(*field, value);
    }
  }
}

double get_number(const nlohmann::json& doc, const char* group, const char* key) {
  return doc.at(group).at(key).get<double>();
}

int get_int(const nlohmann::json& doc, const char* group, const char* key) {
  return doc.at(group).at(key).get<int>();
}

std::string get_string(const nlohmann::json& doc, const char* group, const char* key) {
  return doc.at(group).at(key).get<std::string>();
}

void require(bool ok, const std::string& message) {
  if (!ok) fail(message);
}

std::string env_name(const FieldSpec& field) {
  std::string name = "QLBE_";
  for (const char* part : {field.group, field.key}) {
    if (name.size() > 5) name += '_';
    for (const char* c = part; *c; ++c)
      name += static_cast<char>(std::toupper(static_cast<unsigned char>(*c)));
  }
  return name;
}

nlohmann::json parse_env_value(const FieldSpec& field, const std::string& text,
                               const std::string& var) {
  const auto bad = [&](const char* what) {
    fail(var + "=" + text + " does not parse as " + what + " for " + dotted(field));
  };
  switch (field.type) {
    case FieldType::number: {
      char* end = nullptr;
      const double v = std::strtod(text.c_str(), &end);
      if (end == text.c_str() || *end != '\0' || !std::isfinite(v)) bad("a number");
      return v;
    }
    case FieldType::integer:
    case FieldType::unsigned64: {
      std::int64_t v = 0;
      const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
      if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) bad("an integer");
      if (field.type == FieldType::unsigned64 && v < 0) bad("a nonnegative integer");
      if (field.type == FieldType::unsigned64) return static_cast<std::uint64_t>(v);
      return v;
    }
    case FieldType::string:
      return text;
    case FieldType::boolean:
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      bad("a boolean (true/false/1/0)");
  }
  return {};
}

}  // namespace

nlohmann::json default_config_json() {
  const RunConfig d{};
  nlohmann::json doc;
  doc["physical"] = {{"beta", d.gas.beta},
                     {"m", d.gas.mass},
                     {"M", d.particle.mass},
                     {"n_gas", d.gas.number_density}};
  doc["potential"] = {{"kind", "gaussian"},
                      {"coupling", d.potential.coupling},
                      {"sigma", d.potential.sigma},
                      {"q_max", d.potential.q_max}};
  doc["grid"] = {{"dimension", d.grid.dimension},
                 {"spacing", d.grid.spacing},
                 {"half_extent", d.grid.half_extent}};
  doc["evolution"] = {{"dt", d.evolution.dt},
                      {"t_final", d.evolution.t_final},
                      {"record_every", d.evolution.record_every}};
  doc["initial_state"] = {{"kind", d.initial_state.kind},
                          {"offset", d.initial_state.offset},
                          {"width", d.initial_state.width},
                          {"path", d.initial_state.path}};
  doc["monte_carlo"] = {{"seed", d.monte_carlo.seed},
                        {"n_trajectories", d.monte_carlo.n_trajectories},
                        {"q_min", d.monte_carlo.q_min},
                        {"mode", d.monte_carlo.mode}};
  doc["output"] = {{"directory", d.output.directory},
                   {"format", d.output.format},
                   {"fields", d.output.fields}};
  return doc;
}

nlohmann::json parse_json_text(const std::string& text) {
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) fail("config is not valid JSON");
  if (!doc.is_object()) fail("config root must be a JSON object");
  return doc;
}

void apply_env_overrides(nlohmann::json& doc) {
  for (const auto& field : schema) {
    const std::string var = env_name(field);
    const char* value = std::getenv(var.c_str());
    if (value == nullptr) continue;
    doc[field.group][field.key] = parse_env_value(field, value, var);
  }
}

RunConfig config_from_json(const nlohmann::json& doc) {
  check_schema(doc);

  nlohmann::json full = default_config_json();
  for (const auto& [group_name, group] : doc.items())
    for (const auto& [key, value] : group.items()) full[group_name][key] = value;

  RunConfig cfg;
  cfg.gas.beta = get_number(full, "physical", "beta");
  cfg.gas.mass = get_number(full, "physical", "m");
  cfg.particle.mass = get_number(full, "physical", "M");
  cfg.gas.number_density = get_number(full, "physical", "n_gas");
  require(cfg.gas.beta > 0.0, "physical.beta must be > 0");
  require(cfg.gas.mass > 0.0, "physical.m must be > 0");
  require(cfg.particle.mass > 0.0, "physical.M must be > 0");
  require(cfg.gas.number_density > 0.0, "physical.n_gas must be > 0");

  const std::string kind = get_string(full, "potential", "kind");
  const double coupling = get_number(full, "potential", "coupling");
  if (kind == "gaussian") {
    const double sigma = get_number(full, "potential", "sigma");
    require(sigma > 0.0, "potential.sigma must be > 0");
    cfg.potential = PotentialSpec::make_gaussian(coupling, sigma);
    cfg.potential.q_max = get_number(full, "potential", "q_max");
  } else if (kind == "cutoff_constant") {
    const double q_max = get_number(full, "potential", "q_max");
    require(q_max > 0.0, "potential.q_max must be > 0");
    cfg.potential = PotentialSpec::make_cutoff_constant(coupling, q_max);
    cfg.potential.sigma = get_number(full, "potential", "sigma");
  } else {
    fail("potential.kind must be \"gaussian\" or \"cutoff_constant\"");
  }
  require(coupling >= 0.0, "potential.coupling must be >= 0");

  cfg.grid.dimension = get_int(full, "grid", "dimension");
  cfg.grid.spacing = get_number(full, "grid", "spacing");
  cfg.grid.half_extent = get_int(full, "grid", "half_extent");
  require(cfg.grid.dimension == 1 || cfg.grid.dimension == 3, "grid.dimension must be 1 or 3");
  require(cfg.grid.spacing > 0.0, "grid.spacing must be > 0");
  require(cfg.grid.half_extent >= 1, "grid.half_extent must be >= 1");

  cfg.evolution.dt = get_number(full, "evolution", "dt");
  cfg.evolution.t_final = get_number(full, "evolution", "t_final");
  cfg.evolution.record_every = get_int(full, "evolution", "record_every");
  require(cfg.evolution.dt > 0.0, "evolution.dt must be > 0");
  require(cfg.evolution.t_final >= 0.0, "evolution.t_final must be >= 0");
  require(cfg.evolution.record_every >= 1, "evolution.record_every must be >= 1");

  cfg.initial_state.kind = get_string(full, "initial_state", "kind");
  cfg.initial_state.offset = get_number(full, "initial_state", "offset");
  cfg.initial_state.width = get_number(full, "initial_state", "width");
  cfg.initial_state.path = get_string(full, "initial_state", "path");
  require(cfg.initial_state.kind == "maxwell" || cfg.initial_state.kind == "delta" ||
              cfg.initial_state.kind == "pure" || cfg.initial_state.kind == "file",
          "initial_state.kind must be \"maxwell\", \"delta\", \"pure\", or \"file\"");
  require(cfg.initial_state.width > 0.0, "initial_state.width must be > 0");
  require(cfg.initial_state.kind != "file" || !cfg.initial_state.path.empty(),
          "initial_state.path must be set when initial_state.kind is \"file\"");

  cfg.monte_carlo.seed = full.at("monte_carlo").at("seed").get<std::uint64_t>();
  cfg.monte_carlo.n_trajectories = get_int(full, "monte_carlo", "n_trajectories");
  cfg.monte_carlo.q_min = get_number(full, "monte_carlo", "q_min");
  cfg.monte_carlo.mode = get_string(full, "monte_carlo", "mode");
  require(cfg.monte_carlo.n_trajectories >= 2, "monte_carlo.n_trajectories must be >= 2");
  require(cfg.monte_carlo.q_min > 0.0, "monte_carlo.q_min must be > 0");
  require(cfg.monte_carlo.mode == "auto" || cfg.monte_carlo.mode == "lattice" ||
              cfg.monte_carlo.mode == "continuum",
          "monte_carlo.mode must be \"auto\", \"lattice\", or \"continuum\"");
  require(cfg.monte_carlo.mode != "lattice" || cfg.grid.dimension == 1,
          "monte_carlo.mode \"lattice\" requires grid.dimension = 1");

  cfg.output.directory = get_string(full, "output", "directory");
  cfg.output.format = get_string(full, "output", "format");
  cfg.output.fields = full.at("output").at("fields").get<bool>();
  require(cfg.output.format == "csv" || cfg.output.format == "json",
          "output.format must be \"csv\" or \"json\"");
  require(!cfg.output.directory.empty(), "output.directory must not be empty");

  cfg.resolved = full;
  return cfg;
}

RunConfig parse_config(const std::string& text) {
  return config_from_json(parse_json_text(text));
}

}  // namespace qlbe
