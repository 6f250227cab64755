// qlbe/config.hpp — JSON run configuration: schema validation, defaults,
// environment overrides, and the fully-resolved echo used by run manifests
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "qlbe/core.hpp"
#include "qlbe/qlbe_generator.hpp"

namespace qlbe {

// Raised for every malformed configuration: JSON syntax errors, unknown keys,
// type mismatches, and constraint violations.  The message names the
// offending key and the constraint it broke.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Fully-resolved run configuration.  Every field has a default, so the empty
// document "{}" is valid; `resolved` echoes the complete effective document
// (defaults filled in) for the output manifest.
struct RunConfig {
  GasModel gas;             // physical.{m, beta, n_gas}
  ParticleModel particle;   // physical.M
  PotentialSpec potential;  // potential.{kind, coupling, sigma, q_max}
  MomentumGrid grid;        // grid.{dimension, spacing, half_extent}
  EvolutionConfig evolution;  // evolution.{dt, t_final, record_every}

  struct InitialState {
    std::string kind = "maxwell";  // maxwell | delta | pure | file
    double offset = 0.0;           // momentum displacement (delta/pure/cl moments)
    double width = 1.0;            // momentum spread (pure state, cl moments)
    std::string path;              // diagonal state CSV (kind = file)
  } initial_state;

  struct MonteCarlo {
    std::uint64_t seed = 1;
    int n_trajectories = 1000;
    double q_min = 1e-3;        // infrared transfer cutoff for 1D continuum sampling
    std::string mode = "auto";  // auto | lattice | continuum (unraveling kind)
  } monte_carlo;

  struct Output {
    std::string directory = "out";
    std::string format = "csv";  // csv | json (data tables; scalar reports stay JSON)
    bool fields = false;         // cl-evolve: also write phase-space snapshots
  } output;

  nlohmann::json resolved;
};

// The complete default document (all groups, all keys).
nlohmann::json default_config_json();

// Parses a JSON text into a document.  Throws ConfigError on syntax errors or
// a non-object root.
nlohmann::json parse_json_text(const std::string& text);

// Applies environment overrides QLBE_<GROUP>_<KEY> (the uppercased dotted key
// path with separators mapped to '_', e.g. physical.beta -> QLBE_PHYSICAL_BETA)
// onto the document.  Values parse per the schema type; a value that does not
// parse is a ConfigError.
void apply_env_overrides(nlohmann::json& doc);

// Validates the document against the schema (unknown keys rejected, types and
// constraints checked), fills defaults, and builds the typed configuration.
RunConfig config_from_json(const nlohmann::json& doc);

// Convenience: parse_json_text + config_from_json, without env overrides.
RunConfig parse_config(const std::string& text);

}  // namespace qlbe
