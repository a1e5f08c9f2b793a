// Batch runner: executes named identity-verification experiments parsed from
// a flat key=value config file and renders a fixed-schema CSV report.

#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "quatfrac/integral_id.hpp"

namespace quatfrac::runner {

// Config parse or validation failure; the message names the line and field.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Pass/fail conditions attached to one experiment via require.* keys.  All
// residual bounds are multiplied by the global tol-scale at run time; order
// windows are not.
struct Contract {
    std::optional<double> residual_max;  // finest level: residual <= bound
    std::optional<double> residual_rel;  // finest level: residual <= bound * |rhs|
    bool monotone = false;               // residuals strictly decrease across levels
    std::optional<double> order_min;     // final measured order within the window
    std::optional<double> order_max;
};

// Closed-form function or weight family: a name plus numeric coefficients.
struct FamilySpec {
    std::string family;
    std::vector<double> coeffs;
};

// One experiment section, fully typed and validated.
struct Experiment {
    std::string name;
    std::string identity;
    int line = 0;  // first config line of the section, for diagnostics

    grid::Box box{{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}};
    std::vector<integral_id::Resolution> levels;

    // Three-dimensional operator packs (real parts used; parse rejects
    // imaginary parts for the 3-D identities).
    std::array<std::complex<double>, 3> alpha{{{1.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}}};
    std::array<std::complex<double>, 3> beta{{{1.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}}};
    AValue sigma{1.0, 1.0, 1.0};
    AValue sigma_g{1.0, 1.0, 1.0};
    FamilySpec phi{"linear", {1.0}};

    // Test functions; defaults are filled per identity at parse time.
    FamilySpec f;
    FamilySpec g;

    grid::Point3 x{0.5, 0.5, 0.5};
    grid::Point3 y{0.5, 0.5, 0.5};

    // One-dimensional inverse-property experiment.
    double interval_a = 0.0;
    double interval_b = 1.0;
    std::complex<double> alpha1{0.5, 0.0};
    double rho = 1.0;
    int points = 10;

    // Sphere moment.
    double radius = 1.0;
    grid::Point3 center{0.0, 0.0, 0.0};

    std::uint64_t seed = 1;
    Contract contract;
};

struct Config {
    std::vector<Experiment> experiments;
};

// Parses and validates config text; throws ConfigError with line/field
// diagnostics.  load_config reads the file first.
Config parse_config(const std::string& text);
Config load_config(const std::string& path);

struct RunReport {
    std::string csv;                   // full report: schema line, header, rows
    std::vector<std::string> summary;  // one PASS/FAIL line per experiment
    bool all_pass = false;
};

// Runs every experiment level in config order (rows in that order), records
// runtime domain errors per row, and evaluates the contracts.  all_pass is
// true iff every experiment has no error rows and satisfies its contract.
RunReport run(const Config& cfg, double tol_scale = 1.0);

// The ten verifiable identities, one line each, fixed order.
std::string identity_catalogue();

// Names accepted by the identity field, in catalogue order.
const std::vector<std::string>& identity_names();

}  // namespace quatfrac::runner
