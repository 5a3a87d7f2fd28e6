#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qsync/models.hpp"
#include "qsync/table.hpp"

namespace qsync {

// ---------------------------------------------------------------------------
// experiment descriptions
// ---------------------------------------------------------------------------

enum class ExperimentKind {
    Steady,         // steady-state observables of the two-qudit model
    PhaseLockSweep, // numeric and perturbative |<S+>|/eps per qudit
    ZeroCrossing,   // coupling strengths where the coherences vanish
    ExistenceMap,   // zero-crossing existence over the (w_a, w_b) grid
    DetuningMap,    // detuning pair restoring the crossing, per drive detuning
    SyncSweep,      // synchronization measure and enhancement ratio
    RmaxMap,        // ratio extrema over a two-axis grid
    QutritSweep,    // spherical-tensor magnitudes of qudit A
    CqedRun,        // drive-locked circuit observables with model references
    CqedCalibrate,  // frequency corrections and extracted rates of the circuit
};

struct SweepAxis {
    std::string name;
    double start = 0.0;
    double stop = 0.0;
    int points = 1;
    bool log_scale = false;
    std::vector<double> values() const;
};

// Named parameter overrides evaluated before the sweep axes; one table row
// block (and one plotted series) per variant.
struct Variant {
    std::string label;
    std::map<std::string, double> set;
};

// A fully deterministic experiment: kind, base parameters, variants and the
// sweep grid. Spin-model kinds carry model in relaxation-rate units
// ("Gamma"); circuit kinds carry circuit either in angular frequencies
// ("rad_s") or in plain-Hz values scaled by 2 pi at evaluation ("Hz_2pi").
// circuit.delta_corr is always derived at evaluation time, never configured.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Steady;
    std::string units;
    std::string output;  // file stem for run products
    std::string title;
    OscillatorParams model;
    CqedParams circuit;
    bool unit_total_rates = false;  // derive gamma_j = 1 - w_j after overrides
    std::vector<SweepAxis> sweep;
    std::vector<Variant> variants;
    double rtol = 1e-6;  // trajectory tolerances (circuit kinds)
    double atol = 1e-9;
    double g_lo = 1e-2;  // root and extremum search window
    double g_hi = 10.0;
    int rmax_scan = 160;      // ratio scan nodes per extremum search
    double t_span = 10e-6;    // trajectory span (s) for circuit kinds
    int n_samples = 400;
    bool compare_partial = false;  // SyncSweep: add the partially coherent column
    bool with_sync = false;        // CqedRun: add synchronization columns
};

// ---------------------------------------------------------------------------
// parsing, presets, execution
// ---------------------------------------------------------------------------

// Parses and validates a JSON experiment description. Throws ConfigError
// whose message carries the offending field path.
ExperimentConfig parse_config(const std::string& json_text);

// Canonical echo with every field materialized, in the configured units;
// parsing the echo reproduces the configuration.
nlohmann::json config_json(const ExperimentConfig& c);

// Fixed catalogue of shipped experiment descriptions, name and one-line
// description, in listing order.
std::vector<std::pair<std::string, std::string>> list_presets();
ExperimentConfig preset_config(const std::string& name);

// Evaluates the variants x sweep grid on the given number of worker threads
// (0 picks the hardware count). Grid points are independent and aggregated
// in axis order, so the table is identical for every worker count. A solver
// failure truncates the rows at the first failing point and sets the failed
// flag with the diagnostic; completed earlier rows are kept.
ResultTable run_experiment(const ExperimentConfig& c, int workers = 0);

}  // namespace qsync
