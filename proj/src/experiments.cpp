#include "qsync/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <thread>

#include "qsync/cqed_calibration.hpp"
#include "qsync/errors.hpp"
#include "qsync/lindblad.hpp"
#include "qsync/metrics.hpp"
#include "qsync/operators.hpp"
#include "qsync/perturbative.hpp"

namespace qsync {

namespace {

using nlohmann::json;

constexpr const char* kVersion = "1.0.0";

[[noreturn]] void fail(const std::string& path, const std::string& why) {
    throw ConfigError(path, why);
}

// ---------------------------------------------------------------------------
// experiment kinds
// ---------------------------------------------------------------------------

struct KindName {
    const char* name;
    ExperimentKind kind;
};

constexpr KindName kKinds[] = {
    {"steady", ExperimentKind::Steady},
    {"phase-lock-sweep", ExperimentKind::PhaseLockSweep},
    {"zero-crossing", ExperimentKind::ZeroCrossing},
    {"existence-map", ExperimentKind::ExistenceMap},
    {"detuning-map", ExperimentKind::DetuningMap},
    {"sync-sweep", ExperimentKind::SyncSweep},
    {"rmax-map", ExperimentKind::RmaxMap},
    {"qutrit-sweep", ExperimentKind::QutritSweep},
    {"cqed-run", ExperimentKind::CqedRun},
    {"cqed-calibrate", ExperimentKind::CqedCalibrate},
};

const char* kind_name(ExperimentKind k) {
    for (const auto& kn : kKinds)
        if (kn.kind == k) return kn.name;
    throw std::logic_error("unknown experiment kind");
}

bool is_circuit_kind(ExperimentKind k) {
    return k == ExperimentKind::CqedRun || k == ExperimentKind::CqedCalibrate;
}

bool needs_spin_half(ExperimentKind k) {
    return k == ExperimentKind::PhaseLockSweep || k == ExperimentKind::ZeroCrossing ||
           k == ExperimentKind::ExistenceMap || k == ExperimentKind::DetuningMap;
}

// ---------------------------------------------------------------------------
// sweepable parameter slots
// ---------------------------------------------------------------------------

double* spin_slot(OscillatorParams& p, const std::string& name) {
    if (name == "delta_d") return &p.delta_d;
    if (name == "delta_q") return &p.delta_q;
    if (name == "eps") return &p.eps;
    if (name == "g") return &p.g;
    if (name == "w_a") return &p.w_a;
    if (name == "w_b") return &p.w_b;
    if (name == "gamma_a") return &p.gamma_a;
    if (name == "gamma_b") return &p.gamma_b;
    if (name == "gamma_phi") return &p.gamma_phi;
    return nullptr;
}

double* circuit_slot(CqedParams& p, const std::string& name) {
    if (name == "g_ab") return &p.g_ab;
    if (name == "eps") return &p.eps;
    if (name == "pump_rabi_a") return &p.pump_rabi[0];
    if (name == "pump_rabi_b") return &p.pump_rabi[1];
    if (name == "gamma_phi_a") return &p.gamma_phi[0];
    if (name == "gamma_phi_b") return &p.gamma_phi[1];
    if (name == "gamma0_a") return &p.gamma0[0];
    if (name == "gamma0_b") return &p.gamma0[1];
    if (name == "kappa_a") return &p.kappa[0];
    if (name == "kappa_b") return &p.kappa[1];
    return nullptr;
}

bool valid_slot(ExperimentKind kind, const std::string& name) {
    if (is_circuit_kind(kind)) {
        CqedParams p;
        return circuit_slot(p, name) != nullptr;
    }
    OscillatorParams p;
    return spin_slot(p, name) != nullptr;
}

// ---------------------------------------------------------------------------
// json access with path diagnostics
// ---------------------------------------------------------------------------

void check_keys(const json& o, const std::string& path, std::initializer_list<const char*> ok) {
    for (auto it = o.begin(); it != o.end(); ++it) {
        if (std::none_of(ok.begin(), ok.end(),
                         [&](const char* a) { return it.key() == a; }))
            fail(path + "." + it.key(), "unknown field");
    }
}

double num_at(const json& o, const std::string& path, const char* key,
              std::optional<double> def = {}) {
    if (!o.contains(key)) {
        if (def) return *def;
        fail(path + "." + key, "missing required number");
    }
    if (!o[key].is_number()) fail(path + "." + key, "expected a number");
    return o[key].get<double>();
}

int int_at(const json& o, const std::string& path, const char* key, std::optional<int> def = {}) {
    if (!o.contains(key)) {
        if (def) return *def;
        fail(path + "." + key, "missing required integer");
    }
    if (!o[key].is_number_integer()) fail(path + "." + key, "expected an integer");
    return o[key].get<int>();
}

bool bool_at(const json& o, const std::string& path, const char* key, bool def) {
    if (!o.contains(key)) return def;
    if (!o[key].is_boolean()) fail(path + "." + key, "expected a boolean");
    return o[key].get<bool>();
}

std::string str_at(const json& o, const std::string& path, const char* key,
                   std::optional<std::string> def = {}) {
    if (!o.contains(key)) {
        if (def) return *def;
        fail(path + "." + key, "missing required string");
    }
    if (!o[key].is_string()) fail(path + "." + key, "expected a string");
    return o[key].get<std::string>();
}

std::array<double, 2> pair_at(const json& o, const std::string& path, const char* key,
                              std::optional<std::array<double, 2>> def = {}) {
    if (!o.contains(key)) {
        if (def) return *def;
        fail(path + "." + key, "missing required pair of numbers");
    }
    const json& v = o[key];
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        fail(path + "." + key, "expected a pair of numbers");
    return {v[0].get<double>(), v[1].get<double>()};
}

// ---------------------------------------------------------------------------
// parameter assembly per grid point
// ---------------------------------------------------------------------------

void apply_named(const ExperimentConfig& c, OscillatorParams& sp, CqedParams& cp,
                 const std::string& name, double value, const std::string& where) {
    double* slot = is_circuit_kind(c.kind) ? circuit_slot(cp, name) : spin_slot(sp, name);
    if (!slot) fail(where, "unknown parameter name '" + name + "'");
    *slot = value;
}

struct PointParams {
    OscillatorParams spin;
    CqedParams circuit;
};

PointParams point_params(const ExperimentConfig& c, int variant,
                         const std::vector<double>& axis_values) {
    PointParams p{c.model, c.circuit};
    if (!c.variants.empty())
        for (const auto& [name, value] : c.variants[variant].set)
            apply_named(c, p.spin, p.circuit, name, value, "variants");
    for (std::size_t a = 0; a < c.sweep.size(); ++a)
        apply_named(c, p.spin, p.circuit, c.sweep[a].name, axis_values[a], "sweep");

    if (is_circuit_kind(c.kind)) {
        const double f = c.units == "Hz_2pi" ? 2.0 * pi : 1.0;
        CqedParams& q = p.circuit;
        for (int j = 0; j < 2; ++j) {
            q.omega_q[j] *= f;
            q.omega_a[j] *= f;
            q.omega_p[j] *= f;
            q.alpha[j] *= f;
            q.g_res[j] *= f;
            q.kappa[j] *= f;
            q.gamma0[j] *= f;
            q.gamma_phi[j] *= f;
            q.pump_rabi[j] *= f;
        }
        q.g_ab *= f;
        q.eps *= f;
        q.delta_corr = calibrated_corrections(q);
    } else if (c.unit_total_rates) {
        p.spin.gamma_a = 1.0 - p.spin.w_a;
        p.spin.gamma_b = 1.0 - p.spin.w_b;
    }
    return p;
}

// ---------------------------------------------------------------------------
// per-kind schemas and evaluators
// ---------------------------------------------------------------------------

double opt_or_nan(const std::optional<double>& v) {
    return v ? *v : std::numeric_limits<double>::quiet_NaN();
}

void value_schema(const ExperimentConfig& c, std::vector<std::string>& names,
                  std::vector<std::string>& units) {
    const auto add = [&](const char* n, const char* u) {
        names.push_back(n);
        units.push_back(u);
    };
    const char* fu = c.units == "Hz_2pi" ? "Hz" : "rad/s";
    switch (c.kind) {
        case ExperimentKind::Steady:
            add("coh_a_re", "1"), add("coh_a_im", "1"), add("coh_a_abs", "1");
            add("coh_b_re", "1"), add("coh_b_im", "1"), add("coh_b_abs", "1");
            add("sz_a", "1"), add("sz_b", "1"), add("purity", "1");
            break;
        case ExperimentKind::PhaseLockSweep:
            add("coh_a_num", "1/Gamma"), add("coh_b_num", "1/Gamma");
            add("coh_a_analytic", "1/Gamma"), add("coh_b_analytic", "1/Gamma");
            break;
        case ExperimentKind::ZeroCrossing:
            add("g0_a", "Gamma"), add("g0_b", "Gamma");
            break;
        case ExperimentKind::ExistenceMap:
            add("g0_a", "Gamma"), add("g0_b", "Gamma");
            add("exists_a", "1"), add("exists_b", "1");
            break;
        case ExperimentKind::DetuningMap:
            add("delta_q_star", "Gamma"), add("g0", "Gamma");
            break;
        case ExperimentKind::SyncSweep:
            add("omega", "nats"), add("omega_over_eps2", "nats/Gamma^2"), add("r", "1");
            if (c.model.s.twice_s == 1) add("coh_tu_abs", "1"), add("coh_td_abs", "1");
            if (c.compare_partial) add("omega_partial_over_eps2", "nats/Gamma^2");
            break;
        case ExperimentKind::RmaxMap:
            add("r_max", "1"), add("g_star", "Gamma"), add("r_min", "1"), add("g_dip", "Gamma");
            break;
        case ExperimentKind::QutritSweep:
            for (int k = 1; k <= c.model.s.twice_s; ++k)
                for (int q = 1; q <= k; ++q) {
                    names.push_back("t" + std::to_string(k) + std::to_string(q) + "_abs");
                    units.push_back("1");
                }
            break;
        case ExperimentKind::CqedRun:
            add("cqed_coh_a", "1"), add("cqed_coh_b", "1");
            add("model_coh_a", "1"), add("model_coh_b", "1");
            add("tail_a", "1"), add("tail_b", "1");
            if (c.with_sync) {
                add("omega_cqed", "nats"), add("omega_model", "nats");
                add("tail_state", "1");
            }
            break;
        case ExperimentKind::CqedCalibrate:
            add("dispersive_a", fu), add("pump_shift_a", fu), add("delta_a", fu);
            add("dispersive_b", fu), add("pump_shift_b", fu), add("delta_b", fu);
            add("w_eff_a", fu), add("gamma_eff_a", fu);
            add("w_eff_b", fu), add("gamma_eff_b", fu);
            add("gain_loss_ratio_a", "1"), add("gain_loss_ratio_b", "1");
            add("p_ss_a", "1"), add("p_ss_b", "1");
            break;
    }
}

// Reduced qubit model matched to the circuit: extracted rates, halved
// dephasing, doubled coupling and drive.
OscillatorParams reduced_model(const CqedParams& p, const RateFit& fa, const RateFit& fb) {
    OscillatorParams sp;
    sp.w_a = fa.w_eff;
    sp.gamma_a = fa.gamma_eff;
    sp.w_b = fb.w_eff;
    sp.gamma_b = fb.gamma_eff;
    sp.gamma_phi = 0.25 * (p.gamma_phi[0] + p.gamma_phi[1]);
    sp.g = 2.0 * p.g_ab;
    sp.eps = 2.0 * p.eps;
    return sp;
}

std::vector<double> eval_point(const ExperimentConfig& c, const PointParams& pp) {
    std::vector<double> v;
    const OscillatorParams& p = pp.spin;
    switch (c.kind) {
        case ExperimentKind::Steady: {
            const DensityMatrix ss = steady_state(build_two_qudit(p));
            const PhaseLockResult a = phase_locking(ss, 0, p.eps);
            const PhaseLockResult b = phase_locking(ss, 1, p.eps);
            const Matrix sz_a = ops::embed(ops::spin_z(p.s), 0, ss.layout);
            const Matrix sz_b = ops::embed(ops::spin_z(p.s), 1, ss.layout);
            v = {a.coherence.real(), a.coherence.imag(), a.magnitude,
                 b.coherence.real(), b.coherence.imag(), b.magnitude,
                 expectation(ss, sz_a).real(), expectation(ss, sz_b).real(),
                 (ss.rho * ss.rho).trace().real()};
            break;
        }
        case ExperimentKind::PhaseLockSweep: {
            const DensityMatrix ss = steady_state(build_two_qudit(p));
            const FirstOrderState first = solve_first(p);
            v = {phase_locking(ss, 0, p.eps).normalized, phase_locking(ss, 1, p.eps).normalized,
                 std::abs(first.splus_a), std::abs(first.splus_b)};
            break;
        }
        case ExperimentKind::ZeroCrossing: {
            const auto ga = zero_crossing(p, Qubit::A, c.g_lo, c.g_hi);
            const auto gb = zero_crossing(p, Qubit::B, c.g_lo, c.g_hi);
            v = {opt_or_nan(ga), opt_or_nan(gb)};
            break;
        }
        case ExperimentKind::ExistenceMap: {
            const auto cell = existence_map({p.w_a}, {p.w_b}, p, c.g_lo, c.g_hi)[0][0];
            v = {opt_or_nan(cell.g0_a), opt_or_nan(cell.g0_b),
                 cell.g0_a ? 1.0 : 0.0, cell.g0_b ? 1.0 : 0.0};
            break;
        }
        case ExperimentKind::DetuningMap: {
            const auto r = restore_detuning(p, -5.0, 5.0, c.g_lo, c.g_hi);
            v = {r ? r->delta_q : std::numeric_limits<double>::quiet_NaN(),
                 r ? r->g0 : std::numeric_limits<double>::quiet_NaN()};
            break;
        }
        case ExperimentKind::SyncSweep: {
            const RatioResult rr = ratio_r(p, p.g);
            const double e2 = p.eps * p.eps;
            v = {rr.omega_g, rr.omega_g / e2, rr.value};
            if (p.s.twice_s == 1 || c.compare_partial) {
                const DensityMatrix ss = steady_state(build_two_qudit(p));
                if (p.s.twice_s == 1) {
                    const CollectiveCoherences cc = collective_coherences(ss);
                    v.push_back(std::abs(cc.c_tu));
                    v.push_back(std::abs(cc.c_td));
                }
                if (c.compare_partial) {
                    OscillatorParams u = p;
                    u.eps = 0.0;
                    v.push_back(sync_measure_partial(ss, build_two_qudit(u)).omega / e2);
                }
            }
            break;
        }
        case ExperimentKind::RmaxMap: {
            const RMaxResult r = r_max(p, c.g_lo, c.g_hi, c.rmax_scan);
            v = {r.infinite ? std::numeric_limits<double>::quiet_NaN() : r.r_max, r.g_star,
                 r.infinite ? std::numeric_limits<double>::quiet_NaN() : r.r_min, r.g_dip};
            break;
        }
        case ExperimentKind::QutritSweep: {
            const DensityMatrix ss = steady_state(build_two_qudit(p));
            const DensityMatrix qa = partial_trace(ss, {0});
            for (const TensorExpectation& te : tensor_expectations(qa, p.s))
                if (te.q >= 1) v.push_back(std::abs(te.value));
            break;
        }
        case ExperimentKind::CqedRun: {
            const CqedParams& q = pp.circuit;
            const LockedCircuitState lk =
                cqed_locked_state(q, c.t_span, c.n_samples, c.rtol, c.atol);
            const RateFit fa = extract_rates(q, Qubit::A);
            const RateFit fb = extract_rates(q, Qubit::B);
            const OscillatorParams sp = reduced_model(q, fa, fb);
            const DensityMatrix ss = steady_state(build_two_qudit(sp));
            v = {std::abs(lk.coh_a), std::abs(lk.coh_b),
                 phase_locking(ss, 0).magnitude, phase_locking(ss, 1).magnitude,
                 lk.tail_a, lk.tail_b};
            if (c.with_sync) {
                CqedParams q0 = q;
                q0.eps = 0.0;
                const LockedCircuitState lk0 =
                    cqed_locked_state(q0, c.t_span, c.n_samples, c.rtol, c.atol);
                OscillatorParams sp0 = sp;
                sp0.eps = 0.0;
                const DensityMatrix ss0 = steady_state(build_two_qudit(sp0));
                v.push_back(sync_measure(lk.rho, lk0.rho).omega);
                v.push_back(sync_measure(ss, ss0).omega);
                v.push_back(lk.tail_state);
            }
            break;
        }
        case ExperimentKind::CqedCalibrate: {
            const CqedParams& q = pp.circuit;
            const double f = c.units == "Hz_2pi" ? 2.0 * pi : 1.0;
            std::array<double, 2> disp{}, pump{};
            for (int j = 0; j < 2; ++j) {
                disp[j] = dispersive_shift(q.g_res[j], q.omega_q[j], q.omega_a[j]);
                pump[j] = pump_shift(q.pump_rabi[j], std::abs(q.alpha[j]),
                                     gamma_f(q.g_res[j], q.kappa[j]));
            }
            const RateFit fa = extract_rates(q, Qubit::A);
            const RateFit fb = extract_rates(q, Qubit::B);
            v = {disp[0] / f, pump[0] / f, (disp[0] + pump[0]) / f,
                 disp[1] / f, pump[1] / f, (disp[1] + pump[1]) / f,
                 fa.w_eff / f, fa.gamma_eff / f, fb.w_eff / f, fb.gamma_eff / f,
                 fa.w_eff / fa.gamma_eff, fb.w_eff / fb.gamma_eff, fa.p_ss, fb.p_ss};
            break;
        }
    }
    return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// sweep axes
// ---------------------------------------------------------------------------

std::vector<double> SweepAxis::values() const {
    std::vector<double> v(points);
    for (int i = 0; i < points; ++i) {
        const double f = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
        v[i] = log_scale ? start * std::pow(stop / start, f) : start + f * (stop - start);
    }
    return v;
}

// ---------------------------------------------------------------------------
// parsing and echoing
// ---------------------------------------------------------------------------

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        fail("json", e.what());
    }
    if (!j.is_object()) fail("json", "top level must be an object");
    check_keys(j, "config",
               {"experiment", "units", "output", "title", "model", "circuit",
                "unit_total_rates", "sweep", "variants", "tolerances", "options"});

    ExperimentConfig c;
    const std::string kind = str_at(j, "config", "experiment");
    bool known = false;
    for (const auto& kn : kKinds)
        if (kind == kn.name) {
            c.kind = kn.kind;
            known = true;
        }
    if (!known) fail("config.experiment", "unknown experiment '" + kind + "'");

    c.units = str_at(j, "config", "units");
    if (is_circuit_kind(c.kind)) {
        if (c.units != "rad_s" && c.units != "Hz_2pi")
            fail("config.units", "circuit experiments need \"rad_s\" or \"Hz_2pi\"");
    } else if (c.units != "Gamma") {
        fail("config.units", "two-qudit experiments need \"Gamma\"");
    }
    c.output = str_at(j, "config", "output", std::string(kind));
    c.title = str_at(j, "config", "title", std::string());

    if (is_circuit_kind(c.kind)) {
        if (j.contains("model")) fail("config.model", "circuit experiments take \"circuit\"");
        if (!j.contains("circuit") || !j["circuit"].is_object())
            fail("config.circuit", "missing required object");
        const json& o = j["circuit"];
        check_keys(o, "circuit",
                   {"omega_q", "omega_a", "omega_p", "alpha", "g_res", "kappa", "gamma0",
                    "gamma_phi", "pump_rabi", "g_ab", "eps", "n_transmon", "n_resonator"});
        CqedParams& q = c.circuit;
        q.omega_q = pair_at(o, "circuit", "omega_q");
        q.omega_a = pair_at(o, "circuit", "omega_a");
        q.omega_p = pair_at(o, "circuit", "omega_p");
        q.alpha = pair_at(o, "circuit", "alpha");
        q.g_res = pair_at(o, "circuit", "g_res");
        q.kappa = pair_at(o, "circuit", "kappa");
        q.gamma0 = pair_at(o, "circuit", "gamma0");
        q.gamma_phi = pair_at(o, "circuit", "gamma_phi", {{0.0, 0.0}});
        q.pump_rabi = pair_at(o, "circuit", "pump_rabi", {{0.0, 0.0}});
        q.g_ab = num_at(o, "circuit", "g_ab", 0.0);
        q.eps = num_at(o, "circuit", "eps", 0.0);
        q.n_transmon = int_at(o, "circuit", "n_transmon", 3);
        q.n_resonator = int_at(o, "circuit", "n_resonator", 3);
        try {
            q.validate();
        } catch (const std::exception& e) {
            fail("circuit", e.what());
        }
    } else {
        if (j.contains("circuit")) fail("config.circuit", "two-qudit experiments take \"model\"");
        if (!j.contains("model") || !j["model"].is_object())
            fail("config.model", "missing required object");
        const json& o = j["model"];
        check_keys(o, "model", {"s", "delta_d", "delta_q", "eps", "g", "w_a", "w_b", "gamma_a",
                                "gamma_b", "gamma_phi"});
        OscillatorParams& m = c.model;
        const double s = num_at(o, "model", "s", 0.5);
        const int twice = static_cast<int>(std::lround(2.0 * s));
        if (twice < 1 || std::abs(2.0 * s - twice) > 1e-9)
            fail("model.s", "spin must be a positive multiple of 1/2");
        m.s = SpinValue::from_twice(twice);
        if (needs_spin_half(c.kind) && twice != 1)
            fail("model.s", "this experiment is defined for spin 1/2");
        m.delta_d = num_at(o, "model", "delta_d", 0.0);
        m.delta_q = num_at(o, "model", "delta_q", 0.0);
        m.eps = num_at(o, "model", "eps", 0.0);
        m.g = num_at(o, "model", "g", 0.0);
        m.w_a = num_at(o, "model", "w_a", 0.0);
        m.w_b = num_at(o, "model", "w_b", 0.0);
        m.gamma_a = num_at(o, "model", "gamma_a", 0.0);
        m.gamma_b = num_at(o, "model", "gamma_b", 0.0);
        m.gamma_phi = num_at(o, "model", "gamma_phi", 0.0);
    }

    c.unit_total_rates = bool_at(j, "config", "unit_total_rates", false);
    if (c.unit_total_rates && is_circuit_kind(c.kind))
        fail("config.unit_total_rates", "only meaningful for two-qudit experiments");

    if (j.contains("sweep")) {
        if (!j["sweep"].is_array()) fail("config.sweep", "expected an array");
        for (std::size_t i = 0; i < j["sweep"].size(); ++i) {
            const std::string path = "sweep[" + std::to_string(i) + "]";
            const json& o = j["sweep"][i];
            if (!o.is_object()) fail(path, "expected an object");
            check_keys(o, path, {"name", "start", "stop", "points", "scale"});
            SweepAxis ax;
            ax.name = str_at(o, path, "name");
            if (!valid_slot(c.kind, ax.name))
                fail(path + ".name", "not a sweepable parameter: '" + ax.name + "'");
            for (const auto& prev : c.sweep)
                if (prev.name == ax.name) fail(path + ".name", "duplicate axis");
            ax.start = num_at(o, path, "start");
            ax.stop = num_at(o, path, "stop");
            ax.points = int_at(o, path, "points");
            if (ax.points < 1) fail(path + ".points", "points must be at least 1");
            const std::string scale = str_at(o, path, "scale", std::string("linear"));
            if (scale != "linear" && scale != "log")
                fail(path + ".scale", "expected \"linear\" or \"log\"");
            ax.log_scale = scale == "log";
            if (ax.log_scale && (!(ax.start > 0.0) || !(ax.stop > 0.0)))
                fail(path, "log axes need positive endpoints");
            c.sweep.push_back(std::move(ax));
        }
    }
    if (c.kind == ExperimentKind::ExistenceMap) {
        const bool ok = c.sweep.size() == 2 &&
                        ((c.sweep[0].name == "w_a" && c.sweep[1].name == "w_b") ||
                         (c.sweep[0].name == "w_b" && c.sweep[1].name == "w_a"));
        if (!ok) fail("config.sweep", "existence-map sweeps exactly w_a and w_b");
    }

    if (j.contains("variants")) {
        if (!j["variants"].is_array()) fail("config.variants", "expected an array");
        for (std::size_t i = 0; i < j["variants"].size(); ++i) {
            const std::string path = "variants[" + std::to_string(i) + "]";
            const json& o = j["variants"][i];
            if (!o.is_object()) fail(path, "expected an object");
            check_keys(o, path, {"label", "set"});
            Variant var;
            var.label = str_at(o, path, "label");
            if (var.label.empty()) fail(path + ".label", "label must be non-empty");
            for (const auto& prev : c.variants)
                if (prev.label == var.label) fail(path + ".label", "duplicate label");
            if (o.contains("set")) {
                if (!o["set"].is_object()) fail(path + ".set", "expected an object");
                for (auto it = o["set"].begin(); it != o["set"].end(); ++it) {
                    if (!valid_slot(c.kind, it.key()))
                        fail(path + ".set." + it.key(), "not a settable parameter");
                    if (!it.value().is_number())
                        fail(path + ".set." + it.key(), "expected a number");
                    var.set[it.key()] = it.value().get<double>();
                }
            }
            c.variants.push_back(std::move(var));
        }
    }

    if (j.contains("tolerances")) {
        const json& o = j["tolerances"];
        if (!o.is_object()) fail("config.tolerances", "expected an object");
        check_keys(o, "tolerances", {"rtol", "atol"});
        c.rtol = num_at(o, "tolerances", "rtol", c.rtol);
        c.atol = num_at(o, "tolerances", "atol", c.atol);
        if (!(c.rtol > 0.0)) fail("tolerances.rtol", "must be positive");
        if (c.atol < 0.0) fail("tolerances.atol", "must be non-negative");
    }

    if (j.contains("options")) {
        const json& o = j["options"];
        if (!o.is_object()) fail("config.options", "expected an object");
        check_keys(o, "options",
                   {"g_lo", "g_hi", "rmax_scan", "t_span", "n_samples", "compare_partial",
                    "with_sync"});
        c.g_lo = num_at(o, "options", "g_lo", c.g_lo);
        c.g_hi = num_at(o, "options", "g_hi", c.g_hi);
        if (!(c.g_lo > 0.0) || !(c.g_hi > c.g_lo))
            fail("options.g_lo", "search window needs 0 < g_lo < g_hi");
        c.rmax_scan = int_at(o, "options", "rmax_scan", c.rmax_scan);
        if (c.rmax_scan < 8) fail("options.rmax_scan", "need at least 8 scan nodes");
        c.t_span = num_at(o, "options", "t_span", c.t_span);
        if (!(c.t_span > 0.0)) fail("options.t_span", "must be positive");
        c.n_samples = int_at(o, "options", "n_samples", c.n_samples);
        if (c.n_samples < 16) fail("options.n_samples", "need at least 16 samples");
        c.compare_partial = bool_at(o, "options", "compare_partial", false);
        c.with_sync = bool_at(o, "options", "with_sync", false);
    }

    if (c.unit_total_rates) {
        const auto in_unit = [](double w) { return w >= 0.0 && w <= 1.0; };
        if (!in_unit(c.model.w_a) || !in_unit(c.model.w_b))
            fail("model", "unit_total_rates needs gain rates within [0, 1]");
        for (const auto& ax : c.sweep)
            if (ax.name == "w_a" || ax.name == "w_b")
                for (double v : ax.values())
                    if (!in_unit(v)) fail("sweep", "unit_total_rates needs gains within [0, 1]");
        for (const auto& var : c.variants)
            for (const auto& [k, v] : var.set)
                if ((k == "w_a" || k == "w_b") && !in_unit(v))
                    fail("variants", "unit_total_rates needs gains within [0, 1]");
    }
    return c;
}

nlohmann::json config_json(const ExperimentConfig& c) {
    json j;
    j["experiment"] = kind_name(c.kind);
    j["units"] = c.units;
    j["output"] = c.output;
    j["title"] = c.title;
    if (is_circuit_kind(c.kind)) {
        json o;
        const CqedParams& q = c.circuit;
        o["omega_q"] = q.omega_q;
        o["omega_a"] = q.omega_a;
        o["omega_p"] = q.omega_p;
        o["alpha"] = q.alpha;
        o["g_res"] = q.g_res;
        o["kappa"] = q.kappa;
        o["gamma0"] = q.gamma0;
        o["gamma_phi"] = q.gamma_phi;
        o["pump_rabi"] = q.pump_rabi;
        o["g_ab"] = q.g_ab;
        o["eps"] = q.eps;
        o["n_transmon"] = q.n_transmon;
        o["n_resonator"] = q.n_resonator;
        j["circuit"] = o;
    } else {
        json o;
        const OscillatorParams& m = c.model;
        o["s"] = 0.5 * m.s.twice_s;
        o["delta_d"] = m.delta_d;
        o["delta_q"] = m.delta_q;
        o["eps"] = m.eps;
        o["g"] = m.g;
        o["w_a"] = m.w_a;
        o["w_b"] = m.w_b;
        o["gamma_a"] = m.gamma_a;
        o["gamma_b"] = m.gamma_b;
        o["gamma_phi"] = m.gamma_phi;
        j["model"] = o;
        j["unit_total_rates"] = c.unit_total_rates;
    }
    j["sweep"] = json::array();
    for (const auto& ax : c.sweep) {
        json o;
        o["name"] = ax.name;
        o["start"] = ax.start;
        o["stop"] = ax.stop;
        o["points"] = ax.points;
        o["scale"] = ax.log_scale ? "log" : "linear";
        j["sweep"].push_back(o);
    }
    j["variants"] = json::array();
    for (const auto& var : c.variants) {
        json o;
        o["label"] = var.label;
        o["set"] = json::object();
        for (const auto& [k, v] : var.set) o["set"][k] = v;
        j["variants"].push_back(o);
    }
    j["tolerances"] = {{"rtol", c.rtol}, {"atol", c.atol}};
    j["options"] = {{"g_lo", c.g_lo},         {"g_hi", c.g_hi},
                    {"rmax_scan", c.rmax_scan}, {"t_span", c.t_span},
                    {"n_samples", c.n_samples}, {"compare_partial", c.compare_partial},
                    {"with_sync", c.with_sync}};
    return j;
}

// ---------------------------------------------------------------------------
// execution
// ---------------------------------------------------------------------------

ResultTable run_experiment(const ExperimentConfig& c, int workers) {
    // Round-trip through the canonical echo so hand-built configs face the
    // same validation as parsed ones.
    const ExperimentConfig cfg = parse_config(config_json(c).dump());

    ResultTable t;
    const bool grouped = !cfg.variants.empty();
    const char* axis_unit = is_circuit_kind(cfg.kind)
                                ? (cfg.units == "Hz_2pi" ? "Hz" : "rad/s")
                                : "Gamma";
    if (grouped) {
        t.columns.push_back("variant");
        t.units.push_back("");
        for (const auto& var : cfg.variants) t.variant_labels.push_back(var.label);
    }
    std::vector<std::vector<double>> axis_values;
    for (const auto& ax : cfg.sweep) {
        t.columns.push_back(ax.name);
        t.units.push_back(axis_unit);
        axis_values.push_back(ax.values());
    }
    value_schema(cfg, t.columns, t.units);

    std::size_t grid = 1;
    for (const auto& av : axis_values) grid *= av.size();
    const std::size_t n_var = grouped ? cfg.variants.size() : 1;
    const std::size_t n = grid * n_var;

    t.rows.assign(n, {});
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> first_fail{n};
    std::mutex fail_mx;
    std::string fail_msg;

    const auto make_row = [&](std::size_t i) {
        const std::size_t vi = i / grid;
        std::size_t rest = i % grid;
        std::vector<double> axv(axis_values.size());
        for (std::size_t a = axis_values.size(); a-- > 0;) {
            axv[a] = axis_values[a][rest % axis_values[a].size()];
            rest /= axis_values[a].size();
        }
        const PointParams pp = point_params(cfg, static_cast<int>(vi), axv);
        std::vector<double> row;
        if (grouped) row.push_back(static_cast<double>(vi));
        row.insert(row.end(), axv.begin(), axv.end());
        const std::vector<double> vals = eval_point(cfg, pp);
        row.insert(row.end(), vals.begin(), vals.end());
        return row;
    };
    const auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            if (i >= first_fail.load()) continue;  // past the first failure, discarded anyway
            try {
                t.rows[i] = make_row(i);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(fail_mx);
                if (i < first_fail.load()) {
                    first_fail.store(i);
                    fail_msg = std::string(kind_name(cfg.kind)) + " point " + std::to_string(i) +
                               ": " + e.what();
                }
            }
        }
    };

    std::size_t k = workers > 0 ? static_cast<std::size_t>(workers)
                                : std::max(1u, std::thread::hardware_concurrency());
    k = std::min(k, n);
    if (k <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < k; ++i) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }

    if (first_fail.load() < n) {
        t.rows.resize(first_fail.load());
        t.failed = true;
        t.failure = fail_msg;
    }

    t.metadata["artifact"] = "qsync";
    t.metadata["version"] = kVersion;
    t.metadata["title"] = cfg.title;
    t.metadata["config"] = config_json(cfg);
    t.metadata["conventions"] = {
        {"vectorization", "column stacking"},
        {"entropy", "natural logarithm, nats"},
        {"frame", "circuit models in per-unit pump frames; external drive applied at the "
                  "nominal qubit frequency; transmon and pump frequencies lowered by the "
                  "derived corrections"},
        {"csv", "RFC 4180 quoting, LF line ends, %.17g, '.' decimal; an empty field is a "
                "non-finite value"},
        {"complex_columns", "re/im suffix pairs"},
        {"colormap", "fixed 9-stop blue-to-yellow, linear RGB interpolation"},
    };
    return t;
}

// ---------------------------------------------------------------------------
// presets
// ---------------------------------------------------------------------------

namespace {

ExperimentConfig spin_base(ExperimentKind kind) {
    ExperimentConfig c;
    c.kind = kind;
    c.units = "Gamma";
    c.model = OscillatorParams{};
    c.model.eps = 1e-3;
    return c;
}

void add_axis(ExperimentConfig& c, const char* name, double lo, double hi, int pts) {
    c.sweep.push_back(SweepAxis{name, lo, hi, pts, false});
}

CqedParams device_circuit() {
    CqedParams q;
    q.omega_q = {5.0e9, 5.0e9};
    q.omega_a = {4.6e9, 4.5e9};
    q.omega_p = {4.8e9, 4.75e9};
    q.alpha = {-400e6, -500e6};
    q.g_res = {8e6, 4e6};
    q.kappa = {60e6, 60e6};
    q.gamma0 = {53e3, 53e3};
    q.gamma_phi = {0.0, 0.0};
    q.pump_rabi = {0.0, 8e6};
    q.g_ab = 0.0;
    q.eps = 20e3;
    return q;
}

struct PresetEntry {
    const char* name;
    const char* description;
    ExperimentConfig (*build)();
};

const PresetEntry kPresets[] = {
    {"vanishing-12",
     "Qubit coherences versus coupling, numeric and perturbative, through both zero crossings",
     [] {
         ExperimentConfig c = spin_base(ExperimentKind::PhaseLockSweep);
         c.model.w_a = 0.4;
         c.model.gamma_a = 0.6;
         c.model.w_b = 0.75;
         c.model.gamma_b = 0.25;
         add_axis(c, "g", 0.0, 4.0, 81);
         c.output = "vanishing-12";
         c.title = "Phase locking of the driven and the undriven qubit across the coupling sweep";
         return c;
     }},
    {"parameter-sweep",
     "Existence and location of the coherence zero crossings over the bath gain grid",
     [] {
         ExperimentConfig c = spin_base(ExperimentKind::ExistenceMap);
         add_axis(c, "w_a", 0.02, 0.98, 25);
         add_axis(c, "w_b", 0.02, 0.98, 25);
         c.output = "parameter-sweep";
         c.title = "Zero-crossing coupling per qubit over the gain grid, unit total rates";
         return c;
     }},
    {"parameter-sweep-delta",
     "Qubit-qubit detuning and coupling that restore the crossing under a detuned drive",
     [] {
         ExperimentConfig c = spin_base(ExperimentKind::DetuningMap);
         c.model.w_a = 0.25;
         c.model.gamma_a = 0.75;
         c.model.w_b = 0.75;
         c.model.gamma_b = 0.25;
         add_axis(c, "delta_d", -1.0, 1.0, 41);
         c.output = "parameter-sweep-delta";
         c.title = "Crossing-restoring qubit detuning and coupling versus drive detuning";
         return c;
     }},
    {"composite",
     "Synchronization enhancement ratio versus coupling for an enhancing and a suppressing "
     "bath choice",
     [] {
         ExperimentConfig c = spin_base(ExperimentKind::SyncSweep);
         c.model.w_a = 0.55;
         c.model.gamma_a = 0.45;
         c.model.w_b = 0.09;
         c.model.gamma_b = 0.91;
         add_axis(c, "g", 0.0, 4.0, 61);
         c.variants.push_back(Variant{"enhancement", {}});
         c.variants.push_back(Variant{"suppression",
                                      {{"w_a", 0.45}, {"gamma_a", 0.55},
                                       {"w_b", 0.65}, {"gamma_b", 0.35}}});
         c.output = "composite";
         c.title = "Enhancement ratio and collective coherences; the suppression rates are an "
                   "artifact-chosen example of the sharp-dip regime";
         return c;
     }},
    {"composite-parameter-sweep",
     "Maximum enhancement ratio over the bath gain grid at unit total rates",
     [] {
         ExperimentConfig c = spin_base(ExperimentKind::RmaxMap);
         c.unit_total_rates = true;
         c.g_hi = 4.0;
         c.rmax_scan = 120;
         add_axis(c, "w_a", 0.02, 0.98, 17);
         add_axis(c, "w_b", 0.02, 0.98, 17);
         c.output = "composite-parameter-sweep";
         c.title = "Ratio extrema over the gain grid, unit total rates";
         return c;
     }},
    {"detuning-composite",
     "Maximum enhancement ratio over the drive and qubit detuning plane",
     [] {
         ExperimentConfig c = spin_base(ExperimentKind::RmaxMap);
         c.model.w_a = 0.55;
         c.model.gamma_a = 0.45;
         c.model.w_b = 0.09;
         c.model.gamma_b = 0.91;
         c.g_hi = 4.0;
         c.rmax_scan = 120;
         add_axis(c, "delta_d", -1.0, 1.0, 17);
         add_axis(c, "delta_q", -1.0, 1.0, 17);
         c.output = "detuning-composite";
         c.title = "Ratio extrema over the detuning plane for the enhancing bath choice";
         return c;
     }},
    {"composite-check",
     "Diagonal versus partially coherent synchronization measure along the coupling sweep",
     [] {
         ExperimentConfig c = spin_base(ExperimentKind::SyncSweep);
         c.model.w_a = 0.55;
         c.model.gamma_a = 0.45;
         c.model.w_b = 0.09;
         c.model.gamma_b = 0.91;
         c.compare_partial = true;
         add_axis(c, "g", 0.0, 4.0, 41);
         c.output = "composite-check";
         c.title = "Dephasing-basis measure against the optimized partially coherent measure";
         return c;
     }},
    {"vanishing-spin1",
     "Spherical tensor magnitudes of qutrit A versus coupling with their distinct zero "
     "crossings",
     [] {
         ExperimentConfig c = spin_base(ExperimentKind::QutritSweep);
         c.model.s = spin_one();
         c.model.w_a = 0.25;
         c.model.gamma_a = 0.75;
         c.model.w_b = 0.75;
         c.model.gamma_b = 0.25;
         add_axis(c, "g", 0.0, 4.0, 81);
         c.output = "vanishing-spin1";
         c.title = "First and second harmonic tensor magnitudes of the driven qutrit";
         return c;
     }},
    {"composite-spin1",
     "Enhancement ratio versus coupling for the two-qutrit oscillator, two bath choices",
     [] {
         ExperimentConfig c = spin_base(ExperimentKind::SyncSweep);
         c.model.s = spin_one();
         c.model.w_a = 0.55;
         c.model.gamma_a = 0.45;
         c.model.w_b = 0.09;
         c.model.gamma_b = 0.91;
         add_axis(c, "g", 0.0, 4.0, 41);
         c.variants.push_back(Variant{"enhancement", {}});
         c.variants.push_back(Variant{"suppression",
                                      {{"w_a", 0.45}, {"gamma_a", 0.55},
                                       {"w_b", 0.65}, {"gamma_b", 0.35}}});
         c.output = "composite-spin1";
         c.title = "Two-qutrit enhancement ratio; both rate sets are artifact-chosen examples "
                   "of the two regimes";
         return c;
     }},
    {"sc-phasecorrelation",
     "Drive-locked transmon coherences of the circuit against the reduced qubit model "
     "(slow, runs for hours)",
     [] {
         ExperimentConfig c;
         c.kind = ExperimentKind::CqedRun;
         c.units = "Hz_2pi";
         c.circuit = device_circuit();
         c.rtol = 1e-6;
         c.atol = 1e-9;
         c.t_span = 40e-6;
         c.n_samples = 400;
         add_axis(c, "g_ab", 0.0, 350e3, 8);
         c.variants.push_back(Variant{"gain-b-only", {}});
         c.variants.push_back(Variant{"gain-b-only-dephasing",
                                      {{"gamma_phi_a", 53e3}, {"gamma_phi_b", 53e3}}});
         c.variants.push_back(Variant{"gain-both",
                                      {{"pump_rabi_a", 5.5e6}, {"pump_rabi_b", 9e6}}});
         c.variants.push_back(Variant{"gain-both-dephasing",
                                      {{"pump_rabi_a", 5.5e6}, {"pump_rabi_b", 9e6},
                                       {"gamma_phi_a", 53e3}, {"gamma_phi_b", 53e3}}});
         c.output = "sc-phasecorrelation";
         c.title = "Locked coherences of both transmons with reduced-model references, with "
                   "and without extra dephasing";
         return c;
     }},
    {"sc-enhancement",
     "Synchronization measure of the circuit against the reduced qubit model (slow, runs "
     "for hours)",
     [] {
         ExperimentConfig c;
         c.kind = ExperimentKind::CqedRun;
         c.units = "Hz_2pi";
         c.circuit = device_circuit();
         c.circuit.pump_rabi = {5.5e6, 9e6};
         c.rtol = 1e-6;
         c.atol = 1e-9;
         c.t_span = 40e-6;
         c.n_samples = 400;
         c.with_sync = true;
         add_axis(c, "g_ab", 0.0, 350e3, 6);
         c.variants.push_back(Variant{"pumps-5.5-9.0-MHz", {}});
         c.variants.push_back(Variant{"pumps-5.5-9.0-MHz-dephasing",
                                      {{"gamma_phi_a", 53e3}, {"gamma_phi_b", 53e3}}});
         c.variants.push_back(Variant{"pumps-7.0-4.1-MHz",
                                      {{"pump_rabi_a", 7e6}, {"pump_rabi_b", 4.1e6},
                                       {"eps", 40e3}}});
         c.variants.push_back(Variant{"pumps-7.0-4.1-MHz-dephasing",
                                      {{"pump_rabi_a", 7e6}, {"pump_rabi_b", 4.1e6},
                                       {"eps", 40e3},
                                       {"gamma_phi_a", 53e3}, {"gamma_phi_b", 53e3}}});
         c.output = "sc-enhancement";
         c.title = "Locked-state synchronization measure of the circuit with reduced-model "
                   "references, two pump settings";
         return c;
     }},
};

}  // namespace

std::vector<std::pair<std::string, std::string>> list_presets() {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& p : kPresets) out.emplace_back(p.name, p.description);
    return out;
}

ExperimentConfig preset_config(const std::string& name) {
    for (const auto& p : kPresets)
        if (name == p.name) return p.build();
    throw ConfigError("preset", "unknown preset '" + name + "'");
}

}  // namespace qsync
