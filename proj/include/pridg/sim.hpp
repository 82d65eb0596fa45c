#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pridg/rng.hpp"

namespace pridg::sim {

enum class Modulation { Constant, Jittered, Sliding, Wobulated, Staggered, DwellSwitch };

const char* modulation_name(Modulation m);
Modulation modulation_from_name(const std::string& name);

// Parametric definition of one radar emitter.
struct EmitterSpec {
    int id = 0;
    Modulation modulation = Modulation::Constant;
    double base_pri = 0.0;  // microseconds

    // Jittered: PRI = base * (1 + u), u ~ U(-jitter, +jitter)
    double jitter = 0.1;
    // Sliding: PRI sweeps linearly slide_min -> slide_max over slide_steps pulses, then resets
    double slide_min = 0.0;
    double slide_max = 0.0;
    int slide_steps = 0;
    // Wobulated: PRI = base * (1 + amp * sin(2*pi*k / period))
    double wobble_amp = 0.0;
    int wobble_period = 0;
    // Staggered: cyclic repetition of the level list
    std::vector<double> stagger_levels;
    // DwellSwitch: hold each PRI for dwell_count pulses, then switch to the next
    std::vector<double> dwell_pris;
    int dwell_count = 0;

    // Throws std::invalid_argument on inconsistent parameters.
    void validate() const;

    // Pulses per modulation cycle, used for missing-pulse bookkeeping.
    // Constant/Jittered have no intrinsic period and use a fixed 16-pulse window.
    int period_pulses() const;

    // Largest PRI value this emitter can emit.
    double max_pri() const;
};

struct ToaSequence {
    std::vector<double> toas;  // microseconds, strictly increasing

    void validate() const;
    std::size_t size() const { return toas.size(); }
};

struct PriSequence {
    std::vector<double> pris;  // microseconds; a zero tail marks fixed-length padding
    int label = -1;
    int domain_id = 0;
    int source_index = -1;  // pairing index back into the source set; -1 if original

    // Number of leading non-padding values.
    std::size_t payload_length() const;
};

// Error-ratio triple (rho_r, rho_m, rho_n) defining an EW environment.
struct ScenarioParams {
    double rho_r = 0.0;  // measurement-error ratio
    double rho_m = 0.0;  // missing-pulse ratio, in [0, 1)
    double rho_n = 0.0;  // spurious-to-pulse ratio, >= 0

    void validate() const;
    bool operator==(const ScenarioParams&) const = default;
};

// Named presets: training scene plus the four test scenes.
ScenarioParams scenario_train();
ScenarioParams scenario_p1();
ScenarioParams scenario_p2();
ScenarioParams scenario_p3();
ScenarioParams scenario_p4();
ScenarioParams scenario_by_name(const std::string& name);  // "train", "p1".."p4"

struct CorruptionStats {
    std::vector<std::int64_t> dropped_per_period;  // a_i
    std::vector<std::int64_t> kept_per_period;     // b_i
    std::int64_t spurious_added = 0;
};

struct Dataset {
    std::vector<PriSequence> samples;
    ScenarioParams scenario;
    std::uint64_t seed = 0;
    std::string roster_version;
    int seq_len = 0;
};

// --- Generation ---------------------------------------------------------

// Clean TOA train realizing the modulation law of `spec`; deterministic in seed.
ToaSequence gen_clean_toa(const EmitterSpec& spec, int n_pulses, std::uint64_t seed);

// First-order difference. Requires >= 2 TOAs.
PriSequence toa_to_pri(const ToaSequence& toa);

// Each interior pulse independently removed with probability rho_m; the first
// pulse is always kept. Stats are bucketed by `period_pulses` over original
// pulse indices.
std::pair<ToaSequence, CorruptionStats> drop_pulses(const ToaSequence& toa, double rho_m,
                                                    std::uint64_t seed, int period_pulses = 16);

// sum(a_i) / sum(a_i + b_i)
double missing_ratio(const CorruptionStats& stats);

// Inserts k ~ Poisson(rho_n * (1 - rho_m)) spurious pulses per gap at uniform
// positions; output strictly increasing.
ToaSequence add_spurious(const ToaSequence& toa, double rho_n, double rho_m, std::uint64_t seed);

// Multiplicative Gaussian error: p -> p * (1 + eps), eps ~ N(0, rho_r^2),
// redrawn while the result is non-positive.
PriSequence add_measurement_error(const PriSequence& pri, double rho_r, std::uint64_t seed);

// Full pipeline per emitter: clean TOA -> drop -> spurious -> PRI -> measurement
// error, windowed/zero-padded to seq_len. Balanced classes, deterministic in seed.
Dataset make_dataset(const std::vector<EmitterSpec>& roster, const ScenarioParams& scenario,
                     int n_per_class, int seq_len, std::uint64_t seed);

// --- Default roster -----------------------------------------------------

// The 10-emitter roster: one each of Constant, Jittered, Sliding, Wobulated,
// DwellSwitch, plus five staggered emitters with distinct level lists.
std::vector<EmitterSpec> default_roster();
std::string default_roster_version();

// Global input normalization constant: 2x the largest PRI in the roster.
double normalization_scale(const std::vector<EmitterSpec>& roster);

}  // namespace pridg::sim
