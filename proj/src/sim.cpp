#include "pridg/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pridg::sim {

const char* modulation_name(Modulation m) {
    switch (m) {
        case Modulation::Constant: return "constant";
        case Modulation::Jittered: return "jittered";
        case Modulation::Sliding: return "sliding";
        case Modulation::Wobulated: return "wobulated";
        case Modulation::Staggered: return "staggered";
        case Modulation::DwellSwitch: return "dwell_switch";
    }
    throw std::invalid_argument("unknown modulation enum value");
}

Modulation modulation_from_name(const std::string& name) {
    if (name == "constant") return Modulation::Constant;
    if (name == "jittered") return Modulation::Jittered;
    if (name == "sliding") return Modulation::Sliding;
    if (name == "wobulated") return Modulation::Wobulated;
    if (name == "staggered") return Modulation::Staggered;
    if (name == "dwell_switch") return Modulation::DwellSwitch;
    throw std::invalid_argument("unknown modulation name: " + name);
}

void EmitterSpec::validate() const {
    switch (modulation) {
        case Modulation::Constant:
            if (base_pri <= 0) throw std::invalid_argument("constant PRI requires base_pri > 0");
            break;
        case Modulation::Jittered:
            if (base_pri <= 0) throw std::invalid_argument("jittered PRI requires base_pri > 0");
            if (jitter < 0 || jitter >= 1)
                throw std::invalid_argument("jitter fraction must be in [0, 1)");
            break;
        case Modulation::Sliding:
            if (slide_min <= 0 || slide_max <= slide_min)
                throw std::invalid_argument("sliding PRI requires 0 < slide_min < slide_max");
            if (slide_steps < 2) throw std::invalid_argument("sliding PRI requires slide_steps >= 2");
            break;
        case Modulation::Wobulated:
            if (base_pri <= 0) throw std::invalid_argument("wobulated PRI requires base_pri > 0");
            if (wobble_amp < 0 || wobble_amp >= 1)
                throw std::invalid_argument("wobble amplitude must be in [0, 1)");
            if (wobble_period < 2) throw std::invalid_argument("wobble period must be >= 2 pulses");
            break;
        case Modulation::Staggered:
            if (stagger_levels.empty()) throw std::invalid_argument("stagger level list is empty");
            for (double v : stagger_levels)
                if (v <= 0) throw std::invalid_argument("stagger levels must be > 0");
            break;
        case Modulation::DwellSwitch:
            if (dwell_pris.empty()) throw std::invalid_argument("dwell PRI list is empty");
            for (double v : dwell_pris)
                if (v <= 0) throw std::invalid_argument("dwell PRIs must be > 0");
            if (dwell_count < 1) throw std::invalid_argument("dwell count must be >= 1");
            break;
    }
}

int EmitterSpec::period_pulses() const {
    switch (modulation) {
        case Modulation::Sliding: return slide_steps;
        case Modulation::Wobulated: return wobble_period;
        case Modulation::Staggered: return static_cast<int>(stagger_levels.size());
        case Modulation::DwellSwitch: return dwell_count * static_cast<int>(dwell_pris.size());
        case Modulation::Constant:
        case Modulation::Jittered: return 16;
    }
    return 16;
}

double EmitterSpec::max_pri() const {
    switch (modulation) {
        case Modulation::Constant: return base_pri;
        case Modulation::Jittered: return base_pri * (1.0 + jitter);
        case Modulation::Sliding: return slide_max;
        case Modulation::Wobulated: return base_pri * (1.0 + wobble_amp);
        case Modulation::Staggered: return *std::max_element(stagger_levels.begin(), stagger_levels.end());
        case Modulation::DwellSwitch: return *std::max_element(dwell_pris.begin(), dwell_pris.end());
    }
    return base_pri;
}

void ToaSequence::validate() const {
    if (toas.size() < 2) throw std::invalid_argument("TOA sequence needs at least 2 pulses");
    if (toas.front() < 0) throw std::invalid_argument("TOAs must be non-negative");
    for (std::size_t i = 1; i < toas.size(); ++i)
        if (toas[i] <= toas[i - 1])
            throw std::invalid_argument("TOA sequence must be strictly increasing");
}

std::size_t PriSequence::payload_length() const {
    std::size_t n = pris.size();
    while (n > 0 && pris[n - 1] == 0.0) --n;
    return n;
}

void ScenarioParams::validate() const {
    if (rho_m < 0 || rho_m >= 1) throw std::invalid_argument("rho_m must be in [0, 1)");
    if (rho_n < 0) throw std::invalid_argument("rho_n must be >= 0");
    if (rho_r < 0) throw std::invalid_argument("rho_r must be >= 0");
}

ScenarioParams scenario_train() { return {0.05, 0.2, 0.4}; }
ScenarioParams scenario_p1() { return {0.02, 0.05, 0.2}; }
ScenarioParams scenario_p2() { return {0.05, 0.2, 0.4}; }
ScenarioParams scenario_p3() { return {0.05, 0.3, 0.6}; }
ScenarioParams scenario_p4() { return {0.1, 0.5, 0.8}; }

ScenarioParams scenario_by_name(const std::string& name) {
    if (name == "train") return scenario_train();
    if (name == "p1") return scenario_p1();
    if (name == "p2") return scenario_p2();
    if (name == "p3") return scenario_p3();
    if (name == "p4") return scenario_p4();
    throw std::invalid_argument("unknown scenario preset: " + name);
}

ToaSequence gen_clean_toa(const EmitterSpec& spec, int n_pulses, std::uint64_t seed) {
    spec.validate();
    if (n_pulses < 2) throw std::invalid_argument("n_pulses must be >= 2");

    Rng rng(seed);
    std::uniform_real_distribution<double> uni(-spec.jitter, spec.jitter);

    ToaSequence out;
    out.toas.resize(static_cast<std::size_t>(n_pulses));
    double t = 0.0;
    out.toas[0] = 0.0;
    for (int k = 0; k + 1 < n_pulses; ++k) {
        double pri = 0.0;
        switch (spec.modulation) {
            case Modulation::Constant:
                pri = spec.base_pri;
                break;
            case Modulation::Jittered:
                pri = spec.base_pri * (1.0 + uni(rng));
                break;
            case Modulation::Sliding: {
                int phase = k % spec.slide_steps;
                pri = spec.slide_min +
                      (spec.slide_max - spec.slide_min) * phase / (spec.slide_steps - 1);
                break;
            }
            case Modulation::Wobulated:
                pri = spec.base_pri *
                      (1.0 + spec.wobble_amp *
                                 std::sin(2.0 * std::numbers::pi * k / spec.wobble_period));
                break;
            case Modulation::Staggered:
                pri = spec.stagger_levels[k % spec.stagger_levels.size()];
                break;
            case Modulation::DwellSwitch: {
                std::size_t slot = (static_cast<std::size_t>(k) / spec.dwell_count) % spec.dwell_pris.size();
                pri = spec.dwell_pris[slot];
                break;
            }
        }
        t += pri;
        out.toas[static_cast<std::size_t>(k) + 1] = t;
    }
    return out;
}

PriSequence toa_to_pri(const ToaSequence& toa) {
    toa.validate();
    PriSequence out;
    out.pris.resize(toa.toas.size() - 1);
    for (std::size_t i = 0; i + 1 < toa.toas.size(); ++i)
        out.pris[i] = toa.toas[i + 1] - toa.toas[i];
    return out;
}

std::pair<ToaSequence, CorruptionStats> drop_pulses(const ToaSequence& toa, double rho_m,
                                                    std::uint64_t seed, int period_pulses) {
    if (rho_m < 0 || rho_m >= 1) throw std::invalid_argument("rho_m must be in [0, 1)");
    if (period_pulses < 1) throw std::invalid_argument("period_pulses must be >= 1");
    toa.validate();

    Rng rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    std::size_t n_periods = (toa.toas.size() + period_pulses - 1) / period_pulses;
    CorruptionStats stats;
    stats.dropped_per_period.assign(n_periods, 0);
    stats.kept_per_period.assign(n_periods, 0);

    ToaSequence out;
    out.toas.reserve(toa.toas.size());
    for (std::size_t i = 0; i < toa.toas.size(); ++i) {
        std::size_t period = i / static_cast<std::size_t>(period_pulses);
        bool keep = (i == 0) || uni(rng) >= rho_m;
        if (keep) {
            out.toas.push_back(toa.toas[i]);
            ++stats.kept_per_period[period];
        } else {
            ++stats.dropped_per_period[period];
        }
    }
    return {std::move(out), std::move(stats)};
}

double missing_ratio(const CorruptionStats& stats) {
    std::int64_t dropped = 0, total = 0;
    for (std::size_t i = 0; i < stats.dropped_per_period.size(); ++i) {
        dropped += stats.dropped_per_period[i];
        total += stats.dropped_per_period[i] + stats.kept_per_period[i];
    }
    if (total == 0) throw std::invalid_argument("missing_ratio on all-zero stats");
    return static_cast<double>(dropped) / static_cast<double>(total);
}

ToaSequence add_spurious(const ToaSequence& toa, double rho_n, double rho_m, std::uint64_t seed) {
    if (rho_n < 0) throw std::invalid_argument("rho_n must be >= 0");
    toa.validate();
    if (rho_n == 0) return toa;

    Rng rng(seed);
    std::poisson_distribution<int> pois(rho_n * (1.0 - rho_m));
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    ToaSequence out;
    out.toas.reserve(toa.toas.size() * 2);
    for (std::size_t i = 0; i + 1 < toa.toas.size(); ++i) {
        out.toas.push_back(toa.toas[i]);
        double lo = toa.toas[i], hi = toa.toas[i + 1];
        int k = pois(rng);
        std::vector<double> inserts;
        inserts.reserve(static_cast<std::size_t>(k));
        for (int j = 0; j < k; ++j) {
            double t = lo + (hi - lo) * uni(rng);
            // re-draw on the (measure-zero) chance of a collision with an endpoint
            while (t <= lo || t >= hi) t = lo + (hi - lo) * uni(rng);
            inserts.push_back(t);
        }
        std::sort(inserts.begin(), inserts.end());
        for (std::size_t j = 0; j < inserts.size(); ++j) {
            if (!out.toas.empty() && inserts[j] <= out.toas.back()) continue;
            out.toas.push_back(inserts[j]);
        }
    }
    out.toas.push_back(toa.toas.back());
    return out;
}

PriSequence add_measurement_error(const PriSequence& pri, double rho_r, std::uint64_t seed) {
    if (rho_r < 0) throw std::invalid_argument("rho_r must be >= 0");
    if (rho_r == 0) return pri;

    Rng rng(seed);
    std::normal_distribution<double> gauss(0.0, rho_r);

    PriSequence out = pri;
    for (double& p : out.pris) {
        if (p == 0.0) continue;  // padding
        double v = p * (1.0 + gauss(rng));
        while (v <= 0) v = p * (1.0 + gauss(rng));
        p = v;
    }
    return out;
}

Dataset make_dataset(const std::vector<EmitterSpec>& roster, const ScenarioParams& scenario,
                     int n_per_class, int seq_len, std::uint64_t seed) {
    if (roster.empty()) throw std::invalid_argument("make_dataset: empty roster");
    if (n_per_class < 1) throw std::invalid_argument("n_per_class must be >= 1");
    if (seq_len < 8) throw std::invalid_argument("seq_len must be >= 8");
    scenario.validate();

    // Enough clean pulses that seq_len PRIs survive dropping with margin.
    int n_clean = static_cast<int>(std::ceil((seq_len + 1) / (1.0 - scenario.rho_m) * 1.2)) + 32;

    Dataset ds;
    ds.scenario = scenario;
    ds.seed = seed;
    ds.seq_len = seq_len;
    ds.roster_version = default_roster_version();
    ds.samples.reserve(roster.size() * static_cast<std::size_t>(n_per_class));

    for (const auto& spec : roster) {
        for (int i = 0; i < n_per_class; ++i) {
            std::uint64_t s = mix_seed(seed, static_cast<std::uint64_t>(spec.id), static_cast<std::uint64_t>(i));
            ToaSequence clean = gen_clean_toa(spec, n_clean, mix_seed(s, 1));
            auto [kept, stats] = drop_pulses(clean, scenario.rho_m, mix_seed(s, 2), spec.period_pulses());
            ToaSequence noisy = add_spurious(kept, scenario.rho_n, scenario.rho_m, mix_seed(s, 3));
            PriSequence pri = toa_to_pri(noisy);
            pri = add_measurement_error(pri, scenario.rho_r, mix_seed(s, 4));
            pri.pris.resize(static_cast<std::size_t>(seq_len), 0.0);
            pri.label = spec.id;
            pri.domain_id = 0;
            ds.samples.push_back(std::move(pri));
        }
    }
    return ds;
}

std::vector<EmitterSpec> default_roster() {
    std::vector<EmitterSpec> roster(10);

    roster[0] = {.id = 0, .modulation = Modulation::Constant, .base_pri = 1000.0};
    roster[1] = {.id = 1, .modulation = Modulation::Jittered, .base_pri = 1300.0, .jitter = 0.1};
    roster[2] = {.id = 2, .modulation = Modulation::Sliding,
                 .slide_min = 800.0, .slide_max = 1600.0, .slide_steps = 16};
    roster[3] = {.id = 3, .modulation = Modulation::Wobulated, .base_pri = 1100.0,
                 .wobble_amp = 0.15, .wobble_period = 20};
    roster[4] = {.id = 4, .modulation = Modulation::DwellSwitch,
                 .dwell_pris = {600.0, 900.0, 1350.0}, .dwell_count = 10};
    roster[5] = {.id = 5, .modulation = Modulation::Staggered, .stagger_levels = {400.0, 600.0, 800.0}};
    roster[6] = {.id = 6, .modulation = Modulation::Staggered,
                 .stagger_levels = {500.0, 750.0, 1000.0, 1250.0}};
    roster[7] = {.id = 7, .modulation = Modulation::Staggered, .stagger_levels = {450.0, 700.0, 950.0}};
    roster[8] = {.id = 8, .modulation = Modulation::Staggered,
                 .stagger_levels = {350.0, 550.0, 900.0, 1100.0, 1400.0}};
    roster[9] = {.id = 9, .modulation = Modulation::Staggered, .stagger_levels = {650.0, 850.0, 1050.0}};

    for (const auto& spec : roster) spec.validate();
    return roster;
}

std::string default_roster_version() { return "roster-v1"; }

double normalization_scale(const std::vector<EmitterSpec>& roster) {
    double mx = 0.0;
    for (const auto& spec : roster) mx = std::max(mx, spec.max_pri());
    return 2.0 * mx;
}

}  // namespace pridg::sim
