#pragma once

#include <cstdint>
#include <vector>

#include "pridg/sim.hpp"

namespace pridg::augment {

// The only three sub-operations; value translation/scaling is deliberately absent.
enum class SubOpKind { AddPulses, DropPulses, GaussianNoise };
inline constexpr int kNumSubOpKinds = 3;

struct SubOp {
    SubOpKind kind;
    double param;  // add rate per gap / drop probability / noise sigma
    bool operator==(const SubOp&) const = default;
};

struct NoiseGenerator {
    int id = 0;  // domain tag assigned to outputs
    std::vector<SubOp> ops;
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const NoiseGenerator&) const = default;
};

struct GeneratorBank {
    std::vector<NoiseGenerator> generators;

    void validate() const;  // ids distinct and != 0 (the source-domain id)
    std::size_t size() const { return generators.size(); }
    bool empty() const { return generators.empty(); }
};

struct GeneratorRanges {
    double drop_lo = 0.05, drop_hi = 0.5;
    double add_lo = 0.1, add_hi = 0.8;
    double sigma_lo = 0.01, sigma_hi = 0.1;

    void validate() const;
};

// Which sub-op family a generator favors when sampling a bank.
enum class GeneratorBias { Drops, Additions, ValueNoise };

// Generator with a random non-empty subset of sub-ops, parameters uniform in
// the configured ranges; deterministic given seed. `bias`, when set, forces
// that family in and includes the others with probability 1/2.
NoiseGenerator sample_generator(const GeneratorRanges& ranges, int id, std::uint64_t seed);
NoiseGenerator sample_generator(const GeneratorRanges& ranges, int id, std::uint64_t seed,
                                GeneratorBias bias);

// Default bank: K generators with ids 1..K, biased drop/add/noise round-robin.
GeneratorBank sample_bank(const GeneratorRanges& ranges, int k, std::uint64_t seed);

// --- Sub-op primitives (variable-length, padding-free PRI vectors) -------

// Merges each interval into its successor with probability `prob` (simulating
// a missed pulse); cumulative time over any fused span is conserved.
// span_sizes, when given, receives the number of input intervals fused into
// each output interval (in order), so callers can audit conservation per span.
std::vector<double> apply_drop(const std::vector<double>& pris, double prob, Rng& rng,
                               std::vector<int>* span_sizes = nullptr);

// Splits each interval into 1+k parts, k ~ Poisson(rate), at uniform points;
// the parts of a split sum exactly to the original interval.
std::vector<double> apply_add(const std::vector<double>& pris, double rate, Rng& rng);

// Multiplicative Gaussian perturbation, redrawn to stay positive.
std::vector<double> apply_noise(const std::vector<double>& pris, double sigma, Rng& rng);

// Splits `value` at fraction `u` into two parts that sum to `value` exactly.
std::pair<double, double> split_interval(double value, double u);

// --- Generator application ----------------------------------------------

// x+ = G(x): runs the generator's sub-ops over the payload of x, preserves the
// label, stamps domain_id = g.id, and re-fixes length to seq_len.
sim::PriSequence apply_generator(const NoiseGenerator& g, const sim::PriSequence& x,
                                 int seq_len, std::uint64_t seed);

// S+ = {(G(x_i), y_i)}: one augmented sample per (source sample, generator),
// with source_index retained for the feature-alignment pairing.
sim::Dataset build_augmented_set(const sim::Dataset& s, const GeneratorBank& bank,
                                 std::uint64_t seed);

}  // namespace pridg::augment
