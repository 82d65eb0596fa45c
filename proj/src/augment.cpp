#include "pridg/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pridg::augment {

void NoiseGenerator::validate() const {
    if (ops.empty()) throw std::invalid_argument("noise generator needs at least one sub-op");
    for (const auto& op : ops) {
        switch (op.kind) {
            case SubOpKind::DropPulses:
                if (op.param < 0 || op.param >= 1)
                    throw std::invalid_argument("drop probability must be in [0, 1)");
                break;
            case SubOpKind::AddPulses:
                if (op.param < 0) throw std::invalid_argument("add rate must be >= 0");
                break;
            case SubOpKind::GaussianNoise:
                if (op.param < 0) throw std::invalid_argument("noise sigma must be >= 0");
                break;
        }
    }
}

void GeneratorBank::validate() const {
    for (std::size_t i = 0; i < generators.size(); ++i) {
        generators[i].validate();
        if (generators[i].id == 0)
            throw std::invalid_argument("generator id 0 is reserved for the source domain");
        for (std::size_t j = i + 1; j < generators.size(); ++j)
            if (generators[i].id == generators[j].id)
                throw std::invalid_argument("generator ids must be distinct");
    }
}

void GeneratorRanges::validate() const {
    auto check = [](double lo, double hi, const char* what) {
        if (lo > hi || lo < 0) throw std::invalid_argument(std::string("bad range for ") + what);
    };
    check(drop_lo, drop_hi, "drop probability");
    check(add_lo, add_hi, "add rate");
    check(sigma_lo, sigma_hi, "noise sigma");
    if (drop_hi >= 1) throw std::invalid_argument("drop probability must stay below 1");
}

namespace {

SubOp draw_op(SubOpKind kind, const GeneratorRanges& r, Rng& rng) {
    auto uni = [&](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    switch (kind) {
        case SubOpKind::AddPulses: return {kind, uni(r.add_lo, r.add_hi)};
        case SubOpKind::DropPulses: return {kind, uni(r.drop_lo, r.drop_hi)};
        case SubOpKind::GaussianNoise: return {kind, uni(r.sigma_lo, r.sigma_hi)};
    }
    throw std::invalid_argument("unknown sub-op kind");
}

constexpr SubOpKind kAllKinds[kNumSubOpKinds] = {SubOpKind::AddPulses, SubOpKind::DropPulses,
                                                 SubOpKind::GaussianNoise};

}  // namespace

NoiseGenerator sample_generator(const GeneratorRanges& ranges, int id, std::uint64_t seed) {
    ranges.validate();
    Rng rng(seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);

    NoiseGenerator g;
    g.id = id;
    g.seed = seed;
    while (g.ops.empty()) {
        for (SubOpKind kind : kAllKinds)
            if (coin(rng) < 0.5) g.ops.push_back(draw_op(kind, ranges, rng));
    }
    return g;
}

NoiseGenerator sample_generator(const GeneratorRanges& ranges, int id, std::uint64_t seed,
                                GeneratorBias bias) {
    ranges.validate();
    Rng rng(seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);

    SubOpKind forced = bias == GeneratorBias::Drops         ? SubOpKind::DropPulses
                       : bias == GeneratorBias::Additions   ? SubOpKind::AddPulses
                                                            : SubOpKind::GaussianNoise;
    NoiseGenerator g;
    g.id = id;
    g.seed = seed;
    for (SubOpKind kind : kAllKinds) {
        if (kind == forced || coin(rng) < 0.5) g.ops.push_back(draw_op(kind, ranges, rng));
    }
    return g;
}

GeneratorBank sample_bank(const GeneratorRanges& ranges, int k, std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("bank size must be >= 1");
    GeneratorBank bank;
    constexpr GeneratorBias biases[3] = {GeneratorBias::Drops, GeneratorBias::Additions,
                                         GeneratorBias::ValueNoise};
    for (int i = 0; i < k; ++i)
        bank.generators.push_back(sample_generator(ranges, i + 1,
                                                   mix_seed(seed, static_cast<std::uint64_t>(i)),
                                                   biases[i % 3]));
    bank.validate();
    return bank;
}

std::pair<double, double> split_interval(double value, double u) {
    double a = value * u;
    double b = value - a;
    // By Sterbenz's lemma the larger part's complement is exact, so after
    // recomputing a from b the pair satisfies a + b == value in doubles.
    a = value - b;
    return {a, b};
}

std::vector<double> apply_drop(const std::vector<double>& pris, double prob, Rng& rng,
                               std::vector<int>* span_sizes) {
    if (prob < 0 || prob >= 1) throw std::invalid_argument("drop probability must be in [0, 1)");
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    std::vector<double> out;
    out.reserve(pris.size());
    if (span_sizes) span_sizes->clear();
    double carry = 0.0;
    int fused = 0;
    for (std::size_t i = 0; i < pris.size(); ++i) {
        double v = carry + pris[i];
        carry = 0.0;
        ++fused;
        // dropping the pulse that terminates interval i fuses it with the next
        if (i + 1 < pris.size() && uni(rng) < prob) {
            carry = v;
        } else {
            out.push_back(v);
            if (span_sizes) span_sizes->push_back(fused);
            fused = 0;
        }
    }
    return out;
}

std::vector<double> apply_add(const std::vector<double>& pris, double rate, Rng& rng) {
    if (rate < 0) throw std::invalid_argument("add rate must be >= 0");
    std::poisson_distribution<int> pois(rate);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    std::vector<double> out;
    out.reserve(pris.size());
    for (double v : pris) {
        int k = rate > 0 ? pois(rng) : 0;
        for (int j = 0; j < k; ++j) {
            auto [left, rest] = split_interval(v, uni(rng));
            if (left <= 0 || rest <= 0) continue;  // degenerate split at an endpoint
            out.push_back(left);
            v = rest;
        }
        out.push_back(v);
    }
    return out;
}

std::vector<double> apply_noise(const std::vector<double>& pris, double sigma, Rng& rng) {
    if (sigma < 0) throw std::invalid_argument("noise sigma must be >= 0");
    std::normal_distribution<double> gauss(0.0, sigma);

    std::vector<double> out = pris;
    if (sigma == 0) return out;
    for (double& p : out) {
        double v = p * (1.0 + gauss(rng));
        while (v <= 0) v = p * (1.0 + gauss(rng));
        p = v;
    }
    return out;
}

sim::PriSequence apply_generator(const NoiseGenerator& g, const sim::PriSequence& x,
                                 int seq_len, std::uint64_t seed) {
    g.validate();
    Rng rng(mix_seed(g.seed, seed));

    std::vector<double> values(x.pris.begin(),
                               x.pris.begin() + static_cast<std::ptrdiff_t>(x.payload_length()));
    for (const auto& op : g.ops) {
        switch (op.kind) {
            case SubOpKind::AddPulses: values = apply_add(values, op.param, rng); break;
            case SubOpKind::DropPulses: values = apply_drop(values, op.param, rng); break;
            case SubOpKind::GaussianNoise: values = apply_noise(values, op.param, rng); break;
        }
    }
    values.resize(static_cast<std::size_t>(seq_len), 0.0);

    sim::PriSequence out;
    out.pris = std::move(values);
    out.label = x.label;
    out.domain_id = g.id;
    return out;
}

sim::Dataset build_augmented_set(const sim::Dataset& s, const GeneratorBank& bank,
                                 std::uint64_t seed) {
    if (s.samples.empty()) throw std::invalid_argument("build_augmented_set: empty source set");
    if (bank.empty()) throw std::invalid_argument("build_augmented_set: empty generator bank");
    bank.validate();

    sim::Dataset out;
    out.scenario = s.scenario;
    out.seed = seed;
    out.roster_version = s.roster_version;
    out.seq_len = s.seq_len;
    out.samples.reserve(s.samples.size() * bank.size());

    for (const auto& g : bank.generators) {
        for (std::size_t i = 0; i < s.samples.size(); ++i) {
            sim::PriSequence aug = apply_generator(
                g, s.samples[i], s.seq_len,
                mix_seed(seed, static_cast<std::uint64_t>(g.id), static_cast<std::uint64_t>(i)));
            aug.source_index = static_cast<int>(i);
            out.samples.push_back(std::move(aug));
        }
    }
    return out;
}

}  // namespace pridg::augment
