#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pridg/model.hpp"
#include "pridg/sim.hpp"

namespace pridg::eval {

struct Metrics {
    double overall_acc = 0.0;
    std::map<std::string, double> per_modulation;          // CST JIT SLD WOB D&S STG
    std::map<int, double> per_emitter;                     // emitter id -> accuracy
    std::vector<std::vector<std::int64_t>> confusion;      // [true][predicted]
    std::int64_t total = 0;

    bool operator==(const Metrics&) const = default;
};

struct SuiteResult {
    std::map<std::string, Metrics> per_scenario;  // "p1".."p4"
    double avg_acc = 0.0;                         // unweighted mean over P1..P4
    std::map<std::string, std::uint64_t> scenario_seeds;  // seed provenance
    std::uint64_t base_seed = 0;
    int n_per_class = 0;

    bool operator==(const SuiteResult&) const = default;
};

struct FewshotPoint {
    int n = 0;
    double acc = 0.0;
    bool operator==(const FewshotPoint&) const = default;
};

// Short label used in the per-modulation table.
std::string modulation_column(sim::Modulation m);

// Argmax of C(F(x)) against labels, aggregated into the Metrics contract.
Metrics eval_accuracy(model::DgModel& m, const sim::Dataset& ds,
                      const std::vector<sim::EmitterSpec>& roster);

// Seed used for a preset's test dataset; derived so it cannot collide with
// the per-sample seeds of any training dataset built from a different tag.
std::uint64_t test_dataset_seed(std::uint64_t base_seed, const std::string& preset);

// Fresh test datasets per preset with held-out seeds; Table-1/2/3-shaped
// results including the unweighted Avg over P1..P4.
SuiteResult eval_suite(model::DgModel& m, const std::vector<sim::EmitterSpec>& roster,
                       int n_per_class, std::uint64_t base_seed);

// results.json (machine readable: every table cell + curve points + seed and
// config-hash provenance), report.txt rendering, fewshot_curve.csv.
void make_report(const std::string& out_dir, const SuiteResult& suite,
                 const std::vector<FewshotPoint>& fewshot_curve, const std::string& config_hash);

// Round-trip parse of results.json written by make_report.
struct ParsedReport {
    SuiteResult suite;
    std::vector<FewshotPoint> fewshot_curve;
    std::string config_hash;
};
ParsedReport parse_report(const std::string& results_json_path);

// FNV-1a over a config string, hex-encoded; provenance tag for reports.
std::string config_hash(const std::string& text);

}  // namespace pridg::eval
