#pragma once

#include <string>
#include <vector>

#include "pridg/augment.hpp"
#include "pridg/sim.hpp"

namespace pridg::io {

// Dataset CSV: one sample per row, `label,domain_id,p_0,...,p_{L-1}` with PRI
// in microseconds at 6 significant digits. A JSON sidecar (<path>.meta.json)
// records scenario params, roster version, seed and seq_len.
void write_dataset_csv(const std::string& path, const sim::Dataset& ds);
sim::Dataset read_dataset_csv(const std::string& path);

// Roster config: JSON list of emitter specs.
void write_roster(const std::string& path, const std::vector<sim::EmitterSpec>& roster);
std::vector<sim::EmitterSpec> read_roster(const std::string& path);

// Generator bank, serialized alongside training checkpoints.
void write_bank(const std::string& path, const augment::GeneratorBank& bank);
augment::GeneratorBank read_bank(const std::string& path);

}  // namespace pridg::io
