#include "pridg/dataset_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace pridg::io {

using nlohmann::json;

namespace {

std::string meta_path(const std::string& path) { return path + ".meta.json"; }

std::string format_pri(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

void write_dataset_csv(const std::string& path, const sim::Dataset& ds) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    for (const auto& s : ds.samples) {
        out << s.label << ',' << s.domain_id;
        for (double p : s.pris) out << ',' << format_pri(p);
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);

    json meta{{"schema", "pridg-dataset-v1"},
              {"scenario", {{"rho_r", ds.scenario.rho_r},
                            {"rho_m", ds.scenario.rho_m},
                            {"rho_n", ds.scenario.rho_n}}},
              {"roster_version", ds.roster_version},
              {"seed", ds.seed},
              {"seq_len", ds.seq_len},
              {"n_samples", ds.samples.size()}};
    std::ofstream mout(meta_path(path));
    if (!mout) throw std::runtime_error("cannot open for writing: " + meta_path(path));
    mout << meta.dump(2) << '\n';
}

sim::Dataset read_dataset_csv(const std::string& path) {
    std::ifstream min(meta_path(path));
    if (!min) throw std::runtime_error("missing dataset metadata: " + meta_path(path));
    json meta = json::parse(min);
    if (meta.at("schema") != "pridg-dataset-v1")
        throw std::runtime_error("unknown dataset schema in " + meta_path(path));

    sim::Dataset ds;
    ds.scenario.rho_r = meta.at("scenario").at("rho_r");
    ds.scenario.rho_m = meta.at("scenario").at("rho_m");
    ds.scenario.rho_n = meta.at("scenario").at("rho_n");
    ds.roster_version = meta.at("roster_version");
    ds.seed = meta.at("seed");
    ds.seq_len = meta.at("seq_len");

    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        sim::PriSequence s;
        std::stringstream ss(line);
        std::string cell;
        int col = 0;
        while (std::getline(ss, cell, ',')) {
            if (col == 0) s.label = std::stoi(cell);
            else if (col == 1) s.domain_id = std::stoi(cell);
            else s.pris.push_back(std::stod(cell));
            ++col;
        }
        if (static_cast<int>(s.pris.size()) != ds.seq_len)
            throw std::runtime_error("row length disagrees with seq_len in " + path);
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

void write_roster(const std::string& path, const std::vector<sim::EmitterSpec>& roster) {
    json arr = json::array();
    for (const auto& e : roster) {
        json j{{"id", e.id}, {"modulation", sim::modulation_name(e.modulation)}};
        switch (e.modulation) {
            case sim::Modulation::Constant:
                j["base_pri"] = e.base_pri;
                break;
            case sim::Modulation::Jittered:
                j["base_pri"] = e.base_pri;
                j["jitter"] = e.jitter;
                break;
            case sim::Modulation::Sliding:
                j["slide_min"] = e.slide_min;
                j["slide_max"] = e.slide_max;
                j["slide_steps"] = e.slide_steps;
                break;
            case sim::Modulation::Wobulated:
                j["base_pri"] = e.base_pri;
                j["wobble_amp"] = e.wobble_amp;
                j["wobble_period"] = e.wobble_period;
                break;
            case sim::Modulation::Staggered:
                j["stagger_levels"] = e.stagger_levels;
                break;
            case sim::Modulation::DwellSwitch:
                j["dwell_pris"] = e.dwell_pris;
                j["dwell_count"] = e.dwell_count;
                break;
        }
        arr.push_back(j);
    }
    json doc{{"schema", "pridg-roster-v1"},
             {"version", sim::default_roster_version()},
             {"emitters", arr}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << doc.dump(2) << '\n';
}

std::vector<sim::EmitterSpec> read_roster(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open roster: " + path);
    json doc = json::parse(in);
    if (doc.at("schema") != "pridg-roster-v1")
        throw std::runtime_error("unknown roster schema in " + path);

    std::vector<sim::EmitterSpec> roster;
    for (const auto& j : doc.at("emitters")) {
        sim::EmitterSpec e;
        e.id = j.at("id");
        e.modulation = sim::modulation_from_name(j.at("modulation"));
        switch (e.modulation) {
            case sim::Modulation::Constant:
                e.base_pri = j.at("base_pri");
                break;
            case sim::Modulation::Jittered:
                e.base_pri = j.at("base_pri");
                e.jitter = j.at("jitter");
                break;
            case sim::Modulation::Sliding:
                e.slide_min = j.at("slide_min");
                e.slide_max = j.at("slide_max");
                e.slide_steps = j.at("slide_steps");
                break;
            case sim::Modulation::Wobulated:
                e.base_pri = j.at("base_pri");
                e.wobble_amp = j.at("wobble_amp");
                e.wobble_period = j.at("wobble_period");
                break;
            case sim::Modulation::Staggered:
                e.stagger_levels = j.at("stagger_levels").get<std::vector<double>>();
                break;
            case sim::Modulation::DwellSwitch:
                e.dwell_pris = j.at("dwell_pris").get<std::vector<double>>();
                e.dwell_count = j.at("dwell_count");
                break;
        }
        e.validate();
        roster.push_back(std::move(e));
    }
    return roster;
}

namespace {

const char* sub_op_name(augment::SubOpKind k) {
    switch (k) {
        case augment::SubOpKind::AddPulses: return "add_pulses";
        case augment::SubOpKind::DropPulses: return "drop_pulses";
        case augment::SubOpKind::GaussianNoise: return "gaussian_noise";
    }
    throw std::invalid_argument("unknown sub-op kind");
}

augment::SubOpKind sub_op_from_name(const std::string& name) {
    if (name == "add_pulses") return augment::SubOpKind::AddPulses;
    if (name == "drop_pulses") return augment::SubOpKind::DropPulses;
    if (name == "gaussian_noise") return augment::SubOpKind::GaussianNoise;
    throw std::invalid_argument("unknown sub-op name: " + name);
}

}  // namespace

void write_bank(const std::string& path, const augment::GeneratorBank& bank) {
    json arr = json::array();
    for (const auto& g : bank.generators) {
        json ops = json::array();
        for (const auto& op : g.ops)
            ops.push_back({{"kind", sub_op_name(op.kind)}, {"param", op.param}});
        arr.push_back({{"id", g.id}, {"seed", g.seed}, {"ops", ops}});
    }
    json doc{{"schema", "pridg-bank-v1"}, {"generators", arr}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << doc.dump(2) << '\n';
}

augment::GeneratorBank read_bank(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open generator bank: " + path);
    json doc = json::parse(in);
    if (doc.at("schema") != "pridg-bank-v1")
        throw std::runtime_error("unknown bank schema in " + path);

    augment::GeneratorBank bank;
    for (const auto& j : doc.at("generators")) {
        augment::NoiseGenerator g;
        g.id = j.at("id");
        g.seed = j.at("seed");
        for (const auto& o : j.at("ops"))
            g.ops.push_back({sub_op_from_name(o.at("kind")), o.at("param")});
        bank.generators.push_back(std::move(g));
    }
    bank.validate();
    return bank;
}

}  // namespace pridg::io
