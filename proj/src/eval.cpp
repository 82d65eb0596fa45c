#include "pridg/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "pridg/train.hpp"

namespace pridg::eval {

using nlohmann::json;

std::string modulation_column(sim::Modulation m) {
    switch (m) {
        case sim::Modulation::Constant: return "CST";
        case sim::Modulation::Jittered: return "JIT";
        case sim::Modulation::Sliding: return "SLD";
        case sim::Modulation::Wobulated: return "WOB";
        case sim::Modulation::DwellSwitch: return "D&S";
        case sim::Modulation::Staggered: return "STG";
    }
    throw std::invalid_argument("unknown modulation");
}

Metrics eval_accuracy(model::DgModel& m, const sim::Dataset& ds,
                      const std::vector<sim::EmitterSpec>& roster) {
    if (ds.samples.empty()) throw std::invalid_argument("eval_accuracy: empty dataset");

    std::map<int, sim::Modulation> mod_of;
    for (const auto& spec : roster) mod_of[spec.id] = spec.modulation;

    int n_classes = m.cfg.n_classes;
    Metrics out;
    out.confusion.assign(static_cast<std::size_t>(n_classes),
                         std::vector<std::int64_t>(static_cast<std::size_t>(n_classes), 0));

    constexpr int kChunk = 256;
    std::vector<int> indices;
    for (std::size_t lo = 0; lo < ds.samples.size(); lo += kChunk) {
        std::size_t hi = std::min(lo + kChunk, ds.samples.size());
        indices.resize(hi - lo);
        for (std::size_t i = lo; i < hi; ++i) indices[i - lo] = static_cast<int>(i);
        nn::Tensor x = train::samples_to_tensor(ds, indices, m.cfg.norm_scale);
        nn::Tensor h = model::extract_features(m, x);
        nn::Tensor logits = model::classify_labels(m, h);
        int c = logits.shape[1];
        for (int r = 0; r < logits.shape[0]; ++r) {
            const float* row = logits.data.data() + static_cast<std::size_t>(r) * c;
            int pred = static_cast<int>(std::max_element(row, row + c) - row);
            int truth = ds.samples[lo + static_cast<std::size_t>(r)].label;
            if (truth < 0 || truth >= n_classes)
                throw std::invalid_argument("eval_accuracy: label out of range");
            ++out.confusion[static_cast<std::size_t>(truth)][static_cast<std::size_t>(pred)];
        }
    }

    std::map<std::string, std::int64_t> mod_correct, mod_total;
    std::int64_t trace = 0;
    for (int t = 0; t < n_classes; ++t) {
        std::int64_t row_total = 0;
        for (int p = 0; p < n_classes; ++p) row_total += out.confusion[t][p];
        if (row_total == 0) continue;
        std::int64_t correct = out.confusion[t][t];
        trace += correct;
        out.total += row_total;
        out.per_emitter[t] = static_cast<double>(correct) / static_cast<double>(row_total);
        auto it = mod_of.find(t);
        if (it != mod_of.end()) {
            std::string col = modulation_column(it->second);
            mod_correct[col] += correct;
            mod_total[col] += row_total;
        }
    }
    out.overall_acc = static_cast<double>(trace) / static_cast<double>(out.total);
    for (const auto& [col, total] : mod_total)
        out.per_modulation[col] = static_cast<double>(mod_correct[col]) / static_cast<double>(total);
    return out;
}

std::uint64_t test_dataset_seed(std::uint64_t base_seed, const std::string& preset) {
    std::uint64_t tag = 0xE7A1ull;
    for (char c : preset) tag = mix_seed(tag, static_cast<std::uint64_t>(c));
    return mix_seed(base_seed, tag);
}

SuiteResult eval_suite(model::DgModel& m, const std::vector<sim::EmitterSpec>& roster,
                       int n_per_class, std::uint64_t base_seed) {
    SuiteResult res;
    res.base_seed = base_seed;
    res.n_per_class = n_per_class;
    double sum = 0.0;
    for (const std::string preset : {"p1", "p2", "p3", "p4"}) {
        std::uint64_t seed = test_dataset_seed(base_seed, preset);
        sim::Dataset ds = sim::make_dataset(roster, sim::scenario_by_name(preset), n_per_class,
                                            m.cfg.seq_len, seed);
        res.scenario_seeds[preset] = seed;
        Metrics metrics = eval_accuracy(m, ds, roster);
        sum += metrics.overall_acc;
        res.per_scenario[preset] = std::move(metrics);
    }
    res.avg_acc = sum / 4.0;
    return res;
}

namespace {

json metrics_to_json(const Metrics& m) {
    json j;
    j["overall_acc"] = m.overall_acc;
    j["total"] = m.total;
    j["per_modulation"] = m.per_modulation;
    json pe = json::object();
    for (const auto& [id, acc] : m.per_emitter) pe[std::to_string(id)] = acc;
    j["per_emitter"] = pe;
    j["confusion"] = m.confusion;
    return j;
}

Metrics metrics_from_json(const json& j) {
    Metrics m;
    m.overall_acc = j.at("overall_acc");
    m.total = j.at("total");
    m.per_modulation = j.at("per_modulation").get<std::map<std::string, double>>();
    for (const auto& [key, val] : j.at("per_emitter").items())
        m.per_emitter[std::stoi(key)] = val.get<double>();
    m.confusion = j.at("confusion").get<std::vector<std::vector<std::int64_t>>>();
    return m;
}

}  // namespace

std::string config_hash(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void make_report(const std::string& out_dir, const SuiteResult& suite,
                 const std::vector<FewshotPoint>& fewshot_curve, const std::string& cfg_hash) {
    std::filesystem::create_directories(out_dir);

    json doc;
    doc["schema"] = "pridg-results-v1";
    doc["config_hash"] = cfg_hash;
    doc["base_seed"] = suite.base_seed;
    doc["n_per_class"] = suite.n_per_class;
    doc["avg_acc"] = suite.avg_acc;
    json scen = json::object();
    for (const auto& [name, metrics] : suite.per_scenario) scen[name] = metrics_to_json(metrics);
    doc["per_scenario"] = scen;
    json seeds = json::object();
    for (const auto& [name, s] : suite.scenario_seeds) seeds[name] = s;
    doc["scenario_seeds"] = seeds;
    json curve = json::array();
    for (const auto& p : fewshot_curve) curve.push_back({{"n", p.n}, {"acc", p.acc}});
    doc["fewshot_curve"] = curve;

    {
        std::ofstream out(out_dir + "/results.json");
        if (!out) throw std::runtime_error("cannot write " + out_dir + "/results.json");
        out << doc.dump(2) << '\n';
    }

    // human-readable rendering
    {
        std::ofstream out(out_dir + "/report.txt");
        if (!out) throw std::runtime_error("cannot write " + out_dir + "/report.txt");
        out << "PRI emitter recognition report\n";
        out << "config_hash=" << cfg_hash << " seed=" << suite.base_seed
            << " n_per_class=" << suite.n_per_class << "\n\n";

        out << "Accuracy per EW scene:\n  ";
        for (const std::string p : {"p1", "p2", "p3", "p4"}) {
            auto it = suite.per_scenario.find(p);
            char buf[48];
            std::snprintf(buf, sizeof(buf), "%s=%.3f  ", p.c_str(),
                          it != suite.per_scenario.end() ? it->second.overall_acc : 0.0);
            out << buf;
        }
        char avg[32];
        std::snprintf(avg, sizeof(avg), "avg=%.3f\n\n", suite.avg_acc);
        out << avg;

        auto p4 = suite.per_scenario.find("p4");
        if (p4 != suite.per_scenario.end()) {
            out << "Accuracy per PRI modulation (P4):\n  ";
            for (const std::string col : {"CST", "JIT", "SLD", "WOB", "D&S", "STG"}) {
                auto it = p4->second.per_modulation.find(col);
                char buf[48];
                std::snprintf(buf, sizeof(buf), "%s=%.3f  ", col.c_str(),
                              it != p4->second.per_modulation.end() ? it->second : 0.0);
                out << buf;
            }
            out << "\n\nAccuracy per staggered emitter (P4):\n  ";
            int stg = 1;
            for (const auto& [id, acc] : p4->second.per_emitter) {
                (void)id;
                if (id >= 5) {  // staggered emitters occupy ids 5..9 in the default roster
                    char buf[48];
                    std::snprintf(buf, sizeof(buf), "STG%d=%.3f  ", stg++, acc);
                    out << buf;
                }
            }
            out << "\n";
        }

        if (!fewshot_curve.empty()) {
            out << "\nFew-shot fine-tuning (P4 accuracy vs samples/class):\n  ";
            for (const auto& p : fewshot_curve) {
                char buf[48];
                std::snprintf(buf, sizeof(buf), "n=%d:%.3f  ", p.n, p.acc);
                out << buf;
            }
            out << "\n";
        }
    }

    // plot data for the few-shot curve
    {
        std::ofstream out(out_dir + "/fewshot_curve.csv");
        if (!out) throw std::runtime_error("cannot write " + out_dir + "/fewshot_curve.csv");
        out << "n,accuracy\n";
        for (const auto& p : fewshot_curve) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%d,%.6f\n", p.n, p.acc);
            out << buf;
        }
    }
}

ParsedReport parse_report(const std::string& results_json_path) {
    std::ifstream in(results_json_path);
    if (!in) throw std::runtime_error("cannot open " + results_json_path);
    json doc = json::parse(in);
    if (doc.at("schema") != "pridg-results-v1")
        throw std::runtime_error("unknown results schema in " + results_json_path);

    ParsedReport rep;
    rep.config_hash = doc.at("config_hash");
    rep.suite.base_seed = doc.at("base_seed");
    rep.suite.n_per_class = doc.at("n_per_class");
    rep.suite.avg_acc = doc.at("avg_acc");
    for (const auto& [name, j] : doc.at("per_scenario").items())
        rep.suite.per_scenario[name] = metrics_from_json(j);
    for (const auto& [name, s] : doc.at("scenario_seeds").items())
        rep.suite.scenario_seeds[name] = s.get<std::uint64_t>();
    for (const auto& p : doc.at("fewshot_curve"))
        rep.fewshot_curve.push_back({p.at("n").get<int>(), p.at("acc").get<double>()});
    return rep;
}

}  // namespace pridg::eval
