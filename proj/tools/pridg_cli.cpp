// Command-line front end: dataset synthesis, training, evaluation, few-shot
// fine-tuning and report rendering.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pridg/augment.hpp"
#include "pridg/dataset_io.hpp"
#include "pridg/eval.hpp"
#include "pridg/model.hpp"
#include "pridg/sim.hpp"
#include "pridg/train.hpp"

namespace fs = std::filesystem;
using namespace pridg;

namespace {

std::vector<sim::EmitterSpec> load_roster_or_default(const std::string& path) {
    if (path.empty()) return sim::default_roster();
    return io::read_roster(path);
}

train::TrainConfig load_train_config(const std::string& path) {
    if (path.empty()) return {};
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return train::TrainConfig::from_json(ss.str());
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(std::stoi(cell));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PRI pulse-train synthesis and domain-generalizing emitter classification"};
    app.require_subcommand(1);

    // --- gen-data ---------------------------------------------------------
    auto* gen = app.add_subcommand("gen-data", "Synthesize a labeled scenario dataset");
    std::string gen_scenario = "train", gen_out, gen_roster;
    double gen_rho_r = 0, gen_rho_m = 0, gen_rho_n = 0;
    int gen_n_per_class = 500, gen_seq_len = 128;
    std::uint64_t gen_seed = 1;
    gen->add_option("--scenario", gen_scenario, "train|p1|p2|p3|p4|custom")->capture_default_str();
    gen->add_option("--rho-r", gen_rho_r, "measurement-error ratio (custom scenario)");
    gen->add_option("--rho-m", gen_rho_m, "missing-pulse ratio (custom scenario)");
    gen->add_option("--rho-n", gen_rho_n, "spurious-to-pulse ratio (custom scenario)");
    gen->add_option("--n-per-class", gen_n_per_class)->capture_default_str();
    gen->add_option("--seq-len", gen_seq_len)->capture_default_str();
    gen->add_option("--seed", gen_seed)->capture_default_str();
    gen->add_option("--roster", gen_roster, "roster JSON (default: built-in 10-emitter roster)");
    gen->add_option("--out", gen_out, "output directory")->required();

    // --- train ------------------------------------------------------------
    auto* tr = app.add_subcommand("train", "Train the domain-generalizing classifier");
    std::string tr_data, tr_config, tr_out, tr_roster;
    bool tr_erm = false;
    tr->add_option("--data", tr_data, "directory with dataset.csv from gen-data")->required();
    tr->add_option("--config", tr_config, "training config JSON");
    tr->add_option("--roster", tr_roster, "roster JSON");
    tr->add_flag("--erm", tr_erm, "plain ERM baseline: no augmentation, alpha=beta=0");
    tr->add_option("--out", tr_out, "output directory")->required();

    // --- eval -------------------------------------------------------------
    auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on the preset test scenes");
    std::string ev_ckpt, ev_out, ev_roster, ev_presets = "p1,p2,p3,p4";
    int ev_n_per_class = 200;
    std::uint64_t ev_seed = 7;
    ev->add_option("--checkpoint", ev_ckpt)->required();
    ev->add_option("--presets", ev_presets)->capture_default_str();
    ev->add_option("--n-per-class", ev_n_per_class)->capture_default_str();
    ev->add_option("--seed", ev_seed)->capture_default_str();
    ev->add_option("--roster", ev_roster, "roster JSON");
    ev->add_option("--out", ev_out, "output directory")->required();

    // --- fewshot ----------------------------------------------------------
    auto* fsh = app.add_subcommand("fewshot", "Few-shot fine-tuning curve on a target scene");
    std::string fs_ckpt, fs_target, fs_out, fs_roster, fs_n = "1,2,5,10,20", fs_source, fs_config;
    fsh->add_option("--checkpoint", fs_ckpt)->required();
    fsh->add_option("--source", fs_source, "source training dataset directory")->required();
    fsh->add_option("--target", fs_target, "target dataset directory")->required();
    fsh->add_option("--n", fs_n, "comma-separated samples/class grid")->capture_default_str();
    fsh->add_option("--config", fs_config, "training config JSON");
    fsh->add_option("--roster", fs_roster, "roster JSON");
    fsh->add_option("--out", fs_out, "output directory")->required();

    // --- report -----------------------------------------------------------
    auto* rp = app.add_subcommand("report", "Re-render report files from results.json");
    std::string rp_in, rp_out;
    rp->add_option("--in", rp_in, "directory containing results.json")->required();
    rp->add_option("--out", rp_out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            sim::ScenarioParams scenario = gen_scenario == "custom"
                                               ? sim::ScenarioParams{gen_rho_r, gen_rho_m, gen_rho_n}
                                               : sim::scenario_by_name(gen_scenario);
            auto roster = load_roster_or_default(gen_roster);
            sim::Dataset ds = sim::make_dataset(roster, scenario, gen_n_per_class, gen_seq_len, gen_seed);
            fs::create_directories(gen_out);
            io::write_dataset_csv(gen_out + "/dataset.csv", ds);
            io::write_roster(gen_out + "/roster.json", roster);
            std::printf("wrote %zu samples to %s/dataset.csv\n", ds.samples.size(), gen_out.c_str());
        } else if (*tr) {
            auto roster = load_roster_or_default(tr_roster);
            sim::Dataset ds = io::read_dataset_csv(tr_data + "/dataset.csv");
            train::TrainConfig cfg = load_train_config(tr_config);
            cfg.seq_len = ds.seq_len;
            cfg.checkpoint_dir = tr_out;
            if (tr_erm) {
                cfg.alpha = 0.0;
                cfg.beta = 0.0;
                cfg.k_generators = 0;
            }

            model::ModelConfig mcfg;
            mcfg.seq_len = ds.seq_len;
            mcfg.n_domains = cfg.k_generators + 1;
            mcfg.norm_scale = sim::normalization_scale(roster);
            mcfg.alpha = cfg.alpha;
            mcfg.beta = cfg.beta;
            model::DgModel m = model::build_dg_model<float>(mcfg, mix_seed(cfg.seed, 0x111ull));

            augment::GeneratorBank bank;
            if (cfg.k_generators > 0)
                bank = augment::sample_bank(cfg.ranges, cfg.k_generators, mix_seed(cfg.seed, 0xBA2Cull));

            train::TrainStats stats = train::run_training(m, ds, bank, cfg);
            fs::create_directories(tr_out);
            std::ofstream log(tr_out + "/train.log");
            for (const auto& e : stats.epochs) {
                std::string line = train::format_epoch_stats(e);
                log << line << '\n';
                std::printf("%s\n", line.c_str());
            }
            nlohmann::json extra{{"seed", cfg.seed},
                                 {"train_config", nlohmann::json::parse(cfg.to_json())}};
            model::save_checkpoint(tr_out + "/final.ckpt", m, extra.dump());
            std::ofstream cfg_out(tr_out + "/train_config.json");
            cfg_out << cfg.to_json() << '\n';
        } else if (*ev) {
            auto roster = load_roster_or_default(ev_roster);
            model::Checkpoint ckpt = model::load_checkpoint(ev_ckpt);
            eval::SuiteResult suite = eval::eval_suite(ckpt.model, roster, ev_n_per_class, ev_seed);
            std::string hash = eval::config_hash(model::model_config_to_json(ckpt.model.cfg));
            eval::make_report(ev_out, suite, {}, hash);
            for (const std::string p : {"p1", "p2", "p3", "p4"})
                std::printf("%s acc=%.4f\n", p.c_str(), suite.per_scenario.at(p).overall_acc);
            std::printf("avg acc=%.4f\n", suite.avg_acc);
        } else if (*fsh) {
            auto roster = load_roster_or_default(fs_roster);
            sim::Dataset source = io::read_dataset_csv(fs_source + "/dataset.csv");
            sim::Dataset target = io::read_dataset_csv(fs_target + "/dataset.csv");
            train::TrainConfig cfg = load_train_config(fs_config);
            cfg.seq_len = source.seq_len;

            std::vector<eval::FewshotPoint> curve;
            for (int n : parse_int_list(fs_n)) {
                model::Checkpoint ckpt = model::load_checkpoint(fs_ckpt);
                train::fewshot_finetune(ckpt.model, source, target, n, cfg);
                eval::Metrics metrics = eval::eval_accuracy(ckpt.model, target, roster);
                curve.push_back({n, metrics.overall_acc});
                std::printf("n=%d target acc=%.4f\n", n, metrics.overall_acc);
            }
            fs::create_directories(fs_out);
            std::ofstream out(fs_out + "/fewshot_curve.csv");
            out << "n,accuracy\n";
            for (const auto& p : curve) out << p.n << ',' << p.acc << '\n';
        } else if (*rp) {
            eval::ParsedReport rep = eval::parse_report(rp_in + "/results.json");
            eval::make_report(rp_out, rep.suite, rep.fewshot_curve, rep.config_hash);
            std::printf("re-rendered report into %s\n", rp_out.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
