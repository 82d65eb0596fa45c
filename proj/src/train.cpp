#include "pridg/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "pridg/dataset_io.hpp"

namespace pridg::train {

using nlohmann::json;

void TrainConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (batch_size < 2 || batch_size % 2 != 0)
        throw std::invalid_argument("batch_size must be even and >= 2");
    if (lr <= 0) throw std::invalid_argument("lr must be > 0");
    if (momentum < 0 || momentum >= 1) throw std::invalid_argument("momentum must be in [0, 1)");
    if (beta_warmup_frac < 0 || beta_warmup_frac > 1)
        throw std::invalid_argument("beta_warmup_frac must be in [0, 1]");
    if (k_generators < 0) throw std::invalid_argument("k_generators must be >= 0");
    if (seq_len < 8) throw std::invalid_argument("seq_len must be >= 8");
    ranges.validate();
}

std::string TrainConfig::to_json() const {
    json j{{"epochs", epochs},
           {"batch_size", batch_size},
           {"lr", lr},
           {"momentum", momentum},
           {"alpha", alpha},
           {"beta", beta},
           {"beta_warmup_frac", beta_warmup_frac},
           {"k_generators", k_generators},
           {"resample_bank_each_epoch", resample_bank_each_epoch},
           {"ranges", {{"drop_lo", ranges.drop_lo}, {"drop_hi", ranges.drop_hi},
                       {"add_lo", ranges.add_lo}, {"add_hi", ranges.add_hi},
                       {"sigma_lo", ranges.sigma_lo}, {"sigma_hi", ranges.sigma_hi}}},
           {"seq_len", seq_len},
           {"seed", seed},
           {"checkpoint_dir", checkpoint_dir},
           {"fewshot_epochs", fewshot_epochs}};
    return j.dump(2);
}

TrainConfig TrainConfig::from_json(const std::string& text) {
    json j = json::parse(text);
    TrainConfig c;
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr = j.value("lr", c.lr);
    c.momentum = j.value("momentum", c.momentum);
    c.alpha = j.value("alpha", c.alpha);
    c.beta = j.value("beta", c.beta);
    c.beta_warmup_frac = j.value("beta_warmup_frac", c.beta_warmup_frac);
    c.k_generators = j.value("k_generators", c.k_generators);
    c.resample_bank_each_epoch = j.value("resample_bank_each_epoch", c.resample_bank_each_epoch);
    if (j.contains("ranges")) {
        const auto& r = j.at("ranges");
        c.ranges.drop_lo = r.value("drop_lo", c.ranges.drop_lo);
        c.ranges.drop_hi = r.value("drop_hi", c.ranges.drop_hi);
        c.ranges.add_lo = r.value("add_lo", c.ranges.add_lo);
        c.ranges.add_hi = r.value("add_hi", c.ranges.add_hi);
        c.ranges.sigma_lo = r.value("sigma_lo", c.ranges.sigma_lo);
        c.ranges.sigma_hi = r.value("sigma_hi", c.ranges.sigma_hi);
    }
    c.seq_len = j.value("seq_len", c.seq_len);
    c.seed = j.value("seed", c.seed);
    c.checkpoint_dir = j.value("checkpoint_dir", c.checkpoint_dir);
    c.fewshot_epochs = j.value("fewshot_epochs", c.fewshot_epochs);
    c.validate();
    return c;
}

nn::Tensor samples_to_tensor(const sim::Dataset& ds, const std::vector<int>& indices,
                             double norm_scale) {
    int b = static_cast<int>(indices.size());
    int len = ds.seq_len;
    nn::Tensor x({b, 1, len});
    float inv = static_cast<float>(1.0 / norm_scale);
    for (int n = 0; n < b; ++n) {
        const auto& s = ds.samples[static_cast<std::size_t>(indices[static_cast<std::size_t>(n)])];
        for (int i = 0; i < len; ++i)
            x.data[static_cast<std::size_t>(n) * len + i] =
                static_cast<float>(s.pris[static_cast<std::size_t>(i)]) * inv;
    }
    return x;
}

namespace {

std::vector<int> epoch_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    return perm;
}

void one_hot_row(nn::Tensor& t, int row, int cls) {
    int c = t.shape[1];
    if (cls < 0 || cls >= c) throw std::invalid_argument("class id out of range for one-hot");
    t.data[static_cast<std::size_t>(row) * c + cls] = 1.0f;
}

}  // namespace

int steps_per_epoch(std::size_t n_source, int batch_size, bool paired) {
    int chunk = paired ? batch_size / 2 : batch_size;
    return static_cast<int>((n_source + static_cast<std::size_t>(chunk) - 1) / chunk);
}

Batch make_minibatch(const sim::Dataset& s, const sim::Dataset& s_plus, int b, std::uint64_t seed,
                     int step, int n_generators, const model::ModelConfig& mcfg) {
    bool paired = !s_plus.samples.empty();
    std::size_t n = s.samples.size();
    int chunk = paired ? b / 2 : b;
    if (static_cast<std::size_t>(chunk) > n)
        throw std::invalid_argument("batch size exceeds source set size");

    int spe = steps_per_epoch(n, b, paired);
    int epoch_step = step % spe;
    std::vector<int> perm = epoch_permutation(n, mix_seed(seed, static_cast<std::uint64_t>(step / spe)));

    std::size_t lo = static_cast<std::size_t>(epoch_step) * chunk;
    std::size_t hi = std::min(lo + static_cast<std::size_t>(chunk), n);

    Batch batch;
    std::vector<int> src_rows(perm.begin() + static_cast<std::ptrdiff_t>(lo),
                              perm.begin() + static_cast<std::ptrdiff_t>(hi));
    std::vector<int> rows = src_rows;
    if (paired) {
        int g = n_generators > 0 ? step % n_generators : 0;
        for (std::size_t i = 0; i < src_rows.size(); ++i) {
            int aug_index = g * static_cast<int>(n) + src_rows[i];
            batch.pairs.emplace_back(static_cast<int>(i), static_cast<int>(src_rows.size() + i));
            rows.push_back(aug_index);
        }
    }

    int total = static_cast<int>(rows.size());
    batch.x = nn::Tensor({total, 1, s.seq_len});
    batch.y = nn::Tensor({total, mcfg.n_classes});
    batch.z = nn::Tensor({total, mcfg.n_domains});
    float inv = static_cast<float>(1.0 / mcfg.norm_scale);
    for (int r = 0; r < total; ++r) {
        bool is_src = r < static_cast<int>(src_rows.size()) || !paired;
        const sim::PriSequence& sample =
            is_src ? s.samples[static_cast<std::size_t>(rows[static_cast<std::size_t>(r)])]
                   : s_plus.samples[static_cast<std::size_t>(rows[static_cast<std::size_t>(r)])];
        for (int i = 0; i < s.seq_len; ++i)
            batch.x.data[static_cast<std::size_t>(r) * s.seq_len + i] =
                static_cast<float>(sample.pris[static_cast<std::size_t>(i)]) * inv;
        one_hot_row(batch.y, r, sample.label);
        one_hot_row(batch.z, r, sample.domain_id);
        batch.labels.push_back(sample.label);
        batch.domains.push_back(sample.domain_id);
    }
    return batch;
}

std::string format_epoch_stats(const EpochStats& e) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "epoch=%d label_ce=%.6f align=%.6f domain_ce=%.6f total=%.6f beta_eff=%.4f "
                  "train_acc=%.4f domain_acc=%.4f",
                  e.epoch, e.label_ce, e.align, e.domain_ce, e.total, e.beta_effective,
                  e.train_acc, e.domain_acc);
    return buf;
}

TrainStats run_training(model::DgModel& m, const sim::Dataset& s, const augment::GeneratorBank& bank,
                        const TrainConfig& cfg) {
    cfg.validate();
    if (s.samples.empty()) throw std::invalid_argument("training set is empty");
    if (!bank.empty()) bank.validate();

    bool dg_mode = !bank.empty();
    int k = static_cast<int>(bank.size());
    int spe = steps_per_epoch(s.samples.size(), cfg.batch_size, dg_mode);
    long total_steps = static_cast<long>(spe) * cfg.epochs;
    long warmup_steps = static_cast<long>(total_steps * cfg.beta_warmup_frac);

    nn::Sgd opt(m.all_params(), cfg.lr, cfg.momentum);
    if (!cfg.checkpoint_dir.empty()) std::filesystem::create_directories(cfg.checkpoint_dir);

    TrainStats stats;
    long global_step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        augment::GeneratorBank epoch_bank = bank;
        sim::Dataset s_plus;
        s_plus.seq_len = s.seq_len;
        if (dg_mode) {
            if (cfg.resample_bank_each_epoch)
                epoch_bank = augment::sample_bank(cfg.ranges, k,
                                                  mix_seed(cfg.seed, 0xBA2Cull, static_cast<std::uint64_t>(epoch)));
            s_plus = augment::build_augmented_set(
                s, epoch_bank, mix_seed(cfg.seed, 0xA06ull, static_cast<std::uint64_t>(epoch)));
        }

        EpochStats es;
        es.epoch = epoch;
        long correct = 0, domain_correct = 0, seen = 0;
        for (int step = 0; step < spe; ++step, ++global_step) {
            double beta_eff = cfg.beta;
            if (warmup_steps > 0 && global_step < warmup_steps)
                beta_eff = cfg.beta * static_cast<double>(global_step) / static_cast<double>(warmup_steps);

            Batch batch = make_minibatch(s, s_plus, cfg.batch_size,
                                         mix_seed(cfg.seed, 0x57E9ull), epoch * spe + step, k, m.cfg);
            m.zero_grad();
            model::LossTerms terms = model::dg_forward_backward(
                m, batch.x, batch.y, batch.z, batch.pairs, cfg.alpha, beta_eff, dg_mode);
            if (!std::isfinite(terms.total))
                throw std::runtime_error(
                    "non-finite loss at epoch " + std::to_string(epoch) + " step " +
                    std::to_string(step) + ": label_ce=" + std::to_string(terms.label_ce) +
                    " align=" + std::to_string(terms.align) +
                    " domain_ce=" + std::to_string(terms.domain_ce));
            opt.step();

            // accuracies from this step's forward pass
            {
                nn::Tensor h = model::extract_features(m, batch.x);
                nn::Tensor logits = model::classify_labels(m, h);
                int c = logits.shape[1];
                for (int r = 0; r < logits.shape[0]; ++r) {
                    const float* row = logits.data.data() + static_cast<std::size_t>(r) * c;
                    int arg = static_cast<int>(std::max_element(row, row + c) - row);
                    if (arg == batch.labels[static_cast<std::size_t>(r)]) ++correct;
                }
                if (dg_mode) {
                    nn::Tensor dl = model::classify_domain(m, h);
                    int dc = dl.shape[1];
                    for (int r = 0; r < dl.shape[0]; ++r) {
                        const float* row = dl.data.data() + static_cast<std::size_t>(r) * dc;
                        int arg = static_cast<int>(std::max_element(row, row + dc) - row);
                        if (arg == batch.domains[static_cast<std::size_t>(r)]) ++domain_correct;
                    }
                }
                seen += logits.shape[0];
            }

            es.label_ce += terms.label_ce;
            es.align += terms.align;
            es.domain_ce += terms.domain_ce;
            es.total += terms.total;
            es.beta_effective = beta_eff;
        }
        es.label_ce /= spe;
        es.align /= spe;
        es.domain_ce /= spe;
        es.total /= spe;
        es.train_acc = static_cast<double>(correct) / static_cast<double>(seen);
        es.domain_acc = dg_mode ? static_cast<double>(domain_correct) / static_cast<double>(seen) : 0.0;
        stats.epochs.push_back(es);

        if (!cfg.checkpoint_dir.empty()) {
            char name[64];
            std::snprintf(name, sizeof(name), "epoch_%03d.ckpt", epoch);
            json extra{{"epoch", epoch}, {"seed", cfg.seed}, {"train_config", json::parse(cfg.to_json())}};
            model::save_checkpoint(cfg.checkpoint_dir + "/" + name, m, extra.dump());
            if (dg_mode)
                io::write_bank(cfg.checkpoint_dir + "/bank_latest.json", epoch_bank);
        }
    }
    return stats;
}

TrainStats fewshot_finetune(model::DgModel& m, const sim::Dataset& source,
                            const sim::Dataset& target_samples, int n_per_class,
                            const TrainConfig& cfg) {
    if (n_per_class < 0) throw std::invalid_argument("n_per_class must be >= 0");
    if (n_per_class == 0) return {};

    // first n samples per class, in dataset order
    sim::Dataset mixed = source;
    std::vector<int> taken(static_cast<std::size_t>(m.cfg.n_classes), 0);
    int total_taken = 0;
    for (const auto& t : target_samples.samples) {
        if (t.label < 0 || t.label >= m.cfg.n_classes) continue;
        if (taken[static_cast<std::size_t>(t.label)] >= n_per_class) continue;
        sim::PriSequence copy = t;
        copy.domain_id = 0;
        copy.source_index = -1;
        mixed.samples.push_back(std::move(copy));
        ++taken[static_cast<std::size_t>(t.label)];
        ++total_taken;
    }
    if (total_taken < n_per_class)
        throw std::invalid_argument("target set has fewer samples than requested");

    TrainConfig ft = cfg;
    ft.epochs = cfg.fewshot_epochs;
    ft.lr = cfg.lr / 10.0;
    ft.beta_warmup_frac = 0.0;
    ft.seed = mix_seed(cfg.seed, 0xFE57ull);
    ft.checkpoint_dir.clear();

    augment::GeneratorBank bank;
    if (cfg.k_generators > 0)
        bank = augment::sample_bank(ft.ranges, cfg.k_generators, mix_seed(ft.seed, 0xBA2Cull));
    return run_training(m, mixed, bank, ft);
}

}  // namespace pridg::train
