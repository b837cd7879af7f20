#include "audformer/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "audformer/tensor_io.hpp"

namespace audformer {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string mangle(const std::string& name) {
    std::string out = name;
    for (char& c : out)
        if (c == '/') c = '_';
    return out;
}

std::vector<std::array<TemporalConvLayer<float>::DomainShape, kNumDomains>>
shapes_of(const Instance& inst) {
    std::vector<std::array<TemporalConvLayer<float>::DomainShape, kNumDomains>> shapes;
    for (const auto& [_, fs] : inst.features) {
        std::array<TemporalConvLayer<float>::DomainShape, kNumDomains> s;
        for (std::size_t d = 0; d < kNumDomains; ++d)
            s[d] = {fs.domains[d].frames(), fs.domains[d].dims()};
        shapes.push_back(s);
    }
    return shapes;
}

std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold) {
    return seed + 1000003ull * (fold + 1);
}

}  // namespace

TrainedModel train(const ModelConfig& cfg, const std::vector<Instance>& train_set,
                   const std::set<std::string>* forbidden_ids) {
    if (train_set.empty()) throw DataError("train: no training instances");
    cfg.validate();

    std::vector<std::string> modalities = cfg.modalities;
    if (modalities.empty())
        for (const auto& [name, _] : train_set.front().features)
            modalities.push_back(name);

    Rng rng(cfg.seed);
    Model<float> model =
        Model<float>::build(cfg, modalities, shapes_of(train_set.front()), rng);

    std::vector<const Instance*> pool;
    for (const auto& inst : train_set) pool.push_back(&inst);
    model.norm = Normalizer::fit(pool);
    for (const auto& inst : train_set) model.check_instance(inst);

    std::vector<std::pair<std::string, Tensor<float>>> params;
    model.for_each_param([&params](const std::string& name, Tensor<float>& t) {
        params.emplace_back(name, t);
    });
    std::vector<Tensor<float>> velocity;
    if (cfg.momentum > 0.0)
        for (auto& [_, p] : params) velocity.push_back(Tensor<float>::zeros(p.shape()));

    TrainedModel result{std::move(model), {}, {}};

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order.begin(), order.end());
        double epoch_loss = 0.0;
        std::size_t n_seen = 0;

        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            Tape<float> tape;
            Tensor<float> batch_loss;
            for (std::size_t i = start; i < end; ++i) {
                const Instance& inst = train_set[order[i]];
                if (forbidden_ids && forbidden_ids->count(inst.subject_id))
                    throw DataError("train: held-out instance " + inst.subject_id +
                                    " reached a training batch");
                auto fwd = result.model.forward(inst, &tape, /*train=*/true, rng);
                Tensor<float> loss =
                    bce_with_logits(fwd.logits, inst.label == Label::Positive ? 1 : 0,
                                    &tape);
                batch_loss = i == start ? loss : add(batch_loss, loss, &tape);
            }
            const float inv_n = 1.0f / static_cast<float>(end - start);
            Tensor<float> mean_loss = scale(batch_loss, inv_n, &tape);

            const double loss_value = static_cast<double>(mean_loss.at(0));
            if (!std::isfinite(loss_value))
                throw NumericError("train: loss diverged (NaN/Inf) at epoch " +
                                   std::to_string(epoch));
            epoch_loss += loss_value * static_cast<double>(end - start);
            n_seen += end - start;

            backward(mean_loss, tape);

            for (std::size_t p = 0; p < params.size(); ++p) {
                Tensor<float>& w = params[p].second;
                const float lr = static_cast<float>(cfg.learning_rate);
                const float wd = static_cast<float>(cfg.weight_decay);
                if (cfg.momentum > 0.0) {
                    const float mu = static_cast<float>(cfg.momentum);
                    Tensor<float>& v = velocity[p];
                    for (std::size_t i = 0; i < w.numel(); ++i) {
                        const float g = w.grad()[i] + wd * w.at(i);
                        v.at(i) = mu * v.at(i) + g;
                        w.at(i) -= lr * v.at(i);
                    }
                } else {
                    for (std::size_t i = 0; i < w.numel(); ++i)
                        w.at(i) -= lr * (w.grad()[i] + wd * w.at(i));
                }
                w.zero_grad();
            }
        }
        result.loss_log.push_back({epoch, epoch_loss / static_cast<double>(n_seen)});
    }

    result.rng_state = rng.state();
    return result;
}

EvalResult evaluate(const Model<float>& model, const std::vector<Instance>& test_set) {
    if (test_set.empty()) throw DataError("evaluate: empty test set");
    EvalResult result;
    Rng rng(0);  // unused in eval mode (no dropout draws)
    for (const auto& inst : test_set) {
        auto fwd = model.forward(inst, nullptr, /*train=*/false, rng);
        result.subject_ids.push_back(inst.subject_id);
        result.labels.push_back(inst.label == Label::Positive ? 1 : 0);
        result.scores.push_back(static_cast<double>(fwd.probs.at(0, 1)));
    }
    result.metrics =
        compute_metrics(result.labels, result.scores, model.cfg.threshold);
    return result;
}

CvResult run_cv(const ModelConfig& cfg, const std::vector<Instance>& instances,
                std::size_t k, std::size_t threads, const std::filesystem::path& out_dir) {
    CvResult result;
    result.plan = make_folds(instances, k, cfg.seed);
    result.loss_logs.resize(k);

    struct FoldOutcome {
        MetricValues metrics;
        std::vector<TrainLogEntry> log;
        std::string rng_state;
    };

    auto run_fold = [&](std::size_t fold) -> FoldOutcome {
        std::vector<Instance> train_set;
        std::set<std::string> held_out;
        for (std::size_t i : train_indices(result.plan, instances, fold))
            train_set.push_back(instances[i]);
        std::vector<Instance> test_set;
        for (std::size_t i : test_indices(result.plan, instances, fold)) {
            test_set.push_back(instances[i]);
            held_out.insert(instances[i].subject_id);
        }

        ModelConfig fold_cfg = cfg;
        fold_cfg.seed = fold_seed(cfg.seed, fold);
        if (fold_cfg.smote_enabled)
            train_set = smote(train_set, fold_cfg.smote_k, fold_cfg.seed);

        TrainedModel trained = train(fold_cfg, train_set, &held_out);
        EvalResult eval = evaluate(trained.model, test_set);

        if (!out_dir.empty()) {
            const auto fold_dir = out_dir / ("fold_" + std::to_string(fold));
            save_checkpoint(fold_dir, trained.model, fold_cfg.epochs, trained.rng_state);
            write_loss_log(fold_dir / "loss_log.csv", trained.loss_log);
        }
        return {eval.metrics, trained.loss_log, trained.rng_state};
    };

    std::vector<MetricValues> fold_metrics(k);
    if (threads <= 1) {
        for (std::size_t f = 0; f < k; ++f) {
            FoldOutcome outcome = run_fold(f);
            fold_metrics[f] = outcome.metrics;
            result.loss_logs[f] = std::move(outcome.log);
        }
    } else {
        // waves of up to `threads` folds; aggregation stays in fold order
        for (std::size_t base = 0; base < k; base += threads) {
            const std::size_t wave_end = std::min(k, base + threads);
            std::vector<std::future<FoldOutcome>> wave;
            for (std::size_t f = base; f < wave_end; ++f)
                wave.push_back(std::async(std::launch::async, run_fold, f));
            for (std::size_t f = base; f < wave_end; ++f) {
                FoldOutcome outcome = wave[f - base].get();
                fold_metrics[f] = outcome.metrics;
                result.loss_logs[f] = std::move(outcome.log);
            }
        }
    }

    result.report = aggregate_metrics(fold_metrics);
    return result;
}

void save_checkpoint(const std::filesystem::path& dir, const Model<float>& model,
                     std::size_t epoch, const std::string& rng_state) {
    std::filesystem::create_directories(dir / "params");
    std::filesystem::create_directories(dir / "norm");

    ordered_json manifest;
    manifest["format"] = 1;
    manifest["epoch"] = epoch;
    manifest["rng_state"] = rng_state;
    manifest["config"] = model.cfg.serialize();
    manifest["modalities"] = model.modalities;

    ordered_json shapes;
    for (std::size_t m = 0; m < model.modalities.size(); ++m) {
        ordered_json mod;
        for (std::size_t d = 0; d < kNumDomains; ++d)
            mod[domain_name(kAllDomains[d])] = {model.shapes[m][d].frames,
                                                model.shapes[m][d].dims};
        shapes[model.modalities[m]] = mod;
    }
    manifest["shapes"] = shapes;

    ordered_json params = ordered_json::array();
    Model<float>& mutable_model = const_cast<Model<float>&>(model);
    mutable_model.for_each_param([&](const std::string& name, Tensor<float>& t) {
        params.push_back(name);
        write_audt(dir / "params" / (mangle(name) + ".audt"), t);
    });
    manifest["params"] = params;

    ordered_json norm = ordered_json::array();
    for (std::size_t m = 0; m < model.norm.per_modality.size(); ++m)
        for (std::size_t d = 0; d < kNumDomains; ++d) {
            const auto& stats = model.norm.per_modality[m][d];
            const std::string base =
                model.modalities[m] + "_" + domain_name(kAllDomains[d]);
            Tensor<double> mean = Tensor<double>::from_values(
                {stats.mean.size()}, std::vector<double>(stats.mean));
            Tensor<double> sd = Tensor<double>::from_values(
                {stats.stddev.size()}, std::vector<double>(stats.stddev));
            write_audt(dir / "norm" / (base + "_mean.audt"), mean);
            write_audt(dir / "norm" / (base + "_std.audt"), sd);
            norm.push_back(base);
        }
    manifest["norm"] = norm;

    std::ofstream os(dir / "manifest.json", std::ios::trunc);
    if (!os) throw DataError("checkpoint: cannot write manifest in " + dir.string());
    os << manifest.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
    std::ifstream is(dir / "manifest.json");
    if (!is) throw DataError("checkpoint: cannot open manifest in " + dir.string());
    ordered_json manifest;
    try {
        is >> manifest;
    } catch (const std::exception& e) {
        throw DataError("checkpoint: bad manifest in " + dir.string() + ": " + e.what());
    }

    Checkpoint ckpt;
    ckpt.epoch = manifest.at("epoch").get<std::size_t>();
    ckpt.rng_state = manifest.at("rng_state").get<std::string>();
    const ModelConfig cfg = ModelConfig::deserialize(manifest.at("config").get<std::string>());
    const auto modalities = manifest.at("modalities").get<std::vector<std::string>>();

    std::vector<std::array<TemporalConvLayer<float>::DomainShape, kNumDomains>> shapes;
    for (const auto& mod : modalities) {
        std::array<TemporalConvLayer<float>::DomainShape, kNumDomains> s;
        const auto& node = manifest.at("shapes").at(mod);
        for (std::size_t d = 0; d < kNumDomains; ++d) {
            const auto dims = node.at(domain_name(kAllDomains[d])).get<std::vector<std::size_t>>();
            s[d] = {dims.at(0), dims.at(1)};
        }
        shapes.push_back(s);
    }

    Rng rng(cfg.seed);
    ckpt.model = Model<float>::build(cfg, modalities, shapes, rng);

    ckpt.model.for_each_param([&dir](const std::string& name, Tensor<float>& t) {
        Tensor<float> stored = read_audt<float>(dir / "params" / (mangle(name) + ".audt"));
        if (stored.shape() != t.shape())
            throw DataError("checkpoint: parameter " + name + " has shape " +
                            shape_str(stored.shape()) + ", expected " +
                            shape_str(t.shape()));
        std::copy(stored.data(), stored.data() + stored.numel(), t.data());
    });

    ckpt.model.norm.per_modality.resize(modalities.size());
    for (std::size_t m = 0; m < modalities.size(); ++m)
        for (std::size_t d = 0; d < kNumDomains; ++d) {
            const std::string base = modalities[m] + "_" + domain_name(kAllDomains[d]);
            auto mean = read_audt<double>(dir / "norm" / (base + "_mean.audt"));
            auto sd = read_audt<double>(dir / "norm" / (base + "_std.audt"));
            auto& stats = ckpt.model.norm.per_modality[m][d];
            stats.mean.assign(mean.data(), mean.data() + mean.numel());
            stats.stddev.assign(sd.data(), sd.data() + sd.numel());
        }
    return ckpt;
}

void write_loss_log(const std::filesystem::path& path,
                    const std::vector<TrainLogEntry>& log) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw DataError("cannot write loss log: " + path.string());
    os << "epoch,mean_loss\n";
    os.precision(17);
    for (const auto& entry : log) os << entry.epoch << "," << entry.mean_loss << "\n";
}

}  // namespace audformer
