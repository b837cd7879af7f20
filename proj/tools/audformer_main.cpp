// audformer command line: synthetic corpora, feature extraction, training,
// cross-validation, evaluation, and diagnostic exports.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric divergence.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include <nlohmann/json.hpp>

#include "audformer/cache.hpp"
#include "audformer/config.hpp"
#include "audformer/synth.hpp"
#include "audformer/tensor_io.hpp"
#include "audformer/trainer.hpp"

namespace fs = std::filesystem;
using namespace audformer;
using ordered_json = nlohmann::ordered_json;

namespace {

// --cache wins; otherwise the AUDFORMER_CACHE environment variable.
fs::path resolve_cache(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("AUDFORMER_CACHE")) return env;
    throw DataError("no cache directory: pass --cache or set AUDFORMER_CACHE");
}

CachedDataset load_cache_checked(const fs::path& dir, const ModelConfig& cfg) {
    CachedDataset ds = read_cache(dir);
    if (ds.config_hash != cfg.extraction_hash())
        throw DataError("cache " + dir.string() +
                        " was extracted with a different feature configuration; re-run extract");
    return ds;
}

void write_report(const fs::path& report_path, const MetricReport& report) {
    if (report_path.empty()) return;
    fs::path json_path = report_path;
    if (json_path.extension() != ".json") json_path += ".json";
    fs::path txt_path = json_path;
    txt_path.replace_extension(".txt");
    if (json_path.has_parent_path()) fs::create_directories(json_path.parent_path());

    std::ofstream js(json_path, std::ios::trunc);
    if (!js) throw DataError("cannot write report " + json_path.string());
    js << report_json(report);
    std::ofstream ts(txt_path, std::ios::trunc);
    ts << report_table(report);
    std::cout << report_table(report);
    std::cout << "report written to " << json_path.string() << " and "
              << txt_path.string() << "\n";
}

// Reorder cached instances' modalities to the model's declared order.
void align_modalities(std::vector<Instance>& instances, const std::vector<std::string>& order) {
    for (auto& inst : instances) {
        std::vector<std::pair<std::string, ModalityFeatureSet>> sorted;
        for (const auto& name : order) {
            bool found = false;
            for (auto& [n, fs_] : inst.features)
                if (n == name) {
                    sorted.emplace_back(n, std::move(fs_));
                    found = true;
                    break;
                }
            if (!found)
                throw DataError("instance " + inst.subject_id + " is missing modality " + name);
        }
        inst.features = std::move(sorted);
    }
}

struct InstanceDiag {
    std::string subject_id;
    ForwardOutput<float> out;
};

std::vector<InstanceDiag> forward_diagnostics(const Model<float>& model,
                                              const std::vector<Instance>& instances,
                                              const std::string& only_id) {
    std::vector<InstanceDiag> diags;
    Rng rng(0);
    bool matched = false;
    for (const auto& inst : instances) {
        if (!only_id.empty() && inst.subject_id != only_id) continue;
        matched = true;
        diags.push_back({inst.subject_id,
                         model.forward(inst, nullptr, /*train=*/false, rng, true)});
    }
    if (!only_id.empty() && !matched)
        throw DataError("instance " + only_id + " not found in the cache");
    return diags;
}

int run(int argc, char** argv) {
    CLI::App app{"audformer: hierarchical multimodal audio classification"};
    app.require_subcommand(1);
    app.fallthrough();  // accept global flags after the subcommand name

    std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
    bool deterministic = false;
    app.add_option("--threads", threads, "worker threads for fold-level parallelism");
    app.add_flag("--deterministic", deterministic,
                 "serial execution; two runs with one seed are byte-identical");

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic labeled corpus");
    std::string synth_spec, synth_out;
    synth_cmd->add_option("--spec", synth_spec, "synth spec JSON")->required();
    synth_cmd->add_option("--out", synth_out, "output directory")->required();

    // extract
    auto* extract_cmd =
        app.add_subcommand("extract", "extract per-domain features into a cache");
    std::string ex_manifest, ex_profile = "ipvs", ex_config, ex_cache;
    extract_cmd->add_option("--manifest", ex_manifest, "JSON-lines manifest")->required();
    extract_cmd->add_option("--profile", ex_profile,
                            "dataset profile (coswara|sound_dr|ipvs|pc_gita|svd)");
    extract_cmd->add_option("--config", ex_config, "config file overriding the profile");
    extract_cmd->add_option("--cache", ex_cache, "feature cache directory");

    // train
    auto* train_cmd = app.add_subcommand("train", "train on every cached instance");
    std::string tr_config, tr_cache, tr_out;
    train_cmd->add_option("--config", tr_config, "config file")->required();
    train_cmd->add_option("--cache", tr_cache, "feature cache directory");
    train_cmd->add_option("--out", tr_out, "checkpoint directory")->required();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a cache");
    std::string ev_ckpt, ev_cache, ev_report;
    eval_cmd->add_option("--ckpt", ev_ckpt, "checkpoint directory")->required();
    eval_cmd->add_option("--cache", ev_cache, "feature cache directory");
    eval_cmd->add_option("--report", ev_report, "report output path")->required();

    // cv
    auto* cv_cmd = app.add_subcommand("cv", "subject-disjoint k-fold cross-validation");
    std::string cv_config, cv_cache, cv_report, cv_out;
    std::size_t cv_k = 10;
    cv_cmd->add_option("--config", cv_config, "config file")->required();
    cv_cmd->add_option("--cache", cv_cache, "feature cache directory");
    cv_cmd->add_option("--k", cv_k, "fold count");
    cv_cmd->add_option("--report", cv_report, "report output path")->required();
    cv_cmd->add_option("--out", cv_out, "directory for per-fold checkpoints");

    // explain
    auto* explain_cmd =
        app.add_subcommand("explain", "per-instance probabilities and modality scores");
    std::string xp_ckpt, xp_cache, xp_instance, xp_out, xp_csv;
    explain_cmd->add_option("--ckpt", xp_ckpt, "checkpoint directory")->required();
    explain_cmd->add_option("--cache", xp_cache, "feature cache directory");
    explain_cmd->add_option("--instance", xp_instance, "restrict to one subject id");
    explain_cmd->add_option("--out", xp_out, "write JSON lines here instead of stdout");
    explain_cmd->add_option("--mcs-csv", xp_csv, "write group-level MCS summary CSV");

    // export-attn
    auto* attn_cmd =
        app.add_subcommand("export-attn", "dump attention maps as AUDT tensors");
    std::string at_ckpt, at_cache, at_instance, at_out;
    attn_cmd->add_option("--ckpt", at_ckpt, "checkpoint directory")->required();
    attn_cmd->add_option("--cache", at_cache, "feature cache directory");
    attn_cmd->add_option("--instance", at_instance, "restrict to one subject id");
    attn_cmd->add_option("--out", at_out, "output directory")->required();

    // export-embeddings
    auto* emb_cmd = app.add_subcommand("export-embeddings",
                                       "dump UR/FR_L/FR_H representations per instance");
    std::string em_ckpt, em_cache, em_instance, em_out;
    emb_cmd->add_option("--ckpt", em_ckpt, "checkpoint directory")->required();
    emb_cmd->add_option("--cache", em_cache, "feature cache directory");
    emb_cmd->add_option("--instance", em_instance, "restrict to one subject id");
    emb_cmd->add_option("--out", em_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    if (deterministic) threads = 1;

    if (synth_cmd->parsed()) {
        const SynthSpec spec = SynthSpec::from_json(synth_spec);
        const Manifest manifest = generate(spec, synth_out);
        std::cout << "wrote " << manifest.entries.size() << " subjects x "
                  << manifest.modality_names.size() << " modalities under " << synth_out
                  << "\n";
        return 0;
    }

    if (extract_cmd->parsed()) {
        ModelConfig cfg = ex_config.empty() ? ModelConfig::profile_defaults(ex_profile)
                                            : ModelConfig::load(ex_config);
        const fs::path cache_dir = resolve_cache(ex_cache);
        const Manifest manifest = load_manifest(ex_manifest);
        std::cout << "extracting " << manifest.entries.size() << " subjects ("
                  << manifest.modality_names.size() << " modalities)...\n";
        const auto instances = assemble(manifest, cfg.features, cfg.clips);
        write_cache(cache_dir, instances, manifest.modality_names, cfg.extraction_hash());
        std::cout << "cache written to " << cache_dir.string() << "\n";
        return 0;
    }

    if (train_cmd->parsed()) {
        ModelConfig cfg = ModelConfig::load(tr_config);
        const fs::path cache_dir = resolve_cache(tr_cache);
        CachedDataset ds = load_cache_checked(cache_dir, cfg);
        if (cfg.modalities.empty()) cfg.modalities = ds.modality_names;
        align_modalities(ds.instances, cfg.modalities);

        std::vector<Instance> train_set = ds.instances;
        if (cfg.smote_enabled) train_set = smote(train_set, cfg.smote_k, cfg.seed);
        TrainedModel trained = train(cfg, train_set);
        save_checkpoint(tr_out, trained.model, cfg.epochs, trained.rng_state);
        write_loss_log(fs::path(tr_out) / "loss_log.csv", trained.loss_log);
        if (!trained.loss_log.empty())
            std::cout << "final epoch mean loss " << trained.loss_log.back().mean_loss
                      << "\n";
        std::cout << "checkpoint written to " << tr_out << "\n";
        return 0;
    }

    if (eval_cmd->parsed()) {
        Checkpoint ckpt = load_checkpoint(ev_ckpt);
        const fs::path cache_dir = resolve_cache(ev_cache);
        CachedDataset ds = load_cache_checked(cache_dir, ckpt.model.cfg);
        align_modalities(ds.instances, ckpt.model.modalities);
        EvalResult result = evaluate(ckpt.model, ds.instances);
        write_report(ev_report, aggregate_metrics({result.metrics}));
        return 0;
    }

    if (cv_cmd->parsed()) {
        ModelConfig cfg = ModelConfig::load(cv_config);
        const fs::path cache_dir = resolve_cache(cv_cache);
        CachedDataset ds = load_cache_checked(cache_dir, cfg);
        if (cfg.modalities.empty()) cfg.modalities = ds.modality_names;
        align_modalities(ds.instances, cfg.modalities);
        CvResult cv = run_cv(cfg, ds.instances, cv_k, threads, fs::path(cv_out));
        write_report(cv_report, cv.report);
        return 0;
    }

    if (explain_cmd->parsed()) {
        Checkpoint ckpt = load_checkpoint(xp_ckpt);
        const fs::path cache_dir = resolve_cache(xp_cache);
        CachedDataset ds = load_cache_checked(cache_dir, ckpt.model.cfg);
        align_modalities(ds.instances, ckpt.model.modalities);
        const auto diags = forward_diagnostics(ckpt.model, ds.instances, xp_instance);

        std::ostream* out = &std::cout;
        std::ofstream file;
        if (!xp_out.empty()) {
            file.open(xp_out, std::ios::trunc);
            if (!file) throw DataError("cannot write " + xp_out);
            out = &file;
        }
        std::vector<double> mcs_sum(ckpt.model.modalities.size(), 0.0);
        std::vector<double> mcs_sq(ckpt.model.modalities.size(), 0.0);
        for (const auto& diag : diags) {
            ordered_json j;
            j["subject_id"] = diag.subject_id;
            j["probs"] = {diag.out.probs.at(0, 0), diag.out.probs.at(0, 1)};
            j["label"] = diag.out.label;
            ordered_json mcs_node;
            for (std::size_t m = 0; m < ckpt.model.modalities.size(); ++m) {
                mcs_node[ckpt.model.modalities[m]] = diag.out.mcs_scores[m];
                mcs_sum[m] += diag.out.mcs_scores[m];
                mcs_sq[m] += diag.out.mcs_scores[m] * diag.out.mcs_scores[m];
            }
            j["mcs"] = mcs_node;
            *out << j.dump() << "\n";
        }
        if (!xp_csv.empty()) {
            std::ofstream csv(xp_csv, std::ios::trunc);
            if (!csv) throw DataError("cannot write " + xp_csv);
            csv << "modality,mean_mcs,std_mcs\n";
            const double n = static_cast<double>(diags.size());
            csv.precision(10);
            for (std::size_t m = 0; m < ckpt.model.modalities.size(); ++m) {
                const double mean = mcs_sum[m] / n;
                csv << ckpt.model.modalities[m] << "," << mean << ","
                    << std::sqrt(std::max(0.0, mcs_sq[m] / n - mean * mean)) << "\n";
            }
        }
        return 0;
    }

    if (attn_cmd->parsed()) {
        Checkpoint ckpt = load_checkpoint(at_ckpt);
        const fs::path cache_dir = resolve_cache(at_cache);
        CachedDataset ds = load_cache_checked(cache_dir, ckpt.model.cfg);
        align_modalities(ds.instances, ckpt.model.modalities);
        const auto diags = forward_diagnostics(ckpt.model, ds.instances, at_instance);
        for (const auto& diag : diags) {
            const fs::path dir = fs::path(at_out) / diag.subject_id;
            fs::create_directories(dir);
            for (std::size_t m = 0; m < diag.out.intra_attn.size(); ++m)
                write_audt(dir / ("intra_" + ckpt.model.modalities[m] + ".audt"),
                           diag.out.intra_attn[m].data);
            for (std::size_t m = 0; m < diag.out.cross_attn.size(); ++m)
                write_audt(dir / ("cross_" + ckpt.model.modalities[m] + ".audt"),
                           diag.out.cross_attn[m].data);
            if (!diag.out.pred_attn.empty())
                write_audt(dir / "prediction.audt", diag.out.pred_attn.data);
        }
        std::cout << "attention maps for " << diags.size() << " instance(s) under "
                  << at_out << "\n";
        return 0;
    }

    if (emb_cmd->parsed()) {
        Checkpoint ckpt = load_checkpoint(em_ckpt);
        const fs::path cache_dir = resolve_cache(em_cache);
        CachedDataset ds = load_cache_checked(cache_dir, ckpt.model.cfg);
        align_modalities(ds.instances, ckpt.model.modalities);
        const auto diags = forward_diagnostics(ckpt.model, ds.instances, em_instance);
        for (const auto& diag : diags) {
            const fs::path dir = fs::path(em_out) / diag.subject_id;
            fs::create_directories(dir);
            for (std::size_t m = 0; m < diag.out.urs.size(); ++m)
                write_audt(dir / ("UR_" + ckpt.model.modalities[m] + ".audt"),
                           diag.out.urs[m].data);
            write_audt(dir / "FR_L.audt", diag.out.fr_l.data);
            write_audt(dir / "FR_H.audt", diag.out.fr_h.data);
        }
        std::cout << "embeddings for " << diags.size() << " instance(s) under " << em_out
                  << "\n";
        return 0;
    }

    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
