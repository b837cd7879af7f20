#include "audformer/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "audformer/rng.hpp"
#include "audformer/wav.hpp"

namespace audformer {

using ordered_json = nlohmann::ordered_json;

const char* label_name(Label l) {
    return l == Label::Positive ? "Positive" : "Negative";
}

Label label_from_name(const std::string& name) {
    if (name == "Positive") return Label::Positive;
    if (name == "Negative") return Label::Negative;
    throw DataError("label must be Positive or Negative, got: " + name);
}

const ModalityFeatureSet& Instance::of(const std::string& modality) const {
    for (const auto& [name, fs] : features)
        if (name == modality) return fs;
    throw DataError("instance " + subject_id + " has no modality " + modality);
}

Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw DataError("manifest: cannot open " + path.string());
    const auto base = path.parent_path();

    Manifest manifest;
    std::set<std::string> seen_ids;
    std::vector<std::string> missing;
    std::string line;
    std::size_t line_no = 0;

    while (std::getline(is, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const std::exception& e) {
            throw DataError("manifest: parse error at line " + std::to_string(line_no) +
                            ": " + e.what());
        }

        ManifestEntry entry;
        try {
            entry.subject_id = j.at("subject_id").get<std::string>();
            entry.label = label_from_name(j.at("label").get<std::string>());
            const auto& mods = j.at("modality_paths");
            for (auto it = mods.begin(); it != mods.end(); ++it) {
                std::vector<std::filesystem::path> paths;
                for (const auto& p : it.value())
                    paths.push_back(base / p.get<std::string>());
                if (paths.empty())
                    throw DataError("modality " + it.key() + " has no recordings");
                entry.modality_paths.emplace_back(it.key(), std::move(paths));
            }
        } catch (const DataError&) {
            throw;
        } catch (const std::exception& e) {
            throw DataError("manifest: invalid entry at line " + std::to_string(line_no) +
                            ": " + e.what());
        }

        if (!seen_ids.insert(entry.subject_id).second)
            throw DataError("manifest: duplicate subject_id '" + entry.subject_id +
                            "' at line " + std::to_string(line_no));
        if (entry.modality_paths.empty())
            throw DataError("manifest: subject '" + entry.subject_id +
                            "' declares no modalities (line " + std::to_string(line_no) + ")");

        if (manifest.entries.empty()) {
            for (const auto& [name, _] : entry.modality_paths)
                manifest.modality_names.push_back(name);
        } else {
            std::vector<std::string> names;
            for (const auto& [name, _] : entry.modality_paths) names.push_back(name);
            if (names != manifest.modality_names)
                throw DataError("manifest: subject '" + entry.subject_id +
                                "' declares modalities inconsistent with the first entry (line " +
                                std::to_string(line_no) + ")");
        }

        for (const auto& [name, paths] : entry.modality_paths)
            for (const auto& p : paths)
                if (!std::filesystem::exists(p)) missing.push_back(p.string());

        manifest.entries.push_back(std::move(entry));
    }

    if (manifest.entries.empty()) throw DataError("manifest: no entries in " + path.string());
    if (!missing.empty()) {
        std::ostringstream os;
        os << "manifest: " << missing.size() << " missing audio file(s):";
        for (const auto& m : missing) os << "\n  " << m;
        throw DataError(os.str());
    }
    return manifest;
}

std::vector<Instance> assemble(const Manifest& manifest, const FeatureConfig& cfg,
                               const ClipProfile& clips) {
    std::vector<Instance> instances;
    std::vector<std::string> failures;

    for (const auto& entry : manifest.entries) {
        Instance inst;
        inst.subject_id = entry.subject_id;
        inst.label = entry.label;
        try {
            for (const auto& [modality, paths] : entry.modality_paths) {
                Waveform merged;
                merged.sample_rate = cfg.sample_rate;
                for (const auto& p : paths) {
                    const Waveform w = read_wav(p, cfg.sample_rate);
                    merged.samples.insert(merged.samples.end(), w.samples.begin(),
                                          w.samples.end());
                }
                Waveform trimmed = trim_silence(merged, cfg.trim_threshold_db);
                Waveform fixed = standardize_length(trimmed, clips.of(modality));
                inst.features.emplace_back(modality, extract_all(fixed, cfg));
            }
        } catch (const std::exception& e) {
            failures.push_back("subject '" + entry.subject_id + "': " + e.what());
            continue;
        }
        instances.push_back(std::move(inst));
    }

    if (!failures.empty()) {
        std::ostringstream os;
        os << "assemble: " << failures.size() << " subject(s) failed:";
        for (const auto& f : failures) os << "\n  " << f;
        throw DataError(os.str());
    }
    return instances;
}

std::vector<float> flatten_features(const Instance& inst) {
    std::vector<float> flat;
    for (const auto& [_, fs] : inst.features)
        for (const auto& fm : fs.domains)
            flat.insert(flat.end(), fm.data.values().begin(), fm.data.values().end());
    return flat;
}

namespace {

// Per (modality, domain) scalar mean/std blocks matching flatten order.
struct DomainBlocks {
    std::vector<std::size_t> sizes;
    std::vector<double> mean, stddev;
};

DomainBlocks block_stats(const std::vector<const Instance*>& pool) {
    DomainBlocks blocks;
    const Instance& first = *pool.front();
    for (const auto& [_, fs] : first.features)
        for (const auto& fm : fs.domains) blocks.sizes.push_back(fm.data.numel());

    const std::size_t n_blocks = blocks.sizes.size();
    blocks.mean.assign(n_blocks, 0.0);
    blocks.stddev.assign(n_blocks, 0.0);

    std::vector<double> count(n_blocks, 0.0);
    for (const Instance* inst : pool) {
        std::size_t b = 0;
        for (const auto& [_, fs] : inst->features)
            for (const auto& fm : fs.domains) {
                for (float v : fm.data.values()) blocks.mean[b] += v;
                count[b] += static_cast<double>(fm.data.numel());
                ++b;
            }
    }
    for (std::size_t b = 0; b < n_blocks; ++b) blocks.mean[b] /= count[b];

    for (const Instance* inst : pool) {
        std::size_t b = 0;
        for (const auto& [_, fs] : inst->features)
            for (const auto& fm : fs.domains) {
                for (float v : fm.data.values()) {
                    const double c = v - blocks.mean[b];
                    blocks.stddev[b] += c * c;
                }
                ++b;
            }
    }
    for (std::size_t b = 0; b < n_blocks; ++b)
        blocks.stddev[b] = std::sqrt(blocks.stddev[b] / count[b]);
    return blocks;
}

double znorm_distance(const std::vector<float>& a, const std::vector<float>& b,
                      const DomainBlocks& blocks) {
    double acc = 0.0;
    std::size_t offset = 0, blk = 0;
    for (std::size_t size : blocks.sizes) {
        const double sd = blocks.stddev[blk] > 0.0 ? blocks.stddev[blk] : 1.0;
        for (std::size_t i = 0; i < size; ++i) {
            const double d = (a[offset + i] - b[offset + i]) / sd;
            acc += d * d;
        }
        offset += size;
        ++blk;
    }
    return std::sqrt(acc);
}

Instance rebuild_from_flat(const Instance& prototype, const std::vector<float>& flat) {
    Instance out;
    out.label = prototype.label;
    std::size_t offset = 0;
    for (const auto& [name, fs] : prototype.features) {
        ModalityFeatureSet nfs;
        for (std::size_t d = 0; d < kNumDomains; ++d) {
            const FeatureMatrix& src = fs.domains[d];
            FeatureMatrix fm;
            fm.domain = src.domain;
            fm.data = Tensor<float>(src.data.shape());
            std::copy(flat.begin() + offset, flat.begin() + offset + src.data.numel(),
                      fm.data.data());
            offset += src.data.numel();
            nfs.domains[d] = std::move(fm);
        }
        out.features.emplace_back(name, std::move(nfs));
    }
    return out;
}

}  // namespace

std::vector<Instance> smote(const std::vector<Instance>& instances,
                            std::size_t k_neighbors, std::uint64_t seed) {
    if (k_neighbors < 1) throw DataError("smote: k_neighbors must be >= 1");

    std::vector<const Instance*> pos, neg;
    for (const auto& inst : instances)
        (inst.label == Label::Positive ? pos : neg).push_back(&inst);

    if (pos.size() == neg.size()) return instances;
    auto& minority = pos.size() < neg.size() ? pos : neg;
    auto& majority = pos.size() < neg.size() ? neg : pos;
    if (minority.size() < 2)
        throw DataError("smote: minority class has " + std::to_string(minority.size()) +
                        " member(s); need at least 2");

    const DomainBlocks blocks = block_stats(minority);
    std::vector<std::vector<float>> flats(minority.size());
    for (std::size_t i = 0; i < minority.size(); ++i)
        flats[i] = flatten_features(*minority[i]);

    // Neighbour lists: k nearest minority members per minority member.
    const std::size_t k_eff = std::min(k_neighbors, minority.size() - 1);
    std::vector<std::vector<std::size_t>> neighbors(minority.size());
    for (std::size_t i = 0; i < minority.size(); ++i) {
        std::vector<std::pair<double, std::size_t>> dists;
        for (std::size_t j = 0; j < minority.size(); ++j) {
            if (j == i) continue;
            dists.emplace_back(znorm_distance(flats[i], flats[j], blocks), j);
        }
        std::stable_sort(dists.begin(), dists.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t j = 0; j < k_eff; ++j) neighbors[i].push_back(dists[j].second);
    }

    Rng rng(seed);
    std::vector<Instance> out = instances;
    const std::size_t n_synth = majority.size() - minority.size();
    for (std::size_t s = 0; s < n_synth; ++s) {
        const std::size_t pi = static_cast<std::size_t>(rng.below(minority.size()));
        const std::size_t ni = neighbors[pi][static_cast<std::size_t>(
            rng.below(neighbors[pi].size()))];
        const double u = rng.uniform();

        std::vector<float> flat(flats[pi].size());
        for (std::size_t i = 0; i < flat.size(); ++i)
            flat[i] = static_cast<float>(flats[pi][i] +
                                         u * (static_cast<double>(flats[ni][i]) -
                                              static_cast<double>(flats[pi][i])));

        Instance synth = rebuild_from_flat(*minority[pi], flat);
        synth.subject_id = "smote_" + std::to_string(s) + "_" + minority[pi]->subject_id;
        synth.synthetic = true;
        synth.parent_id = minority[pi]->subject_id;
        synth.neighbor_id = minority[ni]->subject_id;
        synth.interp_u = u;
        out.push_back(std::move(synth));
    }
    return out;
}

std::size_t FoldPlan::fold_of(const std::string& subject_id) const {
    auto it = assignments.find(subject_id);
    if (it == assignments.end())
        throw DataError("fold plan: unknown subject " + subject_id);
    return it->second;
}

FoldPlan make_folds(const std::vector<Instance>& instances, std::size_t k,
                    std::uint64_t seed) {
    if (k < 2) throw DataError("make_folds: k must be >= 2");

    std::vector<std::string> real_ids;
    for (const auto& inst : instances)
        if (!inst.synthetic) real_ids.push_back(inst.subject_id);
    std::sort(real_ids.begin(), real_ids.end());
    real_ids.erase(std::unique(real_ids.begin(), real_ids.end()), real_ids.end());

    if (real_ids.size() < k)
        throw DataError("make_folds: " + std::to_string(real_ids.size()) +
                        " real subject(s) cannot fill " + std::to_string(k) + " folds");

    Rng rng(seed);
    rng.shuffle(real_ids.begin(), real_ids.end());

    FoldPlan plan;
    plan.k = k;
    for (std::size_t i = 0; i < real_ids.size(); ++i)
        plan.assignments[real_ids[i]] = i % k;

    for (const auto& inst : instances) {
        if (!inst.synthetic) continue;
        auto it = plan.assignments.find(inst.parent_id);
        if (it == plan.assignments.end())
            throw DataError("make_folds: synthetic instance " + inst.subject_id +
                            " has unknown parent " + inst.parent_id);
        plan.assignments[inst.subject_id] = it->second;
    }
    return plan;
}

std::vector<std::size_t> train_indices(const FoldPlan& plan,
                                       const std::vector<Instance>& instances,
                                       std::size_t fold) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < instances.size(); ++i)
        if (plan.fold_of(instances[i].subject_id) != fold) idx.push_back(i);
    return idx;
}

std::vector<std::size_t> test_indices(const FoldPlan& plan,
                                      const std::vector<Instance>& instances,
                                      std::size_t fold) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < instances.size(); ++i)
        if (!instances[i].synthetic && plan.fold_of(instances[i].subject_id) == fold)
            idx.push_back(i);
    return idx;
}

MetricValues compute_metrics(const std::vector<int>& labels,
                             const std::vector<double>& scores, double threshold) {
    if (labels.size() != scores.size())
        throw DataError("metrics: " + std::to_string(labels.size()) + " labels vs " +
                        std::to_string(scores.size()) + " scores");
    if (labels.empty()) throw DataError("metrics: empty input");

    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool pred = scores[i] > threshold;  // argmax convention for binary softmax
        if (labels[i] == 1)
            pred ? ++tp : ++fn;
        else
            pred ? ++fp : ++tn;
    }

    const std::size_t n_pos = tp + fn, n_neg = tn + fp;
    MetricValues m;
    m.acc = static_cast<double>(tp + tn) / static_cast<double>(labels.size());
    const std::size_t f1_den = 2 * tp + fp + fn;
    m.f1 = f1_den > 0 ? 2.0 * static_cast<double>(tp) / static_cast<double>(f1_den) : 0.0;
    if (n_pos > 0) m.sen = static_cast<double>(tp) / static_cast<double>(n_pos);
    if (n_neg > 0) m.spe = static_cast<double>(tn) / static_cast<double>(n_neg);

    if (n_pos > 0 && n_neg > 0) {
        // Mann-Whitney AUC with midrank tie handling.
        std::vector<std::size_t> order(scores.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&scores](std::size_t a, std::size_t b) {
            return scores[a] < scores[b];
        });
        std::vector<double> rank(scores.size());
        std::size_t i = 0;
        while (i < order.size()) {
            std::size_t j = i;
            while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
            const double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
            for (std::size_t t = i; t <= j; ++t) rank[order[t]] = mid;
            i = j + 1;
        }
        double rank_sum = 0.0;
        for (std::size_t t = 0; t < labels.size(); ++t)
            if (labels[t] == 1) rank_sum += rank[t];
        m.auc = (rank_sum - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0) /
                (static_cast<double>(n_pos) * static_cast<double>(n_neg));
    }
    return m;
}

namespace {

std::optional<double> opt_mean(const std::vector<std::optional<double>>& vals) {
    double acc = 0.0;
    std::size_t n = 0;
    for (const auto& v : vals)
        if (v) {
            acc += *v;
            ++n;
        }
    if (n == 0) return std::nullopt;
    return acc / static_cast<double>(n);
}

std::optional<double> opt_std(const std::vector<std::optional<double>>& vals,
                              const std::optional<double>& mean) {
    if (!mean) return std::nullopt;
    double acc = 0.0;
    std::size_t n = 0;
    for (const auto& v : vals)
        if (v) {
            acc += (*v - *mean) * (*v - *mean);
            ++n;
        }
    return std::sqrt(acc / static_cast<double>(n));
}

std::string fmt_opt(const std::optional<double>& v) {
    if (!v) return "n/a";
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << *v;
    return os.str();
}

}  // namespace

MetricReport aggregate_metrics(const std::vector<MetricValues>& folds) {
    if (folds.empty()) throw DataError("aggregate_metrics: no folds");
    MetricReport report;
    report.per_fold = folds;

    auto collect = [&folds](auto getter) {
        std::vector<std::optional<double>> vals;
        for (const auto& f : folds) vals.push_back(getter(f));
        return vals;
    };

    const auto accs = collect([](const MetricValues& m) { return std::optional<double>(m.acc); });
    const auto f1s = collect([](const MetricValues& m) { return std::optional<double>(m.f1); });
    const auto aucs = collect([](const MetricValues& m) { return m.auc; });
    const auto sens = collect([](const MetricValues& m) { return m.sen; });
    const auto spes = collect([](const MetricValues& m) { return m.spe; });

    report.mean.acc = *opt_mean(accs);
    report.mean.f1 = *opt_mean(f1s);
    report.mean.auc = opt_mean(aucs);
    report.mean.sen = opt_mean(sens);
    report.mean.spe = opt_mean(spes);

    report.stddev.acc = *opt_std(accs, report.mean.acc);
    report.stddev.f1 = *opt_std(f1s, report.mean.f1);
    report.stddev.auc = opt_std(aucs, report.mean.auc);
    report.stddev.sen = opt_std(sens, report.mean.sen);
    report.stddev.spe = opt_std(spes, report.mean.spe);
    return report;
}

std::string report_table(const MetricReport& report) {
    std::ostringstream os;
    os << std::left << std::setw(8) << "metric" << std::setw(20) << "mean±std";
    for (std::size_t f = 0; f < report.per_fold.size(); ++f)
        os << std::setw(10) << ("fold" + std::to_string(f));
    os << "\n";

    auto row = [&](const char* name, auto getter) {
        os << std::left << std::setw(8) << name;
        const auto mean = getter(report.mean);
        const auto sd = getter(report.stddev);
        os << std::setw(20) << (fmt_opt(mean) + "±" + fmt_opt(sd));
        for (const auto& f : report.per_fold) os << std::setw(10) << fmt_opt(getter(f));
        os << "\n";
    };

    row("ACC", [](const MetricValues& m) { return std::optional<double>(m.acc); });
    row("F1", [](const MetricValues& m) { return std::optional<double>(m.f1); });
    row("AUC", [](const MetricValues& m) { return m.auc; });
    row("SEN", [](const MetricValues& m) { return m.sen; });
    row("SPE", [](const MetricValues& m) { return m.spe; });
    return os.str();
}

std::string report_json(const MetricReport& report) {
    ordered_json j;
    auto put = [](ordered_json& node, const MetricValues& m) {
        node["acc"] = m.acc;
        node["f1"] = m.f1;
        node["auc"] = m.auc ? ordered_json(*m.auc) : ordered_json(nullptr);
        node["sen"] = m.sen ? ordered_json(*m.sen) : ordered_json(nullptr);
        node["spe"] = m.spe ? ordered_json(*m.spe) : ordered_json(nullptr);
    };
    j["folds"] = ordered_json::array();
    for (const auto& f : report.per_fold) {
        ordered_json node;
        put(node, f);
        j["folds"].push_back(node);
    }
    put(j["mean"], report.mean);
    put(j["std"], report.stddev);
    return j.dump(2) + "\n";
}

}  // namespace audformer
