// Acceptance suite: one pass/fail line per criterion, nonzero exit when
// any fails. Criteria that need a corpus build one synthetically, run the
// in-process equivalents of the CLI pipeline, and check the pinned
// thresholds. Headline corpus-scale numbers from the published evaluation
// are out of desk-scale reach and are replaced by these property checks
// (see README).

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <vector>

#include "audformer/cache.hpp"
#include "audformer/config.hpp"
#include "audformer/synth.hpp"
#include "audformer/trainer.hpp"
#include "gradcheck.hpp"

using namespace audformer;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Criterion {
    std::string name;
    std::function<bool(std::ostream&)> body;
};

fs::path scratch_root() {
    const auto dir = fs::temp_directory_path() / "audformer_acceptance";
    fs::create_directories(dir);
    return dir;
}

// ---------------------------------------------------------------------------
// gradient correctness: every layer type, float64, rel err <= 1e-4, 10 seeds

bool check_gradients(std::ostream& log) {
    const auto t0 = Clock::now();
    double worst = 0.0;
    auto track = [&worst](double err) { worst = std::max(worst, err); };

    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(seed);

        {  // conv1d wrt input and kernel
            auto x = gradcheck::random_tensor({7, 3}, rng);
            auto k = gradcheck::random_tensor({3, 3, 2}, rng);
            track(gradcheck::max_rel_error({x, k}, [&](Tape<double>* tape) {
                return sum_all(relu(conv1d(x, k, 2, 1, tape), tape), tape);
            }));
        }
        {  // layer norm
            auto x = gradcheck::random_tensor({3, 5}, rng);
            auto g = gradcheck::random_tensor({5}, rng);
            auto b = gradcheck::random_tensor({5}, rng);
            auto w = gradcheck::random_tensor({5, 1}, rng, false);
            track(gradcheck::max_rel_error({x, g, b}, [&](Tape<double>* tape) {
                return sum_all(matmul(layer_norm(x, g, b, 1e-5, tape), w, tape), tape);
            }));
        }
        {  // feed-forward (linear-relu-linear with biases)
            auto x = gradcheck::random_tensor({3, 4}, rng);
            auto w1 = gradcheck::random_tensor({4, 8}, rng);
            auto b1 = gradcheck::random_tensor({8}, rng);
            auto w2 = gradcheck::random_tensor({8, 4}, rng);
            auto b2 = gradcheck::random_tensor({4}, rng);
            track(gradcheck::max_rel_error({x, w1, b1, w2, b2}, [&](Tape<double>* tape) {
                auto h = relu(add_bias(matmul(x, w1, tape), b1, tape), tape);
                return sum_all(add_bias(matmul(h, w2, tape), b2, tape), tape);
            }));
        }
        {  // full self-attention block
            Rng init(seed * 31 + 1);
            auto block = TransformerBlock<double>::init(4, 2, false, 0.0, 0.0, init);
            auto x = gradcheck::random_tensor({3, 4}, rng);
            std::vector<Tensor<double>> params = {x};
            block.for_each_param("b", [&params](const std::string&, Tensor<double>& t) {
                params.push_back(t);
            });
            track(gradcheck::max_rel_error(params, [&](Tape<double>* tape) {
                Rng fwd(1);
                return sum_all(softmax_rows(block.forward(x, nullptr, false, fwd, tape), tape),
                               tape);
            }));
        }
        {  // full cross-attention block
            Rng init(seed * 31 + 2);
            auto block = TransformerBlock<double>::init(4, 2, true, 0.0, 0.0, init);
            auto x = gradcheck::random_tensor({3, 4}, rng);
            auto src = gradcheck::random_tensor({5, 4}, rng);
            std::vector<Tensor<double>> params = {x, src};
            block.for_each_param("b", [&params](const std::string&, Tensor<double>& t) {
                params.push_back(t);
            });
            track(gradcheck::max_rel_error(params, [&](Tape<double>* tape) {
                Rng fwd(1);
                return sum_all(softmax_rows(block.forward(x, &src, false, fwd, tape), tape),
                               tape);
            }));
        }
        {  // prediction head + bce
            Rng init(seed * 31 + 3);
            auto head = PredictionHead<double>::init(4, 2, 0.0, 0.0, init);
            FusionRepresentation<double> fr;
            fr.data = gradcheck::random_tensor({6, 4}, rng);
            fr.spans = {{"a", 0, 3}, {"b", 3, 6}};
            std::vector<Tensor<double>> params = {fr.data};
            head.for_each_param("h", [&params](const std::string&, Tensor<double>& t) {
                params.push_back(t);
            });
            track(gradcheck::max_rel_error(params, [&](Tape<double>* tape) {
                Rng fwd(1);
                auto pred = predict(fr, head, false, fwd, tape);
                return bce_with_logits(pred.logits, seed % 2 ? 1 : 0, tape);
            }));
        }
        {  // bce alone wrt logits
            auto logits = gradcheck::random_tensor({1, 2}, rng, true, 2.0);
            track(gradcheck::max_rel_error({logits}, [&](Tape<double>* tape) {
                return bce_with_logits(logits, seed % 2 ? 0 : 1, tape);
            }));
        }
    }

    const double secs =
        std::chrono::duration<double>(Clock::now() - t0).count();
    log << "max rel err " << std::scientific << std::setprecision(2) << worst
        << std::defaultfloat << ", " << std::fixed << std::setprecision(1) << secs
        << " s" << std::defaultfloat;
    return worst <= 1e-4 && secs < 60.0;
}

// ---------------------------------------------------------------------------
// attention normalization: 1000 random evaluations, intra + cross

bool check_attention_rows(std::ostream& log) {
    Rng rng(2025);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t d = 8;
        const std::size_t heads = trial % 2 ? 2 : 4;
        const std::size_t l_q = 2 + rng.below(8);
        const bool cross = trial % 2 == 1;
        const std::size_t l_k = cross ? 2 + rng.below(12) : l_q;
        auto w = AttentionWeights<double>::init(d, heads, rng);
        auto q = gradcheck::random_tensor({l_q, d}, rng, false, 4.0);
        auto kv = cross ? gradcheck::random_tensor({l_k, d}, rng, false, 4.0) : q;
        AttnMap<double> map;
        multi_head_attention(q, kv, w, 0.0, false, rng, nullptr, &map);
        for (std::size_t h = 0; h < heads; ++h)
            for (std::size_t i = 0; i < l_q; ++i) {
                double sum = 0.0;
                for (std::size_t k = 0; k < l_k; ++k) sum += map.data.at(h, i, k);
                worst = std::max(worst, std::abs(sum - 1.0));
            }
    }
    log << "worst row-sum deviation " << std::scientific << std::setprecision(2) << worst
        << std::defaultfloat;
    return worst <= 1e-6;
}

// ---------------------------------------------------------------------------
// shape conformance: l_m = 356, 4 modalities -> UR 356xd, FR 1424xd,
// cross map 356x1424

bool check_shapes(std::ostream& log) {
    const auto t0 = Clock::now();
    ModelConfig cfg = ModelConfig::profile_defaults("coswara");  // d=40, 5 heads
    cfg.max_tokens_per_domain = 64;
    cfg.validate();

    // scalar domains 40 frames, spectral domains 59 frames, stride 1:
    // 3*40 + 4*59 = 356 tokens per modality
    Rng rng(7);
    std::array<TemporalConvLayer<double>::DomainShape, kNumDomains> shapes = {
        {{40, 1}, {40, 1}, {40, 1}, {59, 64}, {59, 13}, {59, 13}, {59, 13}}};
    auto layer = TemporalConvLayer<double>::init(shapes, cfg.d_tc, 64, 3, 5, rng);

    std::vector<TokenSequence<double>> urs;
    std::vector<IntraModalTransformer<double>> intra;
    for (int m = 0; m < 4; ++m) {
        std::array<Tensor<double>, kNumDomains> domains;
        for (std::size_t d = 0; d < kNumDomains; ++d)
            domains[d] =
                gradcheck::random_tensor({shapes[d].frames, shapes[d].dims}, rng, false);
        auto tokens = embed_modality(domains, layer, "mod" + std::to_string(m));
        if (tokens.length() != 356) {
            log << "token count " << tokens.length() << " != 356";
            return false;
        }
        auto t = IntraModalTransformer<double>::init(tokens.modality, cfg.d_tc, 2,
                                                     cfg.heads, 0.0, 0.0, rng);
        urs.push_back(forward_intra(tokens, t, false, rng, nullptr));
        intra.push_back(std::move(t));
    }

    bool ok = true;
    for (const auto& ur : urs)
        ok = ok && ur.data.shape() == Shape{356, cfg.d_tc};

    auto fr_l = fuse_low(urs);
    ok = ok && fr_l.data.shape() == Shape{1424, cfg.d_tc};

    auto cw = AttentionWeights<double>::init(cfg.d_tc, cfg.heads, rng);
    AttnMap<double> map;
    cross_attention(urs[0].data, fr_l, cw, 0.0, false, rng, nullptr, &map);
    ok = ok && map.data.shape() == Shape{cfg.heads, 356, 1424};

    std::vector<CrossModalTransformer<double>> stacks;
    for (const auto& ur : urs)
        stacks.push_back(CrossModalTransformer<double>::init(ur.modality, cfg.d_tc, 1,
                                                             cfg.heads, 0.0, 0.0, rng));
    auto fr_h = fuse_high(urs, fr_l, stacks, false, rng, nullptr);
    ok = ok && fr_h.data.shape() == Shape{1424, cfg.d_tc};

    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    log << "UR 356x" << cfg.d_tc << ", FR 1424x" << cfg.d_tc << ", map "
        << cfg.heads << "x356x1424, " << std::fixed << std::setprecision(2) << secs
        << " s" << std::defaultfloat;
    return ok && secs < 1.0;
}

// ---------------------------------------------------------------------------
// corpus helpers for the learning criteria

SynthSpec learning_corpus_spec() {
    SynthSpec spec;
    spec.n_subjects = 40;
    spec.n_positive = 20;
    spec.seed = 11;
    spec.modalities = {{"breath", 5.0, 440.0, 880.0, 660.0, 10.0, 300.0},
                       {"cough", 5.0, 440.0, 880.0, 660.0, 10.0, 300.0},
                       {"voice", 5.0, 440.0, 880.0, 660.0, 10.0, 300.0}};
    return spec;
}

// IPVS-profile hyperparameters with the optimization budget rescaled to 20
// epochs (100 epochs x ~3 batches at lr 1e-3 becomes 20 epochs x 2 batches,
// so the rate carries the missing steps).
ModelConfig learning_config() {
    ModelConfig cfg = ModelConfig::profile_defaults("ipvs");
    cfg.epochs = 20;
    cfg.learning_rate = 2e-2;
    cfg.max_tokens_per_domain = 12;
    cfg.seed = 9;
    return cfg;
}

std::vector<Instance> extract_corpus(const SynthSpec& spec, const fs::path& dir,
                                     const ModelConfig& cfg) {
    fs::remove_all(dir);
    const Manifest manifest = generate(spec, dir / "corpus");
    return assemble(manifest, cfg.features, cfg.clips);
}

bool check_end_to_end(std::ostream& log) {
    const auto t0 = Clock::now();
    const auto dir = scratch_root() / "e2e";
    const SynthSpec spec = learning_corpus_spec();
    const ModelConfig cfg = learning_config();
    auto instances = extract_corpus(spec, dir, cfg);

    // centroid-threshold oracle: the corpus must be separable before any
    // model sees it
    FrameSpec frames = cfg.features.frames;
    std::vector<double> centroids;
    std::vector<int> labels;
    for (const auto& inst : instances) {
        const auto& sc = inst.of("breath").of(FeatureDomain::SC).data;
        double mean = 0.0;
        for (std::size_t f = 0; f < sc.rows(); ++f) mean += sc.at(f, 0);
        centroids.push_back(mean / static_cast<double>(sc.rows()));
        labels.push_back(inst.label == Label::Positive ? 1 : 0);
    }
    double oracle_acc = 0.0;
    for (double threshold : centroids) {
        std::size_t low = 0, high = 0;
        for (std::size_t i = 0; i < centroids.size(); ++i) {
            const bool below = centroids[i] <= threshold;
            if ((below ? 1 : 0) == labels[i]) ++low;
            if ((below ? 0 : 1) == labels[i]) ++high;
        }
        oracle_acc = std::max({oracle_acc,
                               static_cast<double>(low) / centroids.size(),
                               static_cast<double>(high) / centroids.size()});
    }

    CvResult cv = run_cv(cfg, instances, 2, 1);
    const double acc = cv.report.mean.acc;
    const double auc = cv.report.mean.auc.value_or(0.0);
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    log << "oracle " << std::fixed << std::setprecision(3) << oracle_acc << ", mean ACC "
        << acc << ", mean AUC " << auc << ", " << std::setprecision(0) << secs << " s"
        << std::defaultfloat;
    fs::remove_all(dir);
    return oracle_acc >= 0.95 && acc >= 0.90 && auc >= 0.95 && secs <= 600.0;
}

// ---------------------------------------------------------------------------
// ablation ordering on a complementary-evidence corpus

bool check_ablation_order(std::ostream& log) {
    const auto dir = scratch_root() / "ablation";
    SynthSpec spec;
    spec.n_subjects = 32;
    spec.n_positive = 16;
    spec.seed = 13;
    spec.complementary = true;
    spec.modalities = {{"m1", 5.0, 440.0, 880.0, 660.0, 0.0, 300.0},
                       {"m2", 5.0, 440.0, 880.0, 660.0, 0.0, 300.0}};

    ModelConfig base = learning_config();
    auto instances = extract_corpus(spec, dir, base);

    auto mean_acc = [&](AblationMode mode) {
        double total = 0.0;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            ModelConfig cfg = base;
            cfg.ablation = mode;
            cfg.seed = seed * 101;
            FoldPlan plan = make_folds(instances, 2, cfg.seed);
            std::vector<Instance> train_set, test_set;
            for (std::size_t i : train_indices(plan, instances, 1))
                train_set.push_back(instances[i]);
            for (std::size_t i : test_indices(plan, instances, 1))
                test_set.push_back(instances[i]);
            TrainedModel trained = train(cfg, train_set);
            total += evaluate(trained.model, test_set).metrics.acc;
        }
        return total / 5.0;
    };

    const double full = mean_acc(AblationMode::Full);
    const double intra = mean_acc(AblationMode::IntraAtt);
    const double inter = mean_acc(AblationMode::InterAtt);
    fs::remove_all(dir);

    log << "full " << std::fixed << std::setprecision(3) << full << ", intra_att "
        << intra << ", inter_att " << inter << std::defaultfloat;
    return full >= intra + 0.02 && full >= inter + 0.02;
}

// ---------------------------------------------------------------------------
// metric oracle equivalence to 1e-12 on 100 random lists

bool check_metric_oracle(std::ostream& log) {
    Rng rng(606);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 4 + rng.below(197);
        std::vector<int> labels(n);
        std::vector<double> scores(n);
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = rng.uniform() < 0.5 ? 1 : 0;
            scores[i] = std::round(rng.uniform() * 16.0) / 16.0;
        }
        labels[0] = 1;
        labels[1] = 0;

        const MetricValues m = compute_metrics(labels, scores, 0.5);

        double tp = 0, tn = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool pred = scores[i] > 0.5;
            if (labels[i] == 1)
                pred ? ++tp : ++fn;
            else
                pred ? ++fp : ++tn;
        }
        double wins = 0.0, pairs = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                if (labels[i] != 1 || labels[j] != 0) continue;
                pairs += 1.0;
                wins += scores[i] > scores[j] ? 1.0 : (scores[i] == scores[j] ? 0.5 : 0.0);
            }

        worst = std::max(worst, std::abs(m.acc - (tp + tn) / n));
        const double f1_den = 2 * tp + fp + fn;
        worst = std::max(worst, std::abs(m.f1 - (f1_den > 0 ? 2 * tp / f1_den : 0.0)));
        worst = std::max(worst, std::abs(*m.sen - tp / (tp + fn)));
        worst = std::max(worst, std::abs(*m.spe - tn / (tn + fp)));
        worst = std::max(worst, std::abs(*m.auc - wins / pairs));
    }
    log << "worst deviation " << std::scientific << std::setprecision(2) << worst
        << std::defaultfloat;
    return worst <= 1e-12;
}

// ---------------------------------------------------------------------------
// smote contract over 100 seeded cv plans

Instance smote_instance(const std::string& id, Label label, Rng& rng) {
    Instance inst;
    inst.subject_id = id;
    inst.label = label;
    ModalityFeatureSet fs_;
    for (std::size_t d = 0; d < kNumDomains; ++d) {
        FeatureMatrix fm;
        fm.domain = kAllDomains[d];
        fm.data = Tensor<float>({3, 2});
        for (std::size_t i = 0; i < fm.data.numel(); ++i)
            fm.data.at(i) = static_cast<float>(rng.normal());
        fs_.domains[d] = fm;
    }
    inst.features.emplace_back("m", fs_);
    return inst;
}

bool check_smote_contract(std::ostream& log) {
    Rng rng(909);
    std::vector<Instance> instances;
    for (int i = 0; i < 7; ++i)
        instances.push_back(smote_instance("p" + std::to_string(i), Label::Positive, rng));
    for (int i = 0; i < 18; ++i)
        instances.push_back(smote_instance("n" + std::to_string(i), Label::Negative, rng));

    auto balanced = smote(instances, 5, 4242);
    std::size_t pos = 0, neg = 0;
    for (const auto& inst : balanced) (inst.label == Label::Positive ? pos : neg) += 1;
    if (pos != neg) {
        log << "counts " << pos << "/" << neg << " not balanced";
        return false;
    }

    auto find = [&balanced](const std::string& id) -> const Instance* {
        for (const auto& inst : balanced)
            if (inst.subject_id == id) return &inst;
        return nullptr;
    };
    double max_err = 0.0;
    for (const auto& inst : balanced) {
        if (!inst.synthetic) continue;
        const auto x = flatten_features(*find(inst.parent_id));
        const auto nn = flatten_features(*find(inst.neighbor_id));
        const auto s = flatten_features(inst);
        for (std::size_t i = 0; i < s.size(); ++i) {
            const float expected = static_cast<float>(
                x[i] + inst.interp_u * (static_cast<double>(nn[i]) - x[i]));
            max_err = std::max(max_err, static_cast<double>(std::abs(s[i] - expected)));
        }
    }
    if (max_err != 0.0) {
        log << "off-segment synthetic point (err " << max_err << ")";
        return false;
    }

    std::size_t synthetic_in_test = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto plan = make_folds(balanced, 5, seed);
        for (std::size_t f = 0; f < 5; ++f)
            for (std::size_t idx : test_indices(plan, balanced, f))
                if (balanced[idx].synthetic) ++synthetic_in_test;
    }
    log << "balanced " << pos << "/" << neg << ", on-segment exact, " << synthetic_in_test
        << " synthetic test instances over 100 plans";
    return synthetic_in_test == 0;
}

// ---------------------------------------------------------------------------
// mcs contract

bool check_mcs_contract(std::ostream& log) {
    // uniform symmetry case: exactly 1/M
    AttnMap<double> uniform;
    uniform.data = Tensor<double>::full({3, 12, 12}, 1.0 / 12.0);
    std::vector<ModalitySpan> spans = {{"a", 0, 3}, {"b", 3, 6}, {"c", 6, 9}, {"d", 9, 12}};
    auto u = mcs(uniform, spans);
    for (double v : u)
        if (std::abs(v - 0.25) > 1e-12) {
            log << "uniform case returned " << v;
            return false;
        }

    Rng rng(111);
    double worst_sum = 0.0, worst_oracle = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t heads = 1 + rng.below(4), n = 12;
        AttnMap<double> map;
        map.data = Tensor<double>({heads, n, n});
        for (std::size_t i = 0; i < map.data.numel(); ++i) map.data.at(i) = rng.uniform();
        for (McsMode mode : {McsMode::RowMass, McsMode::ColumnMass}) {
            auto scores = mcs(map, spans, mode);
            double total = 0.0;
            for (double v : scores) total += v;
            worst_sum = std::max(worst_sum, std::abs(total - 1.0));

            std::vector<double> sa(spans.size(), 0.0);
            for (std::size_t s = 0; s < spans.size(); ++s) {
                for (std::size_t h = 0; h < heads; ++h)
                    for (std::size_t j = spans[s].start; j < spans[s].end; ++j)
                        for (std::size_t k = 0; k < n; ++k)
                            sa[s] += mode == McsMode::RowMass ? map.data.at(h, j, k)
                                                              : map.data.at(h, k, j);
                sa[s] /= static_cast<double>(heads * (spans[s].end - spans[s].start));
            }
            double denom = 0.0;
            for (double v : sa) denom += v;
            for (std::size_t s = 0; s < spans.size(); ++s)
                worst_oracle = std::max(worst_oracle, std::abs(scores[s] - sa[s] / denom));
        }
    }
    log << "uniform exact, worst sum dev " << std::scientific << std::setprecision(2)
        << worst_sum << ", worst oracle dev " << worst_oracle << std::defaultfloat;
    return worst_sum <= 1e-6 && worst_oracle <= 1e-9;
}

// ---------------------------------------------------------------------------
// determinism: two full cv pipelines, byte-identical reports + checkpoints

std::vector<char> slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

bool tree_equal(const fs::path& a, const fs::path& b, std::ostream& log) {
    std::vector<fs::path> rel;
    for (const auto& entry : fs::recursive_directory_iterator(a))
        if (entry.is_regular_file()) rel.push_back(fs::relative(entry.path(), a));
    std::sort(rel.begin(), rel.end());
    for (const auto& r : rel) {
        if (!fs::exists(b / r)) {
            log << "missing " << r.string();
            return false;
        }
        if (slurp(a / r) != slurp(b / r)) {
            log << "differs: " << r.string();
            return false;
        }
    }
    return true;
}

bool check_determinism(std::ostream& log) {
    const auto dir = scratch_root() / "determinism";
    fs::remove_all(dir);

    SynthSpec spec;
    spec.n_subjects = 8;
    spec.n_positive = 4;
    spec.seed = 3;
    spec.modalities = {{"a", 1.0, 440.0, 880.0, 660.0, 10.0, 300.0},
                       {"b", 1.0, 500.0, 1000.0, 750.0, 10.0, 300.0}};

    ModelConfig cfg = ModelConfig::profile_defaults("ipvs");
    cfg.epochs = 3;
    cfg.d_tc = 8;
    cfg.heads = 2;
    cfg.intra_depth = 1;
    cfg.inter_depth = 1;
    cfg.max_tokens_per_domain = 6;
    cfg.batch_size = 4;
    cfg.clips.default_seconds = 1.0;
    cfg.seed = 77;

    auto run_once = [&](const fs::path& out) {
        const Manifest manifest = generate(spec, out / "corpus");
        auto instances = assemble(manifest, cfg.features, cfg.clips);
        CvResult cv = run_cv(cfg, instances, 2, /*threads=*/1, out / "ckpts");
        std::ofstream(out / "report.json") << report_json(cv.report);
        std::ofstream(out / "report.txt") << report_table(cv.report);
    };
    run_once(dir / "run1");
    run_once(dir / "run2");

    const bool ok = tree_equal(dir / "run1", dir / "run2", log) &&
                    tree_equal(dir / "run2", dir / "run1", log);
    if (ok) log << "reports and fold checkpoints byte-identical";
    fs::remove_all(dir);
    return ok;
}

// ---------------------------------------------------------------------------
// dsp sanity: tone centroid, cqt octave relation, mel argmax oracle

bool check_dsp_sanity(std::ostream& log) {
    FrameSpec frames;
    const double bin_hz = 44100.0 / 2048.0;

    Waveform tone;
    tone.samples.resize(44100);
    for (std::size_t i = 0; i < tone.samples.size(); ++i)
        tone.samples[i] = 0.5 * std::sin(2.0 * std::numbers::pi * 1000.0 * i / 44100.0);
    auto sc = spectral_centroid(tone, frames);
    double worst_sc = 0.0;
    for (std::size_t f = 0; f < sc.frames(); ++f)
        worst_sc = std::max(worst_sc, std::abs(sc.data.at(f, 0) - 1000.0));
    if (worst_sc > bin_hz) {
        log << "centroid error " << worst_sc << " Hz > 1 bin";
        return false;
    }

    const auto centers = cqt_center_freqs(32.70319566257483, 12, 44100.0);
    for (std::size_t k = 0; k + 12 < centers.size(); ++k)
        if (std::abs(centers[k + 12] - 2.0 * centers[k]) > 1e-9 * centers[k]) {
            log << "octave relation broken at bin " << k;
            return false;
        }

    FeatureConfig cfg;
    auto fb = mel_filterbank(cfg.n_mels, cfg.frames.frame_length, 44100.0);
    // probe at filterbank center frequencies; the center-frequency oracle
    // predicts the band whose center carries the tone
    for (std::size_t band : {5u, 15u, 25u, 40u, 55u}) {
        const double probe = fb.center_hz[band];
        const std::size_t probe_bin =
            static_cast<std::size_t>(std::lround(probe / bin_hz));
        std::size_t oracle = 0;
        double best = -1.0;
        for (std::size_t m = 0; m < fb.n_filters; ++m)
            if (fb.weight(m, probe_bin) > best) {
                best = fb.weight(m, probe_bin);
                oracle = m;
            }
        if (oracle != band) {
            log << "oracle band " << oracle << " disagrees with center band " << band;
            return false;
        }
        Waveform w;
        w.samples.resize(22050);
        for (std::size_t i = 0; i < w.samples.size(); ++i)
            w.samples[i] = 0.5 * std::sin(2.0 * std::numbers::pi * probe * i / 44100.0);
        auto lm = log_mel(w, cfg);
        const std::size_t mid = lm.frames() / 2;
        std::size_t argmax = 0;
        for (std::size_t m = 1; m < lm.dims(); ++m)
            if (lm.data.at(mid, m) > lm.data.at(mid, argmax)) argmax = m;
        if (argmax != oracle) {
            log << "mel argmax " << argmax << " != oracle " << oracle << " at " << probe
                << " Hz";
            return false;
        }
    }
    log << "centroid within 1 bin, octave relation exact, 5 mel probes match";
    return true;
}

}  // namespace

int main() {
    std::cout << "note: corpus-scale published accuracies are not reproducible at desk "
                 "scale; this suite runs the property-based acceptance criteria.\n\n";

    std::vector<Criterion> criteria = {
        {"gradient-correctness", check_gradients},
        {"attention-normalization", check_attention_rows},
        {"shape-conformance", check_shapes},
        {"metric-oracle-equivalence", check_metric_oracle},
        {"smote-contract", check_smote_contract},
        {"mcs-contract", check_mcs_contract},
        {"dsp-sanity", check_dsp_sanity},
        {"determinism", check_determinism},
        {"end-to-end-learning", check_end_to_end},
        {"ablation-ordering", check_ablation_order},
    };

    int failures = 0;
    for (auto& criterion : criteria) {
        std::ostringstream detail;
        bool ok = false;
        try {
            ok = criterion.body(detail);
        } catch (const std::exception& e) {
            detail << "exception: " << e.what();
        }
        if (!ok) ++failures;
        std::cout << (ok ? "PASS" : "FAIL") << "  " << std::left << std::setw(28)
                  << criterion.name << " " << detail.str() << "\n"
                  << std::flush;
    }
    std::cout << "\n" << (criteria.size() - failures) << "/" << criteria.size()
              << " criteria passed\n";
    return failures == 0 ? 0 : 1;
}
