#include "audformer/synth.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "audformer/rng.hpp"
#include "audformer/wav.hpp"

namespace audformer {

using ordered_json = nlohmann::ordered_json;

SynthSpec SynthSpec::from_json(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw DataError("synth spec: cannot open " + path.string());
    ordered_json j;
    try {
        is >> j;
    } catch (const std::exception& e) {
        throw DataError("synth spec: parse error in " + path.string() + ": " + e.what());
    }

    SynthSpec spec;
    spec.n_subjects = j.value("n_subjects", spec.n_subjects);
    spec.n_positive = j.value("n_positive", spec.n_subjects / 2);
    spec.sample_rate = j.value("sample_rate", spec.sample_rate);
    spec.seed = j.value("seed", spec.seed);
    spec.complementary = j.value("complementary", false);
    if (!j.contains("modalities"))
        throw DataError("synth spec: missing modalities array");
    for (const auto& m : j.at("modalities")) {
        SynthModality mod;
        mod.name = m.at("name").get<std::string>();
        mod.clip_seconds = m.value("clip_seconds", mod.clip_seconds);
        mod.positive_hz = m.value("positive_hz", mod.positive_hz);
        mod.negative_hz = m.value("negative_hz", mod.negative_hz);
        mod.neutral_hz = m.value("neutral_hz", mod.neutral_hz);
        mod.snr_db = m.value("snr_db", mod.snr_db);
        mod.noise_cutoff_hz = m.value("noise_cutoff_hz", mod.noise_cutoff_hz);
        spec.modalities.push_back(mod);
    }
    spec.validate();
    return spec;
}

void SynthSpec::validate() const {
    if (n_subjects == 0) throw DataError("synth spec: n_subjects must be positive");
    if (n_positive > n_subjects)
        throw DataError("synth spec: n_positive exceeds n_subjects");
    if (modalities.empty()) throw DataError("synth spec: no modalities");
    bool separable = false;
    for (const auto& m : modalities)
        if (m.positive_hz != m.negative_hz) separable = true;
    if (!separable)
        throw DataError("synth spec: class signatures are identical in every modality");
    for (const auto& m : modalities) {
        if (m.clip_seconds <= 0.0)
            throw DataError("synth spec: clip_seconds must be positive for " + m.name);
        if (m.positive_hz <= 0.0 || m.negative_hz <= 0.0 || m.neutral_hz <= 0.0)
            throw DataError("synth spec: frequencies must be positive for " + m.name);
    }
}

namespace {

// Three-harmonic tone with random phases, unit peak before mixing.
std::vector<double> tone_mixture(double hz, double seconds, double sample_rate,
                                 Rng& rng) {
    const std::size_t n = static_cast<std::size_t>(std::llround(seconds * sample_rate));
    std::vector<double> x(n, 0.0);
    const double phases[3] = {rng.uniform(0.0, 2.0 * std::numbers::pi),
                              rng.uniform(0.0, 2.0 * std::numbers::pi),
                              rng.uniform(0.0, 2.0 * std::numbers::pi)};
    for (std::size_t h = 0; h < 3; ++h) {
        const double f = hz * static_cast<double>(h + 1);
        if (f >= sample_rate / 2.0) continue;
        const double amp = 1.0 / static_cast<double>(h + 1);
        for (std::size_t i = 0; i < n; ++i)
            x[i] += amp * std::sin(2.0 * std::numbers::pi * f *
                                       static_cast<double>(i) / sample_rate +
                                   phases[h]);
    }
    return x;
}

}  // namespace

Manifest generate(const SynthSpec& spec, const std::filesystem::path& out_dir) {
    spec.validate();
    std::filesystem::create_directories(out_dir);
    Rng rng(spec.seed);

    std::ofstream manifest_os(out_dir / "manifest.jsonl", std::ios::trunc);
    if (!manifest_os)
        throw DataError("synth: cannot write manifest in " + out_dir.string());

    for (std::size_t s = 0; s < spec.n_subjects; ++s) {
        const bool positive = s < spec.n_positive;
        std::ostringstream id_os;
        id_os << "subj_" << (positive ? "pos" : "neg") << "_" << s;
        const std::string subject_id = id_os.str();

        ordered_json entry;
        entry["subject_id"] = subject_id;
        entry["label"] = positive ? "Positive" : "Negative";
        ordered_json mods;

        for (std::size_t m = 0; m < spec.modalities.size(); ++m) {
            const SynthModality& mod = spec.modalities[m];
            const bool informative =
                !spec.complementary || (s % spec.modalities.size()) == m;
            const double hz = informative ? (positive ? mod.positive_hz : mod.negative_hz)
                                          : mod.neutral_hz;

            std::vector<double> signal =
                tone_mixture(hz, mod.clip_seconds, spec.sample_rate, rng);

            double sig_rms = 0.0;
            for (double v : signal) sig_rms += v * v;
            sig_rms = std::sqrt(sig_rms / static_cast<double>(signal.size()));
            const double noise_rms = sig_rms * std::pow(10.0, -mod.snr_db / 20.0);

            // one-pole low-passed Gaussian noise, rescaled to the target RMS
            std::vector<double> noise(signal.size());
            const double alpha =
                std::exp(-2.0 * std::numbers::pi * mod.noise_cutoff_hz / spec.sample_rate);
            double state = 0.0, acc = 0.0;
            for (double& v : noise) {
                state = alpha * state + (1.0 - alpha) * rng.normal();
                v = state;
                acc += state * state;
            }
            const double raw_rms = std::sqrt(acc / static_cast<double>(noise.size()));
            const double gain = raw_rms > 0.0 ? noise_rms / raw_rms : 0.0;
            for (std::size_t i = 0; i < signal.size(); ++i) signal[i] += gain * noise[i];

            double peak = 0.0;
            for (double v : signal) peak = std::max(peak, std::abs(v));
            if (peak > 0.0)
                for (double& v : signal) v *= 0.95 / peak;

            Waveform w;
            w.sample_rate = spec.sample_rate;
            w.samples = std::move(signal);

            const std::string filename = subject_id + "_" + mod.name + ".wav";
            write_wav(out_dir / filename, w);
            mods[mod.name] = {filename};
        }
        entry["modality_paths"] = mods;
        manifest_os << entry.dump() << "\n";
    }
    manifest_os.close();

    return load_manifest(out_dir / "manifest.jsonl");
}

}  // namespace audformer
