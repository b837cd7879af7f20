#include "audformer/features.hpp"

#include <cmath>
#include <sstream>
#include <vector>

namespace audformer {

const char* domain_name(FeatureDomain d) {
    switch (d) {
        case FeatureDomain::ZCR: return "ZCR";
        case FeatureDomain::STE: return "STE";
        case FeatureDomain::SC: return "SC";
        case FeatureDomain::LOGMEL: return "LOGMEL";
        case FeatureDomain::MFCC: return "MFCC";
        case FeatureDomain::GFCC: return "GFCC";
        case FeatureDomain::CQCC: return "CQCC";
    }
    return "?";
}

FeatureDomain domain_from_name(const std::string& name) {
    for (FeatureDomain d : kAllDomains)
        if (name == domain_name(d)) return d;
    throw DataError("unknown feature domain: " + name);
}

std::uint64_t FeatureConfig::hash() const {
    std::ostringstream os;
    os << sample_rate << '|' << frames.frame_length << '|' << frames.hop_length << '|'
       << static_cast<int>(frames.window) << '|' << n_mels << '|' << n_mfcc << '|'
       << gfcc_filters << '|' << gfcc_coeffs << '|' << gfcc_fmin << '|'
       << cqcc_bins_per_octave << '|' << cqcc_coeffs << '|' << cqcc_fmin << '|'
       << log_eps << '|' << trim_threshold_db;
    const std::string s = os.str();
    std::uint64_t h = 14695981039346656037ull;  // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::size_t FeatureConfig::domain_dims(FeatureDomain d) const {
    switch (d) {
        case FeatureDomain::ZCR:
        case FeatureDomain::STE:
        case FeatureDomain::SC: return 1;
        case FeatureDomain::LOGMEL: return n_mels;
        case FeatureDomain::MFCC: return n_mfcc;
        case FeatureDomain::GFCC: return gfcc_coeffs;
        case FeatureDomain::CQCC: return cqcc_coeffs;
    }
    return 0;
}

namespace {

FeatureMatrix make_matrix(FeatureDomain d, std::size_t frames, std::size_t dims) {
    FeatureMatrix m;
    m.domain = d;
    m.data = Tensor<float>({frames, dims});
    return m;
}

FeatureMatrix zcr_impl(const Waveform& w, const FrameSpec& spec) {
    const std::size_t frames = frame_count(w.samples.size(), spec);
    FeatureMatrix out = make_matrix(FeatureDomain::ZCR, frames, 1);
    for (std::size_t f = 0; f < frames; ++f) {
        const double* x = w.samples.data() + f * spec.hop_length;
        std::size_t crossings = 0;
        for (std::size_t i = 0; i + 1 < spec.frame_length; ++i)
            if ((x[i] >= 0.0) != (x[i + 1] >= 0.0)) ++crossings;
        out.data.at(f, 0) = static_cast<float>(
            static_cast<double>(crossings) / static_cast<double>(spec.frame_length - 1));
    }
    return out;
}

FeatureMatrix ste_impl(const Waveform& w, const FrameSpec& spec) {
    const std::size_t frames = frame_count(w.samples.size(), spec);
    FeatureMatrix out = make_matrix(FeatureDomain::STE, frames, 1);
    for (std::size_t f = 0; f < frames; ++f) {
        const double* x = w.samples.data() + f * spec.hop_length;
        double acc = 0.0;
        for (std::size_t i = 0; i < spec.frame_length; ++i) acc += x[i] * x[i];
        out.data.at(f, 0) = static_cast<float>(acc / static_cast<double>(spec.frame_length));
    }
    return out;
}

FeatureMatrix sc_impl(const StftResult& spec_result, const FrameSpec& spec,
                      double sample_rate) {
    FeatureMatrix out = make_matrix(FeatureDomain::SC, spec_result.n_frames, 1);
    for (std::size_t f = 0; f < spec_result.n_frames; ++f) {
        double num = 0.0, den = 0.0;
        for (std::size_t b = 0; b < spec_result.n_bins; ++b) {
            const double mag = std::abs(spec_result.at(f, b));
            const double freq = static_cast<double>(b) * sample_rate /
                                static_cast<double>(spec.frame_length);
            num += freq * mag;
            den += mag;
        }
        out.data.at(f, 0) = static_cast<float>(den > 0.0 ? num / den : 0.0);
    }
    return out;
}

// Filterbank energies over the power spectrum: frames x n_filters.
std::vector<double> apply_filterbank(const StftResult& s, const Filterbank& fb) {
    std::vector<double> energies(s.n_frames * fb.n_filters, 0.0);
    for (std::size_t f = 0; f < s.n_frames; ++f) {
        for (std::size_t m = 0; m < fb.n_filters; ++m) {
            double acc = 0.0;
            const double* wrow = fb.weights.data() + m * fb.n_bins;
            for (std::size_t b = 0; b < s.n_bins; ++b) acc += wrow[b] * s.power(f, b);
            energies[f * fb.n_filters + m] = acc;
        }
    }
    return energies;
}

FeatureMatrix log_mel_impl(const StftResult& s, const Filterbank& fb, double eps) {
    FeatureMatrix out = make_matrix(FeatureDomain::LOGMEL, s.n_frames, fb.n_filters);
    const auto energies = apply_filterbank(s, fb);
    for (std::size_t i = 0; i < energies.size(); ++i)
        out.data.at(i) = static_cast<float>(std::log(energies[i] + eps));
    return out;
}

FeatureMatrix mfcc_impl(const FeatureMatrix& logmel, std::size_t n_mfcc) {
    FeatureMatrix out = make_matrix(FeatureDomain::MFCC, logmel.frames(), n_mfcc);
    std::vector<double> row(logmel.dims());
    for (std::size_t f = 0; f < logmel.frames(); ++f) {
        for (std::size_t m = 0; m < logmel.dims(); ++m) row[m] = logmel.data.at(f, m);
        const auto coeffs = dct_ii_ortho(row);
        for (std::size_t j = 0; j < n_mfcc; ++j)
            out.data.at(f, j) = static_cast<float>(coeffs[j]);
    }
    return out;
}

FeatureMatrix gfcc_impl(const StftResult& s, const Filterbank& fb,
                        std::size_t n_coeffs, double eps) {
    FeatureMatrix out = make_matrix(FeatureDomain::GFCC, s.n_frames, n_coeffs);
    const auto energies = apply_filterbank(s, fb);
    std::vector<double> row(fb.n_filters);
    for (std::size_t f = 0; f < s.n_frames; ++f) {
        for (std::size_t m = 0; m < fb.n_filters; ++m)
            row[m] = std::cbrt(energies[f * fb.n_filters + m] + eps);
        const auto coeffs = dct_ii_ortho(row);
        for (std::size_t j = 0; j < n_coeffs; ++j)
            out.data.at(f, j) = static_cast<float>(coeffs[j]);
    }
    return out;
}

// Log power on the geometric CQT grid, resampled onto a uniform linear
// frequency grid with the same point count, then DCT-II.
FeatureMatrix cqcc_impl(const CqtResult& c, const std::vector<double>& centers,
                        std::size_t n_coeffs, double eps) {
    FeatureMatrix out = make_matrix(FeatureDomain::CQCC, c.n_frames, n_coeffs);
    const std::size_t n_bins = c.n_bins;

    std::vector<double> log_geo(n_bins), linear(n_bins);
    const double f_lo = centers.front(), f_hi = centers.back();
    for (std::size_t f = 0; f < c.n_frames; ++f) {
        for (std::size_t k = 0; k < n_bins; ++k) {
            const double mag = c.at(f, k);
            log_geo[k] = std::log(mag * mag + eps);
        }
        std::size_t k = 0;
        for (std::size_t i = 0; i < n_bins; ++i) {
            const double g = f_lo + (f_hi - f_lo) * static_cast<double>(i) /
                                        static_cast<double>(n_bins - 1);
            while (k + 2 < n_bins && centers[k + 1] < g) ++k;
            const double t = (g - centers[k]) / (centers[k + 1] - centers[k]);
            linear[i] = log_geo[k] + (log_geo[k + 1] - log_geo[k]) * t;
        }
        const auto coeffs = dct_ii_ortho(linear);
        for (std::size_t j = 0; j < n_coeffs; ++j)
            out.data.at(f, j) = static_cast<float>(coeffs[j]);
    }
    return out;
}

}  // namespace

FeatureMatrix zcr(const Waveform& w, const FrameSpec& spec) { return zcr_impl(w, spec); }
FeatureMatrix ste(const Waveform& w, const FrameSpec& spec) { return ste_impl(w, spec); }

FeatureMatrix spectral_centroid(const Waveform& w, const FrameSpec& spec) {
    return sc_impl(stft(w, spec), spec, w.sample_rate);
}

FeatureMatrix log_mel(const Waveform& w, const FeatureConfig& cfg) {
    const auto s = stft(w, cfg.frames);
    const auto fb = mel_filterbank(cfg.n_mels, cfg.frames.frame_length, w.sample_rate);
    return log_mel_impl(s, fb, cfg.log_eps);
}

FeatureMatrix mfcc(const Waveform& w, const FeatureConfig& cfg) {
    return mfcc_impl(log_mel(w, cfg), cfg.n_mfcc);
}

FeatureMatrix gfcc(const Waveform& w, const FeatureConfig& cfg) {
    const auto s = stft(w, cfg.frames);
    const auto fb = gammatone_filterbank(cfg.gfcc_filters, cfg.frames.frame_length,
                                         w.sample_rate, cfg.gfcc_fmin);
    return gfcc_impl(s, fb, cfg.gfcc_coeffs, cfg.log_eps);
}

FeatureMatrix cqcc(const Waveform& w, const FeatureConfig& cfg) {
    const auto centers =
        cqt_center_freqs(cfg.cqcc_fmin, cfg.cqcc_bins_per_octave, w.sample_rate);
    const auto c = cqt(w, cfg.frames, cfg.cqcc_fmin, cfg.cqcc_bins_per_octave);
    return cqcc_impl(c, centers, cfg.cqcc_coeffs, cfg.log_eps);
}

ModalityFeatureSet extract_all(const Waveform& w, const FeatureConfig& cfg) {
    ModalityFeatureSet fs;
    auto tagged = [](const char* tag, auto&& fn) {
        try {
            return fn();
        } catch (const DataError& e) {
            throw DataError(std::string(tag) + ": " + e.what());
        }
    };

    const auto s = tagged("STFT", [&] { return stft(w, cfg.frames); });
    const auto mel_fb =
        mel_filterbank(cfg.n_mels, cfg.frames.frame_length, w.sample_rate);
    const auto gt_fb = gammatone_filterbank(cfg.gfcc_filters, cfg.frames.frame_length,
                                            w.sample_rate, cfg.gfcc_fmin);

    fs.of(FeatureDomain::ZCR) = tagged("ZCR", [&] { return zcr_impl(w, cfg.frames); });
    fs.of(FeatureDomain::STE) = tagged("STE", [&] { return ste_impl(w, cfg.frames); });
    fs.of(FeatureDomain::SC) =
        tagged("SC", [&] { return sc_impl(s, cfg.frames, w.sample_rate); });
    fs.of(FeatureDomain::LOGMEL) =
        tagged("LOGMEL", [&] { return log_mel_impl(s, mel_fb, cfg.log_eps); });
    fs.of(FeatureDomain::MFCC) = tagged(
        "MFCC", [&] { return mfcc_impl(fs.of(FeatureDomain::LOGMEL), cfg.n_mfcc); });
    fs.of(FeatureDomain::GFCC) = tagged(
        "GFCC", [&] { return gfcc_impl(s, gt_fb, cfg.gfcc_coeffs, cfg.log_eps); });
    fs.of(FeatureDomain::CQCC) = tagged("CQCC", [&] { return cqcc(w, cfg); });
    return fs;
}

}  // namespace audformer
