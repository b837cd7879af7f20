#include "audformer/dsp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

namespace audformer {

namespace {

constexpr double kPi = std::numbers::pi;

// FFTW plan creation/destruction is not thread-safe; execution is.
std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}

std::vector<double> make_window(const FrameSpec& spec, std::size_t n) {
    std::vector<double> w(n, 1.0);
    if (spec.window == FrameSpec::Window::Hann) {
        for (std::size_t i = 0; i < n; ++i)
            w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) /
                                        static_cast<double>(n));
    }
    return w;
}

double chunk_rms(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
    return std::sqrt(acc / static_cast<double>(n));
}

}  // namespace

std::size_t frame_count(std::size_t n_samples, const FrameSpec& spec) {
    if (spec.hop_length == 0 || spec.hop_length > spec.frame_length)
        throw DataError("frame spec: need 0 < hop <= frame_length");
    if (n_samples < spec.frame_length)
        throw DataError("input too short: " + std::to_string(n_samples) +
                        " samples < frame length " + std::to_string(spec.frame_length));
    return (n_samples - spec.frame_length) / spec.hop_length + 1;
}

Waveform trim_silence(const Waveform& w, double threshold_db, std::size_t chunk) {
    if (w.samples.empty()) throw DataError("trim_silence: empty waveform");
    if (chunk == 0) chunk = 1;

    const std::size_t n_chunks = std::max<std::size_t>(1, w.samples.size() / chunk);
    std::vector<double> rms(n_chunks);
    double peak = 0.0;
    for (std::size_t c = 0; c < n_chunks; ++c) {
        const std::size_t start = c * chunk;
        const std::size_t len = (c + 1 == n_chunks) ? w.samples.size() - start : chunk;
        rms[c] = chunk_rms(w.samples.data() + start, len);
        peak = std::max(peak, rms[c]);
    }

    const double floor_rms = peak * std::pow(10.0, -threshold_db / 20.0);
    Waveform out;
    out.sample_rate = w.sample_rate;
    for (std::size_t c = 0; c < n_chunks; ++c) {
        if (rms[c] <= floor_rms) continue;  // all-zero input falls through below
        const std::size_t start = c * chunk;
        const std::size_t len = (c + 1 == n_chunks) ? w.samples.size() - start : chunk;
        out.samples.insert(out.samples.end(), w.samples.begin() + start,
                           w.samples.begin() + start + len);
    }

    if (out.samples.empty()) {
        // Everything was silent relative to the peak; keep the loudest chunk.
        const std::size_t c = static_cast<std::size_t>(
            std::max_element(rms.begin(), rms.end()) - rms.begin());
        const std::size_t start = c * chunk;
        const std::size_t len = (c + 1 == n_chunks) ? w.samples.size() - start : chunk;
        out.samples.assign(w.samples.begin() + start, w.samples.begin() + start + len);
    }
    return out;
}

Waveform standardize_length(const Waveform& w, double target_seconds) {
    if (target_seconds <= 0.0)
        throw DataError("standardize_length: target must be positive");
    const std::size_t n = static_cast<std::size_t>(
        std::llround(target_seconds * w.sample_rate));

    Waveform out;
    out.sample_rate = w.sample_rate;
    if (w.samples.size() == n) {
        out.samples = w.samples;
    } else if (w.samples.size() > n) {
        const std::size_t start = (w.samples.size() - n) / 2;
        out.samples.assign(w.samples.begin() + start, w.samples.begin() + start + n);
    } else {
        const std::size_t pad = n - w.samples.size();
        const std::size_t left = pad / 2;
        out.samples.assign(n, 0.0);
        std::copy(w.samples.begin(), w.samples.end(), out.samples.begin() + left);
    }
    return out;
}

StftResult stft(const Waveform& w, const FrameSpec& spec) {
    const std::size_t n = spec.frame_length;
    const std::size_t frames = frame_count(w.samples.size(), spec);
    const std::size_t bins = n / 2 + 1;
    const std::vector<double> window = make_window(spec, n);

    StftResult result;
    result.n_frames = frames;
    result.n_bins = bins;
    result.values.resize(frames * bins);

    std::vector<double> in(n);
    std::vector<fftw_complex> out(bins);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), out.data(),
                                    FFTW_ESTIMATE);
    }
    if (!plan) throw NumericError("stft: fftw plan creation failed");

    for (std::size_t f = 0; f < frames; ++f) {
        const double* src = w.samples.data() + f * spec.hop_length;
        for (std::size_t i = 0; i < n; ++i) in[i] = src[i] * window[i];
        fftw_execute(plan);
        for (std::size_t b = 0; b < bins; ++b)
            result.values[f * bins + b] = {out[b][0], out[b][1]};
    }

    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        fftw_destroy_plan(plan);
    }
    return result;
}

Filterbank mel_filterbank(std::size_t n_mels, std::size_t nfft, double sample_rate) {
    auto hz_to_mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
    auto mel_to_hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };

    const std::size_t bins = nfft / 2 + 1;
    const double mel_max = hz_to_mel(sample_rate / 2.0);

    // n_mels + 2 edge points uniformly spaced on the mel scale.
    std::vector<double> edges(n_mels + 2);
    for (std::size_t i = 0; i < edges.size(); ++i)
        edges[i] = mel_to_hz(mel_max * static_cast<double>(i) /
                             static_cast<double>(n_mels + 1));

    Filterbank fb;
    fb.n_filters = n_mels;
    fb.n_bins = bins;
    fb.weights.assign(n_mels * bins, 0.0);
    fb.center_hz.resize(n_mels);

    for (std::size_t m = 0; m < n_mels; ++m) {
        const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
        fb.center_hz[m] = mid;
        for (std::size_t b = 0; b < bins; ++b) {
            const double f = static_cast<double>(b) * sample_rate /
                             static_cast<double>(nfft);
            double wgt = 0.0;
            if (f > lo && f < hi)
                wgt = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
            fb.weights[m * bins + b] = wgt;
        }
    }
    return fb;
}

Filterbank gammatone_filterbank(std::size_t n_filters, std::size_t nfft,
                                double sample_rate, double fmin) {
    auto erb_rate = [](double f) { return 21.4 * std::log10(1.0 + 0.00437 * f); };
    auto erb_rate_inv = [](double r) {
        return (std::pow(10.0, r / 21.4) - 1.0) / 0.00437;
    };
    auto erb_width = [](double f) { return 24.7 * (1.0 + 4.37 * f / 1000.0); };

    const std::size_t bins = nfft / 2 + 1;
    const double lo = erb_rate(fmin), hi = erb_rate(sample_rate / 2.0);

    Filterbank fb;
    fb.n_filters = n_filters;
    fb.n_bins = bins;
    fb.weights.assign(n_filters * bins, 0.0);
    fb.center_hz.resize(n_filters);

    for (std::size_t m = 0; m < n_filters; ++m) {
        // interior points keep every center strictly below Nyquist
        const double r = lo + (hi - lo) * static_cast<double>(m + 1) /
                                  static_cast<double>(n_filters + 1);
        const double fc = erb_rate_inv(r);
        fb.center_hz[m] = fc;
        const double b = 1.019 * erb_width(fc);
        for (std::size_t k = 0; k < bins; ++k) {
            const double f = static_cast<double>(k) * sample_rate /
                             static_cast<double>(nfft);
            const double u = (f - fc) / b;
            // 4th-order gammatone magnitude response
            fb.weights[m * bins + k] = std::pow(1.0 + u * u, -2.0);
        }
    }
    return fb;
}

std::vector<double> cqt_center_freqs(double fmin, std::size_t bins_per_octave,
                                     double sample_rate) {
    if (fmin <= 0.0) throw DataError("cqt: fmin must be positive");
    const double nyquist = sample_rate / 2.0;
    if (fmin * 2.0 >= nyquist)
        throw DataError("cqt: need at least one full octave below Nyquist (fmin=" +
                        std::to_string(fmin) + ", sr=" + std::to_string(sample_rate) + ")");
    std::vector<double> centers;
    for (std::size_t k = 0;; ++k) {
        const double f = fmin * std::pow(2.0, static_cast<double>(k) /
                                                  static_cast<double>(bins_per_octave));
        if (f >= nyquist) break;
        centers.push_back(f);
    }
    return centers;
}

CqtResult cqt(const Waveform& w, const FrameSpec& spec, double fmin,
              std::size_t bins_per_octave) {
    const auto centers = cqt_center_freqs(fmin, bins_per_octave, w.sample_rate);
    const std::size_t frames = frame_count(w.samples.size(), spec);
    const std::size_t n = spec.frame_length;
    const double q = 1.0 / (std::pow(2.0, 1.0 / static_cast<double>(bins_per_octave)) - 1.0);

    // Precompute windowed complex kernels per bin (centered in the frame).
    struct Kernel {
        std::size_t offset = 0;
        std::vector<double> re, im;
    };
    std::vector<Kernel> kernels(centers.size());
    for (std::size_t k = 0; k < centers.size(); ++k) {
        std::size_t len = static_cast<std::size_t>(
            std::lround(q * w.sample_rate / centers[k]));
        len = std::clamp<std::size_t>(len, 2, n);
        Kernel& ker = kernels[k];
        ker.offset = (n - len) / 2;
        ker.re.resize(len);
        ker.im.resize(len);
        for (std::size_t i = 0; i < len; ++i) {
            const double win =
                0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) /
                                     static_cast<double>(len));
            const double phase = -2.0 * kPi * centers[k] * static_cast<double>(i) /
                                 w.sample_rate;
            ker.re[i] = win * std::cos(phase) / static_cast<double>(len);
            ker.im[i] = win * std::sin(phase) / static_cast<double>(len);
        }
    }

    CqtResult result;
    result.n_frames = frames;
    result.n_bins = centers.size();
    result.magnitudes.assign(frames * centers.size(), 0.0);
    for (std::size_t f = 0; f < frames; ++f) {
        const double* frame = w.samples.data() + f * spec.hop_length;
        for (std::size_t k = 0; k < centers.size(); ++k) {
            const Kernel& ker = kernels[k];
            const double* x = frame + ker.offset;
            double re = 0.0, im = 0.0;
            for (std::size_t i = 0; i < ker.re.size(); ++i) {
                re += x[i] * ker.re[i];
                im += x[i] * ker.im[i];
            }
            result.magnitudes[f * centers.size() + k] = std::hypot(re, im);
        }
    }
    return result;
}

std::vector<double> dct_ii_ortho(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<double> out(n, 0.0);
    if (n == 0) return out;
    const double norm0 = std::sqrt(1.0 / static_cast<double>(n));
    const double norm = std::sqrt(2.0 / static_cast<double>(n));
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            acc += x[i] * std::cos(kPi * static_cast<double>(j) *
                                   (2.0 * static_cast<double>(i) + 1.0) /
                                   (2.0 * static_cast<double>(n)));
        out[j] = acc * (j == 0 ? norm0 : norm);
    }
    return out;
}

}  // namespace audformer
