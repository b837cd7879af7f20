#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "audformer/error.hpp"
#include "audformer/wav.hpp"

namespace audformer {

// Analysis framing shared by all short-time features.
struct FrameSpec {
    std::size_t frame_length = 2048;
    std::size_t hop_length = 512;
    enum class Window { Hann, Rect } window = Window::Hann;
};

// Number of full frames: floor((len - frame_length)/hop) + 1.
// Throws DataError when the signal is shorter than one frame.
std::size_t frame_count(std::size_t n_samples, const FrameSpec& spec);

// Removes leading/trailing/internal chunks whose RMS falls more than
// threshold_db below the loudest chunk. Never returns an empty signal: if
// everything is below threshold the single loudest chunk is kept.
Waveform trim_silence(const Waveform& w, double threshold_db,
                      std::size_t chunk = 1024);

// Exact-length clips: center crop when too long, symmetric zero padding
// when too short.
Waveform standardize_length(const Waveform& w, double target_seconds);

// Magnitude-phase STFT, frames x (frame_length/2 + 1) bins.
struct StftResult {
    std::size_t n_frames = 0;
    std::size_t n_bins = 0;
    std::vector<std::complex<double>> values;  // row-major frames x bins

    std::complex<double> at(std::size_t frame, std::size_t bin) const {
        return values[frame * n_bins + bin];
    }
    double power(std::size_t frame, std::size_t bin) const {
        return std::norm(at(frame, bin));
    }
};

StftResult stft(const Waveform& w, const FrameSpec& spec);

// Triangular/gammatone analysis weights over rfft bins.
struct Filterbank {
    std::size_t n_filters = 0;
    std::size_t n_bins = 0;
    std::vector<double> weights;  // row-major n_filters x n_bins
    std::vector<double> center_hz;

    double weight(std::size_t filter, std::size_t bin) const {
        return weights[filter * n_bins + bin];
    }
};

// HTK-style mel triangles spanning [0, sr/2], unit peak.
Filterbank mel_filterbank(std::size_t n_mels, std::size_t nfft, double sample_rate);

// 4th-order gammatone magnitude responses at ERB-spaced centers strictly
// inside (fmin, sr/2).
Filterbank gammatone_filterbank(std::size_t n_filters, std::size_t nfft,
                                double sample_rate, double fmin = 50.0);

// Geometrically spaced constant-Q center frequencies fmin * 2^(k/bpo),
// all strictly below sr/2. Throws DataError unless at least one full
// octave fits.
std::vector<double> cqt_center_freqs(double fmin, std::size_t bins_per_octave,
                                     double sample_rate);

// Constant-Q magnitudes per frame (frames x n_bins). Kernel lengths are
// Q*sr/f_k, capped at the frame length and centered within the frame.
struct CqtResult {
    std::size_t n_frames = 0;
    std::size_t n_bins = 0;
    std::vector<double> magnitudes;  // row-major

    double at(std::size_t frame, std::size_t bin) const {
        return magnitudes[frame * n_bins + bin];
    }
};

CqtResult cqt(const Waveform& w, const FrameSpec& spec, double fmin,
              std::size_t bins_per_octave);

// Orthonormal DCT-II of one vector.
std::vector<double> dct_ii_ortho(const std::vector<double>& x);

}  // namespace audformer
