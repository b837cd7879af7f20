#pragma once

#include <filesystem>
#include <vector>

#include "audformer/error.hpp"

namespace audformer {

// Raw audio clip. Samples live in [-1, 1]; anything read from disk is
// downmixed to mono and resampled to the requested rate.
struct Waveform {
    std::vector<double> samples;
    double sample_rate = 44100.0;

    double seconds() const {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

// Reads a PCM WAV file (16/24-bit integer or 32-bit float), downmixes to
// mono by channel averaging, and linearly resamples to target_rate when
// the file rate differs. Throws DataError on malformed input.
Waveform read_wav(const std::filesystem::path& path, double target_rate = 44100.0);

// Writes mono 16-bit PCM.
void write_wav(const std::filesystem::path& path, const Waveform& w);

// Linear-interpolation resampler (exposed for tests).
std::vector<double> resample_linear(const std::vector<double>& in, double rate_in,
                                    double rate_out);

}  // namespace audformer
