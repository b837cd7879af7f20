#pragma once

// Deterministic signal builders shared by the DSP and pipeline tests.

#include <cmath>
#include <numbers>
#include <vector>

#include "audformer/wav.hpp"

namespace testsig {

inline audformer::Waveform tone(double hz, double seconds, double sample_rate = 44100.0,
                                double amplitude = 0.5, double phase = 0.0) {
    audformer::Waveform w;
    w.sample_rate = sample_rate;
    const std::size_t n = static_cast<std::size_t>(std::llround(seconds * sample_rate));
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        w.samples[i] = amplitude * std::sin(2.0 * std::numbers::pi * hz *
                                                static_cast<double>(i) / sample_rate +
                                            phase);
    return w;
}

inline audformer::Waveform silence(double seconds, double sample_rate = 44100.0) {
    audformer::Waveform w;
    w.sample_rate = sample_rate;
    w.samples.assign(static_cast<std::size_t>(std::llround(seconds * sample_rate)), 0.0);
    return w;
}

inline audformer::Waveform concat(const audformer::Waveform& a,
                                  const audformer::Waveform& b) {
    audformer::Waveform w = a;
    w.samples.insert(w.samples.end(), b.samples.begin(), b.samples.end());
    return w;
}

inline double energy(const audformer::Waveform& w) {
    double acc = 0.0;
    for (double v : w.samples) acc += v * v;
    return acc;
}

}  // namespace testsig
