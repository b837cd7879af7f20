#include "audformer/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace audformer {

namespace {

struct Reader {
    std::ifstream is;
    std::string path;

    explicit Reader(const std::filesystem::path& p)
        : is(p, std::ios::binary), path(p.string()) {
        if (!is) throw DataError("wav: cannot open: " + path);
    }

    void bytes(void* dst, std::size_t n) {
        is.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(is.gcount()) != n)
            throw DataError("wav: truncated file: " + path);
    }

    std::uint32_t u32() {
        std::uint32_t v;
        bytes(&v, 4);
        return v;
    }
    std::uint16_t u16() {
        std::uint16_t v;
        bytes(&v, 2);
        return v;
    }

    void skip(std::uint32_t n) { is.seekg(n, std::ios::cur); }
};

}  // namespace

Waveform read_wav(const std::filesystem::path& path, double target_rate) {
    Reader r(path);

    char tag[4];
    r.bytes(tag, 4);
    if (std::memcmp(tag, "RIFF", 4) != 0)
        throw DataError("wav: not a RIFF file: " + r.path);
    r.u32();  // riff size
    r.bytes(tag, 4);
    if (std::memcmp(tag, "WAVE", 4) != 0)
        throw DataError("wav: not a WAVE file: " + r.path);

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    bool have_fmt = false;
    std::vector<std::uint8_t> payload;

    while (r.is.peek() != EOF) {
        r.bytes(tag, 4);
        const std::uint32_t chunk_size = r.u32();
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            format = r.u16();
            channels = r.u16();
            rate = r.u32();
            r.u32();  // byte rate
            r.u16();  // block align
            bits = r.u16();
            if (chunk_size > 16) r.skip(chunk_size - 16);
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            payload.resize(chunk_size);
            if (chunk_size) r.bytes(payload.data(), chunk_size);
            break;
        } else {
            r.skip(chunk_size + (chunk_size & 1));
        }
    }

    if (!have_fmt) throw DataError("wav: missing fmt chunk: " + r.path);
    if (payload.empty()) throw DataError("wav: missing or empty data chunk: " + r.path);
    if (channels == 0 || rate == 0)
        throw DataError("wav: invalid fmt fields in " + r.path);

    const bool pcm_int = format == 1 && (bits == 16 || bits == 24);
    const bool pcm_float = format == 3 && bits == 32;
    if (!pcm_int && !pcm_float)
        throw DataError("wav: unsupported encoding (format=" + std::to_string(format) +
                        ", bits=" + std::to_string(bits) + ") in " + r.path);

    const std::size_t bytes_per_sample = bits / 8;
    const std::size_t frame_bytes = bytes_per_sample * channels;
    const std::size_t frames = payload.size() / frame_bytes;

    std::vector<double> mono(frames, 0.0);
    for (std::size_t f = 0; f < frames; ++f) {
        double acc = 0.0;
        for (std::size_t c = 0; c < channels; ++c) {
            const std::uint8_t* p = payload.data() + f * frame_bytes + c * bytes_per_sample;
            double v = 0.0;
            if (pcm_float) {
                float fv;
                std::memcpy(&fv, p, 4);
                v = fv;
            } else if (bits == 16) {
                std::int16_t iv;
                std::memcpy(&iv, p, 2);
                v = iv / 32768.0;
            } else {  // 24-bit little-endian, sign-extend
                std::int32_t iv = (p[0]) | (p[1] << 8) | (p[2] << 16);
                if (iv & 0x800000) iv |= ~0xFFFFFF;
                v = iv / 8388608.0;
            }
            acc += v;
        }
        mono[f] = std::clamp(acc / channels, -1.0, 1.0);
    }

    Waveform w;
    w.sample_rate = target_rate;
    if (static_cast<double>(rate) == target_rate) {
        w.samples = std::move(mono);
    } else {
        w.samples = resample_linear(mono, static_cast<double>(rate), target_rate);
    }
    for (double v : w.samples)
        if (std::isnan(v)) throw DataError("wav: NaN sample in " + r.path);
    return w;
}

void write_wav(const std::filesystem::path& path, const Waveform& w) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("wav: cannot open for write: " + path.string());

    const std::uint32_t rate = static_cast<std::uint32_t>(std::lround(w.sample_rate));
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
    const std::uint32_t riff_size = 36 + data_bytes;

    auto put_u32 = [&os](std::uint32_t v) { os.write(reinterpret_cast<char*>(&v), 4); };
    auto put_u16 = [&os](std::uint16_t v) { os.write(reinterpret_cast<char*>(&v), 2); };

    os.write("RIFF", 4);
    put_u32(riff_size);
    os.write("WAVE", 4);
    os.write("fmt ", 4);
    put_u32(16);
    put_u16(1);  // PCM
    put_u16(1);  // mono
    put_u32(rate);
    put_u32(rate * 2);
    put_u16(2);
    put_u16(16);
    os.write("data", 4);
    put_u32(data_bytes);
    for (double v : w.samples) {
        const double clamped = std::clamp(v, -1.0, 1.0);
        const std::int16_t s = static_cast<std::int16_t>(std::lround(clamped * 32767.0));
        os.write(reinterpret_cast<const char*>(&s), 2);
    }
    if (!os) throw DataError("wav: write failed: " + path.string());
}

std::vector<double> resample_linear(const std::vector<double>& in, double rate_in,
                                    double rate_out) {
    if (in.empty() || rate_in == rate_out) return in;
    const std::size_t n_out = static_cast<std::size_t>(
        std::max(1.0, std::floor(static_cast<double>(in.size()) * rate_out / rate_in)));
    std::vector<double> out(n_out);
    const double step = rate_in / rate_out;
    for (std::size_t i = 0; i < n_out; ++i) {
        const double pos = i * step;
        const std::size_t i0 = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(i0);
        const std::size_t i1 = std::min(i0 + 1, in.size() - 1);
        out[i] = in[i0] * (1.0 - frac) + in[i1] * frac;
    }
    return out;
}

}  // namespace audformer
