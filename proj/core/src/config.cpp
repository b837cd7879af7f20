#include "audformer/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace audformer {

const char* ablation_name(AblationMode m) {
    switch (m) {
        case AblationMode::Full: return "full";
        case AblationMode::IntraAtt: return "intra_att";
        case AblationMode::InterAtt: return "inter_att";
    }
    return "?";
}

AblationMode ablation_from_name(const std::string& name) {
    if (name == "full") return AblationMode::Full;
    if (name == "intra_att") return AblationMode::IntraAtt;
    if (name == "inter_att") return AblationMode::InterAtt;
    throw DataError("ablation must be full, intra_att or inter_att, got: " + name);
}

const char* mcs_mode_name(McsMode m) {
    return m == McsMode::RowMass ? "row" : "column";
}

McsMode mcs_mode_from_name(const std::string& name) {
    if (name == "row") return McsMode::RowMass;
    if (name == "column") return McsMode::ColumnMass;
    throw DataError("mcs_mode must be row or column, got: " + name);
}

void ModelConfig::validate() const {
    if (d_tc == 0) throw DataError("config: d_tc must be positive");
    if (heads == 0) throw DataError("config: heads must be positive");
    if (d_tc % heads != 0)
        throw DataError("config: heads (" + std::to_string(heads) +
                        ") must divide d_tc (" + std::to_string(d_tc) + ")");
    if (intra_heads != 0 && d_tc % intra_heads != 0)
        throw DataError("config: intra_heads must divide d_tc");
    if (batch_size == 0) throw DataError("config: batch_size must be positive");
    if (learning_rate <= 0.0) throw DataError("config: learning_rate must be positive");
    if (max_tokens_per_domain == 0)
        throw DataError("config: max_tokens_per_domain must be positive");
    if (threshold <= 0.0 || threshold >= 1.0)
        throw DataError("config: threshold must be in (0,1)");
    if (attn_dropout < 0.0 || attn_dropout >= 1.0 || output_dropout < 0.0 ||
        output_dropout >= 1.0)
        throw DataError("config: dropout rates must be in [0,1)");
}

ModelConfig ModelConfig::profile_defaults(const std::string& name) {
    ModelConfig cfg;
    cfg.profile = name;
    cfg.d_tc = 40;
    cfg.attn_dropout = 0.1;
    cfg.output_dropout = 0.1;

    if (name == "coswara") {
        cfg.batch_size = 32;
        cfg.learning_rate = 1e-3;
        cfg.epochs = 60;
        cfg.heads = 5;
        cfg.smote_enabled = true;
        cfg.clips.seconds = {{"cough", 8.0}, {"breathing", 19.0}, {"counting", 18.0},
                             {"vowel", 20.0}};
        cfg.clips.default_seconds = 8.0;
    } else if (name == "sound_dr") {
        cfg.batch_size = 16;
        cfg.learning_rate = 1e-3;
        cfg.epochs = 60;
        cfg.heads = 5;
        cfg.smote_enabled = true;
        cfg.clips.default_seconds = 15.0;
    } else if (name == "ipvs") {
        cfg.batch_size = 16;
        cfg.learning_rate = 1e-3;
        cfg.epochs = 100;
        cfg.heads = 5;
        cfg.clips.default_seconds = 5.0;
    } else if (name == "pc_gita") {
        cfg.batch_size = 16;
        cfg.learning_rate = 1e-4;
        cfg.epochs = 80;
        cfg.heads = 3;
        cfg.clips.seconds = {{"phrase", 3.0}, {"sentence", 15.0}, {"ddk", 6.0},
                             {"vowel", 6.0}};
        cfg.clips.default_seconds = 6.0;
    } else if (name == "svd") {
        cfg.batch_size = 16;
        cfg.learning_rate = 1e-3;
        cfg.epochs = 80;
        cfg.heads = 3;
        cfg.clips.seconds = {{"vowel", 6.0}, {"phrase", 3.0}};
        cfg.clips.default_seconds = 6.0;
    } else {
        throw DataError("unknown profile: " + name +
                        " (expected coswara, sound_dr, ipvs, pc_gita or svd)");
    }
    return cfg;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string item;
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return d;
    } catch (const std::exception&) {
        throw DataError("config: invalid number for " + key + ": " + v);
    }
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const unsigned long long u = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return u;
    } catch (const std::exception&) {
        throw DataError("config: invalid integer for " + key + ": " + v);
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw DataError("config: invalid boolean for " + key + ": " + v);
}

// Serialize a double so it round-trips exactly.
std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

void apply_key(ModelConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "profile") {
        // profile is applied before overrides by the caller
    } else if (key == "modalities") {
        cfg.modalities = split_csv(value);
    } else if (key == "d_tc") {
        cfg.d_tc = parse_uint(key, value);
    } else if (key == "intra_depth") {
        cfg.intra_depth = parse_uint(key, value);
    } else if (key == "inter_depth") {
        cfg.inter_depth = parse_uint(key, value);
    } else if (key == "heads") {
        cfg.heads = parse_uint(key, value);
    } else if (key == "intra_heads") {
        cfg.intra_heads = parse_uint(key, value);
    } else if (key == "attn_dropout") {
        cfg.attn_dropout = parse_double(key, value);
    } else if (key == "output_dropout") {
        cfg.output_dropout = parse_double(key, value);
    } else if (key == "max_tokens_per_domain") {
        cfg.max_tokens_per_domain = parse_uint(key, value);
    } else if (key == "scalar_kernel") {
        cfg.scalar_kernel = parse_uint(key, value);
    } else if (key == "spectral_kernel") {
        cfg.spectral_kernel = parse_uint(key, value);
    } else if (key == "batch_size") {
        cfg.batch_size = parse_uint(key, value);
    } else if (key == "learning_rate") {
        cfg.learning_rate = parse_double(key, value);
    } else if (key == "momentum") {
        cfg.momentum = parse_double(key, value);
    } else if (key == "weight_decay") {
        cfg.weight_decay = parse_double(key, value);
    } else if (key == "epochs") {
        cfg.epochs = parse_uint(key, value);
    } else if (key == "seed") {
        cfg.seed = parse_uint(key, value);
    } else if (key == "ablation") {
        cfg.ablation = ablation_from_name(value);
    } else if (key == "smote") {
        cfg.smote_enabled = parse_bool(key, value);
    } else if (key == "smote_k") {
        cfg.smote_k = parse_uint(key, value);
    } else if (key == "mcs_mode") {
        cfg.mcs_mode = mcs_mode_from_name(value);
    } else if (key == "threshold") {
        cfg.threshold = parse_double(key, value);
    } else if (key == "sample_rate") {
        cfg.features.sample_rate = parse_double(key, value);
    } else if (key == "frame_length") {
        cfg.features.frames.frame_length = parse_uint(key, value);
    } else if (key == "hop_length") {
        cfg.features.frames.hop_length = parse_uint(key, value);
    } else if (key == "window") {
        if (value == "hann")
            cfg.features.frames.window = FrameSpec::Window::Hann;
        else if (value == "rect")
            cfg.features.frames.window = FrameSpec::Window::Rect;
        else
            throw DataError("config: window must be hann or rect, got: " + value);
    } else if (key == "n_mels") {
        cfg.features.n_mels = parse_uint(key, value);
    } else if (key == "n_mfcc") {
        cfg.features.n_mfcc = parse_uint(key, value);
    } else if (key == "gfcc_filters") {
        cfg.features.gfcc_filters = parse_uint(key, value);
    } else if (key == "gfcc_coeffs") {
        cfg.features.gfcc_coeffs = parse_uint(key, value);
    } else if (key == "gfcc_fmin") {
        cfg.features.gfcc_fmin = parse_double(key, value);
    } else if (key == "cqcc_bins_per_octave") {
        cfg.features.cqcc_bins_per_octave = parse_uint(key, value);
    } else if (key == "cqcc_coeffs") {
        cfg.features.cqcc_coeffs = parse_uint(key, value);
    } else if (key == "cqcc_fmin") {
        cfg.features.cqcc_fmin = parse_double(key, value);
    } else if (key == "log_eps") {
        cfg.features.log_eps = parse_double(key, value);
    } else if (key == "trim_threshold_db") {
        cfg.features.trim_threshold_db = parse_double(key, value);
    } else if (key == "default_clip_seconds") {
        cfg.clips.default_seconds = parse_double(key, value);
    } else if (key.rfind("clip_seconds.", 0) == 0) {
        const std::string modality = key.substr(std::string("clip_seconds.").size());
        const double sec = parse_double(key, value);
        for (auto& [name, s] : cfg.clips.seconds)
            if (name == modality) {
                s = sec;
                return;
            }
        cfg.clips.seconds.emplace_back(modality, sec);
    } else {
        throw DataError("config: unknown key: " + key);
    }
}

std::map<std::string, std::string, std::less<>> parse_kv(std::istream& is) {
    std::map<std::string, std::string, std::less<>> kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw DataError("config: expected key = value at line " +
                            std::to_string(line_no) + ": " + line);
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

ModelConfig from_kv(const std::map<std::string, std::string, std::less<>>& kv) {
    ModelConfig cfg;
    auto it = kv.find("profile");
    if (it != kv.end()) cfg = ModelConfig::profile_defaults(it->second);
    for (const auto& [key, value] : kv) apply_key(cfg, key, value);
    cfg.validate();
    return cfg;
}

}  // namespace

ModelConfig ModelConfig::load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw DataError("config: cannot open " + path.string());
    return from_kv(parse_kv(is));
}

std::string ModelConfig::serialize() const {
    std::ostringstream os;
    os << "profile = " << profile << "\n";
    if (!modalities.empty()) {
        os << "modalities = ";
        for (std::size_t i = 0; i < modalities.size(); ++i)
            os << (i ? "," : "") << modalities[i];
        os << "\n";
    }
    os << "d_tc = " << d_tc << "\n";
    os << "intra_depth = " << intra_depth << "\n";
    os << "inter_depth = " << inter_depth << "\n";
    os << "heads = " << heads << "\n";
    os << "intra_heads = " << intra_heads << "\n";
    os << "attn_dropout = " << fmt_double(attn_dropout) << "\n";
    os << "output_dropout = " << fmt_double(output_dropout) << "\n";
    os << "max_tokens_per_domain = " << max_tokens_per_domain << "\n";
    os << "scalar_kernel = " << scalar_kernel << "\n";
    os << "spectral_kernel = " << spectral_kernel << "\n";
    os << "batch_size = " << batch_size << "\n";
    os << "learning_rate = " << fmt_double(learning_rate) << "\n";
    os << "momentum = " << fmt_double(momentum) << "\n";
    os << "weight_decay = " << fmt_double(weight_decay) << "\n";
    os << "epochs = " << epochs << "\n";
    os << "seed = " << seed << "\n";
    os << "ablation = " << ablation_name(ablation) << "\n";
    os << "smote = " << (smote_enabled ? "true" : "false") << "\n";
    os << "smote_k = " << smote_k << "\n";
    os << "mcs_mode = " << mcs_mode_name(mcs_mode) << "\n";
    os << "threshold = " << fmt_double(threshold) << "\n";
    os << "sample_rate = " << fmt_double(features.sample_rate) << "\n";
    os << "frame_length = " << features.frames.frame_length << "\n";
    os << "hop_length = " << features.frames.hop_length << "\n";
    os << "window = "
       << (features.frames.window == FrameSpec::Window::Hann ? "hann" : "rect") << "\n";
    os << "n_mels = " << features.n_mels << "\n";
    os << "n_mfcc = " << features.n_mfcc << "\n";
    os << "gfcc_filters = " << features.gfcc_filters << "\n";
    os << "gfcc_coeffs = " << features.gfcc_coeffs << "\n";
    os << "gfcc_fmin = " << fmt_double(features.gfcc_fmin) << "\n";
    os << "cqcc_bins_per_octave = " << features.cqcc_bins_per_octave << "\n";
    os << "cqcc_coeffs = " << features.cqcc_coeffs << "\n";
    os << "cqcc_fmin = " << fmt_double(features.cqcc_fmin) << "\n";
    os << "log_eps = " << fmt_double(features.log_eps) << "\n";
    os << "trim_threshold_db = " << fmt_double(features.trim_threshold_db) << "\n";
    os << "default_clip_seconds = " << fmt_double(clips.default_seconds) << "\n";
    auto sorted_clips = clips.seconds;
    std::sort(sorted_clips.begin(), sorted_clips.end());
    for (const auto& [name, sec] : sorted_clips)
        os << "clip_seconds." << name << " = " << fmt_double(sec) << "\n";
    return os.str();
}

ModelConfig ModelConfig::deserialize(const std::string& text) {
    std::istringstream is(text);
    auto kv = parse_kv(is);
    // deserialize must not re-apply profile defaults on top of stored keys
    ModelConfig cfg;
    auto it = kv.find("profile");
    if (it != kv.end()) {
        cfg.profile = it->second;
        cfg.clips.seconds.clear();
    }
    for (const auto& [key, value] : kv)
        if (key != "profile") apply_key(cfg, key, value);
    cfg.validate();
    return cfg;
}

namespace {

std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 14695981039346656037ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

std::uint64_t ModelConfig::hash() const { return fnv1a(serialize()); }

std::uint64_t ModelConfig::extraction_hash() const {
    std::ostringstream os;
    os.precision(17);
    os << features.hash() << "|" << clips.default_seconds;
    auto sorted_clips = clips.seconds;
    std::sort(sorted_clips.begin(), sorted_clips.end());
    for (const auto& [name, sec] : sorted_clips) os << "|" << name << "=" << sec;
    return fnv1a(os.str());
}

}  // namespace audformer
