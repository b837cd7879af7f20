#include "audformer/cache.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "audformer/tensor_io.hpp"

namespace audformer {

using ordered_json = nlohmann::ordered_json;

void write_cache(const std::filesystem::path& dir,
                 const std::vector<Instance>& instances,
                 const std::vector<std::string>& modality_names,
                 std::uint64_t config_hash) {
    std::filesystem::create_directories(dir);
    std::ofstream index(dir / "index.jsonl", std::ios::trunc);
    if (!index) throw DataError("cache: cannot write index in " + dir.string());

    for (const auto& inst : instances) {
        if (inst.features.size() != modality_names.size())
            throw DataError("cache: instance " + inst.subject_id +
                            " modality count does not match the declared list");
        ordered_json j;
        j["subject_id"] = inst.subject_id;
        j["label"] = label_name(inst.label);
        j["config_hash"] = config_hash;
        ordered_json mods;
        for (const auto& [modality, fs] : inst.features) {
            const auto mod_dir = dir / inst.subject_id / modality;
            std::filesystem::create_directories(mod_dir);
            ordered_json shapes;
            for (const auto& fm : fs.domains) {
                write_audt(mod_dir / (std::string(domain_name(fm.domain)) + ".audt"),
                           fm.data);
                shapes[domain_name(fm.domain)] = {fm.frames(), fm.dims()};
            }
            mods[modality] = shapes;
        }
        j["modalities"] = mods;
        index << j.dump() << "\n";
    }
}

CachedDataset read_cache(const std::filesystem::path& dir) {
    std::ifstream index(dir / "index.jsonl");
    if (!index) throw DataError("cache: cannot open index in " + dir.string() +
                                " (run `extract` first)");

    CachedDataset ds;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(index, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const std::exception& e) {
            throw DataError("cache: bad index line " + std::to_string(line_no) + ": " +
                            e.what());
        }

        Instance inst;
        inst.subject_id = j.at("subject_id").get<std::string>();
        inst.label = label_from_name(j.at("label").get<std::string>());
        const std::uint64_t hash = j.at("config_hash").get<std::uint64_t>();
        if (ds.instances.empty())
            ds.config_hash = hash;
        else if (hash != ds.config_hash)
            throw DataError("cache: mixed config hashes in " + dir.string());

        const auto& mods = j.at("modalities");
        for (auto it = mods.begin(); it != mods.end(); ++it) {
            ModalityFeatureSet fs;
            for (std::size_t d = 0; d < kNumDomains; ++d) {
                const FeatureDomain domain = kAllDomains[d];
                const auto path =
                    dir / inst.subject_id / it.key() /
                    (std::string(domain_name(domain)) + ".audt");
                FeatureMatrix fm;
                fm.domain = domain;
                fm.data = read_audt<float>(path);
                fs.domains[d] = std::move(fm);
            }
            inst.features.emplace_back(it.key(), std::move(fs));
        }

        if (ds.instances.empty())
            for (const auto& [name, _] : inst.features)
                ds.modality_names.push_back(name);

        ds.instances.push_back(std::move(inst));
    }

    if (ds.instances.empty()) throw DataError("cache: empty index in " + dir.string());
    return ds;
}

}  // namespace audformer
