#include "noddet/data/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "noddet/errors.hpp"

namespace fs = std::filesystem;

namespace noddet::data {

DatasetSummary write_phantom_dataset(const std::string& out_dir, const PhantomConfig& cfg,
                                     bool force) {
    const fs::path dir(out_dir);
    if (fs::exists(dir) && !fs::is_empty(dir) && !force)
        throw IoError("dataset directory " + out_dir + " is not empty (use --force to overwrite)");
    fs::create_directories(dir / "volumes");

    auto generated = generate_phantoms(cfg);
    std::vector<AnnotationRecord> all_records;
    int key_slices = 0;
    for (const auto& [vol, records] : generated) {
        save_volume((dir / "volumes" / (vol.study_id + ".hu16")).string(), vol);
        std::vector<int> keys;
        for (const AnnotationRecord& r : records) keys.push_back(r.key_slice_id);
        std::sort(keys.begin(), keys.end());
        key_slices += static_cast<int>(std::unique(keys.begin(), keys.end()) - keys.begin());
        all_records.insert(all_records.end(), records.begin(), records.end());
    }
    save_annotations((dir / "annotations.csv").string(), all_records);

    DatasetSummary summary;
    summary.n_volumes = cfg.n_volumes;
    summary.n_annotations = static_cast<int>(all_records.size());
    summary.n_key_slices = key_slices;
    summary.image_size = cfg.image_size;

    nlohmann::json meta = {{"kind", "phantom"},
                           {"image_size", cfg.image_size},
                           {"n_slices", cfg.n_slices},
                           {"n_volumes", cfg.n_volumes},
                           {"n_annotations", summary.n_annotations},
                           {"n_key_slices", summary.n_key_slices},
                           {"seed", cfg.seed}};
    std::ofstream meta_out(dir / "dataset.json");
    meta_out << meta.dump(2) << '\n';
    if (!meta_out) throw IoError("write_phantom_dataset: cannot write dataset.json");
    return summary;
}

namespace {

std::vector<RawSlice> as_raw_slices(const Volume& vol) {
    std::vector<RawSlice> out;
    out.reserve(vol.slices.size());
    for (std::size_t z = 0; z < vol.slices.size(); ++z) {
        RawSlice s;
        s.pixels = vol.slices[z];
        s.spacing_mm = vol.spacing_mm;
        s.slice_index = static_cast<int>(z);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<nn::Tensor> normalize_volume(const Volume& vol, double p99) {
    std::vector<nn::Tensor> out;
    out.reserve(vol.slices.size());
    for (std::size_t z = 0; z < vol.slices.size(); ++z) {
        RawSlice s;
        s.pixels = vol.slices[z];
        s.slice_index = static_cast<int>(z);
        out.push_back(normalize_hu(s, p99));
    }
    return out;
}

}  // namespace

LoadedDataset load_dataset(const std::string& dir, int input_size) {
    const fs::path root(dir);
    if (!fs::exists(root / "annotations.csv"))
        throw IngestError("load_dataset: missing annotations.csv under " + dir);

    AnnotationLoadResult ann = load_annotations((root / "annotations.csv").string());
    if (!ann.row_errors.empty()) {
        std::ostringstream msg;
        msg << "load_dataset: " << ann.row_errors.size() << " malformed annotation row(s):";
        for (const RowError& e : ann.row_errors)
            msg << " line " << e.line << " (" << e.message << ");";
        throw IngestError(msg.str());
    }

    std::vector<Volume> volumes;
    std::vector<std::string> volume_files;
    for (const auto& entry : fs::directory_iterator(root / "volumes"))
        if (entry.path().extension() == ".hu16") volume_files.push_back(entry.path().string());
    std::sort(volume_files.begin(), volume_files.end());
    for (const std::string& path : volume_files)
        volumes.push_back(load_volume(path, fs::path(path).stem().string()));
    if (volumes.empty() && !ann.records.empty())
        throw IngestError("load_dataset: annotations present but no volumes under " + dir);

    LoadedDataset out;
    out.input_size = input_size;
    out.native_size = volumes.empty() ? input_size : volumes[0].slices[0].dim(0);

    // dataset-wide normalization constant
    std::vector<RawSlice> all_slices;
    for (const Volume& vol : volumes) {
        auto raws = as_raw_slices(vol);
        all_slices.insert(all_slices.end(), raws.begin(), raws.end());
    }
    out.p99 = all_slices.empty() ? 1.0 : dataset_percentile_99(all_slices);

    std::map<std::string, const Volume*> by_study;
    for (const Volume& vol : volumes) by_study[vol.study_id] = &vol;

    // group annotations by (study, key slice)
    std::map<std::pair<std::string, int>, std::vector<Box>> grouped;
    for (const AnnotationRecord& rec : ann.records) {
        const Volume* vol = by_study.count(rec.study_id) ? by_study[rec.study_id] : nullptr;
        if (!vol)
            throw IngestError("load_dataset: annotation references unknown study " + rec.study_id);
        if (rec.key_slice_id >= static_cast<int>(vol->slices.size()))
            throw IngestError("load_dataset: key slice " + std::to_string(rec.key_slice_id) +
                              " outside volume " + rec.study_id);
        grouped[{rec.study_id, rec.key_slice_id}].push_back(rec.box);
    }

    std::map<std::string, std::vector<nn::Tensor>> normalized;
    for (const auto& [key, boxes] : grouped) {
        const auto& [study, slice_idx] = key;
        if (!normalized.count(study)) normalized[study] = normalize_volume(*by_study[study], out.p99);
        Sample sample;
        sample.study_id = study;
        sample.key_slice = slice_idx;
        sample.scan_id = study + "_s" + std::to_string(slice_idx);
        SliceStack stack = make_slice_stack(normalized[study], slice_idx, boxes);
        stack.key_slice_id = sample.scan_id;
        sample.stack = resize_with_boxes(stack, input_size);
        out.samples.push_back(std::move(sample));
    }
    return out;
}

std::vector<Sample> stacks_from_volume(const std::string& volume_path,
                                       const std::string& study_id, int input_size) {
    const Volume vol = load_volume(volume_path, study_id);
    const auto raws = as_raw_slices(vol);
    const double p99 = dataset_percentile_99(raws);
    const auto normalized = normalize_volume(vol, p99);
    std::vector<Sample> out;
    for (int z = 0; z < static_cast<int>(normalized.size()); ++z) {
        Sample sample;
        sample.study_id = study_id;
        sample.key_slice = z;
        sample.scan_id = study_id + "_s" + std::to_string(z);
        SliceStack stack = make_slice_stack(normalized, z, {});
        stack.key_slice_id = sample.scan_id;
        sample.stack = resize_with_boxes(stack, input_size);
        out.push_back(std::move(sample));
    }
    return out;
}

}  // namespace noddet::data
