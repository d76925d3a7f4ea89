#include "noddet/data/annotations.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "noddet/errors.hpp"

namespace noddet::data {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

bool parse_double(const std::string& s, double& out) {
    try {
        std::size_t pos = 0;
        out = std::stod(s, &pos);
        return pos == s.size();
    } catch (const std::exception&) {
        return false;
    }
}

bool parse_int(const std::string& s, int& out) {
    try {
        std::size_t pos = 0;
        out = std::stoi(s, &pos);
        return pos == s.size();
    } catch (const std::exception&) {
        return false;
    }
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

}  // namespace

AnnotationLoadResult load_annotations(const std::string& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw IngestError("load_annotations: cannot open " + csv_path);
    std::string line;
    if (!std::getline(in, line)) throw IngestError("load_annotations: empty file " + csv_path);
    if (strip_cr(line) != kAnnotationCsvHeader)
        throw IngestError("load_annotations: header mismatch in " + csv_path + " (expected '" +
                          kAnnotationCsvHeader + "')");

    AnnotationLoadResult result;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const std::vector<std::string> f = split_csv_line(line);
        auto reject = [&](const std::string& why) {
            result.row_errors.push_back(RowError{line_no, why});
        };
        if (f.size() != 7) {
            reject("expected 7 fields, got " + std::to_string(f.size()));
            continue;
        }
        AnnotationRecord rec;
        rec.study_id = f[0];
        if (rec.study_id.empty()) {
            reject("empty study_id");
            continue;
        }
        if (!parse_int(f[1], rec.key_slice_id) || rec.key_slice_id < 0) {
            reject("bad key_slice_id '" + f[1] + "'");
            continue;
        }
        double coords[4];
        bool ok = true;
        for (int i = 0; i < 4; ++i)
            if (!parse_double(f[static_cast<std::size_t>(2 + i)], coords[i])) {
                reject("bad coordinate '" + f[static_cast<std::size_t>(2 + i)] + "'");
                ok = false;
                break;
            }
        if (!ok) continue;
        rec.box = Box{coords[0], coords[1], coords[2], coords[3]};
        if (!rec.box.valid()) {
            reject("degenerate box (requires x1 < x2 and y1 < y2)");
            continue;
        }
        if (f[6] != "nodule") {
            reject("unsupported lesion_type '" + f[6] + "'");
            continue;
        }
        rec.lesion_type = LesionType::nodule;
        result.records.push_back(std::move(rec));
    }
    return result;
}

void save_annotations(const std::string& csv_path,
                      const std::vector<AnnotationRecord>& records) {
    std::ofstream out(csv_path, std::ios::trunc);
    if (!out) throw IoError("save_annotations: cannot write " + csv_path);
    out << kAnnotationCsvHeader << '\n';
    char buf[256];
    for (const AnnotationRecord& rec : records) {
        std::snprintf(buf, sizeof(buf), "%s,%d,%.4f,%.4f,%.4f,%.4f,%s", rec.study_id.c_str(),
                      rec.key_slice_id, rec.box.x1, rec.box.y1, rec.box.x2, rec.box.y2,
                      to_string(rec.lesion_type));
        out << buf << '\n';
    }
    if (!out) throw IoError("save_annotations: write failed for " + csv_path);
}

}  // namespace noddet::data
