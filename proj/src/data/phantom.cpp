#include "noddet/data/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "noddet/errors.hpp"
#include "noddet/rng.hpp"

namespace noddet::data {

namespace {

constexpr double kLungHu = -800.0;
constexpr double kNoiseSigma = 25.0;

double clamp_hu(double v) { return std::clamp(v, -1024.0, 3071.0); }

struct Nodule {
    double cx, cy;
    int cz;
    double rx, ry, rz;  // rz in slice units
    double hu;
};

struct Tube {
    double x0, y0, z0;
    double dx, dy, dz;  // unit direction, |dz| bounded away from 0
    double radius;
    double hu;
};

void render_disk(nn::Tensor& slice, double cx, double cy, double rx, double ry, double hu,
                 bool soft_profile) {
    const int H = slice.dim(0), W = slice.dim(1);
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - ry - 1)));
    const int y1 = std::min(H - 1, static_cast<int>(std::ceil(cy + ry + 1)));
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - rx - 1)));
    const int x1 = std::min(W - 1, static_cast<int>(std::ceil(cx + rx + 1)));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double ux = (x + 0.5 - cx) / rx;
            const double uy = (y + 0.5 - cy) / ry;
            const double d2 = ux * ux + uy * uy;
            if (d2 > 1.0) continue;
            const double v = soft_profile ? hu * (0.7 + 0.3 * (1.0 - d2)) : hu;
            slice.at(y, x) = clamp_hu(std::max(slice.at(y, x), v));
        }
}

}  // namespace

std::vector<std::pair<Volume, std::vector<AnnotationRecord>>> generate_phantoms(
    const PhantomConfig& cfg) {
    cfg.validate();
    Rng root(cfg.seed);
    std::vector<std::pair<Volume, std::vector<AnnotationRecord>>> out;
    out.reserve(static_cast<std::size_t>(cfg.n_volumes));

    const int S = cfg.image_size;
    for (int v = 0; v < cfg.n_volumes; ++v) {
        Rng rng = root.child(static_cast<std::uint64_t>(v));
        Volume vol;
        {
            std::ostringstream name;
            name << "vol" << std::setw(4) << std::setfill('0') << v;
            vol.study_id = name.str();
        }

        // lung-like background with low-frequency shading and Gaussian noise
        const double phase_y = rng.uniform(0.0, 6.28318);
        const double phase_x = rng.uniform(0.0, 6.28318);
        vol.slices.reserve(static_cast<std::size_t>(cfg.n_slices));
        for (int z = 0; z < cfg.n_slices; ++z) {
            nn::Tensor slice({S, S});
            for (int y = 0; y < S; ++y)
                for (int x = 0; x < S; ++x) {
                    const double shade =
                        30.0 * std::sin(2.0 * 3.14159265 * y / S + phase_y) *
                        std::cos(2.0 * 3.14159265 * x / S + phase_x);
                    slice.at(y, x) = clamp_hu(kLungHu + shade + kNoiseSigma * rng.normal());
                }
            vol.slices.push_back(std::move(slice));
        }

        // vessel-like tubes, drawn before nodules
        const int n_tubes =
            static_cast<int>(std::lround(cfg.distractor_density * cfg.n_slices));
        std::vector<Tube> tubes;
        for (int t = 0; t < n_tubes; ++t) {
            Tube tube;
            tube.x0 = rng.uniform(0.1 * S, 0.9 * S);
            tube.y0 = rng.uniform(0.1 * S, 0.9 * S);
            tube.z0 = rng.uniform(0.0, cfg.n_slices - 1.0);
            double dx, dy, dz;
            do {
                dx = rng.normal();
                dy = rng.normal();
                dz = rng.normal();
            } while (std::abs(dz) < 0.2 * std::sqrt(dx * dx + dy * dy + dz * dz));
            const double norm = std::sqrt(dx * dx + dy * dy + dz * dz);
            tube.dx = dx / norm;
            tube.dy = dy / norm;
            tube.dz = dz / norm;
            tube.radius = rng.uniform(1.5, 3.5);
            tube.hu = rng.uniform(-50.0, 50.0);
            tubes.push_back(tube);
        }
        for (const Tube& tube : tubes)
            for (int z = 0; z < cfg.n_slices; ++z) {
                const double t = (z - tube.z0) / tube.dz;
                const double px = tube.x0 + t * tube.dx;
                const double py = tube.y0 + t * tube.dy;
                if (px < -4 || px > S + 4 || py < -4 || py > S + 4) continue;
                // the in-plane cross-section of an oblique cylinder widens by 1/|dz|
                const double widen = std::min(3.0, 1.0 / std::abs(tube.dz));
                render_disk(vol.slices[static_cast<std::size_t>(z)], px, py,
                            tube.radius * widen, tube.radius, tube.hu, false);
            }

        // annotated nodules
        const int span = cfg.nodules_per_volume[1] - cfg.nodules_per_volume[0];
        const int n_nodules =
            cfg.nodules_per_volume[0] + (span > 0 ? rng.uniform_int(span + 1) : 0);
        std::vector<Nodule> nodules;
        for (int ni = 0; ni < n_nodules; ++ni) {
            bool placed = false;
            for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
                Nodule nd;
                nd.rx = rng.uniform(cfg.nodule_radius_px[0], cfg.nodule_radius_px[1]);
                nd.ry = rng.uniform(cfg.nodule_radius_px[0], cfg.nodule_radius_px[1]);
                nd.rz = rng.uniform(1.0, 2.5);
                const double margin = std::max(nd.rx, nd.ry) + 4.0;
                nd.cx = rng.uniform(margin, S - margin);
                nd.cy = rng.uniform(margin, S - margin);
                nd.cz = rng.uniform_int(cfg.n_slices);
                nd.hu = rng.uniform(30.0, 80.0);
                bool clash = false;
                for (const Nodule& other : nodules) {
                    const double dist = std::hypot(nd.cx - other.cx, nd.cy - other.cy);
                    if (dist < std::max(nd.rx, nd.ry) + std::max(other.rx, other.ry) + 8.0)
                        clash = true;
                }
                if (!clash) {
                    nodules.push_back(nd);
                    placed = true;
                }
            }
            if (!placed)
                throw GenerationFailure("generate_phantoms: could not place nodule " +
                                        std::to_string(ni) + " in volume " + vol.study_id);
        }

        std::vector<AnnotationRecord> records;
        for (const Nodule& nd : nodules) {
            for (int z = 0; z < cfg.n_slices; ++z) {
                const double u = (z - nd.cz) / nd.rz;
                if (std::abs(u) >= 1.0) continue;
                const double f = std::sqrt(1.0 - u * u);
                render_disk(vol.slices[static_cast<std::size_t>(z)], nd.cx, nd.cy, nd.rx * f,
                            nd.ry * f, nd.hu, true);
            }
            AnnotationRecord rec;
            rec.study_id = vol.study_id;
            rec.key_slice_id = nd.cz;  // maximal cross-section by construction
            rec.box = Box{nd.cx - nd.rx, nd.cy - nd.ry, nd.cx + nd.rx, nd.cy + nd.ry};
            rec.lesion_type = LesionType::nodule;
            records.push_back(rec);
        }

        out.emplace_back(std::move(vol), std::move(records));
    }
    return out;
}

void save_volume(const std::string& path, const Volume& vol) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("save_volume: cannot write " + path);
    const int n = static_cast<int>(vol.slices.size());
    if (n == 0) throw std::invalid_argument("save_volume: empty volume");
    const int H = vol.slices[0].dim(0), W = vol.slices[0].dim(1);
    os << W << ' ' << H << ' ' << n << '\n';
    std::vector<unsigned char> buf;
    buf.reserve(static_cast<std::size_t>(H) * W * 2);
    for (const nn::Tensor& slice : vol.slices) {
        buf.clear();
        for (double v : slice.v) {
            const auto h = static_cast<std::int16_t>(std::lround(std::clamp(v, -1024.0, 3071.0)));
            const auto u = static_cast<std::uint16_t>(h);
            buf.push_back(static_cast<unsigned char>(u & 0xff));
            buf.push_back(static_cast<unsigned char>(u >> 8));
        }
        os.write(reinterpret_cast<const char*>(buf.data()),
                 static_cast<std::streamsize>(buf.size()));
    }
    if (!os) throw IoError("save_volume: write failed for " + path);
}

Volume load_volume(const std::string& path, const std::string& study_id) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IngestError("load_volume: cannot open " + path);
    std::string header;
    std::getline(is, header);
    std::istringstream hs(header);
    int W = 0, H = 0, n = 0;
    if (!(hs >> W >> H >> n) || W <= 0 || H <= 0 || n <= 0)
        throw IngestError("load_volume: bad header in " + path);
    Volume vol;
    vol.study_id = study_id;
    vol.slices.reserve(static_cast<std::size_t>(n));
    std::vector<unsigned char> buf(static_cast<std::size_t>(H) * W * 2);
    for (int z = 0; z < n; ++z) {
        is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (!is) throw IngestError("load_volume: truncated raster in " + path);
        nn::Tensor slice({H, W});
        for (std::int64_t i = 0; i < slice.numel(); ++i) {
            const auto u = static_cast<std::uint16_t>(buf[static_cast<std::size_t>(2 * i)] |
                                                      (buf[static_cast<std::size_t>(2 * i + 1)]
                                                       << 8));
            slice.at(i) = static_cast<double>(static_cast<std::int16_t>(u));
        }
        vol.slices.push_back(std::move(slice));
    }
    return vol;
}

}  // namespace noddet::data
