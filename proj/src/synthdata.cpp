#include "pointdc/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace pointdc {

double luminance(double r, double g, double b) {
    return 0.299 * r + 0.587 * g + 0.114 * b;
}

void SceneSpec::validate() const {
    if (height <= 0 || width <= 0) throw ConfigError("scene size must be positive");
    if (classes < 1) throw ConfigError("scene needs at least one class");
    if (radius_min <= 0.0 || radius_max < radius_min)
        throw ConfigError("scene radii must satisfy 0 < radius_min <= radius_max");
    if (min_separation < 2.0 * radius_min)
        throw ConfigError("min_separation must be >= 2*radius_min");
    if (!class_prior.empty()) {
        if (static_cast<int>(class_prior.size()) != classes)
            throw ConfigError("class_prior length must equal class count");
        double s = 0.0;
        for (double p : class_prior) {
            if (p < 0.0) throw ConfigError("class_prior entries must be >= 0");
            s += p;
        }
        if (std::fabs(s - 1.0) > 1e-9) throw ConfigError("class_prior must sum to 1");
    }
    if (mean_count < 0.0) throw ConfigError("mean_count must be >= 0");
    if (noise < 0.0 || cue < 0.0) throw ConfigError("noise and cue must be >= 0");
}

SceneSpec derive_style(SceneSpec spec) {
    if (spec.style != 0) {
        Rng rng(mix_seed(0x5713a11eULL, static_cast<std::uint64_t>(spec.style)));
        spec.bg_r = rng.uniform(0.74, 0.88);
        spec.bg_g = rng.uniform(0.68, 0.82);
        spec.bg_b = rng.uniform(0.72, 0.86);
    }
    return spec;
}

void class_chroma(const SceneSpec& spec, int cls, double& dr, double& dg, double& db) {
    const double angle = 2.0 * M_PI * static_cast<double>(cls - 1) / spec.classes;
    dr = spec.cue * std::cos(angle);
    db = spec.cue * std::sin(angle);
    dg = -(0.299 * dr + 0.114 * db) / 0.587;  // keeps luminance unchanged
}

std::vector<NucleusInstance> sample_scene(const SceneSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    const int count = rng.poisson(spec.mean_count);

    std::vector<NucleusInstance> scene;
    scene.reserve(static_cast<std::size_t>(count));
    const double margin = spec.radius_max + 1.0;
    if (count > 0 && (spec.width <= 2.0 * margin || spec.height <= 2.0 * margin))
        throw DataError("image too small for the configured nucleus radius");

    const int max_tries = 1000;
    for (int n = 0; n < count; ++n) {
        bool placed = false;
        for (int t = 0; t < max_tries && !placed; ++t) {
            Point c{rng.uniform(margin, spec.width - margin),
                    rng.uniform(margin, spec.height - margin)};
            bool ok = true;
            for (const auto& other : scene) {
                if (point_dist(c, other.center) < spec.min_separation) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            NucleusInstance inst;
            inst.center = c;
            inst.radius = rng.uniform(spec.radius_min, spec.radius_max);
            inst.cls = spec.class_prior.empty()
                           ? rng.uniform_int(1, spec.classes)
                           : rng.categorical(spec.class_prior) + 1;
            inst.rx = inst.radius * rng.uniform(0.85, 1.15);
            inst.ry = inst.radius * rng.uniform(0.85, 1.15);
            inst.rot = rng.uniform(0.0, M_PI);
            inst.jit_r = rng.normal(0.0, 0.01);
            inst.jit_g = rng.normal(0.0, 0.01);
            inst.jit_b = rng.normal(0.0, 0.01);
            scene.push_back(inst);
            placed = true;
        }
        if (!placed)
            throw DataError("unsatisfiable density: placed " + std::to_string(scene.size()) +
                            " of " + std::to_string(count) + " nuclei");
    }
    return scene;
}

namespace {

// Nucleus body color: background luminance pulled down by the contrast margin
// plus headroom, then shifted in chroma by class and instance jitter.
void nucleus_color(const SceneSpec& spec, const NucleusInstance& inst,
                   double& r, double& g, double& b) {
    const double bg_lum = luminance(spec.bg_r, spec.bg_g, spec.bg_b);
    const double target_lum = std::max(0.05, bg_lum - (spec.contrast + 0.25));
    const double scale = target_lum / std::max(bg_lum, 1e-6);
    r = spec.bg_r * scale * 0.9 + 0.02;
    g = spec.bg_g * scale * 0.8;
    b = spec.bg_b * scale * 1.1 + 0.04;
    double dr, dg, db;
    class_chroma(spec, inst.cls, dr, dg, db);
    r += dr + inst.jit_r;
    g += dg + inst.jit_g;
    b += db + inst.jit_b;
}

}  // namespace

Tensor render(const std::vector<NucleusInstance>& scene, const SceneSpec& spec,
              std::uint64_t seed) {
    spec.validate();
    const int h = spec.height, w = spec.width;
    Tensor img({3, h, w});
    double* R = img.data();
    double* G = R + static_cast<std::size_t>(h) * w;
    double* B = G + static_cast<std::size_t>(h) * w;
    for (int i = 0; i < h * w; ++i) {
        R[i] = spec.bg_r;
        G[i] = spec.bg_g;
        B[i] = spec.bg_b;
    }

    for (const auto& inst : scene) {
        double cr, cg, cb;
        nucleus_color(spec, inst, cr, cg, cb);
        const double rmax = std::max(inst.rx, inst.ry) + 1.5;
        const int i0 = std::max(0, static_cast<int>(std::floor(inst.center.y - rmax)));
        const int i1 = std::min(h - 1, static_cast<int>(std::ceil(inst.center.y + rmax)));
        const int j0 = std::max(0, static_cast<int>(std::floor(inst.center.x - rmax)));
        const int j1 = std::min(w - 1, static_cast<int>(std::ceil(inst.center.x + rmax)));
        const double cs = std::cos(inst.rot), sn = std::sin(inst.rot);
        for (int i = i0; i <= i1; ++i) {
            for (int j = j0; j <= j1; ++j) {
                const double px = (j + 0.5) - inst.center.x;
                const double py = (i + 0.5) - inst.center.y;
                const double lx = (cs * px + sn * py) / inst.rx;
                const double ly = (-sn * px + cs * py) / inst.ry;
                const double q = std::sqrt(lx * lx + ly * ly);
                // 1px anti-aliased edge
                const double sd = (q - 1.0) * std::min(inst.rx, inst.ry);
                const double alpha = std::clamp(0.5 - sd, 0.0, 1.0);
                if (alpha <= 0.0) continue;
                // mild center-darkening shared by all classes
                const double shade = 1.0 - 0.12 * (1.0 - std::min(q, 1.0));
                const int idx = i * w + j;
                R[idx] = (1.0 - alpha) * R[idx] + alpha * cr * shade;
                G[idx] = (1.0 - alpha) * G[idx] + alpha * cg * shade;
                B[idx] = (1.0 - alpha) * B[idx] + alpha * cb * shade;
            }
        }
    }

    if (spec.noise > 0.0) {
        Rng rng(seed);
        for (double& v : img.values()) v += rng.normal(0.0, spec.noise);
    }
    for (double& v : img.values()) v = std::clamp(v, 0.0, 1.0);
    return img;
}

// ---------------------------------------------------------------------------
// I/O
// ---------------------------------------------------------------------------

void write_ppm(const std::string& path, const Tensor& image) {
    if (image.ndim() != 3 || image.dim(0) != 3)
        throw ShapeError("write_ppm expects [3,H,W], got " + image.shape_str());
    const int h = image.dim(1), w = image.dim(2);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write image: " + path);
    out << "P6\n" << w << " " << h << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(w) * 3);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            for (int c = 0; c < 3; ++c) {
                const double v = std::clamp(image.at(c, i, j), 0.0, 1.0);
                row[static_cast<std::size_t>(j) * 3 + c] =
                    static_cast<unsigned char>(std::lround(v * 255.0));
            }
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw IoError("short write: " + path);
}

Tensor read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read image: " + path);
    std::string magic;
    in >> magic;
    if (magic != "P6") throw DataError("unsupported image format in " + path);
    int w = 0, h = 0, maxv = 0;
    in >> w >> h >> maxv;
    if (w <= 0 || h <= 0 || maxv != 255) throw DataError("bad PPM header in " + path);
    in.get();  // single whitespace after header
    Tensor img({3, h, w});
    std::vector<unsigned char> row(static_cast<std::size_t>(w) * 3);
    for (int i = 0; i < h; ++i) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
        if (!in) throw DataError("truncated image data in " + path);
        for (int j = 0; j < w; ++j)
            for (int c = 0; c < 3; ++c)
                img.at(c, i, j) = row[static_cast<std::size_t>(j) * 3 + c] / 255.0;
    }
    return img;
}

void write_annotations(const std::string& path, const std::vector<PointAnnotation>& anns) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write annotations: " + path);
    out << "x,y,class\n";
    char buf[80];
    for (const auto& a : anns) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%d\n", a.p.x, a.p.y, a.cls);
        out << buf;
    }
}

std::vector<PointAnnotation> read_annotations(const std::string& path, int class_count) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read annotations: " + path);
    std::vector<PointAnnotation> anns;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != "x,y,class")
                throw DataError(path + ":1: expected header 'x,y,class'");
            continue;
        }
        PointAnnotation a;
        char extra = 0;
        const int got = std::sscanf(line.c_str(), "%lf,%lf,%d%c", &a.p.x, &a.p.y, &a.cls, &extra);
        if (got != 3 || !std::isfinite(a.p.x) || !std::isfinite(a.p.y))
            throw DataError(path + ":" + std::to_string(line_no) + ": malformed annotation row '" + line + "'");
        if (a.cls < 1 || a.cls > class_count)
            throw DataError(path + ":" + std::to_string(line_no) + ": class " +
                            std::to_string(a.cls) + " outside [1," + std::to_string(class_count) + "]");
        anns.push_back(a);
    }
    return anns;
}

namespace {

json spec_to_json(const SceneSpec& s) {
    json j;
    j["height"] = s.height;
    j["width"] = s.width;
    j["classes"] = s.classes;
    j["mean_count"] = s.mean_count;
    j["min_separation"] = s.min_separation;
    j["radius_min"] = s.radius_min;
    j["radius_max"] = s.radius_max;
    j["class_prior"] = s.class_prior;
    j["style"] = s.style;
    j["bg_r"] = s.bg_r;
    j["bg_g"] = s.bg_g;
    j["bg_b"] = s.bg_b;
    j["noise"] = s.noise;
    j["cue"] = s.cue;
    j["contrast"] = s.contrast;
    return j;
}

SceneSpec spec_from_json(const json& j) {
    SceneSpec s;
    s.height = j.at("height").get<int>();
    s.width = j.at("width").get<int>();
    s.classes = j.at("classes").get<int>();
    s.mean_count = j.at("mean_count").get<double>();
    s.min_separation = j.at("min_separation").get<double>();
    s.radius_min = j.at("radius_min").get<double>();
    s.radius_max = j.at("radius_max").get<double>();
    s.class_prior = j.at("class_prior").get<std::vector<double>>();
    s.style = j.at("style").get<int>();
    s.bg_r = j.at("bg_r").get<double>();
    s.bg_g = j.at("bg_g").get<double>();
    s.bg_b = j.at("bg_b").get<double>();
    s.noise = j.at("noise").get<double>();
    s.cue = j.at("cue").get<double>();
    s.contrast = j.at("contrast").get<double>();
    return s;
}

}  // namespace

DatasetManifest generate_dataset(const SceneSpec& spec_in, std::uint64_t seed,
                                 int n_train, int n_test, const std::string& dir) {
    const SceneSpec spec = derive_style(spec_in);
    spec.validate();
    if (n_train < 0 || n_test < 0 || n_train + n_test == 0)
        throw ConfigError("dataset needs a positive image count");

    fs::create_directories(fs::path(dir) / "images");
    fs::create_directories(fs::path(dir) / "annotations");

    DatasetManifest man;
    man.spec = spec;
    man.seed = seed;
    man.dir = dir;

    const int total = n_train + n_test;
    char name[64];
    for (int i = 0; i < total; ++i) {
        const std::uint64_t s_i = mix_seed(seed, static_cast<std::uint64_t>(i));
        const auto scene = sample_scene(spec, s_i);
        const Tensor img = render(scene, spec, mix_seed(s_i, 1));

        std::snprintf(name, sizeof(name), "img_%05d", i);
        DatasetEntry e;
        e.image = std::string("images/") + name + ".ppm";
        e.annotation = std::string("annotations/") + name + ".csv";
        e.split = i < n_train ? "train" : "test";
        e.count = static_cast<int>(scene.size());

        write_ppm((fs::path(dir) / e.image).string(), img);
        std::vector<PointAnnotation> anns;
        anns.reserve(scene.size());
        for (const auto& inst : scene) anns.push_back({inst.center, inst.cls});
        write_annotations((fs::path(dir) / e.annotation).string(), anns);

        man.total_nuclei += e.count;
        man.entries.push_back(std::move(e));
    }

    json j;
    j["format"] = "pointdc-dataset";
    j["version"] = 1;
    j["seed"] = seed;
    j["spec"] = spec_to_json(spec);
    j["total_nuclei"] = man.total_nuclei;
    json entries = json::array();
    for (const auto& e : man.entries) {
        entries.push_back({{"image", e.image},
                           {"annotation", e.annotation},
                           {"split", e.split},
                           {"count", e.count}});
    }
    j["entries"] = entries;
    std::ofstream out(fs::path(dir) / "manifest.json");
    if (!out) throw IoError("cannot write manifest in " + dir);
    out << j.dump(2) << "\n";
    return man;
}

DatasetManifest load_manifest(const std::string& dir) {
    const fs::path path = fs::path(dir) / "manifest.json";
    std::ifstream in(path);
    if (!in) throw IoError("missing manifest: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw DataError("malformed manifest " + path.string() + ": " + e.what());
    }
    if (j.value("format", "") != "pointdc-dataset")
        throw DataError("not a dataset manifest: " + path.string());
    DatasetManifest man;
    man.dir = dir;
    man.seed = j.at("seed").get<std::uint64_t>();
    man.spec = spec_from_json(j.at("spec"));
    man.total_nuclei = j.at("total_nuclei").get<int>();
    for (const auto& je : j.at("entries")) {
        DatasetEntry e;
        e.image = je.at("image").get<std::string>();
        e.annotation = je.at("annotation").get<std::string>();
        e.split = je.at("split").get<std::string>();
        e.count = je.at("count").get<int>();
        man.entries.push_back(std::move(e));
    }
    return man;
}

LoadedDataset load_dataset(const std::string& dir) {
    LoadedDataset ds;
    ds.manifest = load_manifest(dir);
    int total = 0;
    for (const auto& e : ds.manifest.entries) {
        LoadedSample s;
        s.image = read_ppm((fs::path(dir) / e.image).string());
        s.annotations = read_annotations((fs::path(dir) / e.annotation).string(),
                                         ds.manifest.spec.classes);
        if (static_cast<int>(s.annotations.size()) != e.count)
            throw DataError(e.annotation + ": annotation count disagrees with manifest");
        for (const auto& a : s.annotations) {
            if (a.p.x < 0.0 || a.p.x > ds.manifest.spec.width ||
                a.p.y < 0.0 || a.p.y > ds.manifest.spec.height)
                throw DataError(e.annotation + ": point outside image bounds");
        }
        s.split = e.split;
        total += e.count;
        ds.samples.push_back(std::move(s));
    }
    if (total != ds.manifest.total_nuclei)
        throw DataError(dir + ": total nucleus count disagrees with manifest");
    return ds;
}

std::vector<int> LoadedDataset::split_indices(const std::string& split) const {
    std::vector<int> idx;
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (samples[i].split == split) idx.push_back(static_cast<int>(i));
    return idx;
}

}  // namespace pointdc
