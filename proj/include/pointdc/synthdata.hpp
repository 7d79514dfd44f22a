#pragma once
#include <string>
#include <vector>

#include "pointdc/rng.hpp"
#include "pointdc/tensor.hpp"
#include "pointdc/types.hpp"

namespace pointdc {

// Procedural histology-like scenes: high-contrast elliptical blobs on a
// tinted background. Localization cues (luminance contrast) are strong while
// class identity lives only in a low-amplitude chroma shift, so detecting
// blobs is structurally easier than telling their classes apart.

struct SceneSpec {
    int height = 64;
    int width = 64;
    int classes = 3;
    double mean_count = 8.0;        // Poisson mean for nuclei per image
    double min_separation = 8.0;    // pixels, between centers
    double radius_min = 3.0;
    double radius_max = 5.0;
    std::vector<double> class_prior;  // empty = uniform

    // dataset identity
    int style = 0;            // derives background/tint via derive_style()
    double bg_r = 0.82, bg_g = 0.74, bg_b = 0.80;
    double noise = 0.02;      // Gaussian pixel noise stddev
    double cue = 0.08;        // chroma amplitude separating classes
    double contrast = 0.2;    // minimum luminance gap nucleus vs background

    void validate() const;
};

// Fills bg_* from the style id; style 0 keeps the defaults above.
SceneSpec derive_style(SceneSpec spec);

struct NucleusInstance {
    Point center;          // sub-pixel, origin at top-left pixel corner
    double radius = 4.0;
    int cls = 1;           // 1-based
    // per-instance appearance
    double rx = 4.0, ry = 4.0, rot = 0.0;
    double jit_r = 0.0, jit_g = 0.0, jit_b = 0.0;
};

// Rejection-sampled placement; throws DataError when the requested density
// cannot be met after bounded retries.
std::vector<NucleusInstance> sample_scene(const SceneSpec& spec, std::uint64_t seed);

// Deterministic given (scene, spec, seed); seed only feeds the pixel noise.
Tensor render(const std::vector<NucleusInstance>& scene, const SceneSpec& spec,
              std::uint64_t seed);

// Luminance-preserving chroma offset for a class; coincides across classes
// when the cue amplitude is 0.
void class_chroma(const SceneSpec& spec, int cls, double& dr, double& dg, double& db);

double luminance(double r, double g, double b);

// ---------------------------------------------------------------------------
// Dataset directory layout: images/ + annotations/ + manifest.json
// Annotations are "x,y,class" CSV with a header row.
// ---------------------------------------------------------------------------

struct DatasetEntry {
    std::string image;       // relative path
    std::string annotation;  // relative path
    std::string split;       // "train" or "test"
    int count = 0;
};

struct DatasetManifest {
    SceneSpec spec;
    std::uint64_t seed = 0;
    std::vector<DatasetEntry> entries;
    int total_nuclei = 0;
    std::string dir;  // set on load/write
};

struct LoadedSample {
    Tensor image;  // [3,H,W] in [0,1]
    std::vector<PointAnnotation> annotations;
    std::string split;
};

struct LoadedDataset {
    DatasetManifest manifest;
    std::vector<LoadedSample> samples;

    std::vector<int> split_indices(const std::string& split) const;
};

// 8-bit binary PPM (P6)
void write_ppm(const std::string& path, const Tensor& image);
Tensor read_ppm(const std::string& path);

void write_annotations(const std::string& path, const std::vector<PointAnnotation>& anns);
std::vector<PointAnnotation> read_annotations(const std::string& path, int class_count);

// Generates n_train + n_test images into dir and writes the manifest.
DatasetManifest generate_dataset(const SceneSpec& spec, std::uint64_t seed,
                                 int n_train, int n_test, const std::string& dir);

DatasetManifest load_manifest(const std::string& dir);
LoadedDataset load_dataset(const std::string& dir);

}  // namespace pointdc
