#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include "pointdc/synthdata.hpp"

using namespace pointdc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() /
               ("pointdc_test_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

double patch_mean(const Tensor& img, int ci, int cj, int half) {
    double acc = 0.0;
    long n = 0;
    for (int c = 0; c < 3; ++c)
        for (int i = ci - half; i <= ci + half; ++i)
            for (int j = cj - half; j <= cj + half; ++j) {
                acc += img.at(c, i, j);
                ++n;
            }
    return acc / static_cast<double>(n);
}

}  // namespace

TEST_CASE("scene spec validation") {
    SceneSpec spec;
    CHECK_NOTHROW(spec.validate());

    SceneSpec bad = spec;
    bad.min_separation = 2.0 * bad.radius_min - 0.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = spec;
    bad.radius_max = bad.radius_min - 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = spec;
    bad.classes = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = spec;
    bad.height = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("sample_scene respects separation, margins and determinism") {
    SceneSpec spec;
    spec.mean_count = 10.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto scene = sample_scene(spec, seed);
        for (std::size_t a = 0; a < scene.size(); ++a) {
            const auto& n = scene[a];
            CHECK(n.cls >= 1);
            CHECK(n.cls <= spec.classes);
            CHECK(n.radius >= spec.radius_min);
            CHECK(n.radius <= spec.radius_max);
            CHECK(n.center.x >= 0.0);
            CHECK(n.center.x < spec.width);
            CHECK(n.center.y >= 0.0);
            CHECK(n.center.y < spec.height);
            for (std::size_t b = a + 1; b < scene.size(); ++b)
                CHECK(point_dist(n.center, scene[b].center) >= spec.min_separation);
        }
        const auto again = sample_scene(spec, seed);
        REQUIRE(again.size() == scene.size());
        for (std::size_t i = 0; i < scene.size(); ++i) {
            CHECK(again[i].center.x == scene[i].center.x);
            CHECK(again[i].center.y == scene[i].center.y);
            CHECK(again[i].cls == scene[i].cls);
        }
    }
}

TEST_CASE("zero mean count gives empty scenes") {
    SceneSpec spec;
    spec.mean_count = 0.0;
    CHECK(sample_scene(spec, 3).empty());
}

TEST_CASE("unsatisfiable density reports a data error") {
    SceneSpec spec;
    spec.height = 24;
    spec.width = 24;
    spec.mean_count = 200.0;
    spec.min_separation = 8.0;
    CHECK_THROWS_AS(sample_scene(spec, 1), DataError);
}

TEST_CASE("render: empty scene matches background statistics") {
    SceneSpec spec;
    spec.noise = 0.0;
    const Tensor img = render({}, spec, 7);
    CHECK(img.dim(0) == 3);
    CHECK(img.dim(1) == spec.height);
    CHECK(img.dim(2) == spec.width);
    // uniform background: every pixel equals the first one
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < spec.height; ++i)
            for (int j = 0; j < spec.width; ++j)
                CHECK(img.at(c, i, j) == img.at(c, 0, 0));
}

TEST_CASE("render: pixels stay in unit range with noise") {
    SceneSpec spec;
    spec.noise = 0.3;
    const auto scene = sample_scene(spec, 5);
    const Tensor img = render(scene, spec, 5);
    for (std::size_t i = 0; i < img.size(); ++i) {
        CHECK(img[i] >= 0.0);
        CHECK(img[i] <= 1.0);
    }
}

TEST_CASE("render: nucleus contrast exceeds the configured margin") {
    SceneSpec spec;
    spec.noise = 0.0;
    NucleusInstance n;
    n.center = {32.0, 32.0};
    n.radius = 5.0;
    n.rx = 5.0;
    n.ry = 5.0;
    n.cls = 1;
    const Tensor img = render({n}, spec, 11);
    const double centre = patch_mean(img, 32, 32, 2);
    const double corner = patch_mean(img, 5, 5, 2);
    CHECK(std::fabs(centre - corner) > spec.contrast * 0.8);
}

TEST_CASE("class cue: chroma differs between classes, luminance does not") {
    SceneSpec spec;
    spec.noise = 0.0;

    NucleusInstance a;
    a.center = {20.0, 32.0};
    a.rx = 5.0;
    a.ry = 5.0;
    a.cls = 1;
    NucleusInstance b = a;
    b.center = {44.0, 32.0};
    b.cls = 2;
    const Tensor img = render({a, b}, spec, 13);

    // same luminance at both centers (the cue is luminance-preserving)
    auto lum_at = [&](int i, int j) {
        return luminance(img.at(0, i, j), img.at(1, i, j), img.at(2, i, j));
    };
    CHECK(lum_at(32, 20) == doctest::Approx(lum_at(32, 44)).epsilon(1e-9));

    // but the red channel differs by roughly the cue amplitude
    const double dr = std::fabs(img.at(0, 32, 20) - img.at(0, 32, 44));
    CHECK(dr > spec.cue * 0.25);
}

TEST_CASE("cue amplitude zero makes classes pixel-identical") {
    SceneSpec spec;
    spec.cue = 0.0;

    NucleusInstance a;
    a.center = {32.0, 32.0};
    a.cls = 1;
    NucleusInstance b = a;
    b.cls = 3;
    const Tensor img_a = render({a}, spec, 17);
    const Tensor img_b = render({b}, spec, 17);
    REQUIRE(img_a.size() == img_b.size());
    for (std::size_t i = 0; i < img_a.size(); ++i) CHECK(img_a[i] == img_b[i]);
}

TEST_CASE("derive_style produces distinct backgrounds per style id") {
    SceneSpec s0;
    SceneSpec s1 = s0;
    s1.style = 1;
    SceneSpec s2 = s0;
    s2.style = 2;
    const SceneSpec d0 = derive_style(s0), d1 = derive_style(s1), d2 = derive_style(s2);
    CHECK(d0.bg_r == s0.bg_r);  // style 0 keeps the documented defaults
    const bool d1_differs = d1.bg_r != d0.bg_r || d1.bg_g != d0.bg_g || d1.bg_b != d0.bg_b;
    const bool d2_differs = d2.bg_r != d1.bg_r || d2.bg_g != d1.bg_g || d2.bg_b != d1.bg_b;
    CHECK(d1_differs);
    CHECK(d2_differs);
}

TEST_CASE("class chroma offsets are luminance-free and vanish at cue 0") {
    SceneSpec spec;
    for (int cls = 1; cls <= spec.classes; ++cls) {
        double dr, dg, db;
        class_chroma(spec, cls, dr, dg, db);
        CHECK(luminance(dr, dg, db) == doctest::Approx(0.0).epsilon(1e-12));
    }
    spec.cue = 0.0;
    double dr, dg, db;
    class_chroma(spec, 2, dr, dg, db);
    CHECK(dr == 0.0);
    CHECK(dg == 0.0);
    CHECK(db == 0.0);
}

TEST_CASE("ppm round-trip is lossless for 8-bit data") {
    TempDir tmp("ppm");
    SceneSpec spec;
    const auto scene = sample_scene(spec, 3);
    const Tensor img = render(scene, spec, 3);
    const std::string path = tmp.str() + "/img.ppm";
    write_ppm(path, img);
    const Tensor back = read_ppm(path);
    REQUIRE(back.same_shape(img));
    for (std::size_t i = 0; i < img.size(); ++i) {
        // writer quantizes to 8 bits; reader must return exactly those levels
        const double q = std::round(img[i] * 255.0) / 255.0;
        CHECK(back[i] == doctest::Approx(q).epsilon(1e-12));
    }

    CHECK_THROWS_AS(read_ppm(tmp.str() + "/missing.ppm"), IoError);
}

TEST_CASE("annotation round-trip and parse errors") {
    TempDir tmp("ann");
    const std::string path = tmp.str() + "/a.csv";
    const std::vector<PointAnnotation> anns{{{12.5, 30.0}, 2}, {{0.25, 63.75}, 1}};
    write_annotations(path, anns);
    const auto back = read_annotations(path, 3);
    REQUIRE(back.size() == 2);
    CHECK(back[0].p.x == 12.5);
    CHECK(back[0].p.y == 30.0);
    CHECK(back[0].cls == 2);
    CHECK(back[1].p.x == 0.25);
    CHECK(back[1].cls == 1);

    // out-of-range class
    {
        FILE* f = fopen(path.c_str(), "w");
        fputs("x,y,class\n12.5,30.0,9\n", f);
        fclose(f);
    }
    try {
        read_annotations(path, 3);
        FAIL("expected a data error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find(":2") != std::string::npos);  // names the line
    }

    // malformed row
    {
        FILE* f = fopen(path.c_str(), "w");
        fputs("x,y,class\nnot,a,row\n", f);
        fclose(f);
    }
    CHECK_THROWS_AS(read_annotations(path, 3), DataError);
}

TEST_CASE("generate and load dataset round-trip") {
    TempDir tmp("ds");
    SceneSpec spec;
    spec.mean_count = 5.0;
    const DatasetManifest man = generate_dataset(spec, 21, 4, 2, tmp.str());
    CHECK(man.entries.size() == 6);
    CHECK(man.seed == 21);

    const LoadedDataset ds = load_dataset(tmp.str());
    CHECK(ds.samples.size() == 6);
    CHECK(ds.split_indices("train").size() == 4);
    CHECK(ds.split_indices("test").size() == 2);

    long total = 0;
    for (const auto& s : ds.samples) {
        CHECK(s.image.dim(1) == spec.height);
        for (const auto& a : s.annotations) {
            CHECK(a.cls >= 1);
            CHECK(a.cls <= spec.classes);
            CHECK(a.p.x >= 0.0);
            CHECK(a.p.x < spec.width);
        }
        total += static_cast<long>(s.annotations.size());
    }
    CHECK(total == man.total_nuclei);

    // regenerating with the same seed gives byte-identical images
    TempDir tmp2("ds2");
    generate_dataset(spec, 21, 4, 2, tmp2.str());
    for (const auto& e : man.entries) {
        const Tensor a = read_ppm(tmp.str() + "/" + e.image);
        const Tensor b = read_ppm(tmp2.str() + "/" + e.image);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == b[i]);
    }
}

TEST_CASE("load_dataset rejects tampered manifests") {
    TempDir tmp("bad");
    SceneSpec spec;
    generate_dataset(spec, 4, 2, 1, tmp.str());
    fs::remove(tmp.path / "images" / "img_00001.ppm");
    CHECK_THROWS_AS(load_dataset(tmp.str()), IoError);
    CHECK_THROWS_AS(load_dataset(tmp.str() + "/nope"), IoError);
}
