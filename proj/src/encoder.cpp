#include "pointdc/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "pointdc/losses.hpp"
#include "pointdc/optim.hpp"

namespace pointdc {

std::string encoder_kind_name(EncoderKind kind) {
    switch (kind) {
        case EncoderKind::RandomFrozen: return "random-frozen";
        case EncoderKind::PretextPretrained: return "pretext-pretrained";
        case EncoderKind::Trainable: return "trainable";
    }
    throw UsageError("unknown encoder kind");
}

EncoderKind encoder_kind_from_name(const std::string& name) {
    if (name == "random-frozen") return EncoderKind::RandomFrozen;
    if (name == "pretext-pretrained") return EncoderKind::PretextPretrained;
    if (name == "trainable") return EncoderKind::Trainable;
    throw ConfigError("unknown encoder kind '" + name + "'");
}

Encoder Encoder::create(int width, std::uint64_t seed, EncoderKind kind, bool frozen,
                        int in_ch) {
    Encoder e;
    e.width = width;
    e.kind = kind;
    e.frozen = frozen;
    e.backbone = make_backbone("backbone", in_ch, width);
    Rng rng(seed);
    e.backbone.register_params(e.params, rng);
    return e;
}

FeatureMap Encoder::encode(const Tensor& image, ConvStack::Cache* cache) const {
    if (image.ndim() != 3)
        throw ShapeError("encode expects a [C,H,W] image, got " + image.shape_str());
    if (image.dim(1) % stride != 0 || image.dim(2) % stride != 0)
        throw ShapeError("image " + image.shape_str() + " not divisible by encoder stride " +
                         std::to_string(stride));
    FeatureMap f;
    f.stride = static_cast<double>(stride);
    f.values = backbone.forward(params, image, cache);
    return f;
}

FeatureMap encode(const Encoder& enc, const Tensor& image) { return enc.encode(image); }

// ---------------------------------------------------------------------------

BilinearTaps bilinear_taps(int height, int width, double stride, Point p) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
        throw UsageError("bilinear_sample requires finite coordinates");
    const double u = p.x / stride - 0.5;
    const double v = p.y / stride - 0.5;
    const double ju = std::floor(u), iv = std::floor(v);
    const double a = u - ju, b = v - iv;
    auto clampi = [](double x, int hi) {
        return std::min(std::max(static_cast<int>(x), 0), hi);
    };
    BilinearTaps t;
    t.j0 = clampi(ju, width - 1);
    t.j1 = clampi(ju + 1, width - 1);
    t.i0 = clampi(iv, height - 1);
    t.i1 = clampi(iv + 1, height - 1);
    t.w00 = (1.0 - a) * (1.0 - b);
    t.w01 = a * (1.0 - b);
    t.w10 = (1.0 - a) * b;
    t.w11 = a * b;
    return t;
}

std::vector<double> bilinear_sample(const FeatureMap& f, Point p) {
    const BilinearTaps t = bilinear_taps(f.height(), f.width(), f.stride, p);
    std::vector<double> out(static_cast<std::size_t>(f.channels()));
    for (int c = 0; c < f.channels(); ++c)
        out[static_cast<std::size_t>(c)] =
            t.w00 * f.values.at(c, t.i0, t.j0) + t.w01 * f.values.at(c, t.i0, t.j1) +
            t.w10 * f.values.at(c, t.i1, t.j0) + t.w11 * f.values.at(c, t.i1, t.j1);
    return out;
}

void bilinear_sample_backward(const FeatureMap& f, Point p,
                              const std::vector<double>& grad_out, Tensor& dvalues) {
    if (static_cast<int>(grad_out.size()) != f.channels())
        throw ShapeError("bilinear backward: gradient length does not match channels");
    if (dvalues.shape() != f.values.shape())
        throw ShapeError("bilinear backward: accumulator shape mismatch");
    const BilinearTaps t = bilinear_taps(f.height(), f.width(), f.stride, p);
    for (int c = 0; c < f.channels(); ++c) {
        const double g = grad_out[static_cast<std::size_t>(c)];
        dvalues.at(c, t.i0, t.j0) += t.w00 * g;
        dvalues.at(c, t.i0, t.j1) += t.w01 * g;
        dvalues.at(c, t.i1, t.j0) += t.w10 * g;
        dvalues.at(c, t.i1, t.j1) += t.w11 * g;
    }
}

// ---------------------------------------------------------------------------

Tensor crop_centered(const Tensor& image, Point center, int size) {
    if (image.ndim() != 3) throw ShapeError("crop_centered expects [C,H,W]");
    const int ch = image.dim(0), h = image.dim(1), w = image.dim(2);
    if (size > h || size > w)
        throw ShapeError("crop size " + std::to_string(size) + " exceeds image " +
                         image.shape_str());
    auto origin = [size](double c, int extent) {
        int o = static_cast<int>(std::lround(c - size / 2.0));
        return std::min(std::max(o, 0), extent - size);
    };
    const int x0 = origin(center.x, w);
    const int y0 = origin(center.y, h);
    Tensor out({ch, size, size});
    for (int c = 0; c < ch; ++c)
        for (int i = 0; i < size; ++i)
            for (int j = 0; j < size; ++j)
                out.at(c, i, j) = image.at(c, y0 + i, x0 + j);
    return out;
}

namespace {

struct CropSample {
    int image_index = 0;
    Point center;
    int label = 0;  // 0-based
};

}  // namespace

PretrainResult pretrain_encoder(const LoadedDataset& ds, const PretrainConfig& cfg) {
    if (cfg.crop % 4 != 0 || cfg.crop <= 0)
        throw ConfigError("pretrain crop size must be a positive multiple of the stride");
    const int classes = ds.manifest.spec.classes;

    std::vector<CropSample> samples;
    for (int idx : ds.split_indices("train")) {
        const auto& s = ds.samples[static_cast<std::size_t>(idx)];
        for (const auto& a : s.annotations)
            samples.push_back({idx, a.p, a.cls - 1});
    }
    if (samples.empty()) throw DataError("pretraining needs annotated training images");

    PretrainResult out;
    out.encoder = Encoder::create(cfg.width, mix_seed(cfg.seed, 0x21),
                                  EncoderKind::Trainable, false);
    Encoder& enc = out.encoder;
    const int cdim = enc.out_channels();

    ParamSet head;
    {
        Rng rng(mix_seed(cfg.seed, 0x22));
        head.add("head.w", he_normal({classes, cdim}, cdim, rng));
        head.add("head.b", Tensor({classes}));
    }

    const int fh = cfg.crop / enc.stride;
    const double inv_cells = 1.0 / static_cast<double>(fh * fh);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(mix_seed(cfg.seed, 0x2300 + static_cast<std::uint64_t>(epoch)));
        auto order = samples;
        shuffle_rng.shuffle(order);
        const double lr = cosine_lr(cfg.lr, epoch, cfg.epochs);

        double loss_sum = 0.0;
        long batch_count = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch);
            const int n = static_cast<int>(stop - start);

            std::vector<ConvStack::Cache> caches(static_cast<std::size_t>(n));
            std::vector<Tensor> feats(static_cast<std::size_t>(n));
            Tensor logits({n, classes});
            std::vector<int> labels(static_cast<std::size_t>(n));
            const auto& hw = head.entry("head.w").value;
            const auto& hb = head.entry("head.b").value;

            for (int k = 0; k < n; ++k) {
                const auto& cs = order[start + static_cast<std::size_t>(k)];
                const Tensor crop =
                    crop_centered(ds.samples[static_cast<std::size_t>(cs.image_index)].image,
                                  cs.center, cfg.crop);
                feats[static_cast<std::size_t>(k)] = enc.backbone.forward(
                    enc.params, crop, &caches[static_cast<std::size_t>(k)]);
                // mean pool into a channel vector, then the dense head
                Tensor pooled({cdim});
                const auto& fv = feats[static_cast<std::size_t>(k)];
                for (int c = 0; c < cdim; ++c) {
                    double acc = 0.0;
                    for (int i = 0; i < fh; ++i)
                        for (int j = 0; j < fh; ++j) acc += fv.at(c, i, j);
                    pooled[static_cast<std::size_t>(c)] = acc * inv_cells;
                }
                const Tensor z = dense(hw, hb, pooled);
                for (int c = 0; c < classes; ++c)
                    logits.at(k, c) = z[static_cast<std::size_t>(c)];
                labels[static_cast<std::size_t>(k)] = cs.label;
                feats[static_cast<std::size_t>(k)] = std::move(pooled);
            }

            ScalarLoss ce = softmax_cross_entropy(logits, labels);
            loss_sum += ce.loss;
            ++batch_count;

            enc.params.zero_grads();
            head.zero_grads();
            for (int k = 0; k < n; ++k) {
                Tensor dz({classes});
                for (int c = 0; c < classes; ++c)
                    dz[static_cast<std::size_t>(c)] = ce.grad.at(k, c);
                DenseGrads dg =
                    dense_backward(hw, feats[static_cast<std::size_t>(k)], dz);
                head.entry("head.w").grad.add_scaled(dg.weight, 1.0);
                head.entry("head.b").grad.add_scaled(dg.bias, 1.0);
                Tensor dfeat({cdim, fh, fh});
                for (int c = 0; c < cdim; ++c) {
                    const double g = dg.input[static_cast<std::size_t>(c)] * inv_cells;
                    for (int i = 0; i < fh; ++i)
                        for (int j = 0; j < fh; ++j) dfeat.at(c, i, j) = g;
                }
                enc.backbone.backward(enc.params, caches[static_cast<std::size_t>(k)],
                                      std::move(dfeat));
            }
            sgd_step(enc.params, lr, cfg.momentum);
            sgd_step(head, lr, cfg.momentum);
        }
        out.loss_curve.push_back(batch_count > 0 ? loss_sum / batch_count : 0.0);
    }

    enc.kind = EncoderKind::PretextPretrained;
    enc.frozen = true;
    return out;
}

}  // namespace pointdc
