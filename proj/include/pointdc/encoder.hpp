#pragma once
#include <string>
#include <vector>

#include "pointdc/detector.hpp"
#include "pointdc/nn.hpp"
#include "pointdc/synthdata.hpp"
#include "pointdc/tensor.hpp"
#include "pointdc/types.hpp"

namespace pointdc {

// ---------------------------------------------------------------------------
// Feature encoder: the same backbone family as the detector (typically wider),
// plus a bilinear point sampler that queries the feature map at sub-pixel
// image coordinates.
// ---------------------------------------------------------------------------

enum class EncoderKind { RandomFrozen, PretextPretrained, Trainable };

std::string encoder_kind_name(EncoderKind kind);
EncoderKind encoder_kind_from_name(const std::string& name);

struct FeatureMap {
    Tensor values;        // [C', H', W']
    double stride = 4.0;  // image pixels per feature cell

    int channels() const { return values.dim(0); }
    int height() const { return values.dim(1); }
    int width() const { return values.dim(2); }
};

struct Encoder {
    ConvStack backbone;
    ParamSet params;
    int width = 4;
    int stride = 4;
    EncoderKind kind = EncoderKind::RandomFrozen;
    bool frozen = true;

    static Encoder create(int width, std::uint64_t seed,
                          EncoderKind kind = EncoderKind::RandomFrozen,
                          bool frozen = true, int in_ch = 3);

    int out_channels() const { return backbone.out_channels(); }
    std::uint64_t checksum() const { return params.checksum(); }

    // cache is only needed when gradients will flow back through the encoder
    FeatureMap encode(const Tensor& image, ConvStack::Cache* cache = nullptr) const;
};

FeatureMap encode(const Encoder& enc, const Tensor& image);

// ---------------------------------------------------------------------------
// Bilinear point sampler. Feature cell (i,j) sits at image location
// ((j+0.5)*stride, (i+0.5)*stride); a query maps to grid space via
// u = x/stride - 0.5 and blends the four surrounding cells, border-clamped.
// Cell-center queries reproduce that cell's vector exactly.
// ---------------------------------------------------------------------------

struct BilinearTaps {
    int i0 = 0, i1 = 0, j0 = 0, j1 = 0;
    double w00 = 0, w01 = 0, w10 = 0, w11 = 0;  // (i0,j0),(i0,j1),(i1,j0),(i1,j1)
};

BilinearTaps bilinear_taps(int height, int width, double stride, Point p);

std::vector<double> bilinear_sample(const FeatureMap& f, Point p);

// Accumulates d(loss)/d(values) for a sample at p into dvalues.
void bilinear_sample_backward(const FeatureMap& f, Point p,
                              const std::vector<double>& grad_out, Tensor& dvalues);

// ---------------------------------------------------------------------------
// Pretext pretraining: classify the class of fixed-size crops centered on
// ground-truth points through the encoder + mean pool + a temporary dense
// head. The head is discarded and the encoder returned frozen. Stands in for
// large-scale pretraining at desk scale.
// ---------------------------------------------------------------------------

struct PretrainConfig {
    int width = 4;
    int crop = 16;  // pixels, must be divisible by the encoder stride
    int epochs = 100;
    int batch = 256;
    double lr = 0.01;
    double momentum = 0.9;
    std::uint64_t seed = 1;
};

struct PretrainResult {
    Encoder encoder;
    std::vector<double> loss_curve;  // mean train CE per epoch
};

PretrainResult pretrain_encoder(const LoadedDataset& ds, const PretrainConfig& cfg);

// Crop window clamped to stay inside the image; size <= both image dims.
Tensor crop_centered(const Tensor& image, Point center, int size);

}  // namespace pointdc
