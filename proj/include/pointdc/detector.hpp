#pragma once
#include <vector>

#include "pointdc/evalkit.hpp"
#include "pointdc/nn.hpp"
#include "pointdc/synthdata.hpp"
#include "pointdc/tensor.hpp"
#include "pointdc/types.hpp"

namespace pointdc {

// ---------------------------------------------------------------------------
// Reference grid: one anchor per stride*stride cell, placed at cell centers.
// ---------------------------------------------------------------------------

struct GridSpec {
    double stride = 4.0;
    int gh = 0, gw = 0;

    Point anchor(int i, int j) const {
        return {(j + 0.5) * stride, (i + 0.5) * stride};
    }
    int cells() const { return gh * gw; }
};

// stride must divide both image dimensions exactly
GridSpec build_grid(int height, int width, int stride);

// Initial score-head bias: sigmoid(b) = 0.01, the usual prior-probability
// init for heavily background-dominated dense detection heads.
inline constexpr double kScoreBiasInit = -4.59511985013459;

// Shared backbone topology: three 3x3 conv+ReLU layers with channel widths
// (4w, 8w, 8w) and strides (1,2,2), i.e. total stride 4. The detector,
// encoder and joint baseline all build on this family so capacity sweeps and
// like-for-like comparisons stay meaningful.
ConvStack make_backbone(const std::string& prefix, int in_ch, int width);

// ---------------------------------------------------------------------------
// Single-stage point detector: per-cell confidence plus a 2-channel offset in
// stride units. decode() turns maps into points: anchor + stride * offset for
// every cell whose score clears the threshold.
// ---------------------------------------------------------------------------

struct DetectorModel {
    ConvStack backbone;
    ParamSet params;  // backbone.* plus score.{w,b} and offset.{w,b}
    int width = 2;
    int stride = 4;

    static DetectorModel create(int width, std::uint64_t seed, int in_ch = 3);

    struct Forward {
        Tensor scores;   // [gh,gw], strictly inside (0,1)
        Tensor offsets;  // [2,gh,gw]; channel 0 = dx, channel 1 = dy
        // state needed by backward
        ConvStack::Cache backbone_cache;
        Tensor features;
        Tensor score_sig;  // [1,gh,gw]
    };

    Forward forward(const Tensor& image) const;
    // Accumulates parameter gradients; dscores is wrt the post-sigmoid map.
    void backward(const Forward& fwd, const Tensor& dscores, const Tensor& doffsets);
};

std::vector<Detection> decode(const Tensor& scores, const Tensor& offsets,
                              const GridSpec& grid, double tau);

// One proposal per grid cell regardless of threshold; row-major cell order.
std::vector<Detection> all_proposals(const Tensor& scores, const Tensor& offsets,
                                     const GridSpec& grid);

// One-to-one minimum-cost pairing of ground-truth points to proposals with
// cost(k,m) = ||p_k - gt_m|| - mu * score_k. Returns the proposal (flat cell
// index) chosen for each ground-truth point; all other cells are negatives.
std::vector<int> assign_targets(const std::vector<Detection>& proposals,
                                const std::vector<Point>& gt, double mu);

struct DetectionLoss {
    double loss = 0.0;
    double bce = 0.0;
    double reg = 0.0;
    Tensor dscores;   // wrt post-sigmoid score map
    Tensor doffsets;  // wrt offset map
};

// BCE over every cell (matched cells target 1) plus lambda_reg * mean
// stride-normalized squared distance over matched pairs. The assignment is
// an explicit input and is treated as constant by the gradients.
DetectionLoss detection_loss(const Tensor& scores, const Tensor& offsets,
                             const GridSpec& grid, const std::vector<int>& assignment,
                             const std::vector<Point>& gt, double lambda_reg);

// Greedy score-descending filter; radius 0 is the identity.
std::vector<Detection> suppress_duplicates(std::vector<Detection> detections, double radius);

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct DetectorTrainConfig {
    int width = 2;
    int epochs = 100;
    int batch = 32;
    double lr = 0.001;
    double momentum = 0.9;
    double tau = 0.5;
    double lambda_reg = 1.0;
    double mu_match = 0.5;
    double eval_radius = 6.0;
    double suppress_radius = 0.0;  // 0 = off
    std::uint64_t seed = 1;
};

struct DetectorEpoch {
    int epoch = 0;
    double train_loss = 0.0;
    double val_det_f1 = 0.0;
};

struct TrainedDetector {
    DetectorModel model;
    std::vector<DetectorEpoch> curve;
};

// Multiple datasets are interleaved round-robin at batch granularity; one
// epoch makes a full pass over the union of training splits. Validation F1
// is measured on the first dataset's "test" split.
TrainedDetector train_detector(const std::vector<const LoadedDataset*>& datasets,
                               const DetectorTrainConfig& cfg);

// Class-agnostic detection F1 of a model over the given sample indices.
double detector_f1(const DetectorModel& model, const LoadedDataset& ds,
                   const std::vector<int>& indices, double tau, double radius,
                   double suppress_radius = 0.0);

}  // namespace pointdc
