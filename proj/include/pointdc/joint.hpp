#pragma once
#include <functional>
#include <vector>

#include "pointdc/detector.hpp"
#include "pointdc/encoder.hpp"
#include "pointdc/synthdata.hpp"
#include "pointdc/tensor.hpp"
#include "pointdc/types.hpp"

namespace pointdc {

// ---------------------------------------------------------------------------
// Multi-task baseline: one shared backbone feeding score, offset and
// per-anchor class heads. Shares the grid, assignment and detection-loss path
// with the detector so the two differ only by the classification term.
// ---------------------------------------------------------------------------

struct JointModel {
    ConvStack backbone;
    ParamSet params;  // backbone.*, score.*, offset.*, cls.*
    int width = 4;
    int stride = 4;
    int classes = 3;

    // Parameter registration order is backbone, score, offset, cls; with the
    // same seed and width the shared parameters match DetectorModel::create
    // exactly, which is what makes the lambda_cls = 0 equivalence testable.
    static JointModel create(int width, int classes, std::uint64_t seed, int in_ch = 3);

    struct Forward {
        Tensor scores;        // [gh,gw], post-sigmoid
        Tensor offsets;       // [2,gh,gw]
        Tensor class_logits;  // [C,gh,gw]
        ConvStack::Cache backbone_cache;
        Tensor features;
        Tensor score_sig;
    };

    Forward forward(const Tensor& image) const;
    void backward(const Forward& fwd, const Tensor& dscores, const Tensor& doffsets,
                  const Tensor& dclass_logits);

    // Copy of the current shared backbone, packaged for probing.
    Encoder as_encoder() const;
};

struct JointLoss {
    double loss = 0.0;
    double det = 0.0;     // bce + reg
    double bce = 0.0;
    double reg = 0.0;
    double cls_ce = 0.0;  // unweighted CE over matched anchors
    Tensor dscores;
    Tensor doffsets;
    Tensor dclass_logits;
};

// detection_loss plus lambda_cls * CE(matched anchors' logits, gt classes).
// With lambda_cls = 0 this reduces exactly to the detection loss. The
// assignment is treated as constant by the gradients.
JointLoss joint_loss(const JointModel::Forward& fwd, const GridSpec& grid,
                     const std::vector<int>& assignment,
                     const std::vector<PointAnnotation>& gt, double lambda_reg,
                     double lambda_cls);

// Decode plus per-anchor argmax class for every cell above tau.
PredictionSet joint_predict(const JointModel::Forward& fwd, const GridSpec& grid,
                            double tau, double suppress_radius = 0.0);

struct JointTrainConfig {
    int width = 4;
    int epochs = 100;
    int batch = 32;
    double lr = 0.001;
    double momentum = 0.9;
    double tau = 0.5;
    double lambda_reg = 1.0;
    double lambda_cls = 1.0;
    double mu_match = 0.5;
    double eval_radius = 6.0;
    double suppress_radius = 0.0;
    std::uint64_t seed = 1;
    // optional warm start: copy this encoder's backbone weights before training
    const Encoder* init_backbone = nullptr;
};

// Called between epochs with the epoch index and the current model; returns
// a probe score that is recorded on the epoch row.
using ProbeHook = std::function<double(int, const JointModel&)>;

struct JointEpoch {
    int epoch = 0;
    double train_loss = 0.0;
    double det_f1 = 0.0;    // class-agnostic, "test" split
    double cls_f1 = 0.0;    // average per-class F1, "test" split
    double probe_f1 = 0.0;  // NaN when no probe hook was given
};

struct TrainedJoint {
    JointModel model;
    std::vector<JointEpoch> curve;
};

TrainedJoint train_joint(const LoadedDataset& ds, const JointTrainConfig& cfg,
                         const ProbeHook& probe_hook = nullptr);

}  // namespace pointdc
