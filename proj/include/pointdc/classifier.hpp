#pragma once
#include <vector>

#include "pointdc/detector.hpp"
#include "pointdc/encoder.hpp"
#include "pointdc/synthdata.hpp"
#include "pointdc/tensor.hpp"
#include "pointdc/types.hpp"

namespace pointdc {

// ---------------------------------------------------------------------------
// Classification head: a single linear layer over sampled feature vectors.
// Decoupling contract: classification never moves points — predictions carry
// the query coordinates bit-exactly.
// ---------------------------------------------------------------------------

struct LinearHead {
    Tensor weight;  // [classes, feat_dim]
    Tensor bias;    // [classes]

    static LinearHead create(int classes, int feat_dim);  // zero-initialized
    int classes() const { return weight.dim(0); }
    int feat_dim() const { return weight.dim(1); }
};

Tensor head_logits(const LinearHead& head, const std::vector<double>& feat);

// numerically stable softmax of a 1-D logit tensor
std::vector<double> softmax_vec(const Tensor& logits);

// One prediction per input point, in input order: class = argmax of the head
// over the bilinear feature sample (ties -> lowest class id), cls_prob = the
// softmax probability of that class. Out-of-range queries are clamped for
// sampling only; output coordinates equal input coordinates.
PredictionSet classify_points(const Encoder& enc, const LinearHead& head,
                              const Tensor& image, const std::vector<Detection>& points);
PredictionSet classify_points(const Encoder& enc, const LinearHead& head,
                              const Tensor& image, const std::vector<Point>& points);

// ---------------------------------------------------------------------------
// Training. Linear mode optimizes the head only and is checksum-verified to
// leave the encoder untouched; full mode fine-tunes the encoder too and
// requires the frozen flag to be cleared first.
// ---------------------------------------------------------------------------

enum class ClsMode { Linear, Full };
enum class ClsSupervision { GroundTruth, Detector };

struct ClassifierTrainConfig {
    ClsMode mode = ClsMode::Linear;
    // GroundTruth: train at GT coordinates with GT labels. Detector: run the
    // given detector on each training image, keep detections matched one-to-
    // one to GT within match_radius, label them with the matched class.
    ClsSupervision supervision = ClsSupervision::GroundTruth;
    const DetectorModel* detector = nullptr;
    double tau = 0.5;
    double match_radius = 6.0;
    int epochs = 100;
    int batch = 256;
    double lr = 0.01;
    double momentum = 0.9;
    std::uint64_t seed = 1;
};

struct ClassifierEpoch {
    int epoch = 0;
    double train_loss = 0.0;
    double val_avg_f1 = 0.0;  // label F1 at GT coordinates on the "test" split
};

struct TrainedClassifier {
    LinearHead head;
    std::vector<ClassifierEpoch> curve;
};

TrainedClassifier train_classifier(Encoder& enc, const LoadedDataset& ds,
                                   const ClassifierTrainConfig& cfg);

struct ProbeConfig {
    int epochs = 100;
    int batch = 256;
    double lr = 0.01;
    double momentum = 0.9;
    double radius = 6.0;
    std::uint64_t seed = 7;
};

// Representation-quality probe: fits a fresh head on frozen features at the
// GT coordinates of train_idx, reports average label F1 at the GT coordinates
// of val_idx. The encoder is never modified.
double linear_probe(const Encoder& enc, const LoadedDataset& ds,
                    const std::vector<int>& train_idx, const std::vector<int>& val_idx,
                    const ProbeConfig& cfg);

// decode -> classify_points composition; coordinates pass through bit-exactly.
PredictionSet predict(const Tensor& image, const DetectorModel& det, const Encoder& enc,
                      const LinearHead& head, double tau, double suppress_radius = 0.0);

}  // namespace pointdc
