#pragma once
#include <string>

#include "pointdc/classifier.hpp"
#include "pointdc/detector.hpp"
#include "pointdc/encoder.hpp"
#include "pointdc/joint.hpp"
#include "pointdc/tensor.hpp"

namespace pointdc {

// ---------------------------------------------------------------------------
// One checkpoint format for every model: a JSON header describing the model
// kind and parameter shapes, followed by the raw float64 parameter payload in
// header order. Little-endian hosts only.
// ---------------------------------------------------------------------------

struct CheckpointMeta {
    std::string kind;          // "detector" | "encoder" | "joint" | "head"
    int width = 0;
    int stride = 4;
    int classes = 0;           // joint / head
    std::string encoder_kind;  // encoder only
    bool frozen = false;       // encoder only
};

struct LoadedCheckpoint {
    CheckpointMeta meta;
    ParamSet params;
};

void save_checkpoint(const std::string& path, const CheckpointMeta& meta,
                     const ParamSet& params);
LoadedCheckpoint load_checkpoint(const std::string& path);

void save_detector(const std::string& path, const DetectorModel& model);
DetectorModel load_detector(const std::string& path);

void save_encoder(const std::string& path, const Encoder& enc);
Encoder load_encoder(const std::string& path);

void save_joint(const std::string& path, const JointModel& model);
JointModel load_joint(const std::string& path);

void save_head(const std::string& path, const LinearHead& head);
LinearHead load_head(const std::string& path);

}  // namespace pointdc
