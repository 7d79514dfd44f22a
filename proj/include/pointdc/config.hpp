#pragma once
#include <string>
#include <utility>
#include <vector>

#include "pointdc/classifier.hpp"
#include "pointdc/detector.hpp"
#include "pointdc/encoder.hpp"
#include "pointdc/joint.hpp"
#include "pointdc/synthdata.hpp"

namespace pointdc {

// ---------------------------------------------------------------------------
// Flat dotted-key run configuration. The same keys work in config files
// ("key = value" lines, '#' comments) and as CLI flags ("--key=value");
// flags override the file. Unknown keys are rejected by name. All backbones
// in this codebase are stride 4; stride is therefore not a key.
// ---------------------------------------------------------------------------

struct RunConfig {
    std::uint64_t seed = 1;

    std::string data_dir;     // data.dir
    std::string data_second;  // data.second_dir — optional second training dataset
    int data_train = 200;     // data.train
    int data_test = 50;       // data.test
    std::string out_dir;      // out.dir

    SceneSpec scene;  // scene.* generation parameters

    int det_width = 2;            // det.*
    int det_epochs = 100;
    int det_batch = 32;
    double det_lr = 0.001;
    double det_momentum = 0.9;
    double det_tau = 0.5;
    double det_lambda_reg = 1.0;
    double det_mu_match = 0.5;
    double det_suppress = 0.0;

    std::string cls_mode = "linear";     // cls.mode: linear | full
    std::string cls_supervision = "gt";  // cls.supervision: gt | detector
    int cls_epochs = 100;
    int cls_batch = 256;
    double cls_lr = 0.01;
    double cls_momentum = 0.9;

    int enc_width = 4;                          // enc.*
    int enc_crop = 16;
    int enc_epochs = 100;
    int enc_batch = 256;
    double enc_lr = 0.01;
    double enc_momentum = 0.9;
    std::string enc_kind = "pretext-pretrained";  // or random-frozen

    int joint_width = 4;  // joint.*
    int joint_epochs = 100;
    int joint_batch = 32;
    double joint_lr = 0.001;
    double joint_momentum = 0.9;
    double joint_lambda_cls = 1.0;
    double joint_lambda_reg = 1.0;
    std::string joint_init_encoder;  // optional warm-start encoder checkpoint

    int probe_epochs = 100;  // probe.*
    int probe_batch = 256;
    double probe_lr = 0.01;
    double probe_momentum = 0.9;

    double eval_radius = 6.0;  // eval.radius

    std::string model_detector;  // model.*  checkpoint paths
    std::string model_encoder;
    std::string model_head;
    std::string model_joint;

    int ablate_seeds = 3;              // ablate.*
    std::string ablate_widths = "1,4";

    // module configs assembled from the flat fields; `seed` feeds them all
    DetectorTrainConfig detector_config() const;
    ClassifierTrainConfig classifier_config() const;
    PretrainConfig pretrain_config() const;
    JointTrainConfig joint_config() const;
    ProbeConfig probe_config() const;
};

// registry surface
std::vector<std::string> config_keys();
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& cfg, const std::string& key);

// "key = value" lines in registry order (a valid config file)
std::string dump_config(const RunConfig& cfg);

// path may be empty (defaults only); overrides are applied after the file
RunConfig parse_config(const std::string& path,
                       const std::vector<std::pair<std::string, std::string>>& overrides);

}  // namespace pointdc
