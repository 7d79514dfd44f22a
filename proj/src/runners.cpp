#include "pointdc/runners.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>

#include <json.hpp>

#include "pointdc/checkpoint.hpp"
#include "pointdc/classifier.hpp"
#include "pointdc/detector.hpp"
#include "pointdc/encoder.hpp"
#include "pointdc/evalkit.hpp"
#include "pointdc/joint.hpp"
#include "pointdc/synthdata.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pointdc {

namespace {

// ---------------------------------------------------------------------------
// small utilities
// ---------------------------------------------------------------------------

std::string fnum(double v) {
    char b[64];
    std::snprintf(b, sizeof(b), "%.6f", v);
    return b;
}

std::string gnum(double v) {
    char b[64];
    std::snprintf(b, sizeof(b), "%.17g", v);
    return b;
}

double median(std::vector<double> v) {
    if (v.empty()) throw UsageError("median of empty vector");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string file_hash(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot hash missing file '" + path.string() + "'");
    std::uint64_t h = 1469598103934665603ull;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
        if (!in) break;
    }
    char out[32];
    std::snprintf(out, sizeof(out), "fnv64:%016llx", static_cast<unsigned long long>(h));
    return out;
}

const std::string& require(const std::string& value, const char* key, const char* command) {
    if (value.empty())
        throw ConfigError(std::string("command '") + command + "' requires config key '" +
                          key + "'");
    return value;
}

// Tracks files written by a runner so a failure leaves no partial outputs.
class OutputJournal {
public:
    void track(const fs::path& p) { files_.push_back(p); }

    void write_text(const fs::path& p, const std::string& content) {
        track(p);
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        std::ofstream out(p, std::ios::binary);
        if (!out) throw IoError("cannot write '" + p.string() + "'");
        out << content;
        if (!out) throw IoError("short write on '" + p.string() + "'");
    }

    void discard_all() noexcept {
        for (const auto& p : files_) {
            std::error_code ec;
            fs::remove(p, ec);
        }
    }

private:
    std::vector<fs::path> files_;
};

void write_run_manifest(OutputJournal& journal, const RunConfig& cfg,
                        const std::string& command,
                        const std::vector<std::string>& inputs,
                        const std::vector<std::string>& outputs) {
    json j;
    j["command"] = command;
    j["seed"] = cfg.seed;
    json conf;
    for (const auto& key : config_keys()) conf[key] = get_config_value(cfg, key);
    j["config"] = conf;
    json in = json::object();
    for (const auto& p : inputs) in[p] = file_hash(p);
    j["inputs"] = in;
    j["outputs"] = outputs;
    journal.write_text(fs::path(cfg.out_dir) / "run_manifest.json", j.dump(2) + "\n");
}

LoadedDataset load_input_dataset(const std::string& dir, const char* key,
                                 const char* command) {
    require(dir, key, command);
    return load_dataset(dir);
}

std::string dataset_manifest_path(const LoadedDataset& ds) {
    return (fs::path(ds.manifest.dir) / "manifest.json").string();
}

// ---------------------------------------------------------------------------
// metrics / prediction serialization
// ---------------------------------------------------------------------------

std::string detector_metrics_csv(const std::vector<DetectorEpoch>& curve) {
    std::string csv = "epoch,train_loss,val_detection_f1\n";
    for (const auto& e : curve)
        csv += std::to_string(e.epoch) + "," + fnum(e.train_loss) + "," +
               fnum(e.val_det_f1) + "\n";
    return csv;
}

std::string joint_metrics_csv(const std::vector<JointEpoch>& curve, bool with_probe) {
    std::string csv = "epoch,train_loss,val_detection_f1,val_classification_f1";
    if (with_probe) csv += ",probe_f1";
    csv += "\n";
    for (const auto& e : curve) {
        csv += std::to_string(e.epoch) + "," + fnum(e.train_loss) + "," + fnum(e.det_f1) +
               "," + fnum(e.cls_f1);
        if (with_probe) csv += "," + fnum(e.probe_f1);
        csv += "\n";
    }
    return csv;
}

std::string classifier_metrics_csv(const std::vector<ClassifierEpoch>& curve) {
    std::string csv = "epoch,train_loss,val_classification_f1\n";
    for (const auto& e : curve)
        csv += std::to_string(e.epoch) + "," + fnum(e.train_loss) + "," +
               fnum(e.val_avg_f1) + "\n";
    return csv;
}

std::string predictions_csv(const PredictionSet& preds) {
    std::string csv = "x,y,class,det_score,cls_prob\n";
    for (const auto& p : preds)
        csv += gnum(p.p.x) + "," + gnum(p.p.y) + "," + std::to_string(p.cls) + "," +
               gnum(p.det_score) + "," + gnum(p.cls_prob) + "\n";
    return csv;
}

std::string report_csv(const MatchReport& r) {
    std::string csv = "name,value\n";
    csv += "radius," + fnum(r.radius) + "\n";
    csv += "det_f1," + fnum(r.det_f1) + "\n";
    csv += "avg_f1," + fnum(r.avg_f1) + "\n";
    for (int c = 0; c < r.counts.classes(); ++c)
        csv += "f1_class_" + std::to_string(c + 1) + "," +
               fnum(r.f1[static_cast<std::size_t>(c)]) + "\n";
    csv += "det_tp," + std::to_string(r.counts.det_tp) + "\n";
    csv += "det_fp," + std::to_string(r.counts.det_fp) + "\n";
    csv += "det_fn," + std::to_string(r.counts.det_fn) + "\n";
    for (int c = 0; c < r.counts.classes(); ++c) {
        const auto i = static_cast<std::size_t>(c);
        csv += "tp_class_" + std::to_string(c + 1) + "," + std::to_string(r.counts.tp[i]) + "\n";
        csv += "fp_class_" + std::to_string(c + 1) + "," + std::to_string(r.counts.fp[i]) + "\n";
        csv += "fn_class_" + std::to_string(c + 1) + "," + std::to_string(r.counts.fn[i]) + "\n";
    }
    return csv;
}

MatchReport evaluate_pipeline(const DetectorModel& det, const Encoder& enc,
                              const LinearHead& head, const LoadedDataset& ds,
                              const std::vector<int>& indices, double tau,
                              double suppress_radius, double radius) {
    MatchCounts counts(ds.manifest.spec.classes);
    for (int idx : indices) {
        const auto& sample = ds.samples[static_cast<std::size_t>(idx)];
        const auto preds = predict(sample.image, det, enc, head, tau, suppress_radius);
        counts.add(match_counts(preds, sample.annotations, radius, ds.manifest.spec.classes));
    }
    return report_from_counts(counts, radius);
}

MatchReport evaluate_joint(const JointModel& model, const LoadedDataset& ds,
                           const std::vector<int>& indices, double tau,
                           double suppress_radius, double radius) {
    const auto& spec = ds.manifest.spec;
    const GridSpec grid = build_grid(spec.height, spec.width, model.stride);
    MatchCounts counts(spec.classes);
    for (int idx : indices) {
        const auto& sample = ds.samples[static_cast<std::size_t>(idx)];
        const auto preds = joint_predict(model.forward(sample.image), grid, tau, suppress_radius);
        counts.add(match_counts(preds, sample.annotations, radius, spec.classes));
    }
    return report_from_counts(counts, radius);
}

std::vector<int> parse_width_list(const std::string& text) {
    std::vector<int> widths;
    std::string cur;
    auto flush = [&] {
        if (cur.empty()) return;
        errno = 0;
        char* end = nullptr;
        const long v = std::strtol(cur.c_str(), &end, 10);
        if (errno != 0 || end == cur.c_str() || *end != '\0' || v < 1 || v > 64)
            throw ConfigError("ablate.widths entry '" + cur + "' is not a valid width");
        widths.push_back(static_cast<int>(v));
        cur.clear();
    };
    for (char ch : text) {
        if (ch == ',')
            flush();
        else if (!std::isspace(static_cast<unsigned char>(ch)))
            cur.push_back(ch);
    }
    flush();
    if (widths.empty()) throw ConfigError("ablate.widths must list at least one width");
    return widths;
}

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

void cmd_gen_data(const RunConfig& cfg, OutputJournal& journal) {
    require(cfg.out_dir, "out.dir", "gen-data");
    if (fs::exists(fs::path(cfg.out_dir) / "manifest.json"))
        throw IoError("refusing to overwrite existing dataset in '" + cfg.out_dir + "'");
    if (cfg.data_train < 0 || cfg.data_test < 0)
        throw ConfigError("data.train and data.test must be non-negative");
    try {
        generate_dataset(cfg.scene, cfg.seed, cfg.data_train, cfg.data_test, cfg.out_dir);
    } catch (...) {
        // generation owns the images/annotations layout; scrub a half-written one
        for (const char* sub : {"images", "annotations", "manifest.json"}) {
            std::error_code ec;
            fs::remove_all(fs::path(cfg.out_dir) / sub, ec);
        }
        throw;
    }
    write_run_manifest(journal, cfg, "gen-data", {},
                       {"manifest.json", "images/", "annotations/"});
}

void cmd_train_det(const RunConfig& cfg, OutputJournal& journal) {
    require(cfg.out_dir, "out.dir", "train-det");
    const LoadedDataset primary = load_input_dataset(cfg.data_dir, "data.dir", "train-det");
    std::vector<const LoadedDataset*> sets = {&primary};
    LoadedDataset second;
    if (!cfg.data_second.empty()) {
        second = load_dataset(cfg.data_second);
        sets.push_back(&second);
    }
    const TrainedDetector result = train_detector(sets, cfg.detector_config());

    journal.write_text(fs::path(cfg.out_dir) / "metrics.csv",
                       detector_metrics_csv(result.curve));
    const fs::path ckpt = fs::path(cfg.out_dir) / "detector.ckpt";
    journal.track(ckpt);
    save_detector(ckpt.string(), result.model);

    std::vector<std::string> inputs = {dataset_manifest_path(primary)};
    if (!cfg.data_second.empty()) inputs.push_back(dataset_manifest_path(second));
    write_run_manifest(journal, cfg, "train-det", inputs, {"metrics.csv", "detector.ckpt"});
}

void cmd_pretrain_enc(const RunConfig& cfg, OutputJournal& journal) {
    require(cfg.out_dir, "out.dir", "pretrain-enc");
    const LoadedDataset ds = load_input_dataset(cfg.data_dir, "data.dir", "pretrain-enc");

    std::string metrics = "epoch,train_loss\n";
    Encoder enc;
    if (cfg.enc_kind == "random-frozen") {
        enc = Encoder::create(cfg.enc_width, mix_seed(cfg.seed, 0x21),
                              EncoderKind::RandomFrozen, true);
    } else if (cfg.enc_kind == "pretext-pretrained") {
        const PretrainResult res = pretrain_encoder(ds, cfg.pretrain_config());
        enc = res.encoder;
        for (std::size_t e = 0; e < res.loss_curve.size(); ++e)
            metrics += std::to_string(e) + "," + fnum(res.loss_curve[e]) + "\n";
    } else {
        throw ConfigError("enc.kind must be 'pretext-pretrained' or 'random-frozen', got '" +
                          cfg.enc_kind + "'");
    }

    journal.write_text(fs::path(cfg.out_dir) / "metrics.csv", metrics);
    const fs::path ckpt = fs::path(cfg.out_dir) / "encoder.ckpt";
    journal.track(ckpt);
    save_encoder(ckpt.string(), enc);
    write_run_manifest(journal, cfg, "pretrain-enc", {dataset_manifest_path(ds)},
                       {"metrics.csv", "encoder.ckpt"});
}

void cmd_train_cls(const RunConfig& cfg, OutputJournal& journal) {
    require(cfg.out_dir, "out.dir", "train-cls");
    const LoadedDataset ds = load_input_dataset(cfg.data_dir, "data.dir", "train-cls");
    Encoder enc = load_encoder(require(cfg.model_encoder, "model.encoder", "train-cls"));

    ClassifierTrainConfig ccfg = cfg.classifier_config();
    DetectorModel det;
    if (ccfg.supervision == ClsSupervision::Detector) {
        det = load_detector(require(cfg.model_detector, "model.detector", "train-cls"));
        ccfg.detector = &det;
    }
    if (ccfg.mode == ClsMode::Full) enc.frozen = false;

    const TrainedClassifier result = train_classifier(enc, ds, ccfg);

    journal.write_text(fs::path(cfg.out_dir) / "metrics.csv",
                       classifier_metrics_csv(result.curve));
    const fs::path head_path = fs::path(cfg.out_dir) / "head.ckpt";
    journal.track(head_path);
    save_head(head_path.string(), result.head);
    std::vector<std::string> outputs = {"metrics.csv", "head.ckpt"};
    if (ccfg.mode == ClsMode::Full) {
        const fs::path enc_path = fs::path(cfg.out_dir) / "encoder.ckpt";
        journal.track(enc_path);
        save_encoder(enc_path.string(), enc);
        outputs.push_back("encoder.ckpt");
    }

    std::vector<std::string> inputs = {dataset_manifest_path(ds), cfg.model_encoder};
    if (ccfg.supervision == ClsSupervision::Detector) inputs.push_back(cfg.model_detector);
    write_run_manifest(journal, cfg, "train-cls", inputs, outputs);
}

void cmd_train_joint(const RunConfig& cfg, OutputJournal& journal) {
    require(cfg.out_dir, "out.dir", "train-joint");
    const LoadedDataset ds = load_input_dataset(cfg.data_dir, "data.dir", "train-joint");

    JointTrainConfig jcfg = cfg.joint_config();
    Encoder init;
    if (!cfg.joint_init_encoder.empty()) {
        init = load_encoder(cfg.joint_init_encoder);
        jcfg.init_backbone = &init;
    }
    const TrainedJoint result = train_joint(ds, jcfg);

    journal.write_text(fs::path(cfg.out_dir) / "metrics.csv",
                       joint_metrics_csv(result.curve, false));
    const fs::path ckpt = fs::path(cfg.out_dir) / "joint.ckpt";
    journal.track(ckpt);
    save_joint(ckpt.string(), result.model);

    std::vector<std::string> inputs = {dataset_manifest_path(ds)};
    if (!cfg.joint_init_encoder.empty()) inputs.push_back(cfg.joint_init_encoder);
    write_run_manifest(journal, cfg, "train-joint", inputs, {"metrics.csv", "joint.ckpt"});
}

void cmd_probe(const RunConfig& cfg, OutputJournal& journal) {
    require(cfg.out_dir, "out.dir", "probe");
    const LoadedDataset ds = load_input_dataset(cfg.data_dir, "data.dir", "probe");
    const Encoder enc = load_encoder(require(cfg.model_encoder, "model.encoder", "probe"));

    const double f1 = linear_probe(enc, ds, ds.split_indices("train"),
                                   ds.split_indices("test"), cfg.probe_config());
    journal.write_text(fs::path(cfg.out_dir) / "probe.csv",
                       "encoder_kind,probe_f1\n" + encoder_kind_name(enc.kind) + "," +
                           fnum(f1) + "\n");
    write_run_manifest(journal, cfg, "probe",
                       {dataset_manifest_path(ds), cfg.model_encoder}, {"probe.csv"});
}

void cmd_eval(const RunConfig& cfg, OutputJournal& journal) {
    require(cfg.out_dir, "out.dir", "eval");
    const LoadedDataset ds = load_input_dataset(cfg.data_dir, "data.dir", "eval");
    const DetectorModel det =
        load_detector(require(cfg.model_detector, "model.detector", "eval"));
    const Encoder enc = load_encoder(require(cfg.model_encoder, "model.encoder", "eval"));
    const LinearHead head = load_head(require(cfg.model_head, "model.head", "eval"));

    const MatchReport report =
        evaluate_pipeline(det, enc, head, ds, ds.split_indices("test"), cfg.det_tau,
                          cfg.det_suppress, cfg.eval_radius);
    journal.write_text(fs::path(cfg.out_dir) / "eval.csv", report_csv(report));
    write_run_manifest(
        journal, cfg, "eval",
        {dataset_manifest_path(ds), cfg.model_detector, cfg.model_encoder, cfg.model_head},
        {"eval.csv"});
}

void cmd_predict(const RunConfig& cfg, OutputJournal& journal) {
    require(cfg.out_dir, "out.dir", "predict");
    const LoadedDataset ds = load_input_dataset(cfg.data_dir, "data.dir", "predict");
    const DetectorModel det =
        load_detector(require(cfg.model_detector, "model.detector", "predict"));
    const Encoder enc = load_encoder(require(cfg.model_encoder, "model.encoder", "predict"));
    const LinearHead head = load_head(require(cfg.model_head, "model.head", "predict"));

    std::string index = "image,predictions\n";
    std::vector<std::string> outputs = {"index.csv"};
    for (int idx : ds.split_indices("test")) {
        const auto& sample = ds.samples[static_cast<std::size_t>(idx)];
        const auto& entry = ds.manifest.entries[static_cast<std::size_t>(idx)];
        const auto preds =
            predict(sample.image, det, enc, head, cfg.det_tau, cfg.det_suppress);
        const std::string name =
            fs::path(entry.image).stem().string() + ".csv";
        journal.write_text(fs::path(cfg.out_dir) / "predictions" / name,
                           predictions_csv(preds));
        index += entry.image + "," + std::to_string(preds.size()) + "\n";
        outputs.push_back("predictions/" + name);
    }
    journal.write_text(fs::path(cfg.out_dir) / "index.csv", index);
    write_run_manifest(
        journal, cfg, "predict",
        {dataset_manifest_path(ds), cfg.model_detector, cfg.model_encoder, cfg.model_head},
        outputs);
}

void cmd_dynamics(const RunConfig& cfg, OutputJournal& journal) {
    require(cfg.out_dir, "out.dir", "dynamics");
    const LoadedDataset ds = load_input_dataset(cfg.data_dir, "data.dir", "dynamics");

    JointTrainConfig jcfg = cfg.joint_config();
    Encoder init;
    if (!cfg.joint_init_encoder.empty()) {
        init = load_encoder(cfg.joint_init_encoder);
        jcfg.init_backbone = &init;
    }
    const auto train_idx = ds.split_indices("train");
    const auto test_idx = ds.split_indices("test");
    const ProbeConfig pcfg = cfg.probe_config();
    const ProbeHook hook = [&](int, const JointModel& model) {
        return linear_probe(model.as_encoder(), ds, train_idx, test_idx, pcfg);
    };
    const TrainedJoint result = train_joint(ds, jcfg, hook);

    journal.write_text(fs::path(cfg.out_dir) / "metrics.csv",
                       joint_metrics_csv(result.curve, true));
    std::string trajectory = "epoch,probe_f1\n";
    std::vector<CurvePoint> det_curve, cls_curve;
    for (const auto& e : result.curve) {
        trajectory += std::to_string(e.epoch) + "," + fnum(e.probe_f1) + "\n";
        det_curve.push_back({e.epoch, e.det_f1});
        cls_curve.push_back({e.epoch, e.cls_f1});
    }
    journal.write_text(fs::path(cfg.out_dir) / "probe_trajectory.csv", trajectory);

    std::string conv = "metric,epochs_to_95pct\n";
    conv += "detection_f1," + std::to_string(convergence_epochs(det_curve, 0.95)) + "\n";
    conv += "classification_f1," + std::to_string(convergence_epochs(cls_curve, 0.95)) + "\n";
    journal.write_text(fs::path(cfg.out_dir) / "convergence.csv", conv);

    const fs::path ckpt = fs::path(cfg.out_dir) / "joint.ckpt";
    journal.track(ckpt);
    save_joint(ckpt.string(), result.model);

    std::vector<std::string> inputs = {dataset_manifest_path(ds)};
    if (!cfg.joint_init_encoder.empty()) inputs.push_back(cfg.joint_init_encoder);
    write_run_manifest(journal, cfg, "dynamics", inputs,
                       {"metrics.csv", "probe_trajectory.csv", "convergence.csv",
                        "joint.ckpt"});
}

void cmd_ablate_capacity(const RunConfig& cfg, OutputJournal& journal) {
    require(cfg.out_dir, "out.dir", "ablate-capacity");
    const LoadedDataset ds =
        load_input_dataset(cfg.data_dir, "data.dir", "ablate-capacity");
    const std::vector<int> widths = parse_width_list(cfg.ablate_widths);
    if (cfg.ablate_seeds < 1) throw ConfigError("ablate.seeds must be >= 1");

    std::string csv = "width,seed,detection_f1\n";
    for (int width : widths) {
        std::vector<double> finals;
        for (int k = 0; k < cfg.ablate_seeds; ++k) {
            DetectorTrainConfig dcfg = cfg.detector_config();
            dcfg.width = width;
            dcfg.seed = cfg.seed + static_cast<std::uint64_t>(k);
            const TrainedDetector r = train_detector({&ds}, dcfg);
            const double f1 = r.curve.back().val_det_f1;
            finals.push_back(f1);
            csv += std::to_string(width) + "," + std::to_string(dcfg.seed) + "," + fnum(f1) +
                   "\n";
        }
        csv += std::to_string(width) + ",median," + fnum(median(finals)) + "\n";
    }
    journal.write_text(fs::path(cfg.out_dir) / "summary.csv", csv);
    write_run_manifest(journal, cfg, "ablate-capacity", {dataset_manifest_path(ds)},
                       {"summary.csv"});
}

void cmd_ablate_datasets(const RunConfig& cfg, OutputJournal& journal) {
    require(cfg.out_dir, "out.dir", "ablate-datasets");
    const LoadedDataset small =
        load_input_dataset(cfg.data_dir, "data.dir", "ablate-datasets");
    const LoadedDataset extra =
        load_input_dataset(cfg.data_second, "data.second_dir", "ablate-datasets");
    if (cfg.ablate_seeds < 1) throw ConfigError("ablate.seeds must be >= 1");

    std::string csv = "mode,seed,detection_f1\n";
    std::vector<double> sep_finals, joint_finals;
    for (int pass = 0; pass < 2; ++pass) {
        const bool joint = pass == 1;
        for (int k = 0; k < cfg.ablate_seeds; ++k) {
            DetectorTrainConfig dcfg = cfg.detector_config();
            dcfg.seed = cfg.seed + static_cast<std::uint64_t>(k);
            std::vector<const LoadedDataset*> sets = {&small};
            if (joint) sets.push_back(&extra);
            const TrainedDetector r = train_detector(sets, dcfg);
            const double f1 = r.curve.back().val_det_f1;
            (joint ? joint_finals : sep_finals).push_back(f1);
            csv += std::string(joint ? "joint" : "separated") + "," +
                   std::to_string(dcfg.seed) + "," + fnum(f1) + "\n";
        }
        csv += std::string(joint ? "joint" : "separated") + ",median," +
               fnum(median(joint ? joint_finals : sep_finals)) + "\n";
    }
    journal.write_text(fs::path(cfg.out_dir) / "summary.csv", csv);
    write_run_manifest(journal, cfg, "ablate-datasets",
                       {dataset_manifest_path(small), dataset_manifest_path(extra)},
                       {"summary.csv"});
}

void cmd_ablate_strategy(const RunConfig& cfg, OutputJournal& journal) {
    require(cfg.out_dir, "out.dir", "ablate-strategy");
    const LoadedDataset ds =
        load_input_dataset(cfg.data_dir, "data.dir", "ablate-strategy");
    const Encoder base_enc =
        load_encoder(require(cfg.model_encoder, "model.encoder", "ablate-strategy"));
    const DetectorModel det =
        load_detector(require(cfg.model_detector, "model.detector", "ablate-strategy"));
    if (cfg.ablate_seeds < 1) throw ConfigError("ablate.seeds must be >= 1");

    const int classes = ds.manifest.spec.classes;
    const auto test_idx = ds.split_indices("test");

    std::string csv = "strategy,seed,avg_f1";
    for (int c = 1; c <= classes; ++c) csv += ",f1_class_" + std::to_string(c);
    csv += "\n";
    auto append_row = [&](const std::string& strategy, const std::string& seed,
                          double avg, const std::vector<double>& per_class) {
        csv += strategy + "," + seed + "," + fnum(avg);
        for (double v : per_class) csv += "," + fnum(v);
        csv += "\n";
    };

    for (const std::string strategy : {"linear", "full", "end_to_end"}) {
        std::vector<double> avgs;
        std::vector<std::vector<double>> per_class(static_cast<std::size_t>(classes));
        for (int k = 0; k < cfg.ablate_seeds; ++k) {
            const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(k);
            MatchReport report;
            if (strategy == "end_to_end") {
                JointTrainConfig jcfg = cfg.joint_config();
                jcfg.seed = seed;
                const TrainedJoint r = train_joint(ds, jcfg);
                report = evaluate_joint(r.model, ds, test_idx, cfg.det_tau, cfg.det_suppress,
                                        cfg.eval_radius);
            } else {
                Encoder enc = base_enc;
                ClassifierTrainConfig ccfg = cfg.classifier_config();
                ccfg.seed = seed;
                ccfg.mode = strategy == "full" ? ClsMode::Full : ClsMode::Linear;
                if (ccfg.mode == ClsMode::Full) enc.frozen = false;
                const TrainedClassifier r = train_classifier(enc, ds, ccfg);
                report = evaluate_pipeline(det, enc, r.head, ds, test_idx, cfg.det_tau,
                                           cfg.det_suppress, cfg.eval_radius);
            }
            avgs.push_back(report.avg_f1);
            for (int c = 0; c < classes; ++c)
                per_class[static_cast<std::size_t>(c)].push_back(
                    report.f1[static_cast<std::size_t>(c)]);
            append_row(strategy, std::to_string(seed), report.avg_f1, report.f1);
        }
        std::vector<double> med_class;
        for (int c = 0; c < classes; ++c)
            med_class.push_back(median(per_class[static_cast<std::size_t>(c)]));
        append_row(strategy, "median", median(avgs), med_class);
    }
    journal.write_text(fs::path(cfg.out_dir) / "summary.csv", csv);
    write_run_manifest(
        journal, cfg, "ablate-strategy",
        {dataset_manifest_path(ds), cfg.model_encoder, cfg.model_detector}, {"summary.csv"});
}

using CommandFn = std::function<void(const RunConfig&, OutputJournal&)>;

const std::vector<std::pair<std::string, CommandFn>>& command_table() {
    static const std::vector<std::pair<std::string, CommandFn>> table = {
        {"gen-data", cmd_gen_data},
        {"train-det", cmd_train_det},
        {"train-cls", cmd_train_cls},
        {"train-joint", cmd_train_joint},
        {"pretrain-enc", cmd_pretrain_enc},
        {"probe", cmd_probe},
        {"eval", cmd_eval},
        {"predict", cmd_predict},
        {"ablate-capacity", cmd_ablate_capacity},
        {"ablate-datasets", cmd_ablate_datasets},
        {"ablate-strategy", cmd_ablate_strategy},
        {"dynamics", cmd_dynamics},
    };
    return table;
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& [name, fn] : command_table()) out.push_back(name);
        return out;
    }();
    return names;
}

void run_command(const std::string& command, const RunConfig& cfg) {
    const CommandFn* fn = nullptr;
    for (const auto& [name, f] : command_table())
        if (name == command) fn = &f;
    if (fn == nullptr) {
        std::string msg = "unknown command '" + command + "'; commands are:";
        for (const auto& name : command_names()) msg += " " + name;
        throw UsageError(msg);
    }
    OutputJournal journal;
    try {
        (*fn)(cfg, journal);
    } catch (...) {
        journal.discard_all();
        throw;
    }
}

}  // namespace pointdc
