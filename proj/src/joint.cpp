#include "pointdc/joint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pointdc/evalkit.hpp"
#include "pointdc/losses.hpp"
#include "pointdc/optim.hpp"

namespace pointdc {

JointModel JointModel::create(int width, int classes, std::uint64_t seed, int in_ch) {
    if (classes < 1) throw ConfigError("joint model needs at least one class");
    JointModel m;
    m.width = width;
    m.classes = classes;
    m.backbone = make_backbone("backbone", in_ch, width);
    Rng rng(seed);
    m.backbone.register_params(m.params, rng);
    const int c = m.backbone.out_channels();
    // zero-init heads, matching the detector (see DetectorModel::create)
    m.params.add("score.w", Tensor({1, c, 1, 1}));
    m.params.add("score.b", Tensor({1}, {kScoreBiasInit}));
    m.params.add("offset.w", Tensor({2, c, 1, 1}));
    m.params.add("offset.b", Tensor({2}));
    m.params.add("cls.w", Tensor({classes, c, 1, 1}));
    m.params.add("cls.b", Tensor({classes}));
    return m;
}

JointModel::Forward JointModel::forward(const Tensor& image) const {
    Forward f;
    f.features = backbone.forward(params, image, &f.backbone_cache);
    const Tensor logit = conv2d(f.features, params.entry("score.w").value,
                                params.entry("score.b").value, 1, 0);
    f.score_sig = sigmoid(logit);
    const int gh = f.score_sig.dim(1), gw = f.score_sig.dim(2);
    f.scores = Tensor({gh, gw}, f.score_sig.values());
    f.offsets = conv2d(f.features, params.entry("offset.w").value,
                       params.entry("offset.b").value, 1, 0);
    f.class_logits = conv2d(f.features, params.entry("cls.w").value,
                            params.entry("cls.b").value, 1, 0);
    return f;
}

void JointModel::backward(const Forward& fwd, const Tensor& dscores,
                          const Tensor& doffsets, const Tensor& dclass_logits) {
    const int gh = fwd.scores.dim(0), gw = fwd.scores.dim(1);
    if (dscores.dim(0) != gh || dscores.dim(1) != gw)
        throw ShapeError("joint backward: dscores shape mismatch");

    const Tensor dsig({1, gh, gw}, dscores.values());
    const Tensor dlogit = sigmoid_backward(fwd.score_sig, dsig);

    auto accumulate_head = [&](const char* wname, const char* bname,
                               const Tensor& grad_out) {
        auto& w = params.entry(wname);
        auto& b = params.entry(bname);
        ConvGrads g = conv2d_backward(fwd.features, w.value, 1, 0, grad_out);
        w.grad.add_scaled(g.weight, 1.0);
        b.grad.add_scaled(g.bias, 1.0);
        return std::move(g.input);
    };

    Tensor dfeat = accumulate_head("score.w", "score.b", dlogit);
    dfeat.add_scaled(accumulate_head("offset.w", "offset.b", doffsets), 1.0);
    dfeat.add_scaled(accumulate_head("cls.w", "cls.b", dclass_logits), 1.0);
    backbone.backward(params, fwd.backbone_cache, std::move(dfeat));
}

Encoder JointModel::as_encoder() const {
    Encoder enc = Encoder::create(width, 0, EncoderKind::Trainable, true);
    for (auto& e : enc.params.entries())
        e.value = params.entry(e.name).value;
    return enc;
}

JointLoss joint_loss(const JointModel::Forward& fwd, const GridSpec& grid,
                     const std::vector<int>& assignment,
                     const std::vector<PointAnnotation>& gt, double lambda_reg,
                     double lambda_cls) {
    std::vector<Point> gt_pts;
    gt_pts.reserve(gt.size());
    for (const auto& a : gt) gt_pts.push_back(a.p);

    const DetectionLoss det =
        detection_loss(fwd.scores, fwd.offsets, grid, assignment, gt_pts, lambda_reg);

    JointLoss out;
    out.bce = det.bce;
    out.reg = det.reg;
    out.det = det.loss;
    out.dscores = det.dscores;
    out.doffsets = det.doffsets;
    out.dclass_logits = Tensor(fwd.class_logits.shape());

    const int classes = fwd.class_logits.dim(0);
    if (!gt.empty() && lambda_cls != 0.0) {
        const int n = static_cast<int>(gt.size());
        Tensor logits({n, classes});
        std::vector<int> labels(gt.size());
        for (int k = 0; k < n; ++k) {
            const int idx = assignment[static_cast<std::size_t>(k)];
            const int i = idx / grid.gw, j = idx % grid.gw;
            for (int c = 0; c < classes; ++c) logits.at(k, c) = fwd.class_logits.at(c, i, j);
            const int cls = gt[static_cast<std::size_t>(k)].cls;
            if (cls < 1 || cls > classes)
                throw DataError("joint_loss: class id " + std::to_string(cls) +
                                " outside [1," + std::to_string(classes) + "]");
            labels[static_cast<std::size_t>(k)] = cls - 1;
        }
        const ScalarLoss ce = softmax_cross_entropy(logits, labels);
        out.cls_ce = ce.loss;
        for (int k = 0; k < n; ++k) {
            const int idx = assignment[static_cast<std::size_t>(k)];
            const int i = idx / grid.gw, j = idx % grid.gw;
            for (int c = 0; c < classes; ++c)
                out.dclass_logits.at(c, i, j) += lambda_cls * ce.grad.at(k, c);
        }
    }
    out.loss = out.det + lambda_cls * out.cls_ce;
    return out;
}

PredictionSet joint_predict(const JointModel::Forward& fwd, const GridSpec& grid,
                            double tau, double suppress_radius) {
    const int classes = fwd.class_logits.dim(0);
    PredictionSet preds;
    for (int i = 0; i < grid.gh; ++i) {
        for (int j = 0; j < grid.gw; ++j) {
            const double s = fwd.scores.at(i, j);
            if (s <= tau) continue;
            const Point a = grid.anchor(i, j);
            Tensor logits({classes});
            for (int c = 0; c < classes; ++c)
                logits[static_cast<std::size_t>(c)] = fwd.class_logits.at(c, i, j);
            const auto probs = [&] {
                std::vector<double> p(static_cast<std::size_t>(classes));
                double m = logits[0];
                for (int c = 1; c < classes; ++c)
                    m = std::max(m, logits[static_cast<std::size_t>(c)]);
                double sum = 0.0;
                for (int c = 0; c < classes; ++c) {
                    p[static_cast<std::size_t>(c)] =
                        std::exp(logits[static_cast<std::size_t>(c)] - m);
                    sum += p[static_cast<std::size_t>(c)];
                }
                for (auto& v : p) v /= sum;
                return p;
            }();
            int best = 0;
            for (int c = 1; c < classes; ++c)
                if (probs[static_cast<std::size_t>(c)] > probs[static_cast<std::size_t>(best)])
                    best = c;
            preds.push_back({{a.x + grid.stride * fwd.offsets.at(0, i, j),
                              a.y + grid.stride * fwd.offsets.at(1, i, j)},
                             best + 1, s, probs[static_cast<std::size_t>(best)]});
        }
    }
    if (suppress_radius > 0.0 && preds.size() > 1) {
        std::vector<std::size_t> order(preds.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return preds[a].det_score > preds[b].det_score;
        });
        PredictionSet kept;
        for (std::size_t i : order) {
            bool drop = false;
            for (const auto& k : kept)
                if (point_dist(k.p, preds[i].p) <= suppress_radius) {
                    drop = true;
                    break;
                }
            if (!drop) kept.push_back(preds[i]);
        }
        return kept;
    }
    return preds;
}

TrainedJoint train_joint(const LoadedDataset& ds, const JointTrainConfig& cfg,
                         const ProbeHook& probe_hook) {
    const auto train_idx = ds.split_indices("train");
    const auto val_idx = ds.split_indices("test");
    if (train_idx.empty()) throw DataError("joint training requires a training split");
    const auto& spec = ds.manifest.spec;

    TrainedJoint out;
    out.model = JointModel::create(cfg.width, spec.classes, mix_seed(cfg.seed, 0x11));
    if (cfg.init_backbone != nullptr) {
        const Encoder& src = *cfg.init_backbone;
        for (const auto& e : src.params.entries()) {
            auto& dst = out.model.params.entry(e.name);
            if (!dst.value.same_shape(e.value))
                throw UsageError("init backbone width does not match the joint model");
            dst.value = e.value;
        }
    }
    const GridSpec grid = build_grid(spec.height, spec.width, out.model.stride);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(mix_seed(cfg.seed, 0x5000 + static_cast<std::uint64_t>(epoch)));
        auto order = train_idx;
        shuffle_rng.shuffle(order);
        const double lr = cosine_lr(cfg.lr, epoch, cfg.epochs);

        double loss_sum = 0.0;
        long batch_count = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
            out.model.params.zero_grads();
            double batch_loss = 0.0;
            for (std::size_t s = start; s < stop; ++s) {
                const auto& sample = ds.samples[static_cast<std::size_t>(order[s])];
                const auto fwd = out.model.forward(sample.image);
                std::vector<Point> gt_pts;
                for (const auto& a : sample.annotations) gt_pts.push_back(a.p);
                const auto proposals = all_proposals(fwd.scores, fwd.offsets, grid);
                const auto assignment = assign_targets(proposals, gt_pts, cfg.mu_match);
                const JointLoss l = joint_loss(fwd, grid, assignment, sample.annotations,
                                               cfg.lambda_reg, cfg.lambda_cls);
                batch_loss += l.loss;
                out.model.backward(fwd, l.dscores, l.doffsets, l.dclass_logits);
            }
            const double inv = 1.0 / static_cast<double>(stop - start);
            out.model.params.scale_grads(inv);
            sgd_step(out.model.params, lr, cfg.momentum);
            loss_sum += batch_loss * inv;
            ++batch_count;
        }

        JointEpoch ep;
        ep.epoch = epoch;
        ep.train_loss = batch_count > 0 ? loss_sum / static_cast<double>(batch_count) : 0.0;
        MatchCounts counts(spec.classes);
        for (int idx : val_idx) {
            const auto& sample = ds.samples[static_cast<std::size_t>(idx)];
            const auto fwd = out.model.forward(sample.image);
            const auto preds = joint_predict(fwd, grid, cfg.tau, cfg.suppress_radius);
            counts.add(match_counts(preds, sample.annotations, cfg.eval_radius, spec.classes));
        }
        const MatchReport report = report_from_counts(counts, cfg.eval_radius);
        ep.det_f1 = report.det_f1;
        ep.cls_f1 = report.avg_f1;
        ep.probe_f1 = probe_hook ? probe_hook(epoch, out.model)
                                 : std::numeric_limits<double>::quiet_NaN();
        out.curve.push_back(ep);
    }
    return out;
}

}  // namespace pointdc
