#include "pointdc/detector.hpp"

#include <algorithm>
#include <cmath>

#include "pointdc/assignment.hpp"
#include "pointdc/losses.hpp"
#include "pointdc/optim.hpp"

namespace pointdc {

GridSpec build_grid(int height, int width, int stride) {
    if (stride <= 0) throw ShapeError("grid stride must be positive");
    if (height % stride != 0 || width % stride != 0)
        throw ShapeError("stride " + std::to_string(stride) + " does not divide image " +
                         std::to_string(width) + "x" + std::to_string(height));
    GridSpec g;
    g.stride = static_cast<double>(stride);
    g.gh = height / stride;
    g.gw = width / stride;
    return g;
}

ConvStack make_backbone(const std::string& prefix, int in_ch, int width) {
    if (width < 1) throw ConfigError("backbone width must be >= 1");
    ConvStack stack(prefix);
    stack.add({in_ch, 4 * width, 3, 1, 1, true});
    stack.add({4 * width, 8 * width, 3, 2, 1, true});
    stack.add({8 * width, 8 * width, 3, 2, 1, true});
    return stack;
}

DetectorModel DetectorModel::create(int width, std::uint64_t seed, int in_ch) {
    DetectorModel m;
    m.width = width;
    m.backbone = make_backbone("backbone", in_ch, width);
    Rng rng(seed);
    m.backbone.register_params(m.params, rng);
    const int c = m.backbone.out_channels();
    // zero-init heads: the trunk sees no gradient until the heads align with
    // discriminative feature directions, which keeps early updates from
    // shoving random momentum through the ReLU stack and killing channels
    m.params.add("score.w", Tensor({1, c, 1, 1}));
    // prior-probability bias init (pi = 0.01): most grid cells are background,
    // so starting near the base rate avoids a collapse phase where the summed
    // background BCE gradient swamps the few positive cells
    m.params.add("score.b", Tensor({1}, {kScoreBiasInit}));
    m.params.add("offset.w", Tensor({2, c, 1, 1}));
    m.params.add("offset.b", Tensor({2}));
    return m;
}

DetectorModel::Forward DetectorModel::forward(const Tensor& image) const {
    Forward f;
    f.features = backbone.forward(params, image, &f.backbone_cache);
    const Tensor logit = conv2d(f.features, params.entry("score.w").value,
                                params.entry("score.b").value, 1, 0);
    f.score_sig = sigmoid(logit);
    const int gh = f.score_sig.dim(1), gw = f.score_sig.dim(2);
    f.scores = Tensor({gh, gw}, f.score_sig.values());
    f.offsets = conv2d(f.features, params.entry("offset.w").value,
                       params.entry("offset.b").value, 1, 0);
    return f;
}

void DetectorModel::backward(const Forward& fwd, const Tensor& dscores,
                             const Tensor& doffsets) {
    const int gh = fwd.scores.dim(0), gw = fwd.scores.dim(1);
    if (dscores.dim(0) != gh || dscores.dim(1) != gw)
        throw ShapeError("detector backward: dscores shape mismatch");

    const Tensor dsig({1, gh, gw}, dscores.values());
    const Tensor dlogit = sigmoid_backward(fwd.score_sig, dsig);

    auto& sw = params.entry("score.w");
    auto& sb = params.entry("score.b");
    ConvGrads gs = conv2d_backward(fwd.features, sw.value, 1, 0, dlogit);
    sw.grad.add_scaled(gs.weight, 1.0);
    sb.grad.add_scaled(gs.bias, 1.0);

    auto& ow = params.entry("offset.w");
    auto& ob = params.entry("offset.b");
    ConvGrads go = conv2d_backward(fwd.features, ow.value, 1, 0, doffsets);
    ow.grad.add_scaled(go.weight, 1.0);
    ob.grad.add_scaled(go.bias, 1.0);

    Tensor dfeat = gs.input;
    dfeat.add_scaled(go.input, 1.0);
    backbone.backward(params, fwd.backbone_cache, std::move(dfeat));
}

std::vector<Detection> decode(const Tensor& scores, const Tensor& offsets,
                              const GridSpec& grid, double tau) {
    if (scores.ndim() != 2 || scores.dim(0) != grid.gh || scores.dim(1) != grid.gw)
        throw ShapeError("decode: score map " + scores.shape_str() + " does not match grid");
    if (offsets.ndim() != 3 || offsets.dim(0) != 2 || offsets.dim(1) != grid.gh ||
        offsets.dim(2) != grid.gw)
        throw ShapeError("decode: offset map " + offsets.shape_str() + " does not match grid");

    std::vector<Detection> out;
    for (int i = 0; i < grid.gh; ++i) {
        for (int j = 0; j < grid.gw; ++j) {
            const double s = scores.at(i, j);
            if (s > tau) {
                const Point a = grid.anchor(i, j);
                out.push_back({{a.x + grid.stride * offsets.at(0, i, j),
                                a.y + grid.stride * offsets.at(1, i, j)},
                               s});
            }
        }
    }
    return out;
}

std::vector<Detection> all_proposals(const Tensor& scores, const Tensor& offsets,
                                     const GridSpec& grid) {
    return decode(scores, offsets, grid, -1.0);
}

std::vector<int> assign_targets(const std::vector<Detection>& proposals,
                                const std::vector<Point>& gt, double mu) {
    if (gt.empty()) return {};
    if (proposals.size() < gt.size())
        throw UsageError("assign_targets needs at least as many proposals as targets");
    Tensor cost({static_cast<int>(gt.size()), static_cast<int>(proposals.size())});
    for (std::size_t i = 0; i < gt.size(); ++i)
        for (std::size_t j = 0; j < proposals.size(); ++j)
            cost.at(static_cast<int>(i), static_cast<int>(j)) =
                point_dist(proposals[j].p, gt[i]) - mu * proposals[j].score;
    return min_cost_assignment(cost);
}

DetectionLoss detection_loss(const Tensor& scores, const Tensor& offsets,
                             const GridSpec& grid, const std::vector<int>& assignment,
                             const std::vector<Point>& gt, double lambda_reg) {
    if (assignment.size() != gt.size())
        throw UsageError("detection_loss: assignment size must equal ground-truth size");

    Tensor targets(scores.shape());
    for (int idx : assignment) {
        if (idx < 0 || idx >= grid.cells())
            throw UsageError("detection_loss: assignment index out of range");
        targets[static_cast<std::size_t>(idx)] = 1.0;
    }

    DetectionLoss out;
    // BCE summed over the whole score map (not the per-element mean): keeps
    // per-cell score gradients at unit scale regardless of grid size, which is
    // what makes the published lr/batch defaults train at any resolution.
    ScalarLoss bce = binary_cross_entropy(scores, targets);
    const double cells = static_cast<double>(scores.size());
    out.bce = bce.loss * cells;
    out.dscores = std::move(bce.grad);
    for (double& g : out.dscores.values()) g *= cells;
    out.doffsets = Tensor(offsets.shape());

    if (!gt.empty() && lambda_reg != 0.0) {
        std::vector<Point> pred_n(gt.size()), target_n(gt.size());
        for (std::size_t k = 0; k < gt.size(); ++k) {
            const int idx = assignment[k];
            const int i = idx / grid.gw, j = idx % grid.gw;
            const Point a = grid.anchor(i, j);
            pred_n[k] = {offsets.at(0, i, j), offsets.at(1, i, j)};
            target_n[k] = {(gt[k].x - a.x) / grid.stride, (gt[k].y - a.y) / grid.stride};
        }
        PointLoss reg = l2_point_loss(pred_n, target_n);
        out.reg = lambda_reg * reg.loss;
        for (std::size_t k = 0; k < gt.size(); ++k) {
            const int idx = assignment[k];
            const int i = idx / grid.gw, j = idx % grid.gw;
            out.doffsets.at(0, i, j) += lambda_reg * reg.grads[k].x;
            out.doffsets.at(1, i, j) += lambda_reg * reg.grads[k].y;
        }
    }
    out.loss = out.bce + out.reg;
    return out;
}

std::vector<Detection> suppress_duplicates(std::vector<Detection> detections, double radius) {
    if (radius < 0.0) throw UsageError("suppression radius must be >= 0");
    if (radius == 0.0 || detections.size() <= 1) return detections;
    std::vector<std::size_t> order(detections.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return detections[a].score > detections[b].score;
    });
    std::vector<Detection> kept;
    for (std::size_t i : order) {
        bool drop = false;
        for (const auto& k : kept) {
            if (point_dist(k.p, detections[i].p) <= radius) {
                drop = true;
                break;
            }
        }
        if (!drop) kept.push_back(detections[i]);
    }
    return kept;
}

double detector_f1(const DetectorModel& model, const LoadedDataset& ds,
                   const std::vector<int>& indices, double tau, double radius,
                   double suppress_radius) {
    const auto& spec = ds.manifest.spec;
    const GridSpec grid = build_grid(spec.height, spec.width, model.stride);
    long tp = 0, fp = 0, fn = 0;
    for (int idx : indices) {
        const auto& sample = ds.samples[static_cast<std::size_t>(idx)];
        const auto fwd = model.forward(sample.image);
        auto dets = decode(fwd.scores, fwd.offsets, grid, tau);
        if (suppress_radius > 0.0) dets = suppress_duplicates(std::move(dets), suppress_radius);
        std::vector<Point> pred_pts, gt_pts;
        for (const auto& d : dets) pred_pts.push_back(d.p);
        for (const auto& a : sample.annotations) gt_pts.push_back(a.p);
        const auto pairs = match_one_to_one(pred_pts, gt_pts, radius);
        tp += static_cast<long>(pairs.size());
        fp += static_cast<long>(pred_pts.size()) - static_cast<long>(pairs.size());
        fn += static_cast<long>(gt_pts.size()) - static_cast<long>(pairs.size());
    }
    return f1_score(tp, fp, fn);
}

namespace {

// Round-robin batch plan over several training splits. Every dataset's
// shuffled index list is consumed exactly once per epoch.
struct BatchPlan {
    std::vector<std::pair<int, std::vector<int>>> batches;  // (dataset, sample indices)
};

BatchPlan plan_epoch(const std::vector<std::vector<int>>& shuffled, int batch_size) {
    BatchPlan plan;
    std::vector<std::size_t> cursor(shuffled.size(), 0);
    bool any = true;
    while (any) {
        any = false;
        for (std::size_t d = 0; d < shuffled.size(); ++d) {
            if (cursor[d] >= shuffled[d].size()) continue;
            std::vector<int> batch;
            while (cursor[d] < shuffled[d].size() &&
                   static_cast<int>(batch.size()) < batch_size)
                batch.push_back(shuffled[d][cursor[d]++]);
            plan.batches.emplace_back(static_cast<int>(d), std::move(batch));
            any = true;
        }
    }
    return plan;
}

}  // namespace

TrainedDetector train_detector(const std::vector<const LoadedDataset*>& datasets,
                               const DetectorTrainConfig& cfg) {
    if (datasets.empty()) throw UsageError("train_detector needs at least one dataset");
    for (const auto* ds : datasets)
        if (ds->split_indices("train").empty())
            throw DataError("dataset " + ds->manifest.dir + " has an empty training split");

    const auto& primary = *datasets[0];
    const auto& spec = primary.manifest.spec;
    for (const auto* ds : datasets) {
        if (ds->manifest.spec.height != spec.height || ds->manifest.spec.width != spec.width)
            throw DataError("joint detector training requires equal image sizes");
    }

    TrainedDetector out;
    out.model = DetectorModel::create(cfg.width, mix_seed(cfg.seed, 0x11));
    const GridSpec grid = build_grid(spec.height, spec.width, out.model.stride);
    const std::vector<int> val_idx = primary.split_indices("test");

    std::vector<std::vector<int>> train_idx;
    for (const auto* ds : datasets) train_idx.push_back(ds->split_indices("train"));

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(mix_seed(cfg.seed, 0x5000 + static_cast<std::uint64_t>(epoch)));
        auto shuffled = train_idx;
        for (auto& v : shuffled) shuffle_rng.shuffle(v);
        const BatchPlan plan = plan_epoch(shuffled, cfg.batch);
        const double lr = cosine_lr(cfg.lr, epoch, cfg.epochs);

        double loss_sum = 0.0;
        long loss_count = 0;
        for (const auto& [d, batch] : plan.batches) {
            out.model.params.zero_grads();
            double batch_loss = 0.0;
            for (int idx : batch) {
                const auto& sample = datasets[static_cast<std::size_t>(d)]
                                         ->samples[static_cast<std::size_t>(idx)];
                const auto fwd = out.model.forward(sample.image);
                std::vector<Point> gt;
                for (const auto& a : sample.annotations) gt.push_back(a.p);
                const auto proposals = all_proposals(fwd.scores, fwd.offsets, grid);
                const auto assignment = assign_targets(proposals, gt, cfg.mu_match);
                DetectionLoss l = detection_loss(fwd.scores, fwd.offsets, grid, assignment,
                                                 gt, cfg.lambda_reg);
                batch_loss += l.loss;
                out.model.backward(fwd, l.dscores, l.doffsets);
            }
            const double inv = 1.0 / static_cast<double>(batch.size());
            out.model.params.scale_grads(inv);
            sgd_step(out.model.params, lr, cfg.momentum);
            loss_sum += batch_loss * inv;
            ++loss_count;
        }

        DetectorEpoch ep;
        ep.epoch = epoch;
        ep.train_loss = loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0;
        ep.val_det_f1 = val_idx.empty()
                            ? 0.0
                            : detector_f1(out.model, primary, val_idx, cfg.tau,
                                          cfg.eval_radius, cfg.suppress_radius);
        out.curve.push_back(ep);
    }
    return out;
}

}  // namespace pointdc
