#include "pointdc/classifier.hpp"

#include <algorithm>
#include <cmath>

#include "pointdc/evalkit.hpp"
#include "pointdc/losses.hpp"
#include "pointdc/optim.hpp"

namespace pointdc {

LinearHead LinearHead::create(int classes, int feat_dim) {
    if (classes < 1 || feat_dim < 1)
        throw ConfigError("linear head needs positive class and feature counts");
    LinearHead h;
    h.weight = Tensor({classes, feat_dim});
    h.bias = Tensor({classes});
    return h;
}

Tensor head_logits(const LinearHead& head, const std::vector<double>& feat) {
    if (static_cast<int>(feat.size()) != head.feat_dim())
        throw ShapeError("head_logits: feature length " + std::to_string(feat.size()) +
                         " does not match head dim " + std::to_string(head.feat_dim()));
    return dense(head.weight, head.bias, Tensor({head.feat_dim()}, feat));
}

std::vector<double> softmax_vec(const Tensor& logits) {
    const auto& z = logits.values();
    double m = z[0];
    for (double v : z) m = std::max(m, v);
    std::vector<double> p(z.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        p[i] = std::exp(z[i] - m);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

PredictionSet classify_points(const Encoder& enc, const LinearHead& head,
                              const Tensor& image, const std::vector<Detection>& points) {
    PredictionSet out;
    if (points.empty()) return out;
    const FeatureMap f = enc.encode(image);
    out.reserve(points.size());
    for (const auto& d : points) {
        const auto feat = bilinear_sample(f, d.p);
        const auto probs = softmax_vec(head_logits(head, feat));
        int best = 0;
        for (std::size_t c = 1; c < probs.size(); ++c)
            if (probs[c] > probs[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
        out.push_back({d.p, best + 1, d.score, probs[static_cast<std::size_t>(best)]});
    }
    return out;
}

PredictionSet classify_points(const Encoder& enc, const LinearHead& head,
                              const Tensor& image, const std::vector<Point>& points) {
    std::vector<Detection> dets;
    dets.reserve(points.size());
    for (const auto& p : points) dets.push_back({p, 1.0});
    return classify_points(enc, head, image, dets);
}

// ---------------------------------------------------------------------------

namespace {

struct Supervised {
    int image_index = 0;
    Point p;
    int label = 0;  // 0-based
};

std::vector<Supervised> collect_supervision(const LoadedDataset& ds,
                                            const ClassifierTrainConfig& cfg) {
    std::vector<Supervised> out;
    const auto train_idx = ds.split_indices("train");
    if (cfg.supervision == ClsSupervision::GroundTruth) {
        for (int idx : train_idx)
            for (const auto& a : ds.samples[static_cast<std::size_t>(idx)].annotations)
                out.push_back({idx, a.p, a.cls - 1});
        return out;
    }
    if (cfg.detector == nullptr)
        throw UsageError("detector supervision requires a detector model");
    const auto& spec = ds.manifest.spec;
    const GridSpec grid = build_grid(spec.height, spec.width, cfg.detector->stride);
    for (int idx : train_idx) {
        const auto& sample = ds.samples[static_cast<std::size_t>(idx)];
        const auto fwd = cfg.detector->forward(sample.image);
        const auto dets = decode(fwd.scores, fwd.offsets, grid, cfg.tau);
        std::vector<Point> det_pts, gt_pts;
        for (const auto& d : dets) det_pts.push_back(d.p);
        for (const auto& a : sample.annotations) gt_pts.push_back(a.p);
        for (const auto& [gi, di] : match_one_to_one(det_pts, gt_pts, cfg.match_radius))
            out.push_back({idx, det_pts[static_cast<std::size_t>(di)],
                           sample.annotations[static_cast<std::size_t>(gi)].cls - 1});
    }
    return out;
}

struct HeadParams {
    ParamSet set;
    HeadParams(const LinearHead& h) {
        set.add("head.w", h.weight);
        set.add("head.b", h.bias);
    }
    LinearHead head() const {
        LinearHead h;
        h.weight = set.entry("head.w").value;
        h.bias = set.entry("head.b").value;
        return h;
    }
};

// label F1 (matching protocol at GT coordinates) of head+encoder on a split
double gt_label_f1(const Encoder& enc, const LinearHead& head, const LoadedDataset& ds,
                   const std::vector<int>& indices, double radius, int classes) {
    MatchCounts total(classes);
    for (int idx : indices) {
        const auto& sample = ds.samples[static_cast<std::size_t>(idx)];
        std::vector<Point> pts;
        for (const auto& a : sample.annotations) pts.push_back(a.p);
        const auto preds = classify_points(enc, head, sample.image, pts);
        total.add(match_counts(preds, sample.annotations, radius, classes));
    }
    return report_from_counts(total, radius).avg_f1;
}

// same, but on fixed pre-sampled feature vectors (linear mode fast path)
struct CachedSplit {
    // per image: feature vectors at GT coordinates, plus the annotations
    std::vector<std::vector<std::vector<double>>> feats;
    std::vector<const std::vector<PointAnnotation>*> anns;
};

CachedSplit cache_split(const Encoder& enc, const LoadedDataset& ds,
                        const std::vector<int>& indices) {
    CachedSplit out;
    for (int idx : indices) {
        const auto& sample = ds.samples[static_cast<std::size_t>(idx)];
        const FeatureMap f = enc.encode(sample.image);
        std::vector<std::vector<double>> feats;
        for (const auto& a : sample.annotations) feats.push_back(bilinear_sample(f, a.p));
        out.feats.push_back(std::move(feats));
        out.anns.push_back(&sample.annotations);
    }
    return out;
}

double cached_label_f1(const LinearHead& head, const CachedSplit& split, double radius,
                       int classes) {
    MatchCounts total(classes);
    for (std::size_t s = 0; s < split.feats.size(); ++s) {
        PredictionSet preds;
        for (std::size_t k = 0; k < split.feats[s].size(); ++k) {
            const auto probs = softmax_vec(head_logits(head, split.feats[s][k]));
            int best = 0;
            for (std::size_t c = 1; c < probs.size(); ++c)
                if (probs[c] > probs[static_cast<std::size_t>(best)])
                    best = static_cast<int>(c);
            preds.push_back({(*split.anns[s])[k].p, best + 1, 1.0,
                             probs[static_cast<std::size_t>(best)]});
        }
        total.add(match_counts(preds, *split.anns[s], radius, classes));
    }
    return report_from_counts(total, radius).avg_f1;
}

// one CE epoch over fixed feature vectors; returns mean batch loss
double linear_epoch(ParamSet& head, const std::vector<const std::vector<double>*>& feats,
                    const std::vector<int>& labels, int classes, Rng& shuffle_rng,
                    int batch, double lr, double momentum) {
    std::vector<std::size_t> order(feats.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle_rng.shuffle(order);

    auto& w = head.entry("head.w");
    auto& b = head.entry("head.b");
    const int dim = w.value.dim(1);

    double loss_sum = 0.0;
    long batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch)) {
        const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(batch));
        const int n = static_cast<int>(stop - start);
        Tensor logits({n, classes});
        std::vector<int> batch_labels(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) {
            const auto& f = *feats[order[start + static_cast<std::size_t>(k)]];
            for (int c = 0; c < classes; ++c) {
                const double* wrow = w.value.data() + static_cast<std::size_t>(c) * dim;
                double z = b.value[static_cast<std::size_t>(c)];
                for (int d = 0; d < dim; ++d) z += wrow[d] * f[static_cast<std::size_t>(d)];
                logits.at(k, c) = z;
            }
            batch_labels[static_cast<std::size_t>(k)] =
                labels[order[start + static_cast<std::size_t>(k)]];
        }
        const ScalarLoss ce = softmax_cross_entropy(logits, batch_labels);
        head.zero_grads();
        for (int k = 0; k < n; ++k) {
            const auto& f = *feats[order[start + static_cast<std::size_t>(k)]];
            for (int c = 0; c < classes; ++c) {
                const double g = ce.grad.at(k, c);
                if (g == 0.0) continue;
                b.grad[static_cast<std::size_t>(c)] += g;
                double* grow = w.grad.data() + static_cast<std::size_t>(c) * dim;
                for (int d = 0; d < dim; ++d) grow[d] += g * f[static_cast<std::size_t>(d)];
            }
        }
        sgd_step(head, lr, momentum);
        loss_sum += ce.loss;
        ++batches;
    }
    return batches > 0 ? loss_sum / static_cast<double>(batches) : 0.0;
}

}  // namespace

TrainedClassifier train_classifier(Encoder& enc, const LoadedDataset& ds,
                                   const ClassifierTrainConfig& cfg) {
    const int classes = ds.manifest.spec.classes;
    const auto val_idx = ds.split_indices("test");
    const auto supervision = collect_supervision(ds, cfg);
    if (supervision.empty())
        throw DataError("classifier training found no supervised points");

    TrainedClassifier out;
    out.head = LinearHead::create(classes, enc.out_channels());
    HeadParams head(out.head);

    if (cfg.mode == ClsMode::Linear) {
        const std::uint64_t before = enc.checksum();

        // frozen features: sample every supervision point once
        std::vector<std::vector<double>> feat_store;
        feat_store.reserve(supervision.size());
        {
            int cur = -1;
            FeatureMap fmap;
            for (const auto& s : supervision) {
                if (s.image_index != cur) {
                    cur = s.image_index;
                    fmap = enc.encode(ds.samples[static_cast<std::size_t>(cur)].image);
                }
                feat_store.push_back(bilinear_sample(fmap, s.p));
            }
        }
        std::vector<const std::vector<double>*> feats;
        std::vector<int> labels;
        for (std::size_t i = 0; i < supervision.size(); ++i) {
            feats.push_back(&feat_store[i]);
            labels.push_back(supervision[i].label);
        }
        const CachedSplit val = cache_split(enc, ds, val_idx);

        for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
            Rng shuffle_rng(mix_seed(cfg.seed, 0x3100 + static_cast<std::uint64_t>(epoch)));
            const double lr = cosine_lr(cfg.lr, epoch, cfg.epochs);
            const double loss =
                linear_epoch(head.set, feats, labels, classes, shuffle_rng, cfg.batch, lr,
                             cfg.momentum);
            out.head = head.head();
            out.curve.push_back({epoch, loss,
                                 val_idx.empty() ? 0.0
                                                 : cached_label_f1(out.head, val,
                                                                   cfg.match_radius, classes)});
        }
        if (enc.checksum() != before)
            throw UsageError("frozen-contract violation: encoder changed in linear mode");
        return out;
    }

    // full mode: gradients flow into the encoder
    if (enc.frozen)
        throw UsageError("full mode cannot fine-tune a frozen encoder; clear the frozen flag");

    auto& hw = head.set.entry("head.w");
    auto& hb = head.set.entry("head.b");
    const int dim = hw.value.dim(1);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(mix_seed(cfg.seed, 0x3100 + static_cast<std::uint64_t>(epoch)));
        std::vector<std::size_t> order(supervision.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        shuffle_rng.shuffle(order);
        const double lr = cosine_lr(cfg.lr, epoch, cfg.epochs);

        double loss_sum = 0.0;
        long batches = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
            const int n = static_cast<int>(stop - start);

            // group the batch by image so each image is encoded once
            std::vector<std::size_t> members(order.begin() + static_cast<long>(start),
                                             order.begin() + static_cast<long>(stop));
            std::stable_sort(members.begin(), members.end(),
                             [&](std::size_t a, std::size_t b) {
                                 return supervision[a].image_index < supervision[b].image_index;
                             });

            struct ImageGroup {
                int image_index;
                ConvStack::Cache cache;
                FeatureMap fmap;
                Tensor dvalues;
            };
            std::vector<ImageGroup> groups;
            Tensor logits({n, classes});
            std::vector<int> batch_labels(static_cast<std::size_t>(n));
            std::vector<std::pair<int, int>> row_group;  // (group, local row)

            for (std::size_t m = 0; m < members.size(); ++m) {
                const auto& s = supervision[members[m]];
                if (groups.empty() || groups.back().image_index != s.image_index) {
                    groups.push_back({s.image_index, {}, {}, Tensor()});
                    auto& g = groups.back();
                    g.fmap = enc.encode(
                        ds.samples[static_cast<std::size_t>(s.image_index)].image, &g.cache);
                    g.dvalues = Tensor(g.fmap.values.shape());
                }
                auto& g = groups.back();
                const auto f = bilinear_sample(g.fmap, s.p);
                const int row = static_cast<int>(m);
                for (int c = 0; c < classes; ++c) {
                    const double* wrow = hw.value.data() + static_cast<std::size_t>(c) * dim;
                    double z = hb.value[static_cast<std::size_t>(c)];
                    for (int d = 0; d < dim; ++d) z += wrow[d] * f[static_cast<std::size_t>(d)];
                    logits.at(row, c) = z;
                }
                batch_labels[m] = s.label;
                row_group.emplace_back(static_cast<int>(groups.size()) - 1, row);
            }

            const ScalarLoss ce = softmax_cross_entropy(logits, batch_labels);
            loss_sum += ce.loss;
            ++batches;

            enc.params.zero_grads();
            head.set.zero_grads();
            for (std::size_t m = 0; m < members.size(); ++m) {
                const auto& s = supervision[members[m]];
                auto& g = groups[static_cast<std::size_t>(row_group[m].first)];
                const int row = row_group[m].second;
                const auto f = bilinear_sample(g.fmap, s.p);
                std::vector<double> dfeat(static_cast<std::size_t>(dim), 0.0);
                for (int c = 0; c < classes; ++c) {
                    const double gz = ce.grad.at(row, c);
                    if (gz == 0.0) continue;
                    hb.grad[static_cast<std::size_t>(c)] += gz;
                    double* grow = hw.grad.data() + static_cast<std::size_t>(c) * dim;
                    const double* wrow = hw.value.data() + static_cast<std::size_t>(c) * dim;
                    for (int d = 0; d < dim; ++d) {
                        grow[d] += gz * f[static_cast<std::size_t>(d)];
                        dfeat[static_cast<std::size_t>(d)] += gz * wrow[d];
                    }
                }
                bilinear_sample_backward(g.fmap, s.p, dfeat, g.dvalues);
            }
            for (auto& g : groups)
                enc.backbone.backward(enc.params, g.cache, std::move(g.dvalues));
            sgd_step(head.set, lr, cfg.momentum);
            sgd_step(enc.params, lr, cfg.momentum);
        }

        out.head = head.head();
        out.curve.push_back({epoch, batches > 0 ? loss_sum / static_cast<double>(batches) : 0.0,
                             val_idx.empty() ? 0.0
                                             : gt_label_f1(enc, out.head, ds, val_idx,
                                                           cfg.match_radius, classes)});
    }
    return out;
}

double linear_probe(const Encoder& enc, const LoadedDataset& ds,
                    const std::vector<int>& train_idx, const std::vector<int>& val_idx,
                    const ProbeConfig& cfg) {
    const int classes = ds.manifest.spec.classes;
    const std::uint64_t before = enc.checksum();

    std::vector<std::vector<double>> feat_store;
    std::vector<int> labels;
    for (int idx : train_idx) {
        const auto& sample = ds.samples[static_cast<std::size_t>(idx)];
        const FeatureMap f = enc.encode(sample.image);
        for (const auto& a : sample.annotations) {
            feat_store.push_back(bilinear_sample(f, a.p));
            labels.push_back(a.cls - 1);
        }
    }
    if (feat_store.empty()) throw DataError("linear probe found no training points");
    std::vector<const std::vector<double>*> feats;
    for (const auto& f : feat_store) feats.push_back(&f);

    HeadParams head(LinearHead::create(classes, enc.out_channels()));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(mix_seed(cfg.seed, 0x3700 + static_cast<std::uint64_t>(epoch)));
        linear_epoch(head.set, feats, labels, classes, shuffle_rng, cfg.batch,
                     cosine_lr(cfg.lr, epoch, cfg.epochs), cfg.momentum);
    }

    const CachedSplit val = cache_split(enc, ds, val_idx);
    const double f1 = cached_label_f1(head.head(), val, cfg.radius, classes);
    if (enc.checksum() != before)
        throw UsageError("frozen-contract violation: encoder changed during probing");
    return f1;
}

PredictionSet predict(const Tensor& image, const DetectorModel& det, const Encoder& enc,
                      const LinearHead& head, double tau, double suppress_radius) {
    const GridSpec grid = build_grid(image.dim(1), image.dim(2), det.stride);
    const auto fwd = det.forward(image);
    auto dets = decode(fwd.scores, fwd.offsets, grid, tau);
    if (suppress_radius > 0.0) dets = suppress_duplicates(std::move(dets), suppress_radius);
    return classify_points(enc, head, image, dets);
}

}  // namespace pointdc
