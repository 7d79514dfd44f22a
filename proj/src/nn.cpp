#include "pointdc/nn.hpp"

#include <cmath>

namespace pointdc {

void matmul_acc(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<std::size_t>(i) * k;
        double* crow = c + static_cast<std::size_t>(i) * n;
        for (int kk = 0; kk < k; ++kk) {
            const double av = arow[kk];
            if (av == 0.0) continue;
            const double* brow = b + static_cast<std::size_t>(kk) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

namespace {

struct ConvDims {
    int cin, h, w, cout, k, oh, ow;
};

ConvDims conv_dims(const Tensor& input, const Tensor& weight, const Tensor& bias,
                   int stride, int pad) {
    if (input.ndim() != 3) throw ShapeError("conv2d input must be [C,H,W], got " + input.shape_str());
    if (weight.ndim() != 4) throw ShapeError("conv2d weight must be [Cout,Cin,k,k], got " + weight.shape_str());
    ConvDims d{};
    d.cin = input.dim(0);
    d.h = input.dim(1);
    d.w = input.dim(2);
    d.cout = weight.dim(0);
    d.k = weight.dim(2);
    if (weight.dim(1) != d.cin)
        throw ShapeError("conv2d channel mismatch: input " + input.shape_str() +
                         " vs weight " + weight.shape_str());
    if (weight.dim(3) != d.k || d.k % 2 == 0)
        throw ShapeError("conv2d kernel must be square and odd, got " + weight.shape_str());
    if (bias.ndim() != 1 || bias.dim(0) != d.cout)
        throw ShapeError("conv2d bias must be [Cout], got " + bias.shape_str());
    if (stride < 1) throw ShapeError("conv2d stride must be >= 1");
    const int num_h = d.h + 2 * pad - d.k;
    const int num_w = d.w + 2 * pad - d.k;
    if (num_h < 0 || num_w < 0)
        throw ShapeError("conv2d kernel larger than padded input " + input.shape_str());
    d.oh = num_h / stride + 1;
    d.ow = num_w / stride + 1;
    return d;
}

// [Cin,H,W] -> [Cin*k*k, OH*OW]
Tensor im2col(const Tensor& input, const ConvDims& d, int stride, int pad) {
    Tensor col({d.cin * d.k * d.k, d.oh * d.ow});
    double* out = col.data();
    const double* in = input.data();
    std::size_t r = 0;
    for (int c = 0; c < d.cin; ++c) {
        const double* plane = in + static_cast<std::size_t>(c) * d.h * d.w;
        for (int ki = 0; ki < d.k; ++ki) {
            for (int kj = 0; kj < d.k; ++kj, ++r) {
                double* dst = out + r * static_cast<std::size_t>(d.oh) * d.ow;
                for (int oi = 0; oi < d.oh; ++oi) {
                    const int ii = oi * stride + ki - pad;
                    for (int oj = 0; oj < d.ow; ++oj) {
                        const int jj = oj * stride + kj - pad;
                        const bool inside = ii >= 0 && ii < d.h && jj >= 0 && jj < d.w;
                        dst[oi * d.ow + oj] = inside ? plane[ii * d.w + jj] : 0.0;
                    }
                }
            }
        }
    }
    return col;
}

// scatter-add of a column matrix back to image layout
void col2im_acc(const Tensor& col, const ConvDims& d, int stride, int pad, Tensor& grad_input) {
    const double* src = col.data();
    double* out = grad_input.data();
    std::size_t r = 0;
    for (int c = 0; c < d.cin; ++c) {
        double* plane = out + static_cast<std::size_t>(c) * d.h * d.w;
        for (int ki = 0; ki < d.k; ++ki) {
            for (int kj = 0; kj < d.k; ++kj, ++r) {
                const double* row = src + r * static_cast<std::size_t>(d.oh) * d.ow;
                for (int oi = 0; oi < d.oh; ++oi) {
                    const int ii = oi * stride + ki - pad;
                    if (ii < 0 || ii >= d.h) continue;
                    for (int oj = 0; oj < d.ow; ++oj) {
                        const int jj = oj * stride + kj - pad;
                        if (jj < 0 || jj >= d.w) continue;
                        plane[ii * d.w + jj] += row[oi * d.ow + oj];
                    }
                }
            }
        }
    }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride, int pad) {
    const ConvDims d = conv_dims(input, weight, bias, stride, pad);
    const Tensor col = im2col(input, d, stride, pad);
    Tensor out({d.cout, d.oh, d.ow});
    matmul_acc(weight.data(), col.data(), out.data(), d.cout, d.cin * d.k * d.k, d.oh * d.ow);
    for (int c = 0; c < d.cout; ++c) {
        const double b = bias.at(c);
        double* plane = out.data() + static_cast<std::size_t>(c) * d.oh * d.ow;
        for (int i = 0; i < d.oh * d.ow; ++i) plane[i] += b;
    }
    return out;
}

ConvGrads conv2d_backward(const Tensor& input, const Tensor& weight,
                          int stride, int pad, const Tensor& grad_out) {
    const Tensor bias_probe({weight.dim(0)});
    const ConvDims d = conv_dims(input, weight, bias_probe, stride, pad);
    if (grad_out.ndim() != 3 || grad_out.dim(0) != d.cout ||
        grad_out.dim(1) != d.oh || grad_out.dim(2) != d.ow)
        throw ShapeError("conv2d_backward grad shape " + grad_out.shape_str() + " mismatch");

    ConvGrads g;
    g.bias = Tensor({d.cout});
    for (int c = 0; c < d.cout; ++c) {
        const double* plane = grad_out.data() + static_cast<std::size_t>(c) * d.oh * d.ow;
        double s = 0.0;
        for (int i = 0; i < d.oh * d.ow; ++i) s += plane[i];
        g.bias.at(c) = s;
    }

    const int kk = d.cin * d.k * d.k;
    const int np = d.oh * d.ow;
    const Tensor col = im2col(input, d, stride, pad);

    // dW[c,r] = sum_p grad_out[c,p] * col[r,p]
    g.weight = Tensor(weight.shape());
    for (int c = 0; c < d.cout; ++c) {
        const double* grow = grad_out.data() + static_cast<std::size_t>(c) * np;
        double* wrow = g.weight.data() + static_cast<std::size_t>(c) * kk;
        for (int r = 0; r < kk; ++r) {
            const double* crow = col.data() + static_cast<std::size_t>(r) * np;
            double s = 0.0;
            for (int p = 0; p < np; ++p) s += grow[p] * crow[p];
            wrow[r] = s;
        }
    }

    // dcol = W^T * grad_out, then scatter back to image layout
    Tensor dcol({kk, np});
    for (int c = 0; c < d.cout; ++c) {
        const double* wrow = weight.data() + static_cast<std::size_t>(c) * kk;
        const double* grow = grad_out.data() + static_cast<std::size_t>(c) * np;
        for (int r = 0; r < kk; ++r) {
            const double wv = wrow[r];
            if (wv == 0.0) continue;
            double* drow = dcol.data() + static_cast<std::size_t>(r) * np;
            for (int p = 0; p < np; ++p) drow[p] += wv * grow[p];
        }
    }
    g.input = Tensor(input.shape());
    col2im_acc(dcol, d, stride, pad, g.input);
    return g;
}

Tensor relu(const Tensor& x) {
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
    return y;
}

Tensor relu_backward(const Tensor& pre_act, const Tensor& grad_out) {
    if (!pre_act.same_shape(grad_out))
        throw ShapeError("relu_backward shape mismatch");
    Tensor g(grad_out.shape());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = pre_act[i] > 0.0 ? grad_out[i] : 0.0;
    return g;
}

Tensor sigmoid(const Tensor& x) {
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
    return y;
}

Tensor sigmoid_backward(const Tensor& s, const Tensor& grad_out) {
    if (!s.same_shape(grad_out)) throw ShapeError("sigmoid_backward shape mismatch");
    Tensor g(grad_out.shape());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = grad_out[i] * s[i] * (1.0 - s[i]);
    return g;
}

Tensor dense(const Tensor& weight, const Tensor& bias, const Tensor& x) {
    if (weight.ndim() != 2 || x.ndim() != 1 || weight.dim(1) != x.dim(0))
        throw ShapeError("dense shape mismatch: W " + weight.shape_str() + " x " + x.shape_str());
    const int out = weight.dim(0), in = weight.dim(1);
    Tensor y({out});
    for (int o = 0; o < out; ++o) {
        const double* wrow = weight.data() + static_cast<std::size_t>(o) * in;
        double s = bias.at(o);
        for (int i = 0; i < in; ++i) s += wrow[i] * x[static_cast<std::size_t>(i)];
        y.at(o) = s;
    }
    return y;
}

DenseGrads dense_backward(const Tensor& weight, const Tensor& x, const Tensor& grad_out) {
    const int out = weight.dim(0), in = weight.dim(1);
    if (grad_out.ndim() != 1 || grad_out.dim(0) != out)
        throw ShapeError("dense_backward grad shape mismatch");
    DenseGrads g;
    g.weight = Tensor(weight.shape());
    g.bias = Tensor({out});
    g.input = Tensor({in});
    for (int o = 0; o < out; ++o) {
        const double go = grad_out.at(o);
        g.bias.at(o) = go;
        const double* wrow = weight.data() + static_cast<std::size_t>(o) * in;
        double* gwrow = g.weight.data() + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) {
            gwrow[i] = go * x.at(i);
            g.input.at(i) += go * wrow[i];
        }
    }
    return g;
}

Tensor he_normal(std::vector<int> shape, int fan_in, Rng& rng) {
    Tensor t(std::move(shape));
    const double std = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double& v : t.values()) v = rng.normal(0.0, std);
    return t;
}

int ConvStack::total_stride() const {
    int s = 1;
    for (const auto& l : layers_) s *= l.stride;
    return s;
}

std::string ConvStack::weight_name(int i) const {
    return prefix_ + ".conv" + std::to_string(i) + ".w";
}

std::string ConvStack::bias_name(int i) const {
    return prefix_ + ".conv" + std::to_string(i) + ".b";
}

void ConvStack::register_params(ParamSet& params, Rng& rng) const {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& l = layers_[i];
        const int fan_in = l.in_ch * l.kernel * l.kernel;
        params.add(weight_name(static_cast<int>(i)),
                   he_normal({l.out_ch, l.in_ch, l.kernel, l.kernel}, fan_in, rng));
        params.add(bias_name(static_cast<int>(i)), Tensor({l.out_ch}));
    }
}

Tensor ConvStack::forward(const ParamSet& params, const Tensor& image, Cache* cache) const {
    Tensor x = image;
    if (cache) {
        cache->inputs.clear();
        cache->pre_acts.clear();
    }
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& l = layers_[i];
        const Tensor& w = params.entry(weight_name(static_cast<int>(i))).value;
        const Tensor& b = params.entry(bias_name(static_cast<int>(i))).value;
        if (cache) cache->inputs.push_back(x);
        Tensor pre = conv2d(x, w, b, l.stride, l.pad);
        if (l.relu) {
            if (cache) cache->pre_acts.push_back(pre);
            x = relu(pre);
        } else {
            if (cache) cache->pre_acts.push_back(Tensor());
            x = std::move(pre);
        }
    }
    return x;
}

Tensor ConvStack::backward(ParamSet& params, const Cache& cache, Tensor grad_out) const {
    if (cache.inputs.size() != layers_.size())
        throw UsageError("ConvStack::backward called without a matching forward cache");
    for (int i = static_cast<int>(layers_.size()) - 1; i >= 0; --i) {
        const auto& l = layers_[static_cast<std::size_t>(i)];
        if (l.relu)
            grad_out = relu_backward(cache.pre_acts[static_cast<std::size_t>(i)], grad_out);
        auto& went = params.entry(weight_name(i));
        auto& bent = params.entry(bias_name(i));
        ConvGrads g = conv2d_backward(cache.inputs[static_cast<std::size_t>(i)],
                                      went.value, l.stride, l.pad, grad_out);
        went.grad.add_scaled(g.weight, 1.0);
        bent.grad.add_scaled(g.bias, 1.0);
        grad_out = std::move(g.input);
    }
    return grad_out;
}

}  // namespace pointdc
