#pragma once
#include <string>
#include <vector>

#include "pointdc/rng.hpp"
#include "pointdc/tensor.hpp"

namespace pointdc {

// ---------------------------------------------------------------------------
// Stateless layer primitives. Forward/backward pairs; backward returns exact
// analytic derivatives. Convolution runs as im2col + matmul, which keeps it an
// independent code path from the naive summation used as a test oracle.
// ---------------------------------------------------------------------------

// C[M,N] += A[M,K] * B[K,N]
void matmul_acc(const double* a, const double* b, double* c, int m, int k, int n);

struct ConvGrads {
    Tensor input;
    Tensor weight;
    Tensor bias;
};

// input [Cin,H,W], weight [Cout,Cin,k,k], bias [Cout] -> [Cout,H',W']
// k odd; H' = floor((H + 2*pad - k)/stride) + 1.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride, int pad);
ConvGrads conv2d_backward(const Tensor& input, const Tensor& weight,
                          int stride, int pad, const Tensor& grad_out);

Tensor relu(const Tensor& x);
// pre_act is the layer input that produced the relu output
Tensor relu_backward(const Tensor& pre_act, const Tensor& grad_out);

Tensor sigmoid(const Tensor& x);
// grad wrt pre-activation given the sigmoid output s
Tensor sigmoid_backward(const Tensor& s, const Tensor& grad_out);

struct DenseGrads {
    Tensor input;
    Tensor weight;
    Tensor bias;
};

// y = W x + b with W [out,in], x [in]
Tensor dense(const Tensor& weight, const Tensor& bias, const Tensor& x);
DenseGrads dense_backward(const Tensor& weight, const Tensor& x, const Tensor& grad_out);

// He-normal initialization for conv / dense weights
Tensor he_normal(std::vector<int> shape, int fan_in, Rng& rng);

// ---------------------------------------------------------------------------
// ConvStack: a linear chain of conv layers with optional ReLU after each.
// Parameters live in an external ParamSet under "<prefix>.convN.{w,b}" so a
// model can hold several stacks and heads in one flat parameter namespace.
// ---------------------------------------------------------------------------

struct ConvLayerSpec {
    int in_ch = 0;
    int out_ch = 0;
    int kernel = 3;
    int stride = 1;
    int pad = 1;
    bool relu = true;
};

class ConvStack {
public:
    ConvStack() = default;
    explicit ConvStack(std::string prefix) : prefix_(std::move(prefix)) {}

    void add(const ConvLayerSpec& spec) { layers_.push_back(spec); }
    const std::vector<ConvLayerSpec>& layers() const { return layers_; }
    const std::string& prefix() const { return prefix_; }
    int out_channels() const { return layers_.empty() ? 0 : layers_.back().out_ch; }
    int total_stride() const;

    void register_params(ParamSet& params, Rng& rng) const;

    struct Cache {
        std::vector<Tensor> inputs;    // input to each layer
        std::vector<Tensor> pre_acts;  // conv output before relu (only kept when relu)
    };

    Tensor forward(const ParamSet& params, const Tensor& image, Cache* cache = nullptr) const;

    // Accumulates parameter gradients into `params` and returns grad wrt the
    // stack input (callers that do not need it can ignore the return value).
    Tensor backward(ParamSet& params, const Cache& cache, Tensor grad_out) const;

    std::string weight_name(int i) const;
    std::string bias_name(int i) const;

private:
    std::string prefix_;
    std::vector<ConvLayerSpec> layers_;
};

}  // namespace pointdc
