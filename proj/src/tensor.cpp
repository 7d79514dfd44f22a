#include "pointdc/tensor.hpp"

#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

namespace pointdc {

namespace {

std::size_t shape_product(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw ShapeError("tensor extents must be positive");
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

}  // namespace

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_product(shape_))
        throw ShapeError("tensor data length does not match shape " + shape_str());
}

Tensor Tensor::full(std::vector<int> shape, double value) {
    Tensor t(std::move(shape));
    t.fill(value);
    return t;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) os << ",";
        os << shape_[i];
    }
    os << "]";
    return os.str();
}

void Tensor::fill(double v) {
    std::fill(data_.begin(), data_.end(), v);
}

void Tensor::add_scaled(const Tensor& other, double scale) {
    if (!same_shape(other))
        throw ShapeError("add_scaled shape mismatch " + shape_str() + " vs " + other.shape_str());
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += scale * other.data_[i];
}

double Tensor::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::fabs(v));
    return m;
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

std::uint64_t Tensor::checksum() const {
    // FNV-1a over the raw doubles
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double v : data_) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        for (int b = 0; b < 8; ++b) {
            h ^= (bits >> (8 * b)) & 0xffULL;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

Tensor& ParamSet::add(const std::string& name, Tensor init) {
    if (find(name) >= 0) throw UsageError("duplicate parameter name: " + name);
    Entry e;
    e.name = name;
    e.grad = Tensor::zeros(init.shape());
    e.momentum = Tensor::zeros(init.shape());
    e.value = std::move(init);
    entries_.push_back(std::move(e));
    return entries_.back().value;
}

int ParamSet::find(const std::string& name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].name == name) return static_cast<int>(i);
    return -1;
}

ParamSet::Entry& ParamSet::entry(const std::string& name) {
    const int i = find(name);
    if (i < 0) throw UsageError("unknown parameter: " + name);
    return entries_[static_cast<std::size_t>(i)];
}

const ParamSet::Entry& ParamSet::entry(const std::string& name) const {
    const int i = find(name);
    if (i < 0) throw UsageError("unknown parameter: " + name);
    return entries_[static_cast<std::size_t>(i)];
}

bool ParamSet::has(const std::string& name) const { return find(name) >= 0; }

void ParamSet::zero_grads() {
    for (auto& e : entries_) e.grad.fill(0.0);
}

void ParamSet::scale_grads(double s) {
    for (auto& e : entries_)
        for (double& g : e.grad.values()) g *= s;
}

std::size_t ParamSet::value_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
}

std::uint64_t ParamSet::checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& e : entries_) {
        for (char c : e.name) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
        h ^= e.value.checksum();
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace pointdc
