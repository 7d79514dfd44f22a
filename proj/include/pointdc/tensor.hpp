#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "pointdc/errors.hpp"

namespace pointdc {

// Dense row-major tensor of doubles. The whole toolkit runs at double
// precision so finite-difference gradient checks are clean.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);
    Tensor(std::vector<int> shape, std::vector<double> data);

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<int> shape, double value);

    const std::vector<int>& shape() const { return shape_; }
    int ndim() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(int a) { return data_[static_cast<std::size_t>(a)]; }
    double at(int a) const { return data_[static_cast<std::size_t>(a)]; }
    double& at(int a, int b) { return data_[idx2(a, b)]; }
    double at(int a, int b) const { return data_[idx2(a, b)]; }
    double& at(int a, int b, int c) { return data_[idx3(a, b, c)]; }
    double at(int a, int b, int c) const { return data_[idx3(a, b, c)]; }
    double& at(int a, int b, int c, int d) { return data_[idx4(a, b, c, d)]; }
    double at(int a, int b, int c, int d) const { return data_[idx4(a, b, c, d)]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    std::string shape_str() const;

    void fill(double v);
    void add_scaled(const Tensor& other, double scale);  // *this += scale * other
    double max_abs() const;
    bool all_finite() const;

    // checksum over the raw byte representation; used for frozen-weight checks
    std::uint64_t checksum() const;

private:
    std::size_t idx2(int a, int b) const {
        return static_cast<std::size_t>(a) * shape_[1] + b;
    }
    std::size_t idx3(int a, int b, int c) const {
        return (static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c;
    }
    std::size_t idx4(int a, int b, int c, int d) const {
        return ((static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c) * shape_[3] + d;
    }

    std::vector<int> shape_;
    std::vector<double> data_;
};

// Named (value, gradient, momentum) triples; shapes stay in lockstep.
class ParamSet {
public:
    struct Entry {
        std::string name;
        Tensor value;
        Tensor grad;
        Tensor momentum;
    };

    Tensor& add(const std::string& name, Tensor init);
    Entry& entry(const std::string& name);
    const Entry& entry(const std::string& name) const;
    bool has(const std::string& name) const;

    std::vector<Entry>& entries() { return entries_; }
    const std::vector<Entry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    void zero_grads();
    void scale_grads(double s);
    std::size_t value_count() const;  // total number of scalars
    std::uint64_t checksum() const;   // order- and shape-sensitive

private:
    int find(const std::string& name) const;
    std::vector<Entry> entries_;
};

}  // namespace pointdc
