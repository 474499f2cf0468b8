#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "seisgen/common.hpp"

namespace seisgen {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << "]";
    return os.str();
}

// Dense row-major tensor of rank <= 4. The workhorse type behind spectrograms,
// latents and network activations; heavy math goes through Eigen maps.
template <typename Scalar>
class Tensor {
public:
    using VecMap = Eigen::Map<Eigen::Array<Scalar, Eigen::Dynamic, 1>>;
    using ConstVecMap = Eigen::Map<const Eigen::Array<Scalar, Eigen::Dynamic, 1>>;
    using RowMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using MatMap = Eigen::Map<RowMat>;
    using ConstMatMap = Eigen::Map<const RowMat>;

    Tensor() = default;
    explicit Tensor(Shape shape) : shape_(std::move(shape)), data_(count(shape_), Scalar(0)) {}
    Tensor(Shape shape, std::vector<Scalar> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (static_cast<Index>(data_.size()) != count(shape_))
            throw std::invalid_argument("tensor data size does not match shape " + shape_str(shape_));
    }

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
    static Tensor constant(Shape shape, Scalar v) {
        Tensor t(std::move(shape));
        t.flat().setConstant(v);
        return t;
    }
    static Tensor ones(Shape shape) { return constant(std::move(shape), Scalar(1)); }

    static Tensor randn(Shape shape, std::uint64_t seed) {
        Tensor t(std::move(shape));
        auto rng = make_rng(seed);
        std::normal_distribution<double> nd(0.0, 1.0);
        for (Index i = 0; i < t.size(); ++i) t.data_[i] = static_cast<Scalar>(nd(rng));
        return t;
    }
    static Tensor uniform(Shape shape, Scalar lo, Scalar hi, std::uint64_t seed) {
        Tensor t(std::move(shape));
        auto rng = make_rng(seed);
        std::uniform_real_distribution<double> ud(lo, hi);
        for (Index i = 0; i < t.size(); ++i) t.data_[i] = static_cast<Scalar>(ud(rng));
        return t;
    }

    const Shape& shape() const { return shape_; }
    Index rank() const { return static_cast<Index>(shape_.size()); }
    Index dim(Index i) const { return shape_.at(static_cast<size_t>(i)); }
    Index size() const { return static_cast<Index>(data_.size()); }
    bool empty() const { return data_.empty(); }

    Scalar* data() { return data_.data(); }
    const Scalar* data() const { return data_.data(); }

    Scalar& operator[](Index i) { return data_[static_cast<size_t>(i)]; }
    Scalar operator[](Index i) const { return data_[static_cast<size_t>(i)]; }

    Scalar& at(Index i, Index j) { return data_[static_cast<size_t>(i * dim(1) + j)]; }
    Scalar at(Index i, Index j) const { return data_[static_cast<size_t>(i * dim(1) + j)]; }
    Scalar& at(Index i, Index j, Index k) {
        return data_[static_cast<size_t>((i * dim(1) + j) * dim(2) + k)];
    }
    Scalar at(Index i, Index j, Index k) const {
        return data_[static_cast<size_t>((i * dim(1) + j) * dim(2) + k)];
    }

    VecMap flat() { return VecMap(data_.data(), size()); }
    ConstVecMap flat() const { return ConstVecMap(data_.data(), size()); }

    // Reinterpret the flat buffer as a rows x cols row-major matrix.
    MatMap matrix(Index rows, Index cols) {
        if (rows * cols != size())
            throw std::invalid_argument("matrix view size mismatch for " + shape_str(shape_));
        return MatMap(data_.data(), rows, cols);
    }
    ConstMatMap matrix(Index rows, Index cols) const {
        if (rows * cols != size())
            throw std::invalid_argument("matrix view size mismatch for " + shape_str(shape_));
        return ConstMatMap(data_.data(), rows, cols);
    }
    MatMap matrix() { return matrix(dim(0), dim(1)); }
    ConstMatMap matrix() const { return matrix(dim(0), dim(1)); }

    Tensor reshaped(Shape shape) const {
        if (count(shape) != size())
            throw std::invalid_argument("reshape " + shape_str(shape_) + " -> " + shape_str(shape) +
                                        " changes element count");
        Tensor t = *this;
        t.shape_ = std::move(shape);
        return t;
    }

    template <typename Other>
    Tensor<Other> cast() const {
        Tensor<Other> t(shape_);
        for (Index i = 0; i < size(); ++i) t[i] = static_cast<Other>(data_[static_cast<size_t>(i)]);
        return t;
    }

    void setZero() { flat().setZero(); }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    bool all_finite() const { return flat().isFinite().all(); }

    Scalar max_abs() const { return size() ? flat().abs().maxCoeff() : Scalar(0); }

    static Index count(const Shape& s) {
        Index n = 1;
        for (Index d : s) {
            if (d < 0) throw std::invalid_argument("negative dimension in shape");
            n *= d;
        }
        return n;
    }

private:
    Shape shape_;
    std::vector<Scalar> data_;
};

template <typename Scalar>
void check_shape(const Tensor<Scalar>& t, const Shape& expect, const char* what) {
    if (t.shape() != expect)
        throw std::invalid_argument(std::string(what) + ": expected shape " + shape_str(expect) +
                                    ", got " + shape_str(t.shape()));
}

}  // namespace seisgen
