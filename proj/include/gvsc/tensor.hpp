#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "gvsc/common.hpp"

namespace gvsc {

// Dense rank-3 tensor, row-major by (i, j, c): i in [0, w), j in [0, h),
// c in [0, channels) with c fastest. Values are stored in double precision;
// the file format narrows to 32-bit floats.
class Tensor3 {
public:
    Tensor3() = default;
    Tensor3(uint32_t w, uint32_t h, uint32_t c, double fill = 0.0)
        : shape_{w, h, c}, v_(size_t(w) * h * c, fill) {}
    explicit Tensor3(Shape3 s, double fill = 0.0) : Tensor3(s.w, s.h, s.c, fill) {}

    const Shape3& shape() const { return shape_; }
    size_t size() const { return v_.size(); }

    double& at(uint32_t i, uint32_t j, uint32_t c) { return v_[index(i, j, c)]; }
    double at(uint32_t i, uint32_t j, uint32_t c) const { return v_[index(i, j, c)]; }
    double& operator[](size_t flat) { return v_[flat]; }
    double operator[](size_t flat) const { return v_[flat]; }

    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }

    size_t index(uint32_t i, uint32_t j, uint32_t c) const {
        return (size_t(i) * shape_.h + j) * shape_.c + c;
    }

    bool all_finite() const {
        for (double x : v_)
            if (!std::isfinite(x)) return false;
        return true;
    }

    bool operator==(const Tensor3&) const = default;

private:
    Shape3 shape_{};
    std::vector<double> v_;
};

// Semantic aliases; invariants are enforced by the producing operations.
using FeatureTensor = Tensor3;   // y and its distorted variants
using ScaleField = Tensor3;      // theta (per-element standard deviations)
using ScalingField = Tensor3;    // beta in (0, 1]
using ImageTensor = Tensor3;     // (W, H, 3), values nominally in [0, 255]

// Rank-2 real matrix (importance maps, raw CAM outputs).
class Matrix {
public:
    Matrix() = default;
    Matrix(uint32_t w, uint32_t h, double fill = 0.0) : w_(w), h_(h), v_(size_t(w) * h, fill) {}

    uint32_t width() const { return w_; }
    uint32_t height() const { return h_; }
    size_t size() const { return v_.size(); }

    double& at(uint32_t i, uint32_t j) { return v_[size_t(i) * h_ + j]; }
    double at(uint32_t i, uint32_t j) const { return v_[size_t(i) * h_ + j]; }
    double& operator[](size_t flat) { return v_[flat]; }
    double operator[](size_t flat) const { return v_[flat]; }

    bool operator==(const Matrix&) const = default;

private:
    uint32_t w_ = 0, h_ = 0;
    std::vector<double> v_;
};

// Rank-2 binary mask, same (i, j) ordering as Matrix.
class MaskMatrix {
public:
    MaskMatrix() = default;
    MaskMatrix(uint32_t w, uint32_t h, uint8_t fill = 0) : w_(w), h_(h), v_(size_t(w) * h, fill) {}

    uint32_t width() const { return w_; }
    uint32_t height() const { return h_; }
    size_t size() const { return v_.size(); }

    uint8_t& at(uint32_t i, uint32_t j) { return v_[size_t(i) * h_ + j]; }
    uint8_t at(uint32_t i, uint32_t j) const { return v_[size_t(i) * h_ + j]; }
    uint8_t& operator[](size_t flat) { return v_[flat]; }
    uint8_t operator[](size_t flat) const { return v_[flat]; }

    size_t count() const {
        size_t n = 0;
        for (uint8_t b : v_) n += (b != 0);
        return n;
    }

    bool operator==(const MaskMatrix&) const = default;

private:
    uint32_t w_ = 0, h_ = 0;
    std::vector<uint8_t> v_;
};

// Integer-valued tensor produced by the unit-step quantizer.
class QuantizedTensor {
public:
    QuantizedTensor() = default;
    explicit QuantizedTensor(Shape3 s, int32_t fill = 0) : shape_(s), v_(s.size(), fill) {}

    const Shape3& shape() const { return shape_; }
    size_t size() const { return v_.size(); }

    int32_t& at(uint32_t i, uint32_t j, uint32_t c) { return v_[index(i, j, c)]; }
    int32_t at(uint32_t i, uint32_t j, uint32_t c) const { return v_[index(i, j, c)]; }
    int32_t& operator[](size_t flat) { return v_[flat]; }
    int32_t operator[](size_t flat) const { return v_[flat]; }

    size_t index(uint32_t i, uint32_t j, uint32_t c) const {
        return (size_t(i) * shape_.h + j) * shape_.c + c;
    }

    bool operator==(const QuantizedTensor&) const = default;

private:
    Shape3 shape_{};
    std::vector<int32_t> v_;
};

inline void require_same_shape(const Shape3& a, const Shape3& b, const char* what) {
    if (!(a == b))
        throw std::invalid_argument(std::string(what) + ": shape mismatch " + to_string(a) +
                                    " vs " + to_string(b));
}

}  // namespace gvsc
