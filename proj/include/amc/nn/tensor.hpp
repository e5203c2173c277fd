#pragma once

// Minimal dense tensor: contiguous row-major storage with an explicit
// shape. The training engine runs in float; gradient verification
// instantiates the same code in double.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace amc::nn {

template <class T>
struct Tensor {
    std::vector<int> shape;
    std::vector<T> v;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)), v(count(shape), T(0)) {}
    Tensor(std::vector<int> s, std::vector<T> data) : shape(std::move(s)), v(std::move(data)) {
        if (v.size() != count(shape)) throw std::invalid_argument("Tensor: shape/data size mismatch");
    }

    static size_t count(const std::vector<int>& s) {
        size_t n = 1;
        for (int d : s) {
            if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
            n *= static_cast<size_t>(d);
        }
        return n;
    }

    size_t size() const { return v.size(); }
    int dim(int i) const { return shape[static_cast<size_t>(i)]; }
    int ndim() const { return static_cast<int>(shape.size()); }

    T* data() { return v.data(); }
    const T* data() const { return v.data(); }

    void fill(T x) { std::fill(v.begin(), v.end(), x); }
    void zero() { fill(T(0)); }

    void reshape(std::vector<int> s) {
        if (count(s) != v.size()) throw std::invalid_argument("Tensor: reshape size mismatch");
        shape = std::move(s);
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (T x : v)
            if (!std::isfinite(static_cast<double>(x))) return false;
        return true;
    }

    template <class U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.shape = shape;
        out.v.resize(v.size());
        for (size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
        return out;
    }
};

inline std::string shape_str(const std::vector<int>& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << "]";
    return os.str();
}

}  // namespace amc::nn
