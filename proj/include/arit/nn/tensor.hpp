#pragma once

#include <cstddef>
#include <vector>

#include "arit/common/error.hpp"

namespace arit::nn {

// Dense NCHW tensor. Scalars are (1,1,1,1); feature-vector batches are
// (P, k, 1, 1). Templated on the scalar so gradient checks can run the whole
// stack in double precision.
template <typename S>
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<S> data;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_, S fill = S(0))
        : n(n_), c(c_), h(h_), w(w_), data(size_t(n_) * c_ * h_ * w_, fill) {
        if (n_ <= 0 || c_ <= 0 || h_ <= 0 || w_ <= 0)
            throw DataError("Tensor: non-positive dimension");
    }

    size_t size() const { return data.size(); }
    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    S& at(int in, int ic, int iy, int ix) {
        return data[((size_t(in) * c + ic) * h + iy) * w + ix];
    }
    S at(int in, int ic, int iy, int ix) const {
        return data[((size_t(in) * c + ic) * h + iy) * w + ix];
    }

    S item() const {
        if (size() != 1) throw DataError("Tensor::item on non-scalar");
        return data[0];
    }

    template <typename T>
    Tensor<T> cast() const {
        Tensor<T> out(n, c, h, w);
        for (size_t i = 0; i < data.size(); ++i) out.data[i] = T(data[i]);
        return out;
    }
};

// Named trainable parameter with its gradient accumulator.
template <typename S>
struct Param {
    std::string name;
    std::vector<int> shape;
    std::vector<S> value;
    std::vector<S> grad;

    Param() = default;
    Param(std::string name_, std::vector<int> shape_) : name(std::move(name_)), shape(shape_) {
        size_t count = 1;
        for (int d : shape_) count *= size_t(d);
        value.assign(count, S(0));
        grad.assign(count, S(0));
    }

    size_t count() const { return value.size(); }
    void zero_grad() { std::fill(grad.begin(), grad.end(), S(0)); }
};

} // namespace arit::nn
