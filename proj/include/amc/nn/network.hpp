#pragma once

// Deterministic feed-forward/recurrent network engine. Layers cache what
// backward needs; gradient buffers accumulate across consumers so skip
// connections (add/concat) work without special casing. Single-threaded
// semantics per training step; the GEMM kernels may run multithreaded but
// produce bit-identical results for any thread count.

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "amc/nn/gemm.hpp"
#include "amc/nn/layers.hpp"
#include "amc/nn/tensor.hpp"
#include "amc/rng.hpp"

namespace amc::nn {

template <class T>
struct Param {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
};

struct RunContext {
    bool training = false;
    bool check_finite = false;
    uint64_t dropout_seed = 0;
    uint64_t step = 0;
};

namespace detail {

template <class T>
class LayerImpl {
public:
    virtual ~LayerImpl() = default;
    virtual void forward(const std::vector<const Tensor<T>*>& in, Tensor<T>& out, const RunContext& ctx) = 0;
    // Adds this layer's contribution into the pre-zeroed din buffers.
    virtual void backward(const std::vector<const Tensor<T>*>& in, const Tensor<T>& out,
                          const Tensor<T>& dout, const std::vector<Tensor<T>*>& din,
                          const RunContext& ctx) = 0;
    virtual std::vector<Param<T>*> params() { return {}; }
    virtual std::vector<Param<T>*> buffers() { return {}; }
};

template <class T>
class DenseImpl final : public LayerImpl<T> {
public:
    DenseImpl(int units, int in_dim, int index) {
        w_.name = "layer" + std::to_string(index) + ".dense.w";
        b_.name = "layer" + std::to_string(index) + ".dense.b";
        w_.value = Tensor<T>({units, in_dim});
        w_.grad = Tensor<T>({units, in_dim});
        b_.value = Tensor<T>({units});
        b_.grad = Tensor<T>({units});
    }

    void forward(const std::vector<const Tensor<T>*>& in, Tensor<T>& out, const RunContext&) override {
        const Tensor<T>& x = *in[0];
        const int n = x.dim(0), d = x.dim(1), u = w_.value.dim(0);
        out = Tensor<T>({n, u});
        gemm_nt(x.data(), w_.value.data(), out.data(), n, d, u, false);
        for (int r = 0; r < n; ++r) {
            T* row = out.data() + static_cast<size_t>(r) * u;
            for (int j = 0; j < u; ++j) row[j] += b_.value.v[static_cast<size_t>(j)];
        }
    }

    void backward(const std::vector<const Tensor<T>*>& in, const Tensor<T>&, const Tensor<T>& dout,
                  const std::vector<Tensor<T>*>& din, const RunContext&) override {
        const Tensor<T>& x = *in[0];
        const int n = x.dim(0), d = x.dim(1), u = w_.value.dim(0);
        gemm_tn(dout.data(), x.data(), w_.grad.data(), u, n, d, true);
        for (int r = 0; r < n; ++r) {
            const T* row = dout.data() + static_cast<size_t>(r) * u;
            for (int j = 0; j < u; ++j) b_.grad.v[static_cast<size_t>(j)] += row[j];
        }
        gemm_nn(dout.data(), w_.value.data(), din[0]->data(), n, u, d, true);
    }

    std::vector<Param<T>*> params() override { return {&w_, &b_}; }

    Param<T> w_, b_;
};

template <class T>
class Conv2dImpl final : public LayerImpl<T> {
public:
    Conv2dImpl(const LayerSpec& s, const std::vector<int>& in_shape, int index)
        : filters_(s.filters), kh_(s.kh), kw_(s.kw), c_(in_shape[0]), h_(in_shape[1]), w_in_(in_shape[2]) {
        const int ckk = c_ * kh_ * kw_;
        w_.name = "layer" + std::to_string(index) + ".conv.w";
        b_.name = "layer" + std::to_string(index) + ".conv.b";
        w_.value = Tensor<T>({filters_, ckk});
        w_.grad = Tensor<T>({filters_, ckk});
        b_.value = Tensor<T>({filters_});
        b_.grad = Tensor<T>({filters_});
    }

    void forward(const std::vector<const Tensor<T>*>& in, Tensor<T>& out, const RunContext&) override {
        const Tensor<T>& x = *in[0];
        const int n = x.dim(0);
        const int ho = h_ - kh_ + 1;
        const int p = ho * w_in_;
        const int ckk = c_ * kh_ * kw_;
        out = Tensor<T>({n, filters_, ho, w_in_});
        std::vector<T> patches(static_cast<size_t>(p) * static_cast<size_t>(ckk));
        for (int ex = 0; ex < n; ++ex) {
            im2col(x.data() + static_cast<size_t>(ex) * c_ * h_ * w_in_, patches.data());
            T* out_ex = out.data() + static_cast<size_t>(ex) * filters_ * p;
            gemm_nt(w_.value.data(), patches.data(), out_ex, filters_, ckk, p, false);
            for (int f = 0; f < filters_; ++f) {
                T* row = out_ex + static_cast<size_t>(f) * p;
                const T bias = b_.value.v[static_cast<size_t>(f)];
                for (int j = 0; j < p; ++j) row[j] += bias;
            }
        }
    }

    void backward(const std::vector<const Tensor<T>*>& in, const Tensor<T>&, const Tensor<T>& dout,
                  const std::vector<Tensor<T>*>& din, const RunContext&) override {
        const Tensor<T>& x = *in[0];
        const int n = x.dim(0);
        const int ho = h_ - kh_ + 1;
        const int p = ho * w_in_;
        const int ckk = c_ * kh_ * kw_;
        std::vector<T> patches(static_cast<size_t>(p) * static_cast<size_t>(ckk));
        std::vector<T> dpatches(patches.size());
        for (int ex = 0; ex < n; ++ex) {
            const T* x_ex = x.data() + static_cast<size_t>(ex) * c_ * h_ * w_in_;
            const T* dout_ex = dout.data() + static_cast<size_t>(ex) * filters_ * p;
            im2col(x_ex, patches.data());
            gemm_nn(dout_ex, patches.data(), w_.grad.data(), filters_, p, ckk, true);
            for (int f = 0; f < filters_; ++f) {
                const T* row = dout_ex + static_cast<size_t>(f) * p;
                T acc = T(0);
                for (int j = 0; j < p; ++j) acc += row[j];
                b_.grad.v[static_cast<size_t>(f)] += acc;
            }
            gemm_tn(dout_ex, w_.value.data(), dpatches.data(), p, filters_, ckk, false);
            col2im_add(dpatches.data(), din[0]->data() + static_cast<size_t>(ex) * c_ * h_ * w_in_);
        }
    }

    std::vector<Param<T>*> params() override { return {&w_, &b_}; }

    int filters_, kh_, kw_, c_, h_, w_in_;
    Param<T> w_, b_;

private:
    // patches[(ho*W + wo), (c*KH + dh)*KW + dw] = x[c, ho+dh, wo+dw-pad]
    // with zero padding along W only.
    void im2col(const T* x, T* patches) const {
        const int pad = (kw_ - 1) / 2;
        const int ho_n = h_ - kh_ + 1;
        for (int ho = 0; ho < ho_n; ++ho) {
            for (int wo = 0; wo < w_in_; ++wo) {
                T* row = patches + (static_cast<size_t>(ho) * w_in_ + wo) * (c_ * kh_ * kw_);
                for (int c = 0; c < c_; ++c) {
                    for (int dh = 0; dh < kh_; ++dh) {
                        const T* src = x + (static_cast<size_t>(c) * h_ + (ho + dh)) * w_in_;
                        for (int dw = 0; dw < kw_; ++dw) {
                            const int wi = wo + dw - pad;
                            *row++ = (wi >= 0 && wi < w_in_) ? src[wi] : T(0);
                        }
                    }
                }
            }
        }
    }

    void col2im_add(const T* dpatches, T* dx) const {
        const int pad = (kw_ - 1) / 2;
        const int ho_n = h_ - kh_ + 1;
        for (int ho = 0; ho < ho_n; ++ho) {
            for (int wo = 0; wo < w_in_; ++wo) {
                const T* row = dpatches + (static_cast<size_t>(ho) * w_in_ + wo) * (c_ * kh_ * kw_);
                for (int c = 0; c < c_; ++c) {
                    for (int dh = 0; dh < kh_; ++dh) {
                        T* dst = dx + (static_cast<size_t>(c) * h_ + (ho + dh)) * w_in_;
                        for (int dw = 0; dw < kw_; ++dw) {
                            const int wi = wo + dw - pad;
                            if (wi >= 0 && wi < w_in_) dst[wi] += *row;
                            ++row;
                        }
                    }
                }
            }
        }
    }
};

template <class T>
class MaxPoolImpl final : public LayerImpl<T> {
public:
    explicit MaxPoolImpl(int pool) : pool_(pool) {}

    void forward(const std::vector<const Tensor<T>*>& in, Tensor<T>& out, const RunContext&) override {
        const Tensor<T>& x = *in[0];
        const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
        const int wo = w / pool_;
        out = Tensor<T>({n, c, h, wo});
        argmax_.assign(out.size(), 0);
        const T* xp = x.data();
        T* op = out.data();
        size_t oi = 0;
        for (int e = 0; e < n * c * h; ++e) {
            const T* row = xp + static_cast<size_t>(e) * w;
            for (int j = 0; j < wo; ++j, ++oi) {
                int best = j * pool_;
                T bv = row[best];
                for (int d = 1; d < pool_; ++d) {
                    const int idx = j * pool_ + d;
                    if (row[idx] > bv) {
                        bv = row[idx];
                        best = idx;
                    }
                }
                op[oi] = bv;
                argmax_[oi] = e * w + best;
            }
        }
    }

    void backward(const std::vector<const Tensor<T>*>&, const Tensor<T>&, const Tensor<T>& dout,
                  const std::vector<Tensor<T>*>& din, const RunContext&) override {
        T* dx = din[0]->data();
        for (size_t i = 0; i < dout.size(); ++i) dx[argmax_[i]] += dout.v[i];
    }

    int pool_;
    std::vector<int> argmax_;
};

template <class T>
class BatchNormImpl final : public LayerImpl<T> {
public:
    static constexpr double kEps = 1e-5;
    static constexpr double kMomentum = 0.99;

    BatchNormImpl(const std::vector<int>& in_shape, int index) {
        channels_ = in_shape.size() >= 2 ? in_shape[0] : in_shape[0];
        gamma_.name = "layer" + std::to_string(index) + ".bn.gamma";
        beta_.name = "layer" + std::to_string(index) + ".bn.beta";
        running_mean_.name = "layer" + std::to_string(index) + ".bn.running_mean";
        running_var_.name = "layer" + std::to_string(index) + ".bn.running_var";
        gamma_.value = Tensor<T>({channels_});
        gamma_.value.fill(T(1));
        gamma_.grad = Tensor<T>({channels_});
        beta_.value = Tensor<T>({channels_});
        beta_.grad = Tensor<T>({channels_});
        running_mean_.value = Tensor<T>({channels_});
        running_mean_.grad = Tensor<T>({0});
        running_var_.value = Tensor<T>({channels_});
        running_var_.value.fill(T(1));
        running_var_.grad = Tensor<T>({0});
    }

    void forward(const std::vector<const Tensor<T>*>& in, Tensor<T>& out, const RunContext& ctx) override {
        const Tensor<T>& x = *in[0];
        const int n = x.dim(0);
        if (ctx.training && n < 2)
            throw std::runtime_error("batchnorm: training mode requires batch size >= 2");
        const int spatial = static_cast<int>(x.size()) / (n * channels_);
        out = Tensor<T>(x.shape);
        mean_.assign(static_cast<size_t>(channels_), 0.0);
        inv_std_.assign(static_cast<size_t>(channels_), 0.0);
        const double m = static_cast<double>(n) * spatial;
        for (int c = 0; c < channels_; ++c) {
            double mu, var;
            if (ctx.training) {
                double s = 0.0;
                for (int e = 0; e < n; ++e) {
                    const T* row = x.data() + (static_cast<size_t>(e) * channels_ + c) * spatial;
                    for (int j = 0; j < spatial; ++j) s += static_cast<double>(row[j]);
                }
                mu = s / m;
                double v = 0.0;
                for (int e = 0; e < n; ++e) {
                    const T* row = x.data() + (static_cast<size_t>(e) * channels_ + c) * spatial;
                    for (int j = 0; j < spatial; ++j) {
                        const double d = static_cast<double>(row[j]) - mu;
                        v += d * d;
                    }
                }
                var = v / m;
                // Momentum weights the incoming batch statistic.
                running_mean_.value.v[static_cast<size_t>(c)] = static_cast<T>(
                    (1.0 - kMomentum) * static_cast<double>(running_mean_.value.v[static_cast<size_t>(c)]) +
                    kMomentum * mu);
                running_var_.value.v[static_cast<size_t>(c)] = static_cast<T>(
                    (1.0 - kMomentum) * static_cast<double>(running_var_.value.v[static_cast<size_t>(c)]) +
                    kMomentum * var);
            } else {
                mu = static_cast<double>(running_mean_.value.v[static_cast<size_t>(c)]);
                var = static_cast<double>(running_var_.value.v[static_cast<size_t>(c)]);
            }
            const double is = 1.0 / std::sqrt(var + kEps);
            mean_[static_cast<size_t>(c)] = mu;
            inv_std_[static_cast<size_t>(c)] = is;
            const T g = gamma_.value.v[static_cast<size_t>(c)];
            const T be = beta_.value.v[static_cast<size_t>(c)];
            for (int e = 0; e < n; ++e) {
                const T* row = x.data() + (static_cast<size_t>(e) * channels_ + c) * spatial;
                T* orow = out.data() + (static_cast<size_t>(e) * channels_ + c) * spatial;
                for (int j = 0; j < spatial; ++j)
                    orow[j] = static_cast<T>((static_cast<double>(row[j]) - mu) * is) * g + be;
            }
        }
    }

    void backward(const std::vector<const Tensor<T>*>& in, const Tensor<T>&, const Tensor<T>& dout,
                  const std::vector<Tensor<T>*>& din, const RunContext& ctx) override {
        const Tensor<T>& x = *in[0];
        const int n = x.dim(0);
        const int spatial = static_cast<int>(x.size()) / (n * channels_);
        const double m = static_cast<double>(n) * spatial;
        for (int c = 0; c < channels_; ++c) {
            const double mu = mean_[static_cast<size_t>(c)];
            const double is = inv_std_[static_cast<size_t>(c)];
            const double g = static_cast<double>(gamma_.value.v[static_cast<size_t>(c)]);
            double sum_dy = 0.0, sum_dy_xhat = 0.0;
            for (int e = 0; e < n; ++e) {
                const T* xr = x.data() + (static_cast<size_t>(e) * channels_ + c) * spatial;
                const T* dr = dout.data() + (static_cast<size_t>(e) * channels_ + c) * spatial;
                for (int j = 0; j < spatial; ++j) {
                    const double xhat = (static_cast<double>(xr[j]) - mu) * is;
                    sum_dy += static_cast<double>(dr[j]);
                    sum_dy_xhat += static_cast<double>(dr[j]) * xhat;
                }
            }
            gamma_.grad.v[static_cast<size_t>(c)] += static_cast<T>(sum_dy_xhat);
            beta_.grad.v[static_cast<size_t>(c)] += static_cast<T>(sum_dy);
            for (int e = 0; e < n; ++e) {
                const T* xr = x.data() + (static_cast<size_t>(e) * channels_ + c) * spatial;
                const T* dr = dout.data() + (static_cast<size_t>(e) * channels_ + c) * spatial;
                T* dx = din[0]->data() + (static_cast<size_t>(e) * channels_ + c) * spatial;
                for (int j = 0; j < spatial; ++j) {
                    const double xhat = (static_cast<double>(xr[j]) - mu) * is;
                    double v;
                    if (ctx.training) {
                        v = g * is * (static_cast<double>(dr[j]) - sum_dy / m - xhat * sum_dy_xhat / m);
                    } else {
                        v = g * is * static_cast<double>(dr[j]);
                    }
                    dx[j] += static_cast<T>(v);
                }
            }
        }
    }

    std::vector<Param<T>*> params() override { return {&gamma_, &beta_}; }
    std::vector<Param<T>*> buffers() override { return {&running_mean_, &running_var_}; }

    int channels_;
    Param<T> gamma_, beta_, running_mean_, running_var_;
    std::vector<double> mean_, inv_std_;
};

template <class T>
class LstmImpl final : public LayerImpl<T> {
public:
    LstmImpl(const LayerSpec& s, const std::vector<int>& in_shape, int index)
        : cells_(s.cells), return_sequences_(s.return_sequences) {
        if (in_shape.size() == 3) {
            t_ = in_shape[2];
            f_ = in_shape[0] * in_shape[1];
        } else {
            t_ = in_shape[0];
            f_ = in_shape[1];
        }
        input_is_frame_ = in_shape.size() == 3;
        frame_c_ = input_is_frame_ ? in_shape[0] : 0;
        frame_h_ = input_is_frame_ ? in_shape[1] : 0;
        wx_.name = "layer" + std::to_string(index) + ".lstm.wx";
        wh_.name = "layer" + std::to_string(index) + ".lstm.wh";
        b_.name = "layer" + std::to_string(index) + ".lstm.b";
        wx_.value = Tensor<T>({4 * cells_, f_});
        wx_.grad = Tensor<T>({4 * cells_, f_});
        wh_.value = Tensor<T>({4 * cells_, cells_});
        wh_.grad = Tensor<T>({4 * cells_, cells_});
        b_.value = Tensor<T>({4 * cells_});
        b_.grad = Tensor<T>({4 * cells_});
    }

    void forward(const std::vector<const Tensor<T>*>& in, Tensor<T>& out, const RunContext&) override {
        const Tensor<T>& x = *in[0];
        const int n = x.dim(0);
        xs_.assign(static_cast<size_t>(t_), Tensor<T>({n, f_}));
        gather_input(x, n);
        hs_.assign(static_cast<size_t>(t_) + 1, Tensor<T>({n, cells_}));
        cs_.assign(static_cast<size_t>(t_) + 1, Tensor<T>({n, cells_}));
        zs_.assign(static_cast<size_t>(t_), Tensor<T>());
        for (int t = 0; t < t_; ++t)
            lstm_cell_step(xs_[static_cast<size_t>(t)], hs_[static_cast<size_t>(t)], cs_[static_cast<size_t>(t)],
                           wx_.value, wh_.value, b_.value, hs_[static_cast<size_t>(t) + 1],
                           cs_[static_cast<size_t>(t) + 1], &zs_[static_cast<size_t>(t)]);
        if (return_sequences_) {
            out = Tensor<T>({n, t_, cells_});
            for (int t = 0; t < t_; ++t)
                for (int r = 0; r < n; ++r)
                    std::copy_n(hs_[static_cast<size_t>(t) + 1].data() + static_cast<size_t>(r) * cells_,
                                cells_,
                                out.data() + (static_cast<size_t>(r) * t_ + t) * cells_);
        } else {
            out = hs_[static_cast<size_t>(t_)];
        }
    }

    void backward(const std::vector<const Tensor<T>*>& in, const Tensor<T>&, const Tensor<T>& dout,
                  const std::vector<Tensor<T>*>& din, const RunContext&) override {
        const Tensor<T>& x = *in[0];
        const int n = x.dim(0);
        const int hh = cells_;
        Tensor<T> dh_next({n, hh}), dc_next({n, hh}), dz({n, 4 * hh}), dx_t({n, f_});
        for (int t = t_ - 1; t >= 0; --t) {
            // Gradient arriving at h_t from the output.
            if (return_sequences_) {
                for (int r = 0; r < n; ++r) {
                    const T* src = dout.data() + (static_cast<size_t>(r) * t_ + t) * hh;
                    T* dst = dh_next.data() + static_cast<size_t>(r) * hh;
                    for (int j = 0; j < hh; ++j) dst[j] += src[j];
                }
            } else if (t == t_ - 1) {
                for (size_t i = 0; i < dh_next.size(); ++i) dh_next.v[i] += dout.v[i];
            }
            const Tensor<T>& z = zs_[static_cast<size_t>(t)];
            const Tensor<T>& c_prev = cs_[static_cast<size_t>(t)];
            const Tensor<T>& c_t = cs_[static_cast<size_t>(t) + 1];
            for (int r = 0; r < n; ++r) {
                const T* zr = z.data() + static_cast<size_t>(r) * 4 * hh;
                const T* cp = c_prev.data() + static_cast<size_t>(r) * hh;
                const T* ct = c_t.data() + static_cast<size_t>(r) * hh;
                const T* dh = dh_next.data() + static_cast<size_t>(r) * hh;
                T* dc = dc_next.data() + static_cast<size_t>(r) * hh;
                T* dzr = dz.data() + static_cast<size_t>(r) * 4 * hh;
                for (int j = 0; j < hh; ++j) {
                    const T ig = T(1) / (T(1) + std::exp(-zr[j]));
                    const T fg = T(1) / (T(1) + std::exp(-zr[hh + j]));
                    const T gg = std::tanh(zr[2 * hh + j]);
                    const T og = T(1) / (T(1) + std::exp(-zr[3 * hh + j]));
                    const T tc = std::tanh(ct[j]);
                    const T dcj = dh[j] * og * (T(1) - tc * tc) + dc[j];
                    dzr[j] = dcj * gg * ig * (T(1) - ig);
                    dzr[hh + j] = dcj * cp[j] * fg * (T(1) - fg);
                    dzr[2 * hh + j] = dcj * ig * (T(1) - gg * gg);
                    dzr[3 * hh + j] = dh[j] * tc * og * (T(1) - og);
                    dc[j] = dcj * fg;  // becomes dc_next for t-1
                }
            }
            gemm_tn(dz.data(), xs_[static_cast<size_t>(t)].data(), wx_.grad.data(), 4 * hh, n, f_, true);
            gemm_tn(dz.data(), hs_[static_cast<size_t>(t)].data(), wh_.grad.data(), 4 * hh, n, hh, true);
            for (int r = 0; r < n; ++r) {
                const T* dzr = dz.data() + static_cast<size_t>(r) * 4 * hh;
                for (int j = 0; j < 4 * hh; ++j) b_.grad.v[static_cast<size_t>(j)] += dzr[j];
            }
            gemm_nn(dz.data(), wx_.value.data(), dx_t.data(), n, 4 * hh, f_, false);
            scatter_dx(dx_t, *din[0], t, n);
            dh_next.zero();
            gemm_nn(dz.data(), wh_.value.data(), dh_next.data(), n, 4 * hh, hh, false);
        }
    }

    std::vector<Param<T>*> params() override { return {&wx_, &wh_, &b_}; }

    int cells_, t_ = 0, f_ = 0;
    bool return_sequences_ = false;
    bool input_is_frame_ = false;
    int frame_c_ = 0, frame_h_ = 0;
    Param<T> wx_, wh_, b_;
    std::vector<Tensor<T>> xs_, hs_, cs_, zs_;

private:
    void gather_input(const Tensor<T>& x, int n) {
        if (input_is_frame_) {
            // x[n, c, h, w] -> x_t[n, c*H + h] at time t = w
            for (int t = 0; t < t_; ++t) {
                Tensor<T>& xt = xs_[static_cast<size_t>(t)];
                for (int r = 0; r < n; ++r)
                    for (int c = 0; c < frame_c_; ++c)
                        for (int h = 0; h < frame_h_; ++h)
                            xt.v[(static_cast<size_t>(r) * f_) + static_cast<size_t>(c * frame_h_ + h)] =
                                x.v[((static_cast<size_t>(r) * frame_c_ + c) * frame_h_ + h) * t_ + t];
            }
        } else {
            for (int t = 0; t < t_; ++t) {
                Tensor<T>& xt = xs_[static_cast<size_t>(t)];
                for (int r = 0; r < n; ++r)
                    std::copy_n(x.data() + (static_cast<size_t>(r) * t_ + t) * f_, f_,
                                xt.data() + static_cast<size_t>(r) * f_);
            }
        }
    }

    void scatter_dx(const Tensor<T>& dx_t, Tensor<T>& dx, int t, int n) {
        if (input_is_frame_) {
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < frame_c_; ++c)
                    for (int h = 0; h < frame_h_; ++h)
                        dx.v[((static_cast<size_t>(r) * frame_c_ + c) * frame_h_ + h) * t_ + t] +=
                            dx_t.v[(static_cast<size_t>(r) * f_) + static_cast<size_t>(c * frame_h_ + h)];
        } else {
            for (int r = 0; r < n; ++r) {
                const T* src = dx_t.data() + static_cast<size_t>(r) * f_;
                T* dst = dx.data() + (static_cast<size_t>(r) * t_ + t) * f_;
                for (int j = 0; j < f_; ++j) dst[j] += src[j];
            }
        }
    }
};

template <class T>
class ReluImpl final : public LayerImpl<T> {
public:
    void forward(const std::vector<const Tensor<T>*>& in, Tensor<T>& out, const RunContext&) override {
        out = *in[0];
        for (T& v : out.v) v = v > T(0) ? v : T(0);
    }
    void backward(const std::vector<const Tensor<T>*>& in, const Tensor<T>&, const Tensor<T>& dout,
                  const std::vector<Tensor<T>*>& din, const RunContext&) override {
        const Tensor<T>& x = *in[0];
        T* dx = din[0]->data();
        for (size_t i = 0; i < x.size(); ++i)
            if (x.v[i] > T(0)) dx[i] += dout.v[i];
    }
};

template <class T>
class SoftmaxImpl final : public LayerImpl<T> {
public:
    void forward(const std::vector<const Tensor<T>*>& in, Tensor<T>& out, const RunContext&) override {
        const Tensor<T>& x = *in[0];
        const int n = x.dim(0), d = x.dim(1);
        out = Tensor<T>({n, d});
        for (int r = 0; r < n; ++r) {
            const T* xr = x.data() + static_cast<size_t>(r) * d;
            T* orow = out.data() + static_cast<size_t>(r) * d;
            T mx = xr[0];
            for (int j = 1; j < d; ++j) mx = std::max(mx, xr[j]);
            T sum = T(0);
            for (int j = 0; j < d; ++j) {
                orow[j] = std::exp(xr[j] - mx);
                sum += orow[j];
            }
            const T inv = T(1) / sum;
            for (int j = 0; j < d; ++j) orow[j] *= inv;
        }
    }
    void backward(const std::vector<const Tensor<T>*>&, const Tensor<T>& out, const Tensor<T>& dout,
                  const std::vector<Tensor<T>*>& din, const RunContext&) override {
        const int n = out.dim(0), d = out.dim(1);
        for (int r = 0; r < n; ++r) {
            const T* p = out.data() + static_cast<size_t>(r) * d;
            const T* dy = dout.data() + static_cast<size_t>(r) * d;
            T* dx = din[0]->data() + static_cast<size_t>(r) * d;
            T dot = T(0);
            for (int j = 0; j < d; ++j) dot += p[j] * dy[j];
            for (int j = 0; j < d; ++j) dx[j] += p[j] * (dy[j] - dot);
        }
    }
};

template <class T>
class FlattenImpl final : public LayerImpl<T> {
public:
    void forward(const std::vector<const Tensor<T>*>& in, Tensor<T>& out, const RunContext&) override {
        out = *in[0];
        const int n = out.dim(0);
        out.reshape({n, static_cast<int>(out.size()) / n});
    }
    void backward(const std::vector<const Tensor<T>*>&, const Tensor<T>&, const Tensor<T>& dout,
                  const std::vector<Tensor<T>*>& din, const RunContext&) override {
        T* dx = din[0]->data();
        for (size_t i = 0; i < dout.size(); ++i) dx[i] += dout.v[i];
    }
};

template <class T>
class AddImpl final : public LayerImpl<T> {
public:
    void forward(const std::vector<const Tensor<T>*>& in, Tensor<T>& out, const RunContext&) override {
        out = *in[0];
        const Tensor<T>& b = *in[1];
        for (size_t i = 0; i < out.size(); ++i) out.v[i] += b.v[i];
    }
    void backward(const std::vector<const Tensor<T>*>&, const Tensor<T>&, const Tensor<T>& dout,
                  const std::vector<Tensor<T>*>& din, const RunContext&) override {
        for (int k = 0; k < 2; ++k) {
            T* dx = din[static_cast<size_t>(k)]->data();
            for (size_t i = 0; i < dout.size(); ++i) dx[i] += dout.v[i];
        }
    }
};

template <class T>
class ConcatImpl final : public LayerImpl<T> {
public:
    void forward(const std::vector<const Tensor<T>*>& in, Tensor<T>& out, const RunContext&) override {
        const Tensor<T>& a = *in[0];
        const Tensor<T>& b = *in[1];
        const int n = a.dim(0), ca = a.dim(1), cb = b.dim(1), h = a.dim(2), w = a.dim(3);
        const size_t plane = static_cast<size_t>(h) * w;
        out = Tensor<T>({n, ca + cb, h, w});
        for (int e = 0; e < n; ++e) {
            std::copy_n(a.data() + static_cast<size_t>(e) * ca * plane, static_cast<size_t>(ca) * plane,
                        out.data() + static_cast<size_t>(e) * (ca + cb) * plane);
            std::copy_n(b.data() + static_cast<size_t>(e) * cb * plane, static_cast<size_t>(cb) * plane,
                        out.data() + (static_cast<size_t>(e) * (ca + cb) + ca) * plane);
        }
    }
    void backward(const std::vector<const Tensor<T>*>& in, const Tensor<T>&, const Tensor<T>& dout,
                  const std::vector<Tensor<T>*>& din, const RunContext&) override {
        const int n = in[0]->dim(0), ca = in[0]->dim(1), cb = in[1]->dim(1), h = in[0]->dim(2),
                  w = in[0]->dim(3);
        const size_t plane = static_cast<size_t>(h) * w;
        for (int e = 0; e < n; ++e) {
            const T* da = dout.data() + static_cast<size_t>(e) * (ca + cb) * plane;
            T* dxa = din[0]->data() + static_cast<size_t>(e) * ca * plane;
            for (size_t i = 0; i < static_cast<size_t>(ca) * plane; ++i) dxa[i] += da[i];
            const T* db = da + static_cast<size_t>(ca) * plane;
            T* dxb = din[1]->data() + static_cast<size_t>(e) * cb * plane;
            for (size_t i = 0; i < static_cast<size_t>(cb) * plane; ++i) dxb[i] += db[i];
        }
    }
};

template <class T>
class DropoutImpl final : public LayerImpl<T> {
public:
    DropoutImpl(double rate, int index) : rate_(rate), index_(index) {
        if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0,1)");
    }

    void forward(const std::vector<const Tensor<T>*>& in, Tensor<T>& out, const RunContext& ctx) override {
        out = *in[0];
        if (!ctx.training || rate_ == 0.0) return;  // inference is the identity
        const T scale = T(1.0 / (1.0 - rate_));
        for (size_t i = 0; i < out.size(); ++i)
            out.v[i] = keep(ctx, i) ? out.v[i] * scale : T(0);
    }

    void backward(const std::vector<const Tensor<T>*>&, const Tensor<T>&, const Tensor<T>& dout,
                  const std::vector<Tensor<T>*>& din, const RunContext& ctx) override {
        T* dx = din[0]->data();
        if (!ctx.training || rate_ == 0.0) {
            for (size_t i = 0; i < dout.size(); ++i) dx[i] += dout.v[i];
            return;
        }
        const T scale = T(1.0 / (1.0 - rate_));
        for (size_t i = 0; i < dout.size(); ++i)
            if (keep(ctx, i)) dx[i] += dout.v[i] * scale;
    }

private:
    // Mask is a pure function of (seed, step, layer, element); forward and
    // backward recompute it identically, and repeated forwards at a fixed
    // step (finite differencing) see a frozen mask.
    bool keep(const RunContext& ctx, size_t i) const {
        return hash_uniform(ctx.dropout_seed, ctx.step * 1000003ull + static_cast<uint64_t>(index_),
                            static_cast<uint64_t>(i)) >= rate_;
    }
    double rate_;
    int index_;
};

}  // namespace detail

template <class T>
class Network {
public:
    Network(NetworkSpec spec, uint64_t init_seed) : spec_(std::move(spec)) {
        shapes_ = infer_all_shapes(spec_);
        build();
        init_params(init_seed);
        ctx_.dropout_seed = init_seed;
    }

    const NetworkSpec& spec() const { return spec_; }
    const std::vector<std::vector<int>>& layer_shapes() const { return shapes_; }
    const std::vector<int>& output_shape() const { return shapes_.back(); }

    void set_step(uint64_t step) { ctx_.step = step; }
    void set_check_finite(bool on) { ctx_.check_finite = on; }

    // Runs the graph and returns the last layer's activation.
    const Tensor<T>& forward(const Tensor<T>& input, bool training) {
        check_input(input);
        ctx_.training = training;
        input_ = input;
        const int n = input.dim(0);
        for (size_t i = 0; i < layers_.size(); ++i) {
            auto in = gather_inputs(i);
            layers_[i]->forward(in, acts_[i], ctx_);
            if (ctx_.check_finite && !acts_[i].all_finite())
                throw std::runtime_error("non-finite activation at layer " + std::to_string(i) + " (" +
                                         layer_kind_name(spec_.layers[i].kind) + ")");
        }
        (void)n;
        return acts_.back();
    }

    const Tensor<T>& output() const { return acts_.back(); }

    // Activation of one layer from the most recent forward pass.
    const Tensor<T>& activation(size_t layer) const { return acts_.at(layer); }

    // Backpropagates dout. When fused_softmax_ce is set, dout is the
    // gradient with respect to the final softmax layer's *logits*
    // ((probs - onehot)/N for mean cross-entropy) and the softmax layer
    // itself is skipped.
    void backward(const Tensor<T>& dout, bool fused_softmax_ce = false) {
        dinput_ = Tensor<T>(input_.shape);
        dacts_.resize(layers_.size());
        for (size_t i = 0; i < layers_.size(); ++i) {
            dacts_[i] = Tensor<T>(acts_[i].shape);
        }
        size_t start = layers_.size();
        if (fused_softmax_ce) {
            if (spec_.layers.back().kind != LayerKind::Softmax)
                throw std::runtime_error("fused cross-entropy backward requires a final softmax layer");
            const size_t sm = layers_.size() - 1;
            accumulate(input_index(sm, 0), dout);
            start = sm;  // skip the softmax layer itself
        } else {
            dacts_.back() = dout;
            start = layers_.size();
        }
        for (size_t ii = start; ii-- > 0;) {
            auto in = gather_inputs(ii);
            std::vector<Tensor<T>*> din;
            const auto idx = input_indices(ii);
            din.reserve(idx.size());
            for (int j : idx) din.push_back(j < 0 ? &dinput_ : &dacts_[static_cast<size_t>(j)]);
            layers_[ii]->backward(in, acts_[ii], dacts_[ii], din, ctx_);
        }
    }

    std::vector<Param<T>*> params() {
        std::vector<Param<T>*> out;
        for (auto& l : layers_)
            for (Param<T>* p : l->params()) out.push_back(p);
        return out;
    }

    std::vector<Param<T>*> buffers() {
        std::vector<Param<T>*> out;
        for (auto& l : layers_)
            for (Param<T>* p : l->buffers()) out.push_back(p);
        return out;
    }

    size_t param_count() {
        size_t n = 0;
        for (Param<T>* p : params()) n += p->value.size();
        return n;
    }

    void zero_grads() {
        for (Param<T>* p : params()) p->grad.zero();
    }

    // Parameter + buffer snapshot (for best-epoch checkpointing).
    std::vector<std::vector<T>> snapshot() {
        std::vector<std::vector<T>> s;
        for (Param<T>* p : params()) s.push_back(p->value.v);
        for (Param<T>* p : buffers()) s.push_back(p->value.v);
        return s;
    }

    void restore(const std::vector<std::vector<T>>& s) {
        size_t i = 0;
        for (Param<T>* p : params()) p->value.v = s.at(i++);
        for (Param<T>* p : buffers()) p->value.v = s.at(i++);
    }

    const Tensor<T>& input_gradient() const { return dinput_; }

private:
    void check_input(const Tensor<T>& input) const {
        if (input.ndim() != static_cast<int>(spec_.input_shape.size()) + 1)
            throw std::invalid_argument("network input rank mismatch: got " + shape_str(input.shape) +
                                        ", expected batch x " + shape_str(spec_.input_shape));
        for (size_t i = 0; i < spec_.input_shape.size(); ++i)
            if (input.shape[i + 1] != spec_.input_shape[i])
                throw std::invalid_argument("network input shape mismatch: got " + shape_str(input.shape) +
                                            ", expected batch x " + shape_str(spec_.input_shape));
    }

    std::vector<int> input_indices(size_t i) const {
        if (!spec_.layers[i].inputs.empty()) return spec_.layers[i].inputs;
        return {static_cast<int>(i) - 1};
    }

    int input_index(size_t i, size_t slot) const { return input_indices(i)[slot]; }

    std::vector<const Tensor<T>*> gather_inputs(size_t i) const {
        std::vector<const Tensor<T>*> in;
        for (int j : input_indices(i)) in.push_back(j < 0 ? &input_ : &acts_[static_cast<size_t>(j)]);
        return in;
    }

    void accumulate(int idx, const Tensor<T>& g) {
        Tensor<T>& dst = idx < 0 ? dinput_ : dacts_[static_cast<size_t>(idx)];
        for (size_t i = 0; i < g.size(); ++i) dst.v[i] += g.v[i];
    }

    void build() {
        layers_.clear();
        for (size_t i = 0; i < spec_.layers.size(); ++i) {
            const LayerSpec& ls = spec_.layers[i];
            std::vector<std::vector<int>> in_shapes;
            for (int j : input_indices(i))
                in_shapes.push_back(j < 0 ? spec_.input_shape : shapes_[static_cast<size_t>(j)]);
            switch (ls.kind) {
                case LayerKind::Dense:
                    layers_.push_back(std::make_unique<detail::DenseImpl<T>>(ls.units, in_shapes[0][0],
                                                                             static_cast<int>(i)));
                    break;
                case LayerKind::Conv2d:
                    layers_.push_back(
                        std::make_unique<detail::Conv2dImpl<T>>(ls, in_shapes[0], static_cast<int>(i)));
                    break;
                case LayerKind::MaxPool:
                    layers_.push_back(std::make_unique<detail::MaxPoolImpl<T>>(ls.pool));
                    break;
                case LayerKind::BatchNorm:
                    layers_.push_back(
                        std::make_unique<detail::BatchNormImpl<T>>(in_shapes[0], static_cast<int>(i)));
                    break;
                case LayerKind::Lstm:
                    layers_.push_back(
                        std::make_unique<detail::LstmImpl<T>>(ls, in_shapes[0], static_cast<int>(i)));
                    break;
                case LayerKind::Relu:
                    layers_.push_back(std::make_unique<detail::ReluImpl<T>>());
                    break;
                case LayerKind::Softmax:
                    layers_.push_back(std::make_unique<detail::SoftmaxImpl<T>>());
                    break;
                case LayerKind::Flatten:
                    layers_.push_back(std::make_unique<detail::FlattenImpl<T>>());
                    break;
                case LayerKind::Add:
                    layers_.push_back(std::make_unique<detail::AddImpl<T>>());
                    break;
                case LayerKind::Concat:
                    layers_.push_back(std::make_unique<detail::ConcatImpl<T>>());
                    break;
                case LayerKind::Dropout:
                    layers_.push_back(std::make_unique<detail::DropoutImpl<T>>(ls.rate, static_cast<int>(i)));
                    break;
            }
        }
        acts_.resize(layers_.size());
    }

    // Fan-in-scaled uniform for dense/conv; simple scaled uniform for LSTM
    // kernels with forget-gate bias 1. Draws happen in double so float and
    // double networks built from one seed hold the same values.
    void init_params(uint64_t seed) {
        Rng rng(mix_seed(seed, 0x696e6974));
        for (size_t i = 0; i < layers_.size(); ++i) {
            const LayerSpec& ls = spec_.layers[i];
            auto ps = layers_[i]->params();
            if (ls.kind == LayerKind::Dense || ls.kind == LayerKind::Conv2d) {
                Param<T>* w = ps[0];
                const int fan_in = w->value.dim(1);
                const double limit = std::sqrt(6.0 / fan_in);
                for (T& v : w->value.v) v = static_cast<T>(rng.uniform(-limit, limit));
                // bias stays zero
            } else if (ls.kind == LayerKind::Lstm) {
                Param<T>* wx = ps[0];
                Param<T>* wh = ps[1];
                Param<T>* b = ps[2];
                const double lx = std::sqrt(1.0 / wx->value.dim(1));
                const double lh = std::sqrt(1.0 / wh->value.dim(1));
                for (T& v : wx->value.v) v = static_cast<T>(rng.uniform(-lx, lx));
                for (T& v : wh->value.v) v = static_cast<T>(rng.uniform(-lh, lh));
                const int cells = wh->value.dim(1);
                for (int j = 0; j < cells; ++j) b->value.v[static_cast<size_t>(cells + j)] = T(1);
            }
        }
    }

    NetworkSpec spec_;
    std::vector<std::vector<int>> shapes_;
    std::vector<std::unique_ptr<detail::LayerImpl<T>>> layers_;
    std::vector<Tensor<T>> acts_;
    std::vector<Tensor<T>> dacts_;
    Tensor<T> input_, dinput_;
    RunContext ctx_;
};

}  // namespace amc::nn
