#ifndef MATCHNAV_NN_HPP
#define MATCHNAV_NN_HPP

#include <cstddef>
#include <functional>
#include <vector>

#include "matchnav/common.hpp"

namespace matchnav::nn {

/// Dense row-major matrix of doubles. Kept deliberately small: the
/// architectures here are static stacks of dense layers, so a handful of
/// matmul variants plus elementwise ops cover all of training.
struct Mat {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> data;

    Mat() = default;
    Mat(size_t r, size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& at(size_t r, size_t c) { return data[r * cols + c]; }
    double at(size_t r, size_t c) const { return data[r * cols + c]; }
    double* row(size_t r) { return data.data() + r * cols; }
    const double* row(size_t r) const { return data.data() + r * cols; }
    size_t size() const { return data.size(); }
    void zero() { std::fill(data.begin(), data.end(), 0.0); }
};

/// out = a * b
void matmul(const Mat& a, const Mat& b, Mat& out);
/// out = a^T * b
void matmul_at_b(const Mat& a, const Mat& b, Mat& out);
/// out = a * b^T
void matmul_a_bt(const Mat& a, const Mat& b, Mat& out);

struct Linear {
    Mat w; // in x out
    std::vector<double> b;
    Mat grad_w;
    std::vector<double> grad_b;

    Linear() = default;
    Linear(size_t in, size_t out);

    size_t in_dim() const { return w.rows; }
    size_t out_dim() const { return w.cols; }

    void init(Rng& rng, double scale = 1.0);
    void zero_grad();

    /// y = x * w + b
    void forward(const Mat& x, Mat& y) const;
    /// Accumulates grad_w, grad_b from (x, dy); writes dx if non-null.
    void backward(const Mat& x, const Mat& dy, Mat* dx);
};

enum class Activation { relu, none };

/// Static stack of dense layers, rectifier between them, linear output.
class Mlp {
public:
    Mlp() = default;
    /// dims = {in, hidden..., out}
    Mlp(const std::vector<size_t>& dims, Rng& rng, double head_scale = 1.0);

    const std::vector<size_t>& dims() const { return dims_; }
    std::vector<Linear>& layers() { return layers_; }
    const std::vector<Linear>& layers() const { return layers_; }

    struct Cache {
        std::vector<Mat> pre;  // pre-activation per layer
        std::vector<Mat> post; // post-activation per layer (post.back() = output)
        const Mat* input = nullptr;
    };

    /// Forward over a batch (rows = samples). Returns the output reference
    /// inside the cache.
    const Mat& forward(const Mat& x, Cache& cache) const;
    /// Backprop from d_out; accumulates layer grads; writes d_input if
    /// non-null.
    void backward(const Cache& cache, const Mat& d_out, Mat* d_input);

    void zero_grad();

    /// Flat parameter access for checkpoints, target copies and gradient
    /// checking.
    size_t param_count() const;
    void get_params(std::vector<double>& out) const;
    void set_params(const std::vector<double>& in);
    void get_grads(std::vector<double>& out) const;

private:
    std::vector<size_t> dims_;
    std::vector<Linear> layers_;
};

/// Adam with bias correction over one flat parameter vector.
class Adam {
public:
    Adam() = default;
    Adam(size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    void step(std::vector<double>& params, const std::vector<double>& grads);
    double lr() const { return lr_; }
    long long iterations() const { return t_; }

    /// Serialized as (t, m, v) by the checkpoint writers.
    long long t_ = 0;
    std::vector<double> m_;
    std::vector<double> v_;

private:
    double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
};

/// Central-difference gradient of a scalar function at params; used by the
/// gradient-check test suites.
std::vector<double> finite_difference(const std::function<double(const std::vector<double>&)>& f,
                                      std::vector<double> params, double h = 1e-6);

} // namespace matchnav::nn

#endif
