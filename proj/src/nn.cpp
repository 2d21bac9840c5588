#include "matchnav/nn.hpp"

#include <cassert>
#include <cmath>
#include <functional>

namespace matchnav::nn {

void matmul(const Mat& a, const Mat& b, Mat& out) {
    assert(a.cols == b.rows);
    out = Mat(a.rows, b.cols);
#pragma omp parallel for schedule(static)
    for (size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* orow = out.row(i);
        for (size_t k = 0; k < a.cols; ++k) {
            const double av = arow[k];
            if (av == 0.0) continue;
            const double* brow = b.row(k);
            for (size_t j = 0; j < b.cols; ++j) orow[j] += av * brow[j];
        }
    }
}

void matmul_at_b(const Mat& a, const Mat& b, Mat& out) {
    assert(a.rows == b.rows);
    out = Mat(a.cols, b.cols);
    for (size_t k = 0; k < a.rows; ++k) {
        const double* arow = a.row(k);
        const double* brow = b.row(k);
        for (size_t i = 0; i < a.cols; ++i) {
            const double av = arow[i];
            if (av == 0.0) continue;
            double* orow = out.row(i);
            for (size_t j = 0; j < b.cols; ++j) orow[j] += av * brow[j];
        }
    }
}

void matmul_a_bt(const Mat& a, const Mat& b, Mat& out) {
    assert(a.cols == b.cols);
    out = Mat(a.rows, b.rows);
#pragma omp parallel for schedule(static)
    for (size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* orow = out.row(i);
        for (size_t j = 0; j < b.rows; ++j) {
            const double* brow = b.row(j);
            double acc = 0.0;
            for (size_t k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
            orow[j] = acc;
        }
    }
}

Linear::Linear(size_t in, size_t out)
    : w(in, out), b(out, 0.0), grad_w(in, out), grad_b(out, 0.0) {}

void Linear::init(Rng& rng, double scale) {
    // Uniform He-style fan-in initialization.
    const double bound = scale * std::sqrt(6.0 / static_cast<double>(w.rows));
    for (double& v : w.data) v = rng.uniform(-bound, bound);
    std::fill(b.begin(), b.end(), 0.0);
}

void Linear::zero_grad() {
    grad_w.zero();
    std::fill(grad_b.begin(), grad_b.end(), 0.0);
}

void Linear::forward(const Mat& x, Mat& y) const {
    matmul(x, w, y);
    for (size_t i = 0; i < y.rows; ++i) {
        double* row = y.row(i);
        for (size_t j = 0; j < y.cols; ++j) row[j] += b[j];
    }
}

void Linear::backward(const Mat& x, const Mat& dy, Mat* dx) {
    Mat gw;
    matmul_at_b(x, dy, gw);
    for (size_t i = 0; i < gw.size(); ++i) grad_w.data[i] += gw.data[i];
    for (size_t i = 0; i < dy.rows; ++i) {
        const double* row = dy.row(i);
        for (size_t j = 0; j < dy.cols; ++j) grad_b[j] += row[j];
    }
    if (dx) matmul_a_bt(dy, w, *dx);
}

Mlp::Mlp(const std::vector<size_t>& dims, Rng& rng, double head_scale) : dims_(dims) {
    if (dims.size() < 2) throw Error("bad-config", "mlp needs at least input and output dims");
    for (size_t i = 0; i + 1 < dims.size(); ++i) {
        layers_.emplace_back(dims[i], dims[i + 1]);
        const bool is_head = (i + 2 == dims.size());
        layers_.back().init(rng, is_head ? head_scale : 1.0);
    }
}

const Mat& Mlp::forward(const Mat& x, Cache& cache) const {
    cache.pre.resize(layers_.size());
    cache.post.resize(layers_.size());
    cache.input = &x;
    const Mat* cur = &x;
    for (size_t l = 0; l < layers_.size(); ++l) {
        layers_[l].forward(*cur, cache.pre[l]);
        if (l + 1 < layers_.size()) {
            cache.post[l] = cache.pre[l];
            for (double& v : cache.post[l].data) v = v > 0.0 ? v : 0.0;
        } else {
            cache.post[l] = cache.pre[l]; // linear head
        }
        cur = &cache.post[l];
    }
    return cache.post.back();
}

void Mlp::backward(const Cache& cache, const Mat& d_out, Mat* d_input) {
    Mat delta = d_out;
    for (size_t l = layers_.size(); l-- > 0;) {
        if (l + 1 < layers_.size()) {
            // gradient through the rectifier of this layer's output
            const Mat& pre = cache.pre[l];
            for (size_t i = 0; i < delta.size(); ++i)
                if (pre.data[i] <= 0.0) delta.data[i] = 0.0;
        }
        const Mat& x = (l == 0) ? *cache.input : cache.post[l - 1];
        Mat dx;
        layers_[l].backward(x, delta, (l == 0) ? d_input : &dx);
        if (l > 0) delta = std::move(dx);
    }
}

void Mlp::zero_grad() {
    for (Linear& l : layers_) l.zero_grad();
}

size_t Mlp::param_count() const {
    size_t n = 0;
    for (const Linear& l : layers_) n += l.w.size() + l.b.size();
    return n;
}

void Mlp::get_params(std::vector<double>& out) const {
    out.clear();
    out.reserve(param_count());
    for (const Linear& l : layers_) {
        out.insert(out.end(), l.w.data.begin(), l.w.data.end());
        out.insert(out.end(), l.b.begin(), l.b.end());
    }
}

void Mlp::set_params(const std::vector<double>& in) {
    size_t off = 0;
    for (Linear& l : layers_) {
        std::copy(in.begin() + off, in.begin() + off + l.w.size(), l.w.data.begin());
        off += l.w.size();
        std::copy(in.begin() + off, in.begin() + off + l.b.size(), l.b.begin());
        off += l.b.size();
    }
    if (off != in.size()) throw Error("bad-config", "parameter vector size mismatch");
}

void Mlp::get_grads(std::vector<double>& out) const {
    out.clear();
    out.reserve(param_count());
    for (const Linear& l : layers_) {
        out.insert(out.end(), l.grad_w.data.begin(), l.grad_w.data.end());
        out.insert(out.end(), l.grad_b.begin(), l.grad_b.end());
    }
}

Adam::Adam(size_t n, double lr, double beta1, double beta2, double eps)
    : m_(n, 0.0), v_(n, 0.0), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(std::vector<double>& params, const std::vector<double>& grads) {
    if (params.size() != m_.size() || grads.size() != m_.size())
        throw Error("bad-config", "adam state size mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
        const double mhat = m_[i] / bc1;
        const double vhat = v_[i] / bc2;
        params[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
}

std::vector<double> finite_difference(const std::function<double(const std::vector<double>&)>& f,
                                      std::vector<double> params, double h) {
    std::vector<double> grad(params.size(), 0.0);
    for (size_t i = 0; i < params.size(); ++i) {
        const double orig = params[i];
        params[i] = orig + h;
        const double fp = f(params);
        params[i] = orig - h;
        const double fm = f(params);
        params[i] = orig;
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

} // namespace matchnav::nn
