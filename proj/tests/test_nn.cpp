#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "matchnav/nn.hpp"

using namespace matchnav;
using nn::Mat;

namespace {

Mat random_mat(size_t r, size_t c, Rng& rng) {
    Mat m(r, c);
    for (double& v : m.data) v = rng.normal();
    return m;
}

double max_rel_err(const std::vector<double>& analytic, const std::vector<double>& numeric) {
    REQUIRE(analytic.size() == numeric.size());
    double worst = 0.0;
    for (size_t i = 0; i < analytic.size(); ++i) {
        const double scale = std::fmax(1.0, std::fmax(std::fabs(analytic[i]), std::fabs(numeric[i])));
        worst = std::fmax(worst, std::fabs(analytic[i] - numeric[i]) / scale);
    }
    return worst;
}

} // namespace

TEST_CASE("matmul variants match the naive triple loop") {
    Rng rng(1);
    const Mat a = random_mat(7, 5, rng);
    const Mat b = random_mat(5, 9, rng);
    Mat c;
    nn::matmul(a, b, c);
    for (size_t i = 0; i < a.rows; ++i) {
        for (size_t j = 0; j < b.cols; ++j) {
            double acc = 0.0;
            for (size_t k = 0; k < a.cols; ++k) acc += a.at(i, k) * b.at(k, j);
            CHECK(c.at(i, j) == doctest::Approx(acc).epsilon(1e-12));
        }
    }
}

TEST_CASE("matmul transpose variants") {
    Rng rng(2);
    const Mat a = random_mat(6, 4, rng);
    const Mat b = random_mat(6, 3, rng);
    Mat atb;
    nn::matmul_at_b(a, b, atb); // (4x6)*(6x3)
    REQUIRE(atb.rows == 4);
    REQUIRE(atb.cols == 3);
    for (size_t i = 0; i < 4; ++i)
        for (size_t j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (size_t k = 0; k < 6; ++k) acc += a.at(k, i) * b.at(k, j);
            CHECK(atb.at(i, j) == doctest::Approx(acc).epsilon(1e-12));
        }

    const Mat c = random_mat(5, 4, rng);
    const Mat d = random_mat(7, 4, rng);
    Mat cdt;
    nn::matmul_a_bt(c, d, cdt); // (5x4)*(4x7)
    REQUIRE(cdt.rows == 5);
    REQUIRE(cdt.cols == 7);
    for (size_t i = 0; i < 5; ++i)
        for (size_t j = 0; j < 7; ++j) {
            double acc = 0.0;
            for (size_t k = 0; k < 4; ++k) acc += c.at(i, k) * d.at(j, k);
            CHECK(cdt.at(i, j) == doctest::Approx(acc).epsilon(1e-12));
        }
}

TEST_CASE("mlp gradients match finite differences") {
    Rng rng(3);
    nn::Mlp net({5, 8, 8, 3}, rng);
    const Mat x = random_mat(4, 5, rng);
    const Mat target = random_mat(4, 3, rng);

    // loss = mean squared error against a fixed target
    auto loss_fn = [&](const std::vector<double>& params) {
        nn::Mlp probe = net;
        probe.set_params(params);
        nn::Mlp::Cache cache;
        const Mat& y = probe.forward(x, cache);
        double loss = 0.0;
        for (size_t i = 0; i < y.size(); ++i) {
            const double d = y.data[i] - target.data[i];
            loss += d * d;
        }
        return loss / static_cast<double>(y.size());
    };

    std::vector<double> params;
    net.get_params(params);

    nn::Mlp::Cache cache;
    const Mat& y = net.forward(x, cache);
    Mat dy(y.rows, y.cols);
    for (size_t i = 0; i < y.size(); ++i)
        dy.data[i] = 2.0 * (y.data[i] - target.data[i]) / static_cast<double>(y.size());
    net.zero_grad();
    Mat dx;
    net.backward(cache, dy, &dx);

    std::vector<double> analytic;
    net.get_grads(analytic);
    const std::vector<double> numeric = nn::finite_difference(loss_fn, params, 1e-6);
    CHECK(max_rel_err(analytic, numeric) < 1e-7);

    // input gradients against finite differences too
    Mat x_probe = x;
    for (size_t i = 0; i < x.size(); ++i) {
        const double orig = x_probe.data[i];
        const double h = 1e-6;
        nn::Mlp::Cache c2;
        x_probe.data[i] = orig + h;
        const Mat yp = net.forward(x_probe, c2);
        double lp = 0.0;
        for (size_t k = 0; k < yp.size(); ++k) {
            const double d = yp.data[k] - target.data[k];
            lp += d * d;
        }
        lp /= static_cast<double>(yp.size());
        x_probe.data[i] = orig - h;
        const Mat ym = net.forward(x_probe, c2);
        double lm = 0.0;
        for (size_t k = 0; k < ym.size(); ++k) {
            const double d = ym.data[k] - target.data[k];
            lm += d * d;
        }
        lm /= static_cast<double>(ym.size());
        x_probe.data[i] = orig;
        CHECK(dx.data[i] == doctest::Approx((lp - lm) / (2 * h)).epsilon(1e-5));
    }
}

TEST_CASE("adam matches the reference update rule") {
    std::vector<double> params{1.0};
    std::vector<double> grads{0.5};
    nn::Adam opt(1, 0.1);
    opt.step(params, grads);
    // first step: mhat = g, vhat = g^2 -> theta -= lr * g/(|g| + eps)
    CHECK(params[0] == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)).epsilon(1e-12));

    // a second identical step keeps moving the same direction
    opt.step(params, grads);
    CHECK(params[0] < 0.91);
}

TEST_CASE("parameter get/set round-trips") {
    Rng rng(4);
    nn::Mlp net({3, 4, 2}, rng);
    std::vector<double> params;
    net.get_params(params);
    nn::Mlp clone({3, 4, 2}, rng);
    clone.set_params(params);
    std::vector<double> back;
    clone.get_params(back);
    CHECK(back == params);
}

TEST_CASE("finite_difference sanity on an analytic function") {
    auto f = [](const std::vector<double>& p) { return p[0] * p[0] + 3.0 * p[1]; };
    const auto g = nn::finite_difference(f, {2.0, 5.0}, 1e-6);
    CHECK(g[0] == doctest::Approx(4.0).epsilon(1e-8));
    CHECK(g[1] == doctest::Approx(3.0).epsilon(1e-8));
}
