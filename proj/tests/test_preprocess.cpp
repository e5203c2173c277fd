#include <Eigen/Dense>
#include <cmath>

#include "amc/preprocess.hpp"
#include "amc/rng.hpp"
#include "doctest.h"

using namespace amc;

namespace {

MatD random_matrix(int rows, int cols, uint64_t seed) {
    MatD m(rows, cols);
    Rng rng(seed);
    for (double& v : m.v) v = rng.normal();
    return m;
}

IQFrame frame_from(std::initializer_list<float> i_row, std::initializer_list<float> q_row) {
    IQFrame f(static_cast<int>(i_row.size()));
    int n = 0;
    for (float v : i_row) f.i_at(n++) = v;
    n = 0;
    for (float v : q_row) f.q_at(n++) = v;
    return f;
}

// Largest principal angle between the row spaces of two k x d bases.
double subspace_angle(const MatD& a, const Eigen::MatrixXd& b) {
    const int k = a.rows, d = a.cols;
    Eigen::MatrixXd am(k, d);
    for (int r = 0; r < k; ++r)
        for (int c = 0; c < d; ++c) am(r, c) = a.at(r, c);
    Eigen::MatrixXd m = am * b;  // k x k, b is d x k with orthonormal columns
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const double smin = svd.singularValues().minCoeff();
    return std::acos(std::min(1.0, smin));
}

}  // namespace

TEST_CASE("jacobi eigensolver matches eigen on random symmetric matrices") {
    const int n = 24;
    MatD raw = random_matrix(n, n, 4);
    MatD sym(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) sym.at(i, j) = 0.5 * (raw.at(i, j) + raw.at(j, i));

    std::vector<double> eigvals;
    MatD eigvecs;
    jacobi_eigen_sym(sym, eigvals, eigvecs);

    Eigen::MatrixXd es(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) es(i, j) = sym.at(i, j);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(es);
    // Eigen returns ascending order.
    for (int r = 0; r < n; ++r)
        CHECK(eigvals[static_cast<size_t>(r)] ==
              doctest::Approx(solver.eigenvalues()(n - 1 - r)).epsilon(1e-9));
    // descending order, orthonormal rows
    for (int r = 0; r + 1 < n; ++r) CHECK(eigvals[static_cast<size_t>(r)] >= eigvals[static_cast<size_t>(r) + 1]);
    for (int r = 0; r < n; ++r) {
        for (int s = 0; s < n; ++s) {
            double dot = 0.0;
            for (int c = 0; c < n; ++c) dot += eigvecs.at(r, c) * eigvecs.at(s, c);
            CHECK(std::abs(dot - (r == s ? 1.0 : 0.0)) < 1e-8);
        }
    }
}

TEST_CASE("pca matches an independent eigendecomposition oracle") {
    const int n = 50, d = 8, k = 3;
    const MatD x = random_matrix(n, d, 77);
    const PCAModel model = pca_fit(x, k);

    Eigen::MatrixXd xe(n, d);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < d; ++c) xe(r, c) = x.at(r, c);
    Eigen::RowVectorXd mean = xe.colwise().mean();
    Eigen::MatrixXd centered = xe.rowwise() - mean;
    Eigen::MatrixXd cov = centered.transpose() * centered / (n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    Eigen::MatrixXd top = solver.eigenvectors().rightCols(k).rowwise().reverse();

    MatD basis = model.basis;
    CHECK(subspace_angle(basis, top) < 1e-6);
    for (int r = 0; r < k; ++r)
        CHECK(model.variances[static_cast<size_t>(r)] ==
              doctest::Approx(solver.eigenvalues()(d - 1 - r)).epsilon(1e-9));
}

TEST_CASE("complete basis reconstructs exactly") {
    const int n = 300, d = 16;
    const MatD x = random_matrix(n, d, 5);
    const PCAModel model = pca_fit(x, d);
    double worst = 0.0;
    for (int r = 0; r < 20; ++r) {
        std::vector<double> row(static_cast<size_t>(d));
        for (int c = 0; c < d; ++c) row[static_cast<size_t>(c)] = x.at(r, c);
        const auto y = pca_transform(model, row);
        const auto back = pca_inverse(model, y);
        double num = 0.0, den = 0.0;
        for (int c = 0; c < d; ++c) {
            num += (back[static_cast<size_t>(c)] - row[static_cast<size_t>(c)]) *
                   (back[static_cast<size_t>(c)] - row[static_cast<size_t>(c)]);
            den += row[static_cast<size_t>(c)] * row[static_cast<size_t>(c)];
        }
        worst = std::max(worst, std::sqrt(num / den));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("first component aligns with the known major axis") {
    // Points on an ellipse make the sample covariance exactly diagonal in
    // the ellipse frame, so the true eigenvectors are the rotated axes.
    const int n = 64;
    const double theta = 0.52;
    const double ct = std::cos(theta), st = std::sin(theta);
    MatD x(n, 2);
    for (int i = 0; i < n; ++i) {
        const double phi = 2.0 * M_PI * i / n;
        const double u = std::sqrt(8.0) * std::cos(phi);  // major axis, variance 4
        const double v = std::sqrt(2.0) * std::sin(phi);  // minor axis, variance 1
        x.at(i, 0) = ct * u - st * v;
        x.at(i, 1) = st * u + ct * v;
    }
    const PCAModel model = pca_fit(x, 2);
    const double angle = std::atan2(model.basis.at(0, 1), model.basis.at(0, 0));
    CHECK(std::abs(angle - theta) < 1e-3);
    CHECK(model.variances[0] > model.variances[1]);
}

TEST_CASE("pca frame path: factor 2 gives 2x64 output") {
    Rng rng(8);
    const int n = 300;
    MatD x(n, 256);
    for (double& v : x.v) v = rng.normal();
    const PCAModel model = pca_fit(x, 128);
    CHECK(model.components() == 128);

    IQFrame f(128);
    for (float& v : f.data) v = static_cast<float>(rng.normal());
    const IQFrame out = pca_transform_frame(model, f);
    CHECK(out.len == 64);
}

TEST_CASE("pca transform of the mean is zero and the centered map is linear") {
    const MatD x = random_matrix(60, 10, 3);
    const PCAModel model = pca_fit(x, 4);
    const auto at_mean = pca_transform(model, model.mean);
    for (double v : at_mean) CHECK(std::abs(v) < 1e-9);

    // T0(x) = basis * x is exactly linear.
    Rng rng(4);
    std::vector<double> a(10), b(10), combo(10);
    for (int c = 0; c < 10; ++c) {
        a[static_cast<size_t>(c)] = rng.normal();
        b[static_cast<size_t>(c)] = rng.normal();
        combo[static_cast<size_t>(c)] =
            2.5 * a[static_cast<size_t>(c)] - 1.25 * b[static_cast<size_t>(c)] +
            model.mean[static_cast<size_t>(c)] * (1.0 - 2.5 + 1.25);
    }
    // Compare through the affine map: T(combo) vs 2.5 T(a) - 1.25 T(b).
    const auto ta = pca_transform(model, a);
    const auto tb = pca_transform(model, b);
    const auto tc = pca_transform(model, combo);
    for (size_t i = 0; i < tc.size(); ++i)
        CHECK(std::abs(tc[i] - (2.5 * ta[i] - 1.25 * tb[i])) < 1e-9);
}

TEST_CASE("mean squared coefficients equal the stored variances in order") {
    const int n = 400, d = 12, k = 5;
    const MatD x = random_matrix(n, d, 15);
    const PCAModel model = pca_fit(x, k);
    std::vector<double> ms(static_cast<size_t>(k), 0.0);
    for (int r = 0; r < n; ++r) {
        std::vector<double> row(static_cast<size_t>(d));
        for (int c = 0; c < d; ++c) row[static_cast<size_t>(c)] = x.at(r, c);
        const auto y = pca_transform(model, row);
        for (int j = 0; j < k; ++j) ms[static_cast<size_t>(j)] += y[static_cast<size_t>(j)] * y[static_cast<size_t>(j)];
    }
    for (int j = 0; j < k; ++j) {
        ms[static_cast<size_t>(j)] /= (n - 1);
        CHECK(ms[static_cast<size_t>(j)] == doctest::Approx(model.variances[static_cast<size_t>(j)]).epsilon(1e-6));
        if (j > 0) CHECK(ms[static_cast<size_t>(j)] <= ms[static_cast<size_t>(j) - 1] * (1.0 + 1e-9));
    }
}

TEST_CASE("reconstruction error is non-increasing in k") {
    const int n = 120, d = 10;
    const MatD x = random_matrix(n, d, 44);
    double prev = 1e300;
    for (int k : {1, 2, 4, 8, 10}) {
        const PCAModel model = pca_fit(x, k);
        double err = 0.0;
        for (int r = 0; r < n; ++r) {
            std::vector<double> row(static_cast<size_t>(d));
            for (int c = 0; c < d; ++c) row[static_cast<size_t>(c)] = x.at(r, c);
            const auto back = pca_inverse(model, pca_transform(model, row));
            for (int c = 0; c < d; ++c) {
                const double e = back[static_cast<size_t>(c)] - row[static_cast<size_t>(c)];
                err += e * e;
            }
        }
        CHECK(err <= prev * (1.0 + 1e-9));
        prev = err;
    }
}

TEST_CASE("pca error cases") {
    const MatD x = random_matrix(20, 6, 1);
    CHECK_THROWS(pca_fit(x, 7));   // k > d
    CHECK_THROWS(pca_fit(x, 0));   // k < 1
    CHECK_THROWS(pca_fit(x, 20));  // N <= k
    MatD constant(30, 4);
    for (double& v : constant.v) v = 2.0;
    CHECK_THROWS(pca_fit(constant, 2));  // zero variance
}

TEST_CASE("uniform plans") {
    const auto p4 = uniform_plan(128, 4);
    REQUIRE(p4.indices.size() == 32);
    for (int i = 0; i < 32; ++i) CHECK(p4.indices[static_cast<size_t>(i)] == 4 * i);

    const auto p1 = uniform_plan(128, 1);
    CHECK(p1.indices.size() == 128);

    const auto p32 = uniform_plan(128, 32);
    CHECK(p32.indices == std::vector<int>{0, 32, 64, 96});

    CHECK_THROWS(uniform_plan(128, 3));
}

TEST_CASE("random plans are deterministic, sorted, unique") {
    const auto a = random_plan(128, 2, 5);
    const auto b = random_plan(128, 2, 5);
    const auto c = random_plan(128, 2, 6);
    CHECK(a.indices == b.indices);
    CHECK(a.indices != c.indices);
    REQUIRE(a.indices.size() == 64);
    for (size_t i = 1; i < a.indices.size(); ++i) CHECK(a.indices[i] > a.indices[i - 1]);

    const auto full = random_plan(128, 1, 9);
    CHECK(full.indices.size() == 128);
    for (int i = 0; i < 128; ++i) CHECK(full.indices[static_cast<size_t>(i)] == i);
}

TEST_CASE("apply_plan basics and composition") {
    IQFrame f(128);
    for (int n = 0; n < 128; ++n) {
        f.i_at(n) = static_cast<float>(n);
        f.q_at(n) = static_cast<float>(-n);
    }
    const auto ident = apply_plan(f, uniform_plan(128, 1));
    CHECK(ident == f);

    SubsamplePlan first;
    first.indices = {0};
    const auto single = apply_plan(f, first);
    CHECK(single.len == 1);
    CHECK(single.i_at(0) == 0.0f);

    // factor-2 twice equals factor-4 once
    const auto half = apply_plan(f, uniform_plan(128, 2));
    const auto quarter = apply_plan(half, uniform_plan(64, 2));
    CHECK(quarter == apply_plan(f, uniform_plan(128, 4)));

    SubsamplePlan bad;
    bad.indices = {200};
    CHECK_THROWS(apply_plan(f, bad));
}

TEST_CASE("plan outputs are order-preserving subsequences of the input") {
    Rng rng(31);
    IQFrame f(64);
    for (float& v : f.data) v = static_cast<float>(rng.normal());
    for (int factor : {2, 4, 8}) {
        const auto plan = random_plan(64, factor, 11);
        const auto out = apply_plan(f, plan);
        for (size_t k = 0; k < plan.indices.size(); ++k) {
            CHECK(out.i_at(static_cast<int>(k)) == f.i_at(plan.indices[k]));
            CHECK(out.q_at(static_cast<int>(k)) == f.q_at(plan.indices[k]));
        }
    }
}

TEST_CASE("magnitude rank subsampling") {
    const IQFrame f = frame_from({3, 1, 4, 2}, {0, 0, 0, 0});
    const auto top2 = magnitude_rank_subsample(f, 2);
    REQUIRE(top2.len == 2);
    CHECK(top2.i_at(0) == 3.0f);  // original index 0
    CHECK(top2.i_at(1) == 4.0f);  // original index 2

    const IQFrame ties = frame_from({1, 1, 1, 1}, {0, 0, 0, 0});
    const auto kept = magnitude_rank_subsample(ties, 2);
    CHECK(kept.i_at(0) == 1.0f);
    CHECK(kept.i_at(1) == 1.0f);  // first two indices win on ties

    CHECK(magnitude_rank_subsample(f, 1) == f);
}

TEST_CASE("magnitude rank matches an exhaustive sort oracle") {
    Rng rng(71);
    for (int trial = 0; trial < 200; ++trial) {
        IQFrame f(8);
        for (float& v : f.data) v = static_cast<float>(rng.normal());
        const int factor = (trial % 2) ? 2 : 4;
        const auto got = magnitude_rank_subsample(f, factor);
        // oracle: stable sort indices by descending magnitude, keep, re-sort
        std::vector<int> order(8);
        for (int i = 0; i < 8; ++i) order[static_cast<size_t>(i)] = i;
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            const double ma = static_cast<double>(f.i_at(a)) * f.i_at(a) + static_cast<double>(f.q_at(a)) * f.q_at(a);
            const double mb = static_cast<double>(f.i_at(b)) * f.i_at(b) + static_cast<double>(f.q_at(b)) * f.q_at(b);
            return ma > mb;
        });
        order.resize(static_cast<size_t>(8 / factor));
        std::sort(order.begin(), order.end());
        for (size_t k = 0; k < order.size(); ++k) {
            CHECK(got.i_at(static_cast<int>(k)) == f.i_at(order[k]));
            CHECK(got.q_at(static_cast<int>(k)) == f.q_at(order[k]));
        }
        // kept minimum magnitude >= dropped maximum magnitude
        double kept_min = 1e300, dropped_max = 0.0;
        std::vector<bool> keep(8, false);
        for (int idx : order) keep[static_cast<size_t>(idx)] = true;
        for (int i = 0; i < 8; ++i) {
            const double m = std::hypot(f.i_at(i), f.q_at(i));
            if (keep[static_cast<size_t>(i)])
                kept_min = std::min(kept_min, m);
            else
                dropped_max = std::max(dropped_max, m);
        }
        CHECK(kept_min >= dropped_max);
    }
}

TEST_CASE("polar conversion") {
    const IQFrame f = frame_from({1, 0, 0}, {0, 1, 0});
    const auto p = to_polar(f);
    CHECK(p.i_at(0) == doctest::Approx(1.0f));
    CHECK(p.q_at(0) == doctest::Approx(0.0f));
    CHECK(p.i_at(1) == doctest::Approx(1.0f));
    CHECK(p.q_at(1) == doctest::Approx(0.5f));  // pi/2 normalized by pi
    CHECK(p.i_at(2) == 0.0f);
    CHECK(p.q_at(2) == 0.0f);  // phase of 0+0j defined as 0

    Rng rng(2);
    IQFrame r(64);
    for (float& v : r.data) v = static_cast<float>(rng.normal());
    const auto pr = to_polar(r);
    for (int n = 0; n < 64; ++n) {
        CHECK(pr.i_at(n) >= 0.0f);
        CHECK(pr.q_at(n) > -1.0f - 1e-6f);
        CHECK(pr.q_at(n) <= 1.0f + 1e-6f);
    }
}

TEST_CASE("online threshold subsampler") {
    Rng rng(13);
    cvec stream(128);
    for (auto& v : stream) v = rng.cnormal();

    // threshold 0, budget = L keeps everything
    OnlineSubsampleConfig all_cfg;
    all_cfg.threshold = 0.0;
    all_cfg.budget = stream.size();
    const auto all = online_threshold_subsample(stream, all_cfg);
    CHECK(all.indices.size() == stream.size());

    // static threshold at the k-th largest magnitude equals magnitude rank
    const int keep = 32;
    std::vector<double> mags;
    for (const auto& v : stream) mags.push_back(std::abs(v));
    std::vector<double> sorted = mags;
    std::sort(sorted.rbegin(), sorted.rend());
    OnlineSubsampleConfig static_cfg;
    static_cfg.threshold = sorted[keep - 1];
    static_cfg.budget = keep;
    static_cfg.adaptive = false;
    const auto got = online_threshold_subsample(stream, static_cfg);

    IQFrame f(128);
    for (int n = 0; n < 128; ++n) {
        f.i_at(n) = static_cast<float>(stream[static_cast<size_t>(n)].real());
        f.q_at(n) = static_cast<float>(stream[static_cast<size_t>(n)].imag());
    }
    const auto oracle = magnitude_rank_subsample(f, 128 / keep);
    REQUIRE(static_cast<int>(got.indices.size()) == keep);
    for (int k = 0; k < keep; ++k)
        CHECK(got.samples[static_cast<size_t>(k)].real() == doctest::Approx(oracle.i_at(k)).epsilon(1e-6));

    // all-below threshold with adaptation off: empty
    OnlineSubsampleConfig none_cfg;
    none_cfg.threshold = 1e9;
    none_cfg.budget = 16;
    none_cfg.adaptive = false;
    CHECK(online_threshold_subsample(stream, none_cfg).indices.empty());

    // adaptive mode emits at most the budget, in arrival order
    OnlineSubsampleConfig adapt_cfg;
    adapt_cfg.threshold = 0.5;
    adapt_cfg.budget = 16;
    const auto adaptive = online_threshold_subsample(stream, adapt_cfg);
    CHECK(adaptive.indices.size() <= 16);
    for (size_t i = 1; i < adaptive.indices.size(); ++i)
        CHECK(adaptive.indices[i] > adaptive.indices[i - 1]);
}

TEST_CASE("pca and plan files round trip and reject corruption") {
    const auto dir = std::filesystem::temp_directory_path();
    const MatD x = random_matrix(40, 6, 2);
    const PCAModel model = pca_fit(x, 3);
    const auto ppath = dir / "amc_test_pca.bin";
    save_pca(model, ppath);
    const PCAModel back = load_pca(ppath);
    CHECK(back.mean == model.mean);
    CHECK(back.basis.v == model.basis.v);
    CHECK(back.variances == model.variances);

    auto bytes = read_file(ppath);
    bytes[10] ^= 0x01;
    atomic_write_file(ppath, bytes);
    CHECK_THROWS(load_pca(ppath));
    std::filesystem::remove(ppath);

    const auto plan = random_plan(128, 4, 9);
    const auto spath = dir / "amc_test_plan.bin";
    save_plan(plan, spath);
    CHECK(load_plan(spath) == plan);
    std::filesystem::remove(spath);
}
