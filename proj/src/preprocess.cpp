#include "amc/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <stdexcept>

#include "amc/rng.hpp"
#include "amc/serialize.hpp"

namespace amc {

void jacobi_eigen_sym(const MatD& input, std::vector<double>& eigenvalues, MatD& eigenvectors) {
    if (input.rows != input.cols) throw std::invalid_argument("jacobi_eigen_sym: matrix must be square");
    const int n = input.rows;
    MatD a = input;
    MatD v(n, n);
    for (int i = 0; i < n; ++i) v.at(i, i) = 1.0;

    double off = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) off += 2.0 * a.at(i, j) * a.at(i, j);
    double norm = 0.0;
    for (double x : a.v) norm += x * x;
    const double tol = 1e-28 * std::max(norm, 1e-300);

    const int max_sweeps = 64;
    for (int sweep = 0; sweep < max_sweeps && off > tol; ++sweep) {
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a.at(p, q);
                if (apq == 0.0) continue;
                const double app = a.at(p, p);
                const double aqq = a.at(q, q);
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0) ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                              : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a.at(k, p), akq = a.at(k, q);
                    a.at(k, p) = c * akp - s * akq;
                    a.at(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a.at(p, k), aqk = a.at(q, k);
                    a.at(p, k) = c * apk - s * aqk;
                    a.at(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v.at(k, p), vkq = v.at(k, q);
                    v.at(k, p) = c * vkp - s * vkq;
                    v.at(k, q) = s * vkp + c * vkq;
                }
            }
        }
        off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += 2.0 * a.at(i, j) * a.at(i, j);
    }

    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int x, int y) { return a.at(x, x) > a.at(y, y); });
    eigenvalues.resize(static_cast<size_t>(n));
    eigenvectors = MatD(n, n);
    for (int r = 0; r < n; ++r) {
        eigenvalues[static_cast<size_t>(r)] = a.at(order[static_cast<size_t>(r)], order[static_cast<size_t>(r)]);
        for (int k = 0; k < n; ++k) eigenvectors.at(r, k) = v.at(k, order[static_cast<size_t>(r)]);
    }
}

PCAModel pca_fit(const MatD& train, int k) {
    const int n = train.rows;
    const int d = train.cols;
    if (k < 1) throw std::invalid_argument("pca_fit: k must be >= 1");
    if (k > d) throw std::invalid_argument("pca_fit: k exceeds input dimension");
    if (n <= k) throw std::invalid_argument("pca_fit: need more samples than components");

    PCAModel model;
    model.mean.assign(static_cast<size_t>(d), 0.0);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < d; ++c) model.mean[static_cast<size_t>(c)] += train.at(r, c);
    for (double& m : model.mean) m /= static_cast<double>(n);

    // Covariance of the centered data.
    MatD cov(d, d);
    std::vector<double> row(static_cast<size_t>(d));
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < d; ++c) row[static_cast<size_t>(c)] = train.at(r, c) - model.mean[static_cast<size_t>(c)];
        for (int i = 0; i < d; ++i) {
            const double ri = row[static_cast<size_t>(i)];
            if (ri == 0.0) continue;
            double* dst = &cov.at(i, 0);
            for (int j = 0; j < d; ++j) dst[j] += ri * row[static_cast<size_t>(j)];
        }
    }
    double total_var = 0.0;
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) cov.at(i, j) /= static_cast<double>(n - 1);
        total_var += cov.at(i, i);
    }
    if (total_var < 1e-20) throw std::runtime_error("pca_fit: degenerate input (zero variance)");

    std::vector<double> eigvals;
    MatD eigvecs;
    jacobi_eigen_sym(cov, eigvals, eigvecs);

    model.basis = MatD(k, d);
    model.variances.assign(static_cast<size_t>(k), 0.0);
    for (int r = 0; r < k; ++r) {
        model.variances[static_cast<size_t>(r)] = eigvals[static_cast<size_t>(r)];
        // Fix the sign so the largest-magnitude entry is positive.
        int arg = 0;
        double best = 0.0;
        for (int c = 0; c < d; ++c) {
            const double m = std::abs(eigvecs.at(r, c));
            if (m > best) {
                best = m;
                arg = c;
            }
        }
        const double sign = eigvecs.at(r, arg) < 0.0 ? -1.0 : 1.0;
        for (int c = 0; c < d; ++c) model.basis.at(r, c) = sign * eigvecs.at(r, c);
    }
    return model;
}

std::vector<double> pca_transform(const PCAModel& model, std::span<const double> x) {
    const int d = model.input_dim();
    if (static_cast<int>(x.size()) != d) throw std::invalid_argument("pca_transform: dimension mismatch");
    std::vector<double> centered(static_cast<size_t>(d));
    for (int c = 0; c < d; ++c) centered[static_cast<size_t>(c)] = x[static_cast<size_t>(c)] - model.mean[static_cast<size_t>(c)];
    std::vector<double> y(static_cast<size_t>(model.components()), 0.0);
    for (int r = 0; r < model.components(); ++r) {
        double acc = 0.0;
        const double* b = model.basis.v.data() + static_cast<size_t>(r) * static_cast<size_t>(d);
        for (int c = 0; c < d; ++c) acc += b[c] * centered[static_cast<size_t>(c)];
        y[static_cast<size_t>(r)] = acc;
    }
    return y;
}

std::vector<double> pca_inverse(const PCAModel& model, std::span<const double> y) {
    const int k = model.components();
    if (static_cast<int>(y.size()) != k) throw std::invalid_argument("pca_inverse: dimension mismatch");
    const int d = model.input_dim();
    std::vector<double> x(model.mean.begin(), model.mean.end());
    for (int r = 0; r < k; ++r) {
        const double yr = y[static_cast<size_t>(r)];
        const double* b = model.basis.v.data() + static_cast<size_t>(r) * static_cast<size_t>(d);
        for (int c = 0; c < d; ++c) x[static_cast<size_t>(c)] += yr * b[c];
    }
    return x;
}

std::vector<double> flatten_frame(const IQFrame& f) {
    return std::vector<double>(f.data.begin(), f.data.end());
}

IQFrame pca_transform_frame(const PCAModel& model, const IQFrame& f) {
    if (model.components() % 2 != 0) throw std::invalid_argument("pca_transform_frame: k must be even");
    const auto y = pca_transform(model, flatten_frame(f));
    IQFrame out(model.components() / 2);
    for (size_t i = 0; i < y.size(); ++i) out.data[i] = static_cast<float>(y[i]);
    return out;
}

namespace {
void check_factor(int frame_len, int factor) {
    if (factor < 1 || frame_len % factor != 0)
        throw std::invalid_argument("subsample: factor must divide frame length");
}
}  // namespace

SubsamplePlan uniform_plan(int frame_len, int factor) {
    check_factor(frame_len, factor);
    SubsamplePlan plan;
    plan.method = PlanMethod::Uniform;
    plan.indices.reserve(static_cast<size_t>(frame_len / factor));
    for (int i = 0; i < frame_len; i += factor) plan.indices.push_back(i);
    return plan;
}

SubsamplePlan random_plan(int frame_len, int factor, uint64_t seed) {
    check_factor(frame_len, factor);
    const int keep = frame_len / factor;
    std::vector<int> all(static_cast<size_t>(frame_len));
    std::iota(all.begin(), all.end(), 0);
    Rng rng(mix_seed(seed, 0x706c616e));
    // Partial Fisher-Yates: the first `keep` entries are a uniform draw
    // without replacement.
    for (int i = 0; i < keep; ++i) {
        const int j = i + static_cast<int>(rng.below(static_cast<uint64_t>(frame_len - i)));
        std::swap(all[static_cast<size_t>(i)], all[static_cast<size_t>(j)]);
    }
    SubsamplePlan plan;
    plan.method = PlanMethod::Random;
    plan.seed = seed;
    plan.indices.assign(all.begin(), all.begin() + keep);
    std::sort(plan.indices.begin(), plan.indices.end());
    return plan;
}

IQFrame apply_plan(const IQFrame& frame, const SubsamplePlan& plan) {
    IQFrame out(static_cast<int>(plan.indices.size()));
    for (size_t k = 0; k < plan.indices.size(); ++k) {
        const int i = plan.indices[k];
        if (i < 0 || i >= frame.len) throw std::out_of_range("apply_plan: index out of range");
        out.i_at(static_cast<int>(k)) = frame.i_at(i);
        out.q_at(static_cast<int>(k)) = frame.q_at(i);
    }
    return out;
}

IQFrame magnitude_rank_subsample(const IQFrame& frame, int factor) {
    check_factor(frame.len, factor);
    const int keep = frame.len / factor;
    std::vector<int> order(static_cast<size_t>(frame.len));
    std::iota(order.begin(), order.end(), 0);
    // Descending magnitude; stable sort keeps earlier indices on ties.
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const double ma = static_cast<double>(frame.i_at(a)) * frame.i_at(a) +
                          static_cast<double>(frame.q_at(a)) * frame.q_at(a);
        const double mb = static_cast<double>(frame.i_at(b)) * frame.i_at(b) +
                          static_cast<double>(frame.q_at(b)) * frame.q_at(b);
        return ma > mb;
    });
    std::vector<int> kept(order.begin(), order.begin() + keep);
    std::sort(kept.begin(), kept.end());
    IQFrame out(keep);
    for (int k = 0; k < keep; ++k) {
        out.i_at(k) = frame.i_at(kept[static_cast<size_t>(k)]);
        out.q_at(k) = frame.q_at(kept[static_cast<size_t>(k)]);
    }
    return out;
}

IQFrame to_polar(const IQFrame& frame) {
    IQFrame out(frame.len);
    constexpr double kPi = 3.14159265358979323846;
    for (int n = 0; n < frame.len; ++n) {
        const double i = frame.i_at(n), q = frame.q_at(n);
        out.i_at(n) = static_cast<float>(std::sqrt(i * i + q * q));
        const double ph = (i == 0.0 && q == 0.0) ? 0.0 : std::atan2(q, i);
        out.q_at(n) = static_cast<float>(ph / kPi);
    }
    return out;
}

OnlineSubsampleResult online_threshold_subsample(std::span<const cdouble> stream,
                                                 const OnlineSubsampleConfig& cfg) {
    if (cfg.budget < 1) throw std::invalid_argument("online_threshold_subsample: budget must be >= 1");
    const size_t len = cfg.stream_len ? cfg.stream_len : stream.size();
    const double target_rate = static_cast<double>(cfg.budget) / static_cast<double>(std::max<size_t>(len, 1));
    double threshold = cfg.threshold;

    OnlineSubsampleResult out;
    std::vector<char> recent;  // kept-flags of the trailing window
    recent.reserve(static_cast<size_t>(cfg.window));
    size_t head = 0, kept_in_window = 0, seen = 0;

    for (size_t n = 0; n < stream.size() && out.indices.size() < cfg.budget; ++n) {
        const bool keep = std::abs(stream[n]) >= threshold;
        if (keep) {
            out.indices.push_back(static_cast<int>(n));
            out.samples.push_back(stream[n]);
        }
        if (cfg.adaptive) {
            if (static_cast<int>(recent.size()) < cfg.window) {
                recent.push_back(keep ? 1 : 0);
            } else {
                kept_in_window -= static_cast<size_t>(recent[head]);
                recent[head] = keep ? 1 : 0;
                head = (head + 1) % recent.size();
            }
            if (keep) ++kept_in_window;
            ++seen;
            const double rate = static_cast<double>(kept_in_window) /
                                static_cast<double>(std::min<size_t>(seen, static_cast<size_t>(cfg.window)));
            if (rate > target_rate) {
                threshold = (threshold > 0.0) ? threshold * cfg.step : 1e-6;
            } else if (rate < target_rate) {
                threshold /= cfg.step;
            }
        }
    }
    return out;
}

namespace {
constexpr char kPcaMagic[4] = {'M', 'O', 'D', 'P'};
constexpr char kPlanMagic[4] = {'M', 'O', 'D', 'S'};
constexpr uint16_t kVersion = 1;

std::vector<uint8_t> checked_payload(const std::filesystem::path& path, const char magic[4]) {
    const auto buf = read_file(path);
    if (buf.size() < 14) throw std::runtime_error("load: file too short: " + path.string());
    if (std::memcmp(buf.data(), magic, 4) != 0) throw std::runtime_error("load: bad magic: " + path.string());
    const uint64_t stored = ByteReader(buf.data() + buf.size() - 8, 8).u64();
    if (stored != fnv1a64(buf.data(), buf.size() - 8))
        throw std::runtime_error("load: checksum mismatch: " + path.string());
    return buf;
}
}  // namespace

void write_pca_body(ByteWriter& w, const PCAModel& model) {
    w.u32(static_cast<uint32_t>(model.input_dim()));
    w.u32(static_cast<uint32_t>(model.components()));
    for (double m : model.mean) w.f64(m);
    for (double b : model.basis.v) w.f64(b);
    for (double v : model.variances) w.f64(v);
}

PCAModel read_pca_body(ByteReader& r) {
    const int d = static_cast<int>(r.u32());
    const int k = static_cast<int>(r.u32());
    PCAModel m;
    m.mean.resize(static_cast<size_t>(d));
    for (double& x : m.mean) x = r.f64();
    m.basis = MatD(k, d);
    for (double& x : m.basis.v) x = r.f64();
    m.variances.resize(static_cast<size_t>(k));
    for (double& x : m.variances) x = r.f64();
    return m;
}

void write_plan_body(ByteWriter& w, const SubsamplePlan& plan) {
    w.u8(static_cast<uint8_t>(plan.method));
    w.u64(plan.seed);
    w.u32(static_cast<uint32_t>(plan.indices.size()));
    for (int i : plan.indices) w.i32(i);
}

SubsamplePlan read_plan_body(ByteReader& r) {
    SubsamplePlan plan;
    plan.method = static_cast<PlanMethod>(r.u8());
    plan.seed = r.u64();
    const uint32_t n = r.u32();
    plan.indices.resize(n);
    for (int& i : plan.indices) i = r.i32();
    return plan;
}

void save_pca(const PCAModel& model, const std::filesystem::path& path) {
    ByteWriter w;
    w.bytes(kPcaMagic, 4);
    w.u16(kVersion);
    write_pca_body(w, model);
    w.u64(fnv1a64(w.data().data(), w.size()));
    atomic_write_file(path, w.data());
}

PCAModel load_pca(const std::filesystem::path& path) {
    const auto buf = checked_payload(path, kPcaMagic);
    ByteReader r(buf.data(), buf.size() - 8);
    char magic[4];
    r.bytes(magic, 4);
    if (r.u16() != kVersion) throw std::runtime_error("load_pca: unsupported version");
    PCAModel m = read_pca_body(r);
    if (r.remaining() != 0) throw std::runtime_error("load_pca: trailing bytes");
    return m;
}

void save_plan(const SubsamplePlan& plan, const std::filesystem::path& path) {
    ByteWriter w;
    w.bytes(kPlanMagic, 4);
    w.u16(kVersion);
    write_plan_body(w, plan);
    w.u64(fnv1a64(w.data().data(), w.size()));
    atomic_write_file(path, w.data());
}

SubsamplePlan load_plan(const std::filesystem::path& path) {
    const auto buf = checked_payload(path, kPlanMagic);
    ByteReader r(buf.data(), buf.size() - 8);
    char magic[4];
    r.bytes(magic, 4);
    if (r.u16() != kVersion) throw std::runtime_error("load_plan: unsupported version");
    SubsamplePlan plan = read_plan_body(r);
    if (r.remaining() != 0) throw std::runtime_error("load_plan: trailing bytes");
    return plan;
}

}  // namespace amc
