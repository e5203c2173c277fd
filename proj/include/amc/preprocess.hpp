#pragma once

// Input-reduction methods: PCA on flattened [I row || Q row] vectors,
// uniform / random / magnitude-rank subsampling, rectangular-to-polar
// conversion, and the single-pass adaptive-threshold subsampler.

#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "amc/dataset.hpp"
#include "amc/serialize.hpp"

namespace amc {

// Dense row-major double matrix, used for PCA fitting.
struct MatD {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    MatD() = default;
    MatD(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * static_cast<size_t>(c), 0.0) {}
    double& at(int r, int c) { return v[static_cast<size_t>(r) * static_cast<size_t>(cols) + static_cast<size_t>(c)]; }
    double at(int r, int c) const {
        return v[static_cast<size_t>(r) * static_cast<size_t>(cols) + static_cast<size_t>(c)];
    }
};

// Symmetric eigendecomposition by cyclic Jacobi rotations; returns
// eigenvalues in descending order with eigenvectors as matching rows.
void jacobi_eigen_sym(const MatD& a, std::vector<double>& eigenvalues, MatD& eigenvectors);

struct PCAModel {
    std::vector<double> mean;        // column mean of the training data
    MatD basis;                      // k x d, rows orthonormal, descending variance
    std::vector<double> variances;   // k explained variances

    int input_dim() const { return basis.cols; }
    int components() const { return basis.rows; }
};

// Fit on an N x d matrix (frames flattened I-row-then-Q-row). Sign
// convention: the largest-magnitude entry of each component is positive.
// Throws when k > d, N <= k, or the data has no variance.
PCAModel pca_fit(const MatD& train, int k);

// y = basis * (x - mean).
std::vector<double> pca_transform(const PCAModel& model, std::span<const double> x);
// basis^T * y + mean; exact inverse when k = d.
std::vector<double> pca_inverse(const PCAModel& model, std::span<const double> y);

// Frame helpers: flatten, project, reshape row-major to 2 x (k/2).
std::vector<double> flatten_frame(const IQFrame& f);
IQFrame pca_transform_frame(const PCAModel& model, const IQFrame& f);

enum class PlanMethod : uint8_t { Uniform = 0, Random = 1 };

struct SubsamplePlan {
    std::vector<int> indices;  // strictly increasing, unique
    PlanMethod method = PlanMethod::Uniform;
    uint64_t seed = 0;

    bool operator==(const SubsamplePlan&) const = default;
};

// Indices {0, factor, 2*factor, ...}; factor must divide frame_len.
SubsamplePlan uniform_plan(int frame_len, int factor);

// frame_len/factor indices drawn once without replacement, sorted
// ascending; the same plan is shared across all frames.
SubsamplePlan random_plan(int frame_len, int factor, uint64_t seed);

// Sample both rows at the plan indices, order preserved.
IQFrame apply_plan(const IQFrame& frame, const SubsamplePlan& plan);

// Keep the len/factor samples of largest |I+jQ| (ties keep the earlier
// index), restored to original temporal order. Per-frame selection.
IQFrame magnitude_rank_subsample(const IQFrame& frame, int factor);

// Row 0 amplitude, row 1 four-quadrant phase divided by pi (range (-1, 1]).
IQFrame to_polar(const IQFrame& frame);

struct OnlineSubsampleConfig {
    double threshold = 0.0;   // initial magnitude threshold
    size_t budget = 0;        // maximum samples to emit
    bool adaptive = true;     // false = static threshold
    int window = 64;          // trailing arrivals used for the kept-rate
    double step = 1.1;        // multiplicative threshold adjustment
    size_t stream_len = 0;    // L used for the target rate; 0 = stream size
};

struct OnlineSubsampleResult {
    std::vector<int> indices;
    cvec samples;
};

// Single pass over the stream: keep samples with magnitude >= threshold,
// raising the threshold when the trailing kept-rate exceeds budget/L and
// lowering it when below. Stops after budget samples.
OnlineSubsampleResult online_threshold_subsample(std::span<const cdouble> stream,
                                                 const OnlineSubsampleConfig& cfg);

// Binary round trips (same endianness/dtype rules as datasets;
// magics "MODP" and "MODS").
void save_pca(const PCAModel& model, const std::filesystem::path& path);
PCAModel load_pca(const std::filesystem::path& path);
void save_plan(const SubsamplePlan& plan, const std::filesystem::path& path);
SubsamplePlan load_plan(const std::filesystem::path& path);

// Raw payload encoders shared by the standalone files above and by model
// files that embed their preprocessing artifacts.
void write_pca_body(ByteWriter& w, const PCAModel& model);
PCAModel read_pca_body(ByteReader& r);
void write_plan_body(ByteWriter& w, const SubsamplePlan& plan);
SubsamplePlan read_plan_body(ByteReader& r);

}  // namespace amc
