#pragma once

// Experiment orchestration: SNR-policy filtering, preprocessing artifacts,
// training with early stopping, evaluation reports, and the reduction /
// SNR-selection sweeps.

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "amc/dataset.hpp"
#include "amc/models.hpp"
#include "amc/nn/checkpoint.hpp"
#include "amc/nn/network.hpp"
#include "amc/preprocess.hpp"

namespace amc {

struct PreprocessConfig {
    enum class Method : uint8_t { None = 0, Pca = 1, Uniform = 2, Random = 3, MagRank = 4, Polar = 5 };
    Method method = Method::None;
    int factor = 1;     // reduction factor (pca, uniform, random, magrank)
    uint64_t seed = 0;  // random plans only

    std::string to_string() const;
    static PreprocessConfig parse(const std::string& text);  // e.g. "uniform:4", "random:8:seed=3"
};

struct SnrPolicy {
    enum class Kind : uint8_t { All = 0, Single = 1, Pair = 2, UniformFraction = 3 };
    Kind kind = Kind::All;
    int snr1 = 0;
    int snr2 = 0;
    double fraction = 1.0;
    uint64_t seed = 0;

    std::string to_string() const;
    static SnrPolicy parse(const std::string& text);  // "all", "single:10", "pair:18,0", "fraction:0.25:seed=1"
};

struct TrainConfig {
    int batch_size = 1024;
    double learning_rate = 1e-3;
    int epochs = 100;
    int patience = 10;          // early-stopping patience; <= 0 disables
    double val_fraction = 0.1;  // stratified validation share; 0 disables
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    uint64_t seed = 42;
    bool replay = false;  // single-threaded, timing zeroed in reports
};

// Architecture defaults: batch 1024 / lr 0.001 everywhere except the
// two-layer LSTM, which uses batch 400 / lr 0.0018.
TrainConfig default_train_config(ArchKind arch);

struct ExperimentConfig {
    ArchKind arch = ArchKind::RESNET3;
    PreprocessConfig preprocess;
    SnrPolicy snr_policy;
    TrainConfig train;

    std::string canonical_string() const;
};

// Fitted reduction shared between training and evaluation.
struct PreprocessArtifact {
    PreprocessConfig cfg;
    std::optional<PCAModel> pca;
    std::optional<SubsamplePlan> plan;
    bool polar = false;  // applied after any reduction
    int input_len = 0;
    int output_len = 0;

    IQFrame apply(const IQFrame& frame) const;
};

// Fit the artifact implied by (cfg, arch) on the training split. The
// two-layer LSTM always receives polar input as its final representation.
PreprocessArtifact fit_preprocess(const PreprocessConfig& cfg, ArchKind arch, const Dataset& train);

using Confusion = std::array<std::array<uint32_t, kNumClasses>, kNumClasses>;

struct EvalReport {
    std::string config_digest;
    bool replay = false;
    uint32_t train_examples = 0;
    uint32_t test_examples = 0;
    double overall_accuracy = 0.0;  // equal-weight mean of per-SNR accuracies
    std::map<int, double> per_snr_accuracy;
    std::map<int, Confusion> confusion_per_snr;
    Confusion confusion_pooled{};
    std::vector<double> epoch_times_sec;
    int epochs_run = 0;
    double best_val_accuracy = 0.0;

    std::string to_json() const;
    static EvalReport from_json(const std::string& text);
    // Per-SNR accuracy curve: header "snr_db,accuracy", rows ascending.
    std::string to_csv() const;
};

struct TrainedModel {
    nn::NetworkSpec spec;
    std::unique_ptr<nn::Network<float>> net;
    PreprocessArtifact artifact;
    std::string config_digest;
    std::vector<double> epoch_times;  // optimizer loop only, per epoch
    int epochs_run = 0;
    double best_val_accuracy = 0.0;
    uint32_t train_examples = 0;  // policy-filtered training set size
    uint64_t init_seed = 0;
    bool replay = false;
};

// Restrict a dataset to the policy's training SNRs / fraction.
Dataset filter_by_policy(const Dataset& ds, const SnrPolicy& policy);

// Train on the policy-filtered, preprocessed training split; checkpoints
// the best validation-accuracy parameters. Throws when the filtered
// training set is empty (the message names the policy).
TrainedModel train_model(const ExperimentConfig& cfg, const Dataset& train_set);

// Apply the model's artifact to the test set and score it.
EvalReport evaluate(TrainedModel& model, const Dataset& test_set);

// Model file with the embedded preprocessing artifact (magic "MODR").
void save_model(TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

struct ReductionCell {
    PreprocessConfig pre;
    EvalReport report;
    double median_epoch_time = 0.0;
    double time_ratio = 0.0;  // vs the factor-1/none baseline cell
};

// One train+eval per preprocessing cell on a fixed train/test split;
// time_ratio is filled against the baseline cell (method None or factor 1).
std::vector<ReductionCell> sweep_reduction(const ExperimentConfig& base, const Dataset& train,
                                           const Dataset& test,
                                           const std::vector<PreprocessConfig>& cells);

struct SnrCell {
    SnrPolicy policy;
    EvalReport report;
    double median_epoch_time = 0.0;
};

std::vector<SnrCell> sweep_snr_selection(const ExperimentConfig& base, const Dataset& train,
                                         const Dataset& test, const std::vector<SnrPolicy>& policies);

double median(std::vector<double> xs);

}  // namespace amc
