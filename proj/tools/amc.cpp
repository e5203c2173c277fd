// Command-line workbench: dataset generation, splitting, preprocessing,
// training, evaluation, sweeps, and report export.

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "amc/harness.hpp"
#include "amc/serialize.hpp"
#include "json.hpp"

namespace {

using nlohmann::json;

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    const auto buf = amc::read_file(path);
    return json::parse(buf.begin(), buf.end());
}

// Config file value applies unless the flag was given on the command line.
template <class T>
void merge(const CLI::Option* opt, const json& cfg, const char* key, T& value) {
    if (opt != nullptr && opt->count() > 0) return;
    if (cfg.contains(key)) value = cfg.at(key).get<T>();
}

struct TrainCliArgs {
    std::string dataset, config, arch = "resnet3", preprocess = "none", snr = "all";
    std::string out_model, out_report, out_csv;
    amc::TrainConfig train;
    bool train_defaults_from_arch = true;
};

amc::ExperimentConfig make_experiment(const std::string& arch, const std::string& preprocess,
                                      const std::string& snr, const amc::TrainConfig& train) {
    amc::ExperimentConfig cfg;
    const auto a = amc::arch_from_name(arch);
    if (!a) throw std::invalid_argument("unknown architecture: " + arch);
    cfg.arch = *a;
    cfg.preprocess = amc::PreprocessConfig::parse(preprocess);
    cfg.snr_policy = amc::SnrPolicy::parse(snr);
    cfg.train = train;
    return cfg;
}

void print_report_summary(const amc::EvalReport& rep) {
    std::printf("overall accuracy (mean over SNRs): %.4f\n", rep.overall_accuracy);
    for (const auto& [snr, acc] : rep.per_snr_accuracy) std::printf("  snr %+4d dB: %.4f\n", snr, acc);
    if (!rep.epoch_times_sec.empty())
        std::printf("median epoch time: %.3f s over %d epochs\n",
                    amc::median(rep.epoch_times_sec), rep.epochs_run);
}

int run(int argc, char** argv) {
    CLI::App app{"RadioML-style modulation classification workbench"};
    app.require_subcommand(1);

    // ---- generate ----
    auto* gen = app.add_subcommand("generate", "Generate a balanced labeled dataset");
    std::string gen_out, gen_config;
    amc::GenerationConfig gen_cfg;
    auto* gen_examples = gen->add_option("--examples", gen_cfg.total_examples, "Total examples");
    auto* gen_seed = gen->add_option("--seed", gen_cfg.seed, "Generation seed");
    auto* gen_frame = gen->add_option("--frame-len", gen_cfg.frame_len, "Frame length");
    gen->add_option("--config", gen_config, "JSON config file");
    gen->add_option("--out", gen_out, "Output dataset path")->required();

    // ---- split ----
    auto* spl = app.add_subcommand("split", "Stratified train/test split");
    std::string spl_in, spl_train, spl_test;
    double spl_fraction = 0.5;
    uint64_t spl_seed = 1;
    spl->add_option("--in", spl_in, "Input dataset")->required();
    spl->add_option("--train-fraction", spl_fraction, "Training fraction");
    spl->add_option("--seed", spl_seed, "Split seed");
    spl->add_option("--out-train", spl_train, "Training output path")->required();
    spl->add_option("--out-test", spl_test, "Test output path")->required();

    // ---- preprocess ----
    auto* pre = app.add_subcommand("preprocess", "Fit or apply an input reduction");
    std::string pre_in, pre_method = "none", pre_artifact_out, pre_artifact_in, pre_out, pre_arch = "resnet3";
    pre->add_option("--in", pre_in, "Input dataset")->required();
    pre->add_option("--method", pre_method, "none|pca:F|uniform:F|random:F[:seed=S]|magrank:F|polar");
    pre->add_option("--arch", pre_arch, "Architecture context (lstm2 adds polar)");
    pre->add_option("--save-artifact", pre_artifact_out, "Write fitted PCA model / plan here");
    pre->add_option("--artifact", pre_artifact_in, "Apply a previously fitted artifact (MODP/MODS file)");
    pre->add_option("--out", pre_out, "Write the transformed dataset here");

    // ---- train ----
    auto* tr = app.add_subcommand("train", "Train a model");
    TrainCliArgs t;
    auto* tr_dataset = tr->add_option("--dataset", t.dataset, "Training dataset path");
    tr->add_option("--config", t.config, "JSON config file");
    auto* tr_arch = tr->add_option("--arch", t.arch, "cnn4|densenet|cldnn|lstm2|resnet3");
    auto* tr_pre = tr->add_option("--preprocess", t.preprocess, "Preprocess spec");
    auto* tr_snr = tr->add_option("--snr", t.snr, "all|single:S|pair:A,B|fraction:P[:seed=S]");
    auto* tr_bs = tr->add_option("--batch-size", t.train.batch_size, "Batch size");
    auto* tr_lr = tr->add_option("--lr", t.train.learning_rate, "Learning rate");
    auto* tr_epochs = tr->add_option("--epochs", t.train.epochs, "Max epochs");
    auto* tr_patience = tr->add_option("--patience", t.train.patience, "Early-stopping patience");
    auto* tr_val = tr->add_option("--val-fraction", t.train.val_fraction, "Validation fraction");
    auto* tr_seed = tr->add_option("--seed", t.train.seed, "Training seed");
    auto* tr_replay = tr->add_flag("--replay", t.train.replay, "Replay mode (deterministic report)");
    tr->add_option("--out", t.out_model, "Model output path");
    tr->add_option("--report", t.out_report, "Training-run report JSON (written after eval on train set)");

    // ---- eval ----
    auto* ev = app.add_subcommand("eval", "Evaluate a trained model");
    std::string ev_model, ev_dataset, ev_report, ev_csv;
    ev->add_option("--model", ev_model, "Model file")->required();
    ev->add_option("--dataset", ev_dataset, "Test dataset")->required();
    ev->add_option("--report", ev_report, "Report JSON output");
    ev->add_option("--csv", ev_csv, "Accuracy-vs-SNR CSV output");

    // ---- sweep ----
    auto* sw = app.add_subcommand("sweep", "Reduction or SNR-selection sweep");
    std::string sw_mode = "reduction", sw_train, sw_test, sw_arch = "resnet3", sw_cells, sw_policies,
                sw_outdir = ".", sw_config;
    amc::TrainConfig sw_traincfg;
    sw->add_option("--mode", sw_mode, "reduction|snr")->required();
    sw->add_option("--train", sw_train, "Training dataset")->required();
    sw->add_option("--test", sw_test, "Test dataset")->required();
    sw->add_option("--arch", sw_arch, "Architecture");
    sw->add_option("--cells", sw_cells, "Comma-separated preprocess specs (reduction mode)");
    sw->add_option("--policies", sw_policies, "Semicolon-separated SNR policies (snr mode)");
    sw->add_option("--out-dir", sw_outdir, "Directory for per-cell reports and summary CSV");
    sw->add_option("--config", sw_config, "JSON config file");
    auto* sw_bs = sw->add_option("--batch-size", sw_traincfg.batch_size, "Batch size");
    auto* sw_lr = sw->add_option("--lr", sw_traincfg.learning_rate, "Learning rate");
    auto* sw_epochs = sw->add_option("--epochs", sw_traincfg.epochs, "Max epochs");
    auto* sw_patience = sw->add_option("--patience", sw_traincfg.patience, "Early-stopping patience");
    auto* sw_seed = sw->add_option("--seed", sw_traincfg.seed, "Training seed");

    // ---- report ----
    auto* rp = app.add_subcommand("report", "Convert a report JSON to CSV");
    std::string rp_in, rp_csv;
    rp->add_option("--in", rp_in, "Report JSON")->required();
    rp->add_option("--csv", rp_csv, "CSV output path")->required();

    CLI11_PARSE(app, argc, argv);

    if (gen->parsed()) {
        const json cfg = load_config(gen_config);
        merge(gen_examples, cfg, "examples", gen_cfg.total_examples);
        merge(gen_seed, cfg, "seed", gen_cfg.seed);
        merge(gen_frame, cfg, "frame_len", gen_cfg.frame_len);
        if (cfg.contains("channel")) {
            const json& ch = cfg.at("channel");
            auto& c = gen_cfg.channel;
            c.amplitude_lo = ch.value("amplitude_lo", c.amplitude_lo);
            c.amplitude_hi = ch.value("amplitude_hi", c.amplitude_hi);
            c.cfo_max = ch.value("cfo_max", c.cfo_max);
            c.jitter_std = ch.value("jitter_std", c.jitter_std);
            c.fading_tap_count = ch.value("fading_taps", c.fading_tap_count);
            c.fading_decay = ch.value("fading_decay", c.fading_decay);
            c.sro_ppm_max = ch.value("sro_ppm_max", c.sro_ppm_max);
        }
        const amc::Dataset ds = amc::generate_dataset(gen_cfg);
        amc::save(ds, gen_out);
        std::printf("wrote %zu examples (frame_len %d) to %s\n", ds.examples.size(), ds.frame_len,
                    gen_out.c_str());
        return 0;
    }

    if (spl->parsed()) {
        const amc::Dataset ds = amc::load(spl_in);
        auto [train, test] = amc::split(ds, spl_fraction, spl_seed);
        amc::save(train, spl_train);
        amc::save(test, spl_test);
        std::printf("split %zu -> %zu train / %zu test\n", ds.examples.size(), train.examples.size(),
                    test.examples.size());
        return 0;
    }

    if (pre->parsed()) {
        const amc::Dataset ds = amc::load(pre_in);
        amc::PreprocessArtifact art;
        if (!pre_artifact_in.empty()) {
            art.cfg = amc::PreprocessConfig::parse(pre_method);
            art.input_len = ds.frame_len;
            // Standalone artifacts: the file type determines the method.
            try {
                art.pca = amc::load_pca(pre_artifact_in);
                art.cfg.method = amc::PreprocessConfig::Method::Pca;
                art.output_len = art.pca->components() / 2;
            } catch (const std::exception&) {
                art.plan = amc::load_plan(pre_artifact_in);
                art.cfg.method = art.plan->method == amc::PlanMethod::Uniform
                                     ? amc::PreprocessConfig::Method::Uniform
                                     : amc::PreprocessConfig::Method::Random;
                art.output_len = static_cast<int>(art.plan->indices.size());
            }
        } else {
            const auto arch = amc::arch_from_name(pre_arch);
            if (!arch) throw std::invalid_argument("unknown architecture: " + pre_arch);
            art = amc::fit_preprocess(amc::PreprocessConfig::parse(pre_method), *arch, ds);
        }
        if (!pre_artifact_out.empty()) {
            if (art.pca)
                amc::save_pca(*art.pca, pre_artifact_out);
            else if (art.plan)
                amc::save_plan(*art.plan, pre_artifact_out);
            else
                std::fprintf(stderr, "note: %s has no fitted artifact to save\n", pre_method.c_str());
        }
        if (!pre_out.empty()) {
            amc::Dataset out;
            out.frame_len = art.output_len;
            out.seed = ds.seed;
            out.meta_digest = ds.meta_digest;
            out.examples.reserve(ds.examples.size());
            for (const auto& ex : ds.examples)
                out.examples.push_back({art.apply(ex.frame), ex.mod, ex.snr_db});
            amc::save(out, pre_out);
            std::printf("wrote transformed dataset (frame_len %d) to %s\n", out.frame_len, pre_out.c_str());
        }
        return 0;
    }

    if (tr->parsed()) {
        const json cfg = load_config(t.config);
        merge(tr_dataset, cfg, "dataset", t.dataset);
        merge(tr_arch, cfg, "arch", t.arch);
        merge(tr_pre, cfg, "preprocess", t.preprocess);
        merge(tr_snr, cfg, "snr_policy", t.snr);
        if (t.dataset.empty()) throw std::invalid_argument("train: --dataset (or config \"dataset\") required");
        const auto arch = amc::arch_from_name(t.arch);
        if (!arch) throw std::invalid_argument("unknown architecture: " + t.arch);
        amc::TrainConfig train_cfg = amc::default_train_config(*arch);
        if (cfg.contains("train")) {
            const json& jt = cfg.at("train");
            train_cfg.batch_size = jt.value("batch_size", train_cfg.batch_size);
            train_cfg.learning_rate = jt.value("learning_rate", train_cfg.learning_rate);
            train_cfg.epochs = jt.value("epochs", train_cfg.epochs);
            train_cfg.patience = jt.value("patience", train_cfg.patience);
            train_cfg.val_fraction = jt.value("val_fraction", train_cfg.val_fraction);
            train_cfg.seed = jt.value("seed", train_cfg.seed);
            train_cfg.replay = jt.value("replay", train_cfg.replay);
        }
        if (tr_bs->count()) train_cfg.batch_size = t.train.batch_size;
        if (tr_lr->count()) train_cfg.learning_rate = t.train.learning_rate;
        if (tr_epochs->count()) train_cfg.epochs = t.train.epochs;
        if (tr_patience->count()) train_cfg.patience = t.train.patience;
        if (tr_val->count()) train_cfg.val_fraction = t.train.val_fraction;
        if (tr_seed->count()) train_cfg.seed = t.train.seed;
        if (tr_replay->count()) train_cfg.replay = t.train.replay;

        const amc::ExperimentConfig exp = make_experiment(t.arch, t.preprocess, t.snr, train_cfg);
        const amc::Dataset train_set = amc::load(t.dataset);
        amc::TrainedModel model = amc::train_model(exp, train_set);
        std::printf("trained %s for %d epochs (best val accuracy %.4f)\n", t.arch.c_str(),
                    model.epochs_run, model.best_val_accuracy);
        if (!t.out_model.empty()) {
            amc::save_model(model, t.out_model);
            std::printf("model written to %s\n", t.out_model.c_str());
        }
        if (!t.out_report.empty()) {
            const amc::EvalReport rep = amc::evaluate(model, train_set);
            amc::atomic_write_file(t.out_report, rep.to_json());
            std::printf("training-set report written to %s\n", t.out_report.c_str());
        }
        return 0;
    }

    if (ev->parsed()) {
        amc::TrainedModel model = amc::load_model(ev_model);
        const amc::Dataset test = amc::load(ev_dataset);
        const amc::EvalReport rep = amc::evaluate(model, test);
        print_report_summary(rep);
        if (!ev_report.empty()) amc::atomic_write_file(ev_report, rep.to_json());
        if (!ev_csv.empty()) amc::atomic_write_file(ev_csv, rep.to_csv());
        return 0;
    }

    if (sw->parsed()) {
        const json cfg = load_config(sw_config);
        const auto arch = amc::arch_from_name(sw_arch);
        if (!arch) throw std::invalid_argument("unknown architecture: " + sw_arch);
        amc::ExperimentConfig base;
        base.arch = *arch;
        base.train = amc::default_train_config(*arch);
        if (cfg.contains("train")) {
            const json& jt = cfg.at("train");
            base.train.batch_size = jt.value("batch_size", base.train.batch_size);
            base.train.learning_rate = jt.value("learning_rate", base.train.learning_rate);
            base.train.epochs = jt.value("epochs", base.train.epochs);
            base.train.patience = jt.value("patience", base.train.patience);
            base.train.seed = jt.value("seed", base.train.seed);
        }
        if (sw_bs->count()) base.train.batch_size = sw_traincfg.batch_size;
        if (sw_lr->count()) base.train.learning_rate = sw_traincfg.learning_rate;
        if (sw_epochs->count()) base.train.epochs = sw_traincfg.epochs;
        if (sw_patience->count()) base.train.patience = sw_traincfg.patience;
        if (sw_seed->count()) base.train.seed = sw_traincfg.seed;

        const amc::Dataset train = amc::load(sw_train);
        const amc::Dataset test = amc::load(sw_test);
        const std::filesystem::path outdir(sw_outdir);
        std::filesystem::create_directories(outdir);

        if (sw_mode == "reduction") {
            std::vector<amc::PreprocessConfig> cells;
            std::string cur;
            for (char c : sw_cells + ",") {
                if (c == ',') {
                    if (!cur.empty()) cells.push_back(amc::PreprocessConfig::parse(cur));
                    cur.clear();
                } else {
                    cur.push_back(c);
                }
            }
            if (cells.empty()) throw std::invalid_argument("sweep reduction: --cells required");
            const auto rows = amc::sweep_reduction(base, train, test, cells);
            std::string csv = "method,median_epoch_time_sec,time_ratio,overall_accuracy\n";
            for (const auto& row : rows) {
                char line[256];
                std::snprintf(line, sizeof(line), "%s,%.6f,%.4f,%.4f\n", row.pre.to_string().c_str(),
                              row.median_epoch_time, row.time_ratio, row.report.overall_accuracy);
                csv += line;
                std::string fname = "reduction_" + row.pre.to_string() + ".json";
                for (char& c : fname)
                    if (c == ':' || c == '=' || c == ',') c = '_';
                amc::atomic_write_file(outdir / fname, row.report.to_json());
                std::fputs(line, stdout);
            }
            amc::atomic_write_file(outdir / "reduction_summary.csv", csv);
        } else if (sw_mode == "snr") {
            std::vector<amc::SnrPolicy> policies;
            std::string cur;
            for (char c : sw_policies + ";") {
                if (c == ';') {
                    if (!cur.empty()) policies.push_back(amc::SnrPolicy::parse(cur));
                    cur.clear();
                } else {
                    cur.push_back(c);
                }
            }
            if (policies.empty()) throw std::invalid_argument("sweep snr: --policies required");
            const auto rows = amc::sweep_snr_selection(base, train, test, policies);
            std::string csv = "policy,median_epoch_time_sec,overall_accuracy\n";
            for (const auto& row : rows) {
                char line[256];
                std::snprintf(line, sizeof(line), "%s,%.6f,%.4f\n", row.policy.to_string().c_str(),
                              row.median_epoch_time, row.report.overall_accuracy);
                csv += line;
                std::string fname = "snr_" + row.policy.to_string() + ".json";
                for (char& c : fname)
                    if (c == ':' || c == '=' || c == ',') c = '_';
                amc::atomic_write_file(outdir / fname, row.report.to_json());
                std::fputs(line, stdout);
            }
            amc::atomic_write_file(outdir / "snr_summary.csv", csv);
        } else {
            throw std::invalid_argument("sweep: mode must be reduction or snr");
        }
        return 0;
    }

    if (rp->parsed()) {
        const auto buf = amc::read_file(rp_in);
        const amc::EvalReport rep = amc::EvalReport::from_json(std::string(buf.begin(), buf.end()));
        amc::atomic_write_file(rp_csv, rep.to_csv());
        std::printf("wrote %zu-row curve to %s\n", rep.per_snr_accuracy.size(), rp_csv.c_str());
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
