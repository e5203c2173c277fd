#include "amc/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "amc/nn/adam.hpp"
#include "amc/nn/loss.hpp"
#include "amc/serialize.hpp"
#include "json.hpp"

namespace amc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

const char* method_name(PreprocessConfig::Method m) {
    switch (m) {
        case PreprocessConfig::Method::None: return "none";
        case PreprocessConfig::Method::Pca: return "pca";
        case PreprocessConfig::Method::Uniform: return "uniform";
        case PreprocessConfig::Method::Random: return "random";
        case PreprocessConfig::Method::MagRank: return "magrank";
        case PreprocessConfig::Method::Polar: return "polar";
    }
    return "?";
}

uint64_t parse_seed_suffix(const std::string& part) {
    if (part.rfind("seed=", 0) != 0) throw std::invalid_argument("expected seed=<n>, got: " + part);
    return std::stoull(part.substr(5));
}

std::vector<std::string> split_colon(const std::string& s) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == ':') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    parts.push_back(cur);
    return parts;
}

}  // namespace

std::string PreprocessConfig::to_string() const {
    std::ostringstream os;
    os << method_name(method);
    if (method == Method::Pca || method == Method::Uniform || method == Method::Random ||
        method == Method::MagRank)
        os << ":" << factor;
    if (method == Method::Random) os << ":seed=" << seed;
    return os.str();
}

PreprocessConfig PreprocessConfig::parse(const std::string& text) {
    const auto parts = split_colon(text);
    PreprocessConfig cfg;
    const std::string& name = parts[0];
    if (name == "none") {
        cfg.method = Method::None;
    } else if (name == "pca") {
        cfg.method = Method::Pca;
    } else if (name == "uniform") {
        cfg.method = Method::Uniform;
    } else if (name == "random") {
        cfg.method = Method::Random;
    } else if (name == "magrank") {
        cfg.method = Method::MagRank;
    } else if (name == "polar") {
        cfg.method = Method::Polar;
    } else {
        throw std::invalid_argument("unknown preprocess method: " + name);
    }
    size_t i = 1;
    if (cfg.method != Method::None && cfg.method != Method::Polar) {
        if (parts.size() < 2) throw std::invalid_argument("preprocess " + name + " needs a factor");
        cfg.factor = std::stoi(parts[i++]);
    }
    if (i < parts.size()) cfg.seed = parse_seed_suffix(parts[i]);
    return cfg;
}

std::string SnrPolicy::to_string() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::All: os << "all"; break;
        case Kind::Single: os << "single:" << snr1; break;
        case Kind::Pair: os << "pair:" << snr1 << "," << snr2; break;
        case Kind::UniformFraction: os << "fraction:" << fraction << ":seed=" << seed; break;
    }
    return os.str();
}

SnrPolicy SnrPolicy::parse(const std::string& text) {
    const auto parts = split_colon(text);
    SnrPolicy p;
    const std::string& name = parts[0];
    if (name == "all") {
        p.kind = Kind::All;
    } else if (name == "single") {
        if (parts.size() < 2) throw std::invalid_argument("single policy needs an SNR");
        p.kind = Kind::Single;
        p.snr1 = std::stoi(parts[1]);
    } else if (name == "pair") {
        if (parts.size() < 2) throw std::invalid_argument("pair policy needs two SNRs: pair:a,b");
        p.kind = Kind::Pair;
        const std::string& two = parts[1];
        const size_t comma = two.find(',');
        if (comma == std::string::npos) throw std::invalid_argument("pair policy needs two SNRs: pair:a,b");
        p.snr1 = std::stoi(two.substr(0, comma));
        p.snr2 = std::stoi(two.substr(comma + 1));
    } else if (name == "fraction") {
        if (parts.size() < 2) throw std::invalid_argument("fraction policy needs a value");
        p.kind = Kind::UniformFraction;
        p.fraction = std::stod(parts[1]);
        if (parts.size() > 2) p.seed = parse_seed_suffix(parts[2]);
    } else {
        throw std::invalid_argument("unknown snr policy: " + name);
    }
    return p;
}

TrainConfig default_train_config(ArchKind arch) {
    TrainConfig cfg;
    if (arch == ArchKind::LSTM2) {
        cfg.batch_size = 400;
        cfg.learning_rate = 0.0018;
    }
    return cfg;
}

std::string ExperimentConfig::canonical_string() const {
    nlohmann::ordered_json j;
    j["arch"] = arch_name(arch);
    j["preprocess"] = preprocess.to_string();
    j["snr_policy"] = snr_policy.to_string();
    j["train"] = {{"batch_size", train.batch_size}, {"learning_rate", train.learning_rate},
                  {"epochs", train.epochs},         {"patience", train.patience},
                  {"val_fraction", train.val_fraction}, {"beta1", train.beta1},
                  {"beta2", train.beta2},           {"eps", train.eps},
                  {"seed", train.seed},             {"replay", train.replay}};
    return j.dump();
}

IQFrame PreprocessArtifact::apply(const IQFrame& frame) const {
    if (frame.len != input_len)
        throw std::invalid_argument("preprocess artifact expects frames of length " +
                                    std::to_string(input_len) + ", got " + std::to_string(frame.len));
    IQFrame out;
    switch (cfg.method) {
        case PreprocessConfig::Method::None:
        case PreprocessConfig::Method::Polar: out = frame; break;
        case PreprocessConfig::Method::Pca: out = pca_transform_frame(*pca, frame); break;
        case PreprocessConfig::Method::Uniform:
        case PreprocessConfig::Method::Random: out = apply_plan(frame, *plan); break;
        case PreprocessConfig::Method::MagRank: out = magnitude_rank_subsample(frame, cfg.factor); break;
    }
    if (polar) out = to_polar(out);
    return out;
}

PreprocessArtifact fit_preprocess(const PreprocessConfig& cfg, ArchKind arch, const Dataset& train) {
    PreprocessArtifact art;
    art.cfg = cfg;
    art.input_len = train.frame_len;
    // Polar is the final representation for the two-layer LSTM; any
    // reduction happens first.
    art.polar = (cfg.method == PreprocessConfig::Method::Polar) || arch == ArchKind::LSTM2;
    switch (cfg.method) {
        case PreprocessConfig::Method::None:
        case PreprocessConfig::Method::Polar: art.output_len = train.frame_len; break;
        case PreprocessConfig::Method::Pca: {
            const int d = 2 * train.frame_len;
            if (d % cfg.factor != 0) throw std::invalid_argument("pca: factor must divide 2*frame_len");
            const int k = d / cfg.factor;
            if (k % 2 != 0) throw std::invalid_argument("pca: reduced dimension must be even");
            MatD x(static_cast<int>(train.examples.size()), d);
            for (size_t r = 0; r < train.examples.size(); ++r)
                for (int c = 0; c < d; ++c)
                    x.at(static_cast<int>(r), c) = train.examples[r].frame.data[static_cast<size_t>(c)];
            art.pca = pca_fit(x, k);
            art.output_len = k / 2;
            break;
        }
        case PreprocessConfig::Method::Uniform:
            art.plan = uniform_plan(train.frame_len, cfg.factor);
            art.output_len = train.frame_len / cfg.factor;
            break;
        case PreprocessConfig::Method::Random:
            art.plan = random_plan(train.frame_len, cfg.factor, cfg.seed);
            art.output_len = train.frame_len / cfg.factor;
            break;
        case PreprocessConfig::Method::MagRank:
            if (train.frame_len % cfg.factor != 0)
                throw std::invalid_argument("magrank: factor must divide frame_len");
            art.output_len = train.frame_len / cfg.factor;
            break;
    }
    return art;
}

Dataset filter_by_policy(const Dataset& ds, const SnrPolicy& policy) {
    auto check_grid = [&](int s) {
        if (!snr_on_grid(s))
            throw std::invalid_argument("snr policy " + policy.to_string() + ": SNR " + std::to_string(s) +
                                        " is not on the grid");
    };
    Dataset out;
    out.frame_len = ds.frame_len;
    out.seed = ds.seed;
    out.meta_digest = ds.meta_digest;
    switch (policy.kind) {
        case SnrPolicy::Kind::All: out.examples = ds.examples; break;
        case SnrPolicy::Kind::Single: {
            check_grid(policy.snr1);
            for (const auto& ex : ds.examples)
                if (ex.snr_db == policy.snr1) out.examples.push_back(ex);
            break;
        }
        case SnrPolicy::Kind::Pair: {
            check_grid(policy.snr1);
            check_grid(policy.snr2);
            for (const auto& ex : ds.examples)
                if (ex.snr_db == policy.snr1 || ex.snr_db == policy.snr2) out.examples.push_back(ex);
            break;
        }
        case SnrPolicy::Kind::UniformFraction: {
            if (policy.fraction <= 0.0 || policy.fraction > 1.0)
                throw std::invalid_argument("snr policy fraction must be in (0,1]");
            // Per-cell subsample at the requested fraction.
            std::array<std::array<std::vector<uint32_t>, kSnrCount>, kNumModTypes> buckets;
            for (uint32_t i = 0; i < ds.examples.size(); ++i)
                buckets[static_cast<size_t>(ds.examples[i].mod)]
                       [static_cast<size_t>(snr_index(ds.examples[i].snr_db))]
                           .push_back(i);
            std::vector<char> take(ds.examples.size(), 0);
            for (int m = 0; m < kNumModTypes; ++m) {
                for (int s = 0; s < kSnrCount; ++s) {
                    auto& idx = buckets[static_cast<size_t>(m)][static_cast<size_t>(s)];
                    if (idx.empty()) continue;
                    const size_t keep = static_cast<size_t>(
                        std::llround(policy.fraction * static_cast<double>(idx.size())));
                    Rng rng(mix_seed(policy.seed, static_cast<uint64_t>(m * kSnrCount + s) ^ 0xf7ac));
                    for (size_t i = 0; i < std::min(keep, idx.size()); ++i) {
                        const size_t j = i + static_cast<size_t>(rng.below(idx.size() - i));
                        std::swap(idx[i], idx[j]);
                        take[idx[i]] = 1;
                    }
                }
            }
            for (size_t i = 0; i < ds.examples.size(); ++i)
                if (take[i]) out.examples.push_back(ds.examples[i]);
            break;
        }
    }
    return out;
}

namespace {

// Preprocessed frames packed as [N,1,2,L] plus class labels.
struct Prepared {
    std::vector<IQFrame> frames;
    std::vector<int> labels;
    std::vector<int8_t> snrs;
    int len = 0;
};

Prepared prepare(const Dataset& ds, const PreprocessArtifact& art) {
    Prepared p;
    p.len = art.output_len;
    p.frames.reserve(ds.examples.size());
    p.labels.reserve(ds.examples.size());
    for (const auto& ex : ds.examples) {
        p.frames.push_back(art.apply(ex.frame));
        p.labels.push_back(static_cast<int>(ex.mod));
        p.snrs.push_back(ex.snr_db);
    }
    return p;
}

void fill_batch(const Prepared& p, const std::vector<uint32_t>& order, size_t start, size_t count,
                nn::Tensor<float>& x, std::vector<int>& labels) {
    const int len = p.len;
    x = nn::Tensor<float>({static_cast<int>(count), 1, 2, len});
    labels.resize(count);
    for (size_t b = 0; b < count; ++b) {
        const uint32_t i = order[start + b];
        std::copy_n(p.frames[i].data.data(), static_cast<size_t>(2 * len),
                    x.data() + b * static_cast<size_t>(2 * len));
        labels[b] = p.labels[i];
    }
}

std::vector<int> predict(nn::Network<float>& net, const Prepared& p, int batch_size = 512) {
    std::vector<int> pred(p.frames.size());
    std::vector<uint32_t> order(p.frames.size());
    std::iota(order.begin(), order.end(), 0u);
    nn::Tensor<float> x;
    std::vector<int> labels;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(batch_size)) {
        const size_t count = std::min(static_cast<size_t>(batch_size), order.size() - start);
        fill_batch(p, order, start, count, x, labels);
        const auto& out = net.forward(x, /*training=*/false);
        const int d = out.dim(1);
        for (size_t b = 0; b < count; ++b) {
            const float* row = out.data() + b * static_cast<size_t>(d);
            int best = 0;
            for (int j = 1; j < d; ++j)
                if (row[j] > row[best]) best = j;
            pred[start + b] = best;
        }
    }
    return pred;
}

double accuracy_of(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.empty()) return 0.0;
    size_t ok = 0;
    for (size_t i = 0; i < pred.size(); ++i) ok += pred[i] == truth[i];
    return static_cast<double>(ok) / static_cast<double>(pred.size());
}

std::string run_digest(const ExperimentConfig& cfg, const Dataset& train_set) {
    const std::string s = cfg.canonical_string() + "|" + train_set.meta_digest + "|" +
                          std::to_string(train_set.examples.size()) + "x" +
                          std::to_string(train_set.frame_len);
    return hex64(fnv1a64(s.data(), s.size()));
}

}  // namespace

TrainedModel train_model(const ExperimentConfig& cfg, const Dataset& train_set) {
    Dataset filtered = filter_by_policy(train_set, cfg.snr_policy);
    if (filtered.examples.empty())
        throw std::runtime_error("train_model: no training examples after snr policy " +
                                 cfg.snr_policy.to_string());

    const int prev_threads = nn::thread_count();
    if (cfg.train.replay) nn::set_thread_count(1);

    TrainedModel model;
    model.config_digest = run_digest(cfg, train_set);
    model.replay = cfg.train.replay;
    model.init_seed = cfg.train.seed;
    model.train_examples = static_cast<uint32_t>(filtered.examples.size());
    model.artifact = fit_preprocess(cfg.preprocess, cfg.arch, filtered);

    const bool use_val = cfg.train.val_fraction > 0.0;
    Dataset train_part, val_part;
    if (use_val) {
        auto parts = split(filtered, 1.0 - cfg.train.val_fraction, mix_seed(cfg.train.seed, 0x76616c));
        train_part = std::move(parts.first);
        val_part = std::move(parts.second);
    } else {
        train_part = std::move(filtered);
    }

    const Prepared train_p = prepare(train_part, model.artifact);
    const Prepared val_p = use_val ? prepare(val_part, model.artifact) : Prepared{};

    model.spec = build_arch(cfg.arch, model.artifact.output_len);
    model.net = std::make_unique<nn::Network<float>>(model.spec, cfg.train.seed);
    nn::Network<float>& net = *model.net;

    nn::AdamConfig acfg;
    acfg.lr = cfg.train.learning_rate;
    acfg.beta1 = cfg.train.beta1;
    acfg.beta2 = cfg.train.beta2;
    acfg.eps = cfg.train.eps;
    nn::AdamState<float> state;
    auto params = net.params();

    std::vector<uint32_t> order(train_p.frames.size());
    std::iota(order.begin(), order.end(), 0u);
    Rng shuffle_rng(mix_seed(cfg.train.seed, 0x73687566));

    double best_val = -1.0;
    std::vector<std::vector<float>> best_snapshot;
    int since_best = 0;
    uint64_t global_step = 0;
    nn::Tensor<float> x;
    std::vector<int> labels;

    for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
        for (size_t i = order.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(shuffle_rng.below(i));
            std::swap(order[i - 1], order[j]);
        }
        double epoch_time = 0.0;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.train.batch_size)) {
            const size_t count =
                std::min(static_cast<size_t>(cfg.train.batch_size), order.size() - start);
            if (count < 2) continue;  // batch statistics need at least two rows
            fill_batch(train_p, order, start, count, x, labels);
            const auto t0 = Clock::now();
            net.set_step(global_step++);
            const auto& out = net.forward(x, /*training=*/true);
            net.zero_grads();
            net.backward(nn::cross_entropy_softmax_grad(out, labels), /*fused_softmax_ce=*/true);
            nn::adam_step(params, state, acfg);
            epoch_time += seconds_since(t0);
        }
        model.epoch_times.push_back(epoch_time);
        model.epochs_run = epoch + 1;

        if (use_val) {
            const double val_acc = accuracy_of(predict(net, val_p), val_p.labels);
            if (val_acc > best_val) {
                best_val = val_acc;
                best_snapshot = net.snapshot();
                since_best = 0;
            } else {
                ++since_best;
            }
            if (cfg.train.patience > 0 && since_best >= cfg.train.patience) break;
        }
    }

    if (use_val && !best_snapshot.empty()) {
        net.restore(best_snapshot);
        model.best_val_accuracy = best_val;
    }
    if (cfg.train.replay) {
        std::fill(model.epoch_times.begin(), model.epoch_times.end(), 0.0);
        nn::set_thread_count(prev_threads);
    }
    return model;
}

EvalReport evaluate(TrainedModel& model, const Dataset& test_set) {
    const Prepared test_p = prepare(test_set, model.artifact);
    const std::vector<int> pred = predict(*model.net, test_p);

    EvalReport rep;
    rep.config_digest = model.config_digest;
    rep.replay = model.replay;
    rep.train_examples = model.train_examples;
    rep.test_examples = static_cast<uint32_t>(test_set.examples.size());
    rep.epoch_times_sec = model.epoch_times;
    rep.epochs_run = model.epochs_run;
    rep.best_val_accuracy = model.best_val_accuracy;

    std::map<int, std::pair<uint64_t, uint64_t>> per_snr;  // snr -> (correct, total)
    for (size_t i = 0; i < pred.size(); ++i) {
        const int snr = test_p.snrs[i];
        const int truth = test_p.labels[i];
        auto& conf = rep.confusion_per_snr[snr];
        conf[static_cast<size_t>(truth)][static_cast<size_t>(pred[i])]++;
        rep.confusion_pooled[static_cast<size_t>(truth)][static_cast<size_t>(pred[i])]++;
        auto& ps = per_snr[snr];
        ps.first += pred[i] == truth;
        ps.second += 1;
    }
    double sum = 0.0;
    for (const auto& [snr, counts] : per_snr) {
        const double acc = static_cast<double>(counts.first) / static_cast<double>(counts.second);
        rep.per_snr_accuracy[snr] = acc;
        sum += acc;
    }
    rep.overall_accuracy = per_snr.empty() ? 0.0 : sum / static_cast<double>(per_snr.size());
    return rep;
}

namespace {

nlohmann::ordered_json confusion_to_json(const Confusion& c) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : c) {
        nlohmann::ordered_json r = nlohmann::ordered_json::array();
        for (uint32_t v : row) r.push_back(v);
        rows.push_back(std::move(r));
    }
    return rows;
}

Confusion confusion_from_json(const nlohmann::json& j) {
    Confusion c{};
    for (size_t r = 0; r < kNumClasses; ++r)
        for (size_t k = 0; k < kNumClasses; ++k) c[r][k] = j.at(r).at(k).get<uint32_t>();
    return c;
}

}  // namespace

std::string EvalReport::to_json() const {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["config_digest"] = config_digest;
    j["replay"] = replay;
    j["train_examples"] = train_examples;
    j["test_examples"] = test_examples;
    j["epochs_run"] = epochs_run;
    j["best_val_accuracy"] = best_val_accuracy;
    j["overall_accuracy"] = overall_accuracy;
    nlohmann::ordered_json curve = nlohmann::ordered_json::array();
    for (const auto& [snr, acc] : per_snr_accuracy)
        curve.push_back({{"snr_db", snr}, {"accuracy", acc}});
    j["per_snr_accuracy"] = std::move(curve);
    j["confusion_pooled"] = confusion_to_json(confusion_pooled);
    nlohmann::ordered_json per = nlohmann::ordered_json::array();
    for (const auto& [snr, conf] : confusion_per_snr)
        per.push_back({{"snr_db", snr}, {"counts", confusion_to_json(conf)}});
    j["confusion_per_snr"] = std::move(per);
    j["epoch_times_sec"] = epoch_times_sec;
    return j.dump(2) + "\n";
}

EvalReport EvalReport::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.at("schema_version").get<int>() != 1) throw std::runtime_error("report: unsupported schema version");
    EvalReport rep;
    rep.config_digest = j.at("config_digest").get<std::string>();
    rep.replay = j.at("replay").get<bool>();
    rep.train_examples = j.at("train_examples").get<uint32_t>();
    rep.test_examples = j.at("test_examples").get<uint32_t>();
    rep.epochs_run = j.at("epochs_run").get<int>();
    rep.best_val_accuracy = j.at("best_val_accuracy").get<double>();
    rep.overall_accuracy = j.at("overall_accuracy").get<double>();
    for (const auto& e : j.at("per_snr_accuracy"))
        rep.per_snr_accuracy[e.at("snr_db").get<int>()] = e.at("accuracy").get<double>();
    rep.confusion_pooled = confusion_from_json(j.at("confusion_pooled"));
    for (const auto& e : j.at("confusion_per_snr"))
        rep.confusion_per_snr[e.at("snr_db").get<int>()] = confusion_from_json(e.at("counts"));
    for (const auto& t : j.at("epoch_times_sec")) rep.epoch_times_sec.push_back(t.get<double>());
    return rep;
}

std::string EvalReport::to_csv() const {
    std::ostringstream os;
    os << "snr_db,accuracy\n";
    for (const auto& [snr, acc] : per_snr_accuracy) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%d,%.6f\n", snr, acc);
        os << buf;
    }
    return os.str();
}

namespace {
constexpr char kModelMagic[4] = {'M', 'O', 'D', 'R'};
constexpr uint16_t kModelVersion = 1;
}  // namespace

void save_model(TrainedModel& model, const std::filesystem::path& path) {
    ByteWriter w;
    w.bytes(kModelMagic, 4);
    w.u16(kModelVersion);
    w.str(model.config_digest);
    w.u8(model.replay ? 1 : 0);
    w.u32(model.train_examples);
    w.i32(model.epochs_run);
    w.f64(model.best_val_accuracy);
    w.u32(static_cast<uint32_t>(model.epoch_times.size()));
    for (double t : model.epoch_times) w.f64(t);

    const PreprocessArtifact& a = model.artifact;
    w.u8(static_cast<uint8_t>(a.cfg.method));
    w.i32(a.cfg.factor);
    w.u64(a.cfg.seed);
    w.u8(a.polar ? 1 : 0);
    w.i32(a.input_len);
    w.i32(a.output_len);
    w.u8(a.pca.has_value() ? 1 : 0);
    if (a.pca) write_pca_body(w, *a.pca);
    w.u8(a.plan.has_value() ? 1 : 0);
    if (a.plan) write_plan_body(w, *a.plan);

    w.u64(model.init_seed);
    nn::write_network_spec(w, model.spec);
    nn::write_network_params(w, *model.net);
    w.u64(fnv1a64(w.data().data(), w.size()));
    atomic_write_file(path, w.data());
}

TrainedModel load_model(const std::filesystem::path& path) {
    const auto buf = read_file(path);
    if (buf.size() < 14) throw std::runtime_error("model: file too short: " + path.string());
    if (std::memcmp(buf.data(), kModelMagic, 4) != 0)
        throw std::runtime_error("model: bad magic: " + path.string());
    const uint64_t stored = ByteReader(buf.data() + buf.size() - 8, 8).u64();
    if (stored != fnv1a64(buf.data(), buf.size() - 8))
        throw std::runtime_error("model: checksum mismatch: " + path.string());

    ByteReader r(buf.data(), buf.size() - 8);
    char magic[4];
    r.bytes(magic, 4);
    if (r.u16() != kModelVersion) throw std::runtime_error("model: unsupported version");
    TrainedModel model;
    model.config_digest = r.str();
    model.replay = r.u8() != 0;
    model.train_examples = r.u32();
    model.epochs_run = r.i32();
    model.best_val_accuracy = r.f64();
    const uint32_t nt = r.u32();
    model.epoch_times.resize(nt);
    for (double& t : model.epoch_times) t = r.f64();

    PreprocessArtifact& a = model.artifact;
    a.cfg.method = static_cast<PreprocessConfig::Method>(r.u8());
    a.cfg.factor = r.i32();
    a.cfg.seed = r.u64();
    a.polar = r.u8() != 0;
    a.input_len = r.i32();
    a.output_len = r.i32();
    if (r.u8()) a.pca = read_pca_body(r);
    if (r.u8()) a.plan = read_plan_body(r);

    model.init_seed = r.u64();
    model.spec = nn::read_network_spec(r);
    model.net = std::make_unique<nn::Network<float>>(model.spec, model.init_seed);
    nn::read_network_params(r, *model.net);
    if (r.remaining() != 0) throw std::runtime_error("model: trailing bytes");
    return model;
}

std::vector<ReductionCell> sweep_reduction(const ExperimentConfig& base, const Dataset& train,
                                           const Dataset& test,
                                           const std::vector<PreprocessConfig>& cells) {
    std::vector<ReductionCell> out;
    double baseline_time = 0.0;
    for (const PreprocessConfig& pre : cells) {
        ExperimentConfig cfg = base;
        cfg.preprocess = pre;
        TrainedModel model = train_model(cfg, train);
        ReductionCell cell;
        cell.pre = pre;
        cell.report = evaluate(model, test);
        cell.median_epoch_time = median(model.epoch_times);
        out.push_back(std::move(cell));
        const bool is_baseline =
            pre.method == PreprocessConfig::Method::None || (pre.factor == 1);
        if (is_baseline && baseline_time == 0.0) baseline_time = out.back().median_epoch_time;
    }
    if (baseline_time > 0.0)
        for (auto& cell : out) cell.time_ratio = cell.median_epoch_time / baseline_time;
    return out;
}

std::vector<SnrCell> sweep_snr_selection(const ExperimentConfig& base, const Dataset& train,
                                         const Dataset& test, const std::vector<SnrPolicy>& policies) {
    std::vector<SnrCell> out;
    for (const SnrPolicy& policy : policies) {
        ExperimentConfig cfg = base;
        cfg.snr_policy = policy;
        TrainedModel model = train_model(cfg, train);
        SnrCell cell;
        cell.policy = policy;
        cell.report = evaluate(model, test);
        cell.median_epoch_time = median(model.epoch_times);
        out.push_back(std::move(cell));
    }
    return out;
}

double median(std::vector<double> xs) {
    if (xs.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    const size_t mid = xs.size() / 2;
    return xs.size() % 2 ? xs[mid] : 0.5 * (xs[mid - 1] + xs[mid]);
}

}  // namespace amc
