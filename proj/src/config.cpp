#include "phsfl/config.hpp"

#include <cstdio>
#include <json.hpp>
#include <set>
#include <sstream>
#include <stdexcept>

namespace phsfl {

using json = nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& prefix) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw std::invalid_argument("unknown config key '" + prefix + it.key() + "'");
}

template <typename T>
void take(const json& obj, const char* key, T& dst, const std::string& prefix) {
    if (!obj.contains(key)) return;
    try {
        dst = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw std::invalid_argument("config key '" + prefix + key + "' has the wrong type");
    }
}

WeightPolicy weights_from_name(const std::string& s) {
    if (s == "datasize") return WeightPolicy::DataSize;
    if (s == "uniform") return WeightPolicy::Uniform;
    throw std::invalid_argument("unknown weight policy '" + s + "'");
}

std::string weights_name(WeightPolicy p) {
    return p == WeightPolicy::DataSize ? "datasize" : "uniform";
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw std::invalid_argument("config root must be an object");

    reject_unknown(root,
                   {"mode", "edges", "clients", "alpha", "rounds", "edge_rounds", "local_epochs",
                    "minibatches_per_epoch", "batch_size", "lr", "seed", "test_fraction",
                    "weights", "model", "cut_after", "head_start", "precision_bits", "dataset",
                    "finetune", "estimate_bound", "out", "force_frozen_head"},
                   "");

    ExperimentConfig cfg;
    std::string mode = "phsfl", weights = "datasize";
    take(root, "mode", mode, "");
    cfg.train.mode = mode_from_name(mode);
    take(root, "edges", cfg.train.num_edges, "");
    take(root, "clients", cfg.train.num_clients, "");
    take(root, "alpha", cfg.train.dirichlet_alpha, "");
    take(root, "rounds", cfg.train.global_rounds, "");
    take(root, "edge_rounds", cfg.train.edge_rounds, "");
    take(root, "local_epochs", cfg.train.local_epochs, "");
    take(root, "minibatches_per_epoch", cfg.train.minibatches_per_epoch, "");
    take(root, "batch_size", cfg.train.batch_size, "");
    take(root, "lr", cfg.train.lr, "");
    take(root, "seed", cfg.train.seed, "");
    take(root, "test_fraction", cfg.train.test_fraction, "");
    take(root, "weights", weights, "");
    cfg.train.weights = weights_from_name(weights);
    take(root, "precision_bits", cfg.train.precision_bits, "");
    take(root, "force_frozen_head", cfg.train.force_frozen_head, "");
    take(root, "model", cfg.model, "");
    take(root, "cut_after", cfg.cut_after, "");
    take(root, "head_start", cfg.head_start, "");
    take(root, "estimate_bound", cfg.estimate_bound, "");
    take(root, "out", cfg.out_dir, "");

    if (root.contains("dataset")) {
        const json& ds = root.at("dataset");
        if (!ds.is_object()) throw std::invalid_argument("config key 'dataset' must be an object");
        reject_unknown(ds, {"source", "classes", "samples", "shape", "margin", "path"},
                       "dataset.");
        take(ds, "source", cfg.dataset.source, "dataset.");
        take(ds, "classes", cfg.dataset.classes, "dataset.");
        take(ds, "samples", cfg.dataset.samples, "dataset.");
        take(ds, "shape", cfg.dataset.sample_shape, "dataset.");
        take(ds, "margin", cfg.dataset.margin, "dataset.");
        take(ds, "path", cfg.dataset.path, "dataset.");
        if (cfg.dataset.source != "synthetic" && cfg.dataset.source != "file")
            throw std::invalid_argument("dataset.source must be 'synthetic' or 'file'");
    }
    if (root.contains("finetune")) {
        const json& ft = root.at("finetune");
        if (!ft.is_object())
            throw std::invalid_argument("config key 'finetune' must be an object");
        reject_unknown(ft, {"steps", "lr"}, "finetune.");
        take(ft, "steps", cfg.finetune.steps, "finetune.");
        take(ft, "lr", cfg.finetune.lr, "finetune.");
    }
    return cfg;
}

std::string serialize_config(const ExperimentConfig& cfg) {
    json root;
    root["mode"] = mode_name(cfg.train.mode);
    root["edges"] = cfg.train.num_edges;
    root["clients"] = cfg.train.num_clients;
    root["alpha"] = cfg.train.dirichlet_alpha;
    root["rounds"] = cfg.train.global_rounds;
    root["edge_rounds"] = cfg.train.edge_rounds;
    root["local_epochs"] = cfg.train.local_epochs;
    root["minibatches_per_epoch"] = cfg.train.minibatches_per_epoch;
    root["batch_size"] = cfg.train.batch_size;
    root["lr"] = cfg.train.lr;
    root["seed"] = cfg.train.seed;
    root["test_fraction"] = cfg.train.test_fraction;
    root["weights"] = weights_name(cfg.train.weights);
    root["precision_bits"] = cfg.train.precision_bits;
    root["force_frozen_head"] = cfg.train.force_frozen_head;
    root["model"] = cfg.model;
    root["cut_after"] = cfg.cut_after;
    root["head_start"] = cfg.head_start;
    root["estimate_bound"] = cfg.estimate_bound;
    root["out"] = cfg.out_dir;
    root["dataset"] = {{"source", cfg.dataset.source},   {"classes", cfg.dataset.classes},
                       {"samples", cfg.dataset.samples}, {"shape", cfg.dataset.sample_shape},
                       {"margin", cfg.dataset.margin},   {"path", cfg.dataset.path}};
    root["finetune"] = {{"steps", cfg.finetune.steps}, {"lr", cfg.finetune.lr}};
    return root.dump(2) + "\n";
}

ExperimentConfig preset(const std::string& name) {
    ExperimentConfig cfg;
    if (name == "paper-full") {
        cfg.train.mode = Mode::PHSFL;
        cfg.train.num_edges = 4;
        cfg.train.num_clients = 100;
        cfg.train.dirichlet_alpha = 0.1;
        cfg.train.local_epochs = 5;        // kappa_0
        cfg.train.edge_rounds = 3;         // kappa_1
        cfg.train.global_rounds = 100;     // R
        cfg.train.minibatches_per_epoch = 32;
        cfg.train.batch_size = 5;
        cfg.train.lr = 0.01;
        cfg.model = "paper";
        cfg.dataset.source = "file";
        cfg.dataset.classes = 10;
        cfg.dataset.sample_shape = {3, 32, 32};
        cfg.dataset.path = "cifar10.phsfdata";
        cfg.finetune.steps = 10;
        cfg.finetune.lr = 0.01;
        return cfg;
    }
    if (name == "desk-small") {
        cfg.train.mode = Mode::PHSFL;
        cfg.train.num_edges = 2;
        cfg.train.num_clients = 8;
        cfg.train.dirichlet_alpha = 0.1;
        cfg.train.local_epochs = 4;
        cfg.train.edge_rounds = 2;
        cfg.train.global_rounds = 30;
        cfg.train.minibatches_per_epoch = 4;
        cfg.train.batch_size = 8;
        cfg.train.lr = 0.1;
        cfg.model = "cnn8";
        cfg.dataset.source = "synthetic";
        cfg.dataset.classes = 10;
        cfg.dataset.samples = 1200;
        cfg.dataset.sample_shape = {8, 8, 8};
        cfg.dataset.margin = 0.6;
        cfg.finetune.steps = 10;
        cfg.finetune.lr = 0.3;
        return cfg;
    }
    throw std::invalid_argument("unknown preset '" + name + "'");
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    const std::string canon = serialize_config(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char ch : canon) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

LayeredModel build_model(const ExperimentConfig& cfg) {
    const std::size_t channels =
        cfg.dataset.sample_shape.empty() ? 1 : cfg.dataset.sample_shape[0];
    if (cfg.model == "paper") return paper_cnn(channels, cfg.dataset.classes);
    if (cfg.model == "paper8") return paper_cnn_8x8(channels, cfg.dataset.classes);
    if (cfg.model == "cnn8") return desk_cnn(channels, cfg.dataset.classes);
    if (cfg.model == "linear") return linear_model(cfg.dataset.sample_shape, cfg.dataset.classes);
    throw std::invalid_argument("unknown model '" + cfg.model + "'");
}

PartitionSpec resolve_partition(const ExperimentConfig& cfg, const LayeredModel& model) {
    PartitionSpec spec = PartitionSpec::auto_for(model);
    if (cfg.cut_after != 0) spec.cut_after = cfg.cut_after;
    if (cfg.head_start != 0) spec.head_start = cfg.head_start;
    spec.validate(model);
    return spec;
}

Dataset load_configured_dataset(const ExperimentConfig& cfg) {
    if (cfg.dataset.source == "file") {
        if (cfg.dataset.path.empty())
            throw std::invalid_argument("dataset.source is 'file' but dataset.path is empty");
        return load_dataset(cfg.dataset.path);
    }
    return generate_synthetic(cfg.dataset.classes, cfg.dataset.samples, cfg.dataset.sample_shape,
                              cfg.train.seed, cfg.dataset.margin);
}

std::string artifact_dir(const ExperimentConfig& cfg) {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    std::ostringstream os;
    os << cfg.out_dir << "/" << mode_name(cfg.train.mode) << "-" << std::string(hex, 8) << "-s"
       << cfg.train.seed;
    return os.str();
}

}  // namespace phsfl
