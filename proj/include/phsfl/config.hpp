#pragma once

#include <cstdint>
#include <string>

#include "phsfl/orchestrator.hpp"

namespace phsfl {

struct DatasetConfig {
    std::string source = "synthetic";  // synthetic | file
    std::size_t classes = 10;
    std::size_t samples = 2000;
    Shape sample_shape{3, 8, 8};
    double margin = 2.5;
    std::string path;  // for source == file
};

struct FineTuneConfig {
    std::size_t steps = 10;  // K
    double lr = 0.01;        // eta-tilde
};

/// Full experiment description. Parses from / serializes to JSON losslessly;
/// unknown keys are rejected with their path.
struct ExperimentConfig {
    TrainConfig train;
    DatasetConfig dataset;
    std::string model = "cnn8";  // cnn8 | paper | paper8 | linear
    FineTuneConfig finetune;
    bool estimate_bound = false;
    std::string out_dir = "out";
    /// 0 = derive cut/head boundaries from the model.
    std::size_t cut_after = 0;
    std::size_t head_start = 0;
};

ExperimentConfig parse_config(const std::string& text);
std::string serialize_config(const ExperimentConfig& cfg);  // canonical form

/// paper-full: B=4, U=100, k0=5, k1=3, R=100, eta=0.01, Nbar=32, N=5 on the
/// 32x32 CNN. desk-small: B=2, U=8, R=30 on 8x8 synthetic data.
ExperimentConfig preset(const std::string& name);

/// FNV-1a over the canonical serialization; artifact paths derive from it.
std::uint64_t config_hash(const ExperimentConfig& cfg);

/// Builds the configured architecture (zero params) for the dataset shape.
LayeredModel build_model(const ExperimentConfig& cfg);

/// Resolves cut_after / head_start (0 = auto) against the built model.
PartitionSpec resolve_partition(const ExperimentConfig& cfg, const LayeredModel& model);

/// Loads or synthesizes the configured dataset.
Dataset load_configured_dataset(const ExperimentConfig& cfg);

/// out_dir/<mode>-<hash8>-s<seed>; unique per differing config.
std::string artifact_dir(const ExperimentConfig& cfg);

}  // namespace phsfl
