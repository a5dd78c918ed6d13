#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "phsfl/bound.hpp"
#include "phsfl/checkpoint.hpp"
#include "phsfl/comm.hpp"
#include "phsfl/config.hpp"
#include "phsfl/orchestrator.hpp"
#include "phsfl/personalize.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace phsfl;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

ExperimentConfig resolve_config(const std::string& config_path, const std::string& preset_name,
                                const std::string& mode, long long seed,
                                const std::string& out_dir) {
    ExperimentConfig cfg;
    if (!config_path.empty() && !preset_name.empty())
        throw std::runtime_error("pass either --config or --preset, not both");
    if (!config_path.empty())
        cfg = parse_config(read_file(config_path));
    else
        cfg = preset(preset_name.empty() ? "desk-small" : preset_name);
    if (!mode.empty()) cfg.train.mode = mode_from_name(mode);
    if (seed >= 0) cfg.train.seed = static_cast<std::uint64_t>(seed);
    if (const char* env = std::getenv("PHSFL_SEED"))
        cfg.train.seed = std::strtoull(env, nullptr, 10);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    return cfg;
}

std::vector<double> parse_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    if (out.empty()) throw std::runtime_error("empty sweep list");
    return out;
}

struct RunArtifacts {
    TrainingTrace trace;
    PartitionSpec spec;
    std::string dir;
};

RunArtifacts run_train(const ExperimentConfig& cfg) {
    RunArtifacts art;
    art.dir = artifact_dir(cfg);
    fs::create_directories(art.dir);
    {
        std::ofstream os(art.dir + "/config.json");
        os << serialize_config(cfg);
    }
    const Dataset dataset = load_configured_dataset(cfg);
    LayeredModel model = build_model(cfg);
    art.spec = resolve_partition(cfg, model);
    ExperimentConfig effective = cfg;
    effective.train.partition = art.spec;
    const LayeredModel initial = init_model(model, cfg.train.seed);
    art.trace = run_training(effective.train, dataset, initial);
    write_metrics_csv(art.trace, cfg.train.mode, art.dir + "/metrics.csv");
    save_model(art.trace.final_model, art.dir + "/checkpoint.phsfl");
    return art;
}

int cmd_train(const ExperimentConfig& cfg) {
    RunArtifacts art = run_train(cfg);
    const Dataset dataset = load_configured_dataset(cfg);

    std::vector<ClientEval> generalized, personalized;
    for (const auto& shard : art.trace.shards)
        generalized.push_back(evaluate(art.trace.final_model, dataset, shard));
    for (const auto& shard : art.trace.shards) {
        const PersonalizedModel pm =
            fine_tune_head(art.trace.final_model, art.spec, dataset, shard, cfg.finetune.steps,
                           cfg.finetune.lr, cfg.train.seed);
        personalized.push_back(evaluate(pm.model, dataset, shard));
    }
    write_personalization_csv(generalized, personalized, art.dir + "/personalization.csv");

    const EvalReport gen = report(generalized);
    const EvalReport per = report(personalized);

    BoundInputs bi;
    bi.eta = cfg.train.lr;
    bi.kappa0 = cfg.train.local_epochs;
    bi.kappa1 = cfg.train.edge_rounds;
    bi.total_steps = cfg.train.global_rounds * cfg.train.edge_rounds * cfg.train.local_epochs;
    bi.edge_weights = edge_weights(art.trace.shards, art.trace.topology, cfg.train.weights);
    for (std::size_t b = 0; b < art.trace.topology.num_edges(); ++b)
        bi.client_weights.resize(art.trace.topology.num_edges());
    for (std::size_t b = 0; b < art.trace.topology.num_edges(); ++b)
        bi.client_weights[b] = client_weights(art.trace.shards,
                                              art.trace.topology.edge_clients[b],
                                              cfg.train.weights);

    json summary;
    if (cfg.estimate_bound) {
        const BoundEstimate est = estimate_bound_inputs(
            art.trace.initial_model, art.trace.final_model, dataset, art.trace.shards,
            art.trace.topology, bi.edge_weights, bi.client_weights, cfg.train.seed);
        bi.beta = std::max(est.beta, 1e-12);
        bi.sigma_sq = est.sigma_sq;
        bi.eps0_sq = est.eps0_sq;
        bi.eps1_sq = est.eps1_sq;
        bi.delta_f = est.delta_f;
        summary["bound_estimate"] = {{"beta", est.beta},       {"sigma_sq", est.sigma_sq},
                                     {"eps0_sq", est.eps0_sq}, {"eps1_sq", est.eps1_sq},
                                     {"delta_f", est.delta_f},
                                     {"theorem_rhs", theorem_bound(bi)}};
    }

    summary["final_mean_acc"] = gen.mean_acc;
    summary["final_std_acc"] = gen.std_acc;
    summary["personalized_mean_acc"] = per.mean_acc;
    summary["comm_bits_total"] = art.trace.ledger.total_bits();
    summary["lr_admissible"] = lr_admissible(bi);
    {
        std::ofstream os(art.dir + "/summary.json");
        os << summary.dump(2) << "\n";
    }
    std::cout << "artifacts: " << art.dir << "\n"
              << "final mean acc " << gen.mean_acc << ", personalized mean acc " << per.mean_acc
              << "\n";
    return 0;
}

int cmd_finetune(const ExperimentConfig& cfg, const std::string& checkpoint) {
    const Dataset dataset = load_configured_dataset(cfg);
    const LayeredModel model = checkpoint.empty()
                                   ? load_model(artifact_dir(cfg) + "/checkpoint.phsfl")
                                   : load_model(checkpoint);
    const PartitionSpec spec = resolve_partition(cfg, model);

    auto shards = dirichlet_partition(dataset, cfg.train.num_clients, cfg.train.dirichlet_alpha,
                                      cfg.train.seed, cfg.train.test_fraction);
    assign_edges(shards, Topology::contiguous(cfg.train.num_clients, cfg.train.num_edges));

    std::vector<ClientEval> generalized, personalized;
    for (const auto& shard : shards) {
        generalized.push_back(evaluate(model, dataset, shard));
        const PersonalizedModel pm = fine_tune_head(model, spec, dataset, shard,
                                                    cfg.finetune.steps, cfg.finetune.lr,
                                                    cfg.train.seed);
        personalized.push_back(evaluate(pm.model, dataset, shard));
    }
    const std::string dir = artifact_dir(cfg);
    fs::create_directories(dir);
    write_personalization_csv(generalized, personalized, dir + "/personalization.csv");
    const EvalReport per = report(personalized);
    std::cout << "personalized mean acc " << per.mean_acc << " (csv in " << dir << ")\n";
    return 0;
}

int cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint) {
    const Dataset dataset = load_configured_dataset(cfg);
    const LayeredModel model = load_model(checkpoint);
    auto shards = dirichlet_partition(dataset, cfg.train.num_clients, cfg.train.dirichlet_alpha,
                                      cfg.train.seed, cfg.train.test_fraction);
    const std::string dir = artifact_dir(cfg);
    fs::create_directories(dir);
    std::ofstream os(dir + "/eval.csv");
    os << "client_id,accuracy,loss\n";
    std::vector<ClientEval> evals;
    for (const auto& shard : shards) {
        evals.push_back(evaluate(model, dataset, shard));
        os << shard.client_id << ',' << evals.back().accuracy << ',' << evals.back().loss
           << '\n';
    }
    const EvalReport rep = report(evals);
    std::cout << "mean acc " << rep.mean_acc << " min " << rep.min_acc << " max " << rep.max_acc
              << "\n";
    return 0;
}

int cmd_bound(const ExperimentConfig& cfg, const std::string& etas, const std::string& kappa0s,
              const std::string& kappa1s, double beta, double sigma_sq, double eps0_sq,
              double eps1_sq, double delta_f, long long total_steps) {
    const std::string dir = artifact_dir(cfg);
    fs::create_directories(dir);
    std::ofstream os(dir + "/bound.csv");
    os << "eta,kappa0,kappa1,lr_admissible,theorem_rhs\n";
    BoundInputs bi;
    bi.beta = beta;
    bi.sigma_sq = sigma_sq;
    bi.eps0_sq = eps0_sq;
    bi.eps1_sq = eps1_sq;
    bi.delta_f = delta_f;
    bi.total_steps = static_cast<std::uint64_t>(total_steps);
    for (double k0 : parse_list(kappa0s))
        for (double k1 : parse_list(kappa1s))
            for (double eta : parse_list(etas)) {
                bi.eta = eta;
                bi.kappa0 = static_cast<std::uint64_t>(k0);
                bi.kappa1 = static_cast<std::uint64_t>(k1);
                const bool ok = lr_admissible(bi);
                if (!ok)
                    std::cerr << "warning: eta=" << eta
                              << " violates the admissibility condition; evaluating anyway\n";
                os << eta << ',' << bi.kappa0 << ',' << bi.kappa1 << ',' << (ok ? 1 : 0) << ','
                   << theorem_bound(bi) << '\n';
            }
    std::cout << "bound sweep written to " << dir << "/bound.csv\n";
    return 0;
}

int cmd_comm(long long n, long long nbar, long long zc, long long z0, long long z,
             long long omega, long long du, long long kappa0) {
    OverheadParams p;
    p.batch_size = n;
    p.minibatches = nbar;
    p.cut_width = zc;
    p.client_params = z0;
    p.total_params = z;
    p.precision_bits = omega;
    p.client_data_size = du;
    p.local_epochs = kappa0;
    std::cout << "phi_local  " << phi_local(p) << "\n"
              << "phi_off    " << phi_off(p.client_params, p.precision_bits) << "\n"
              << "phi_phsfl  " << phi_phsfl_bound(p) << "\n"
              << "phi_hfl    " << phi_hfl(p.total_params, p.precision_bits) << "\n"
              << (phsfl_efficient(p) ? "efficient" : "not efficient") << "\n";
    return 0;
}

int cmd_partition(const ExperimentConfig& cfg) {
    const Dataset dataset = load_configured_dataset(cfg);
    auto shards = dirichlet_partition(dataset, cfg.train.num_clients, cfg.train.dirichlet_alpha,
                                      cfg.train.seed, cfg.train.test_fraction);
    assign_edges(shards, Topology::contiguous(cfg.train.num_clients, cfg.train.num_edges));
    const std::string dir = artifact_dir(cfg);
    fs::create_directories(dir);
    std::ofstream os(dir + "/partition.csv");
    os << "client_id,edge_id,samples,train,test,label_entropy\n";
    double mean_entropy = 0.0;
    for (const auto& s : shards) {
        const double h = label_entropy(dataset, s);
        mean_entropy += h;
        os << s.client_id << ',' << s.edge_id << ',' << s.size() << ',' << s.train_idx.size()
           << ',' << s.test_idx.size() << ',' << h << '\n';
    }
    mean_entropy /= static_cast<double>(shards.size());
    std::cout << "mean per-client label entropy " << mean_entropy << " (csv in " << dir << ")\n";
    return 0;
}

/// Central finite differences on a small instance of every layer kind.
int cmd_gradcheck() {
    const double fd_eps = 1e-5, tol = 1e-4;
    LayeredModel model = init_model(paper_cnn_8x8(3, 4), 7);

    Rng rng = make_rng(11, 0x67636bULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    Tensor x({2, 3, 8, 8});
    for (auto& v : x.data) v = normal(rng);
    std::vector<int> labels{1, 3};

    Tape tape;
    const LayerRange full = LayerRange::full(model);
    Tensor dlogits;
    cross_entropy_grad(forward(model, full, x, &tape), labels, dlogits);
    const GradientSet grads = backward(model, full, tape, dlogits);

    double worst = 0.0;
    std::size_t checked = 0;
    for (std::size_t li = 0; li < model.layer_count(); ++li) {
        if (model.params[li].empty()) continue;
        // probe a spread of parameters in every block to keep runtime low
        const std::size_t stride = std::max<std::size_t>(1, model.params[li].size() / 40);
        for (std::size_t j = 0; j < model.params[li].size(); j += stride) {
            const double saved = model.params[li][j];
            model.params[li][j] = saved + fd_eps;
            const double lp = cross_entropy(forward(model, full, x), labels);
            model.params[li][j] = saved - fd_eps;
            const double lm = cross_entropy(forward(model, full, x), labels);
            model.params[li][j] = saved;
            const double fd = (lp - lm) / (2.0 * fd_eps);
            const double an = grads.blocks[li][j];
            const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8});
            worst = std::max(worst, rel);
            ++checked;
        }
    }
    std::cout << "gradcheck: " << checked << " parameters probed, worst relative error " << worst
              << (worst <= tol ? " -- pass\n" : " -- FAIL\n");
    return worst <= tol ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PHSFL training simulator"};
    app.require_subcommand(1);

    std::string config_path, preset_name, mode, out_dir, checkpoint;
    long long seed = -1;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--preset", preset_name, "preset name (paper-full | desk-small)");
    app.add_option("--seed", seed, "seed override");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--mode", mode, "phsfl | hsfl | hfl | centralized");

    auto* train = app.add_subcommand("train", "run a full training experiment");
    auto* finetune = app.add_subcommand("finetune", "fine-tune heads from a checkpoint");
    finetune->add_option("--checkpoint", checkpoint, "model checkpoint path");
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint per client");
    eval->add_option("--checkpoint", checkpoint, "model checkpoint path")->required();
    auto* bound = app.add_subcommand("bound", "evaluate the convergence bound over a sweep");
    std::string etas = "0.01", kappa0s = "5", kappa1s = "3";
    double beta = 1.0, sigma_sq = 1.0, eps0_sq = 0.0, eps1_sq = 0.0, delta_f = 1.0;
    long long total_steps = 1500;
    bound->add_option("--etas", etas, "comma list of learning rates");
    bound->add_option("--kappa0s", kappa0s, "comma list of local-epoch counts");
    bound->add_option("--kappa1s", kappa1s, "comma list of edge-round counts");
    bound->add_option("--beta", beta, "smoothness constant");
    bound->add_option("--sigma-sq", sigma_sq, "gradient variance bound");
    bound->add_option("--eps0-sq", eps0_sq, "client-edge divergence");
    bound->add_option("--eps1-sq", eps1_sq, "edge-global divergence");
    bound->add_option("--delta-f", delta_f, "initial minus final loss");
    bound->add_option("--total-steps", total_steps, "T");
    auto* comm = app.add_subcommand("comm", "evaluate the communication formulas");
    long long c_n = 5, c_nbar = 32, c_zc = 12544, c_z0 = 4864, c_z = 1000000, c_omega = 64,
              c_du = 500, c_k0 = 5;
    comm->add_option("--batch", c_n, "N, mini-batch size");
    comm->add_option("--minibatches", c_nbar, "N-bar, mini-batches per epoch");
    comm->add_option("--cut-width", c_zc, "Z_c");
    comm->add_option("--client-params", c_z0, "Z_0");
    comm->add_option("--total-params", c_z, "Z");
    comm->add_option("--omega", c_omega, "float precision bits");
    comm->add_option("--data-size", c_du, "|D_u|");
    comm->add_option("--kappa0", c_k0, "local epochs");
    auto* partition = app.add_subcommand("partition", "partition a dataset and report skew");
    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gradcheck->parsed()) return cmd_gradcheck();
        if (comm->parsed())
            return cmd_comm(c_n, c_nbar, c_zc, c_z0, c_z, c_omega, c_du, c_k0);

        const ExperimentConfig cfg =
            resolve_config(config_path, preset_name, mode, seed, out_dir);
        if (train->parsed()) return cmd_train(cfg);
        if (finetune->parsed()) return cmd_finetune(cfg, checkpoint);
        if (eval->parsed()) return cmd_eval(cfg, checkpoint);
        if (bound->parsed())
            return cmd_bound(cfg, etas, kappa0s, kappa1s, beta, sigma_sq, eps0_sq, eps1_sq,
                             delta_f, total_steps);
        if (partition->parsed()) return cmd_partition(cfg);
    } catch (const std::exception& e) {
        json err;
        err["error"] = e.what();
        std::cerr << err.dump() << "\n";
        return 1;
    }
    return 1;
}
