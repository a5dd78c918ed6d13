#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "phsfl/orchestrator.hpp"
#include "test_util.hpp"

using namespace phsfl;
using namespace phsfl::testutil;

namespace {

Dataset small_dataset(std::uint64_t seed = 1) {
    return generate_synthetic(4, 240, {3, 8, 8}, seed);
}

TrainConfig desk_config(Mode mode) {
    TrainConfig cfg;
    cfg.mode = mode;
    cfg.num_edges = 2;
    cfg.num_clients = 4;
    cfg.dirichlet_alpha = 0.5;
    cfg.local_epochs = 2;
    cfg.edge_rounds = 2;
    cfg.global_rounds = 2;
    cfg.batch_size = 4;
    cfg.minibatches_per_epoch = 2;
    cfg.lr = 0.05;
    cfg.seed = 7;
    cfg.partition = {3, 9};  // desk_cnn: cut after the first pool, head is layer 9
    return cfg;
}

LayeredModel desk_init(std::uint64_t seed = 7) { return init_model(desk_cnn(3, 4), seed); }

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("aggregate: identical parts come back bit-identical for any weights") {
    const LayeredModel m = desk_init(3);
    const LayeredModel out = aggregate_models({&m, &m, &m}, {0.2, 0.5, 0.3});
    CHECK(out.bit_equal(m));
}

TEST_CASE("aggregate: hand weighted mean of scalars") {
    LayeredModel a, b;
    a.input_shape = {1};
    a.layers = {LayerSpec::dense(1, 1)};
    a.params = {{0.0, 0.0}};
    b = a;
    b.params = {{4.0, 0.0}};
    const LayeredModel out = aggregate_models({&a, &b}, {0.25, 0.75});
    CHECK(out.params[0][0] == 3.0);
}

TEST_CASE("aggregate: single part with weight 1 is the identity") {
    const LayeredModel m = desk_init(4);
    CHECK(aggregate_models({&m}, {1.0}).bit_equal(m));
}

TEST_CASE("aggregate rejects bad weights and incongruent parts") {
    const LayeredModel m = desk_init(5);
    CHECK_THROWS_AS(aggregate_models({&m, &m}, {0.6, 0.6}), std::invalid_argument);
    CHECK_THROWS_AS(aggregate_models({}, {}), std::invalid_argument);
    const LayeredModel other = init_model(desk_cnn(3, 5), 5);
    CHECK_THROWS_AS(aggregate_models({&m, &other}, {0.5, 0.5}), std::invalid_argument);
}

TEST_CASE("aggregate keeps every parameter inside the contributors' hull") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const LayeredModel a = desk_init(10), b = desk_init(11), c = desk_init(12);
    double w0 = unit(rng), w1 = unit(rng), w2 = unit(rng);
    const double s = w0 + w1 + w2;
    w0 /= s;
    w1 /= s;
    w2 = 1.0 - w0 - w1;  // exact simplex closure
    const LayeredModel out = aggregate_models({&a, &b, &c}, {w0, w1, w2});
    for (std::size_t li = 0; li < out.params.size(); ++li)
        for (std::size_t j = 0; j < out.params[li].size(); ++j) {
            const double lo = std::min({a.params[li][j], b.params[li][j], c.params[li][j]});
            const double hi = std::max({a.params[li][j], b.params[li][j], c.params[li][j]});
            CHECK(out.params[li][j] >= lo);
            CHECK(out.params[li][j] <= hi);
        }
}

TEST_CASE("weights: data-size policy normalizes per level") {
    const Dataset ds = small_dataset();
    auto shards = dirichlet_partition(ds, 4, 0.5, 3);
    const Topology topo = Topology::contiguous(4, 2);
    assign_edges(shards, topo);

    const auto cw = client_weights(shards, topo.edge_clients[0], WeightPolicy::DataSize);
    double sum = 0;
    for (double w : cw) sum += w;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-13));

    const auto ew = edge_weights(shards, topo, WeightPolicy::DataSize);
    CHECK(ew[0] + ew[1] == doctest::Approx(1.0).epsilon(1e-13));

    const auto uw = client_weights(shards, topo.edge_clients[1], WeightPolicy::Uniform);
    CHECK(uw[0] == 0.5);
}

TEST_CASE("hsfl with a single client collapses to centralized sgd") {
    const Dataset ds = small_dataset(21);
    TrainConfig cfg = desk_config(Mode::HSFL);
    cfg.num_edges = 1;
    cfg.num_clients = 1;
    cfg.local_epochs = 1;
    cfg.edge_rounds = 1;
    cfg.minibatches_per_epoch = 10;
    cfg.global_rounds = 10;  // 100 SGD steps in total
    cfg.record_models = true;
    const LayeredModel init = desk_init(22);

    const TrainingTrace split_trace = run_training(cfg, ds, init);

    TrainConfig central = cfg;
    central.mode = Mode::Centralized;
    const TrainingTrace central_trace = run_training(central, ds, init);

    REQUIRE(split_trace.model_snapshots.size() == central_trace.model_snapshots.size());
    for (std::size_t r = 0; r < split_trace.model_snapshots.size(); ++r)
        CHECK(max_abs_param_diff(split_trace.model_snapshots[r],
                                 central_trace.model_snapshots[r]) <= 1e-9);
    CHECK(split_trace.local_steps_per_client == 100);
}

TEST_CASE("phsfl: final head block is bit-identical to the initial head") {
    const Dataset ds = small_dataset(31);
    const TrainConfig cfg = desk_config(Mode::PHSFL);
    const LayeredModel init = desk_init(32);
    const TrainingTrace trace = run_training(cfg, ds, init);
    const std::size_t head = cfg.partition.head_start;
    CHECK(trace.final_model.params[head] == init.params[head]);
    // and the body actually moved
    CHECK(max_abs_param_diff(trace.final_model, init) > 0.0);
}

TEST_CASE("hsfl trains the head") {
    const Dataset ds = small_dataset(41);
    const TrainConfig cfg = desk_config(Mode::HSFL);
    const LayeredModel init = desk_init(42);
    const TrainingTrace trace = run_training(cfg, ds, init);
    CHECK(trace.final_model.params[cfg.partition.head_start] !=
          init.params[cfg.partition.head_start]);
}

TEST_CASE("determinism: identical config and seed give bit-identical traces") {
    const Dataset ds = small_dataset(51);
    const TrainConfig cfg = desk_config(Mode::PHSFL);
    const LayeredModel init = desk_init(52);
    const TrainingTrace a = run_training(cfg, ds, init);
    const TrainingTrace b = run_training(cfg, ds, init);
    CHECK(a.final_model.bit_equal(b.final_model));
    REQUIRE(a.rounds.size() == b.rounds.size());
    for (std::size_t r = 0; r < a.rounds.size(); ++r) {
        CHECK(a.rounds[r].client_accuracy == b.rounds[r].client_accuracy);
        CHECK(a.rounds[r].client_loss == b.rounds[r].client_loss);
        CHECK(a.rounds[r].cum_comm_bits_phsfl == b.rounds[r].cum_comm_bits_phsfl);
    }
}

TEST_CASE("trace accounting: R * k1 * k0 * Nbar local steps per client") {
    const Dataset ds = small_dataset(61);
    const TrainConfig cfg = desk_config(Mode::PHSFL);
    const TrainingTrace trace = run_training(cfg, ds, desk_init(62));
    CHECK(trace.rounds.size() == cfg.global_rounds);
    CHECK(trace.local_steps_per_client ==
          cfg.global_rounds * cfg.edge_rounds * cfg.local_epochs * cfg.minibatches_per_epoch);
}

TEST_CASE("control experiment: hsfl with a forced frozen head equals phsfl") {
    const Dataset ds = small_dataset(71);
    const LayeredModel init = desk_init(72);
    TrainConfig phsfl_cfg = desk_config(Mode::PHSFL);
    TrainConfig control = desk_config(Mode::HSFL);
    control.force_frozen_head = true;

    const TrainingTrace a = run_training(phsfl_cfg, ds, init);
    const TrainingTrace b = run_training(control, ds, init);
    CHECK(a.final_model.bit_equal(b.final_model));
}

TEST_CASE("hfl mode exchanges full models and trains everything") {
    const Dataset ds = small_dataset(81);
    TrainConfig cfg = desk_config(Mode::HFL);
    const LayeredModel init = desk_init(82);
    const TrainingTrace trace = run_training(cfg, ds, init);
    // every (edge round, client) window prices exactly phi_hfl
    const std::uint64_t per_sync = phi_hfl(init.total_params(), cfg.precision_bits);
    for (std::uint64_t w : trace.ledger.window_bits()) CHECK(w == per_sync);
    CHECK(trace.rounds.back().cum_comm_bits_phsfl == trace.rounds.back().cum_comm_bits_hfl);
    CHECK(trace.final_model.params[cfg.partition.head_start] !=
          init.params[cfg.partition.head_start]);
}

TEST_CASE("split-mode ledger stays within the per-round bound") {
    const Dataset ds = small_dataset(91);
    TrainConfig cfg = desk_config(Mode::PHSFL);
    const TrainingTrace trace = run_training(cfg, ds, desk_init(92));

    std::uint64_t max_du = 0;
    for (const auto& s : trace.shards) max_du = std::max<std::uint64_t>(max_du, s.size());
    OverheadParams p;
    p.batch_size = cfg.batch_size;
    p.minibatches = cfg.minibatches_per_epoch;
    p.cut_width = shape_numel(desk_cnn(3, 4).shape_at(cfg.partition.cut_after));
    p.client_params = split(desk_init(92), cfg.partition).client.total_params();
    p.total_params = desk_init(92).total_params();
    p.precision_bits = cfg.precision_bits;
    p.client_data_size = max_du;
    p.local_epochs = cfg.local_epochs;

    const CommCheckReport rep = measured_vs_formula(trace.ledger, p);
    CHECK(rep.windows ==
          cfg.global_rounds * cfg.edge_rounds * cfg.num_clients);
    CHECK(rep.within_bound);
}

TEST_CASE("metrics csv is byte-stable and carries the schema") {
    const Dataset ds = small_dataset(101);
    TrainConfig cfg = desk_config(Mode::PHSFL);
    cfg.global_rounds = 1;
    const TrainingTrace trace = run_training(cfg, ds, desk_init(102));
    write_metrics_csv(trace, cfg.mode, "orch_metrics_a.csv");
    write_metrics_csv(trace, cfg.mode, "orch_metrics_b.csv");
    const std::string a = slurp("orch_metrics_a.csv");
    CHECK(a == slurp("orch_metrics_b.csv"));
    CHECK(a.find("round,mode,mean_acc,std_acc,min_acc,max_acc,mean_loss,std_loss,"
                 "cum_comm_bits_phsfl,cum_comm_bits_hfl") == 0);
    CHECK(a.find("phsfl") != std::string::npos);
    std::filesystem::remove("orch_metrics_a.csv");
    std::filesystem::remove("orch_metrics_b.csv");
}

TEST_CASE("config validation rejects nonsense") {
    TrainConfig cfg = desk_config(Mode::PHSFL);
    cfg.num_clients = 1;  // fewer clients than edges
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = desk_config(Mode::PHSFL);
    cfg.lr = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = desk_config(Mode::PHSFL);
    cfg.global_rounds = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("mode names round-trip") {
    for (Mode m : {Mode::PHSFL, Mode::HSFL, Mode::HFL, Mode::Centralized})
        CHECK(mode_from_name(mode_name(m)) == m);
    CHECK_THROWS_AS(mode_from_name("fancy"), std::invalid_argument);
}
