#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "phsfl/checkpoint.hpp"
#include "phsfl/network.hpp"
#include "test_util.hpp"

using namespace phsfl;
using namespace phsfl::testutil;

namespace {

LayeredModel tiny_dense(std::size_t in, std::size_t out) {
    LayeredModel m;
    m.input_shape = {in};
    m.layers = {LayerSpec::dense(in, out)};
    m.params = {std::vector<double>(in * out + out, 0.0)};
    return m;
}

}  // namespace

TEST_CASE("dense forward: identity weights pass the input through") {
    LayeredModel m = tiny_dense(2, 2);
    m.params[0] = {1, 0, 0, 1, 0, 0};  // W = I, b = 0
    const Tensor out = forward(m, LayerRange::full(m), Tensor({1, 2}, {3, 4}));
    CHECK(out.data[0] == 3.0);
    CHECK(out.data[1] == 4.0);
}

TEST_CASE("relu forward by definition") {
    LayeredModel m;
    m.input_shape = {3};
    m.layers = {LayerSpec::relu()};
    m.params = {{}};
    const Tensor out = forward(m, LayerRange::full(m), Tensor({1, 3}, {-1, 0, 2}));
    CHECK(out.data == std::vector<double>{0, 0, 2});
}

TEST_CASE("maxpool on a single 2x2 window") {
    LayeredModel m;
    m.input_shape = {1, 2, 2};
    m.layers = {LayerSpec::maxpool2d()};
    m.params = {{}};
    const Tensor out = forward(m, LayerRange::full(m), Tensor({1, 1, 2, 2}, {1, 5, 3, 2}));
    CHECK(out.size() == 1);
    CHECK(out.data[0] == 5.0);
}

TEST_CASE("forward rejects a shape mismatch naming the layer") {
    LayeredModel m = tiny_dense(4, 2);
    CHECK_THROWS_WITH_AS(forward(m, LayerRange::full(m), Tensor({1, 3})),
                         doctest::Contains("layer 0"), std::invalid_argument);
}

TEST_CASE("cross entropy: uniform softmax gives ln C") {
    // batch of 2 keeps the mean exact: (a + a) / 2 == a
    const Tensor logits({2, 2}, {0, 0, 0, 0});
    CHECK(cross_entropy(logits, {0, 1}) == std::log(2.0));

    const Tensor ten({2, 10});
    CHECK(cross_entropy(ten, {3, 7}) == std::log(10.0));
}

TEST_CASE("cross entropy: strongly correct logits drive the loss to zero") {
    const Tensor logits({1, 3}, {50.0, 0.0, 0.0});
    CHECK(cross_entropy(logits, {0}) < 1e-6);
}

TEST_CASE("cross entropy: hand-evaluated softmax") {
    const Tensor logits({1, 2}, {1.0, 0.0});
    CHECK(cross_entropy(logits, {0}) == doctest::Approx(0.3132616875182228).epsilon(1e-12));
}

TEST_CASE("cross entropy rejects bad labels and non-finite logits") {
    const Tensor logits({1, 2}, {0.0, 0.0});
    CHECK_THROWS_AS(cross_entropy(logits, {2}), std::invalid_argument);
    CHECK_THROWS_AS(cross_entropy(logits, {-1}), std::invalid_argument);
    const Tensor bad({1, 2}, {std::nan(""), 0.0});
    CHECK_THROWS_AS(cross_entropy(bad, {0}), std::invalid_argument);
}

TEST_CASE("backward: zero upstream gives zero gradients") {
    LayeredModel m = init_model(paper_cnn_8x8(1, 3), 5);
    const Tensor x = random_tensor({2, 1, 8, 8}, 9);
    Tape tape;
    const Tensor out = forward(m, LayerRange::full(m), x, &tape);
    const GradientSet g = backward(m, LayerRange::full(m), tape, Tensor(out.shape));
    for (const auto& blk : g.blocks)
        for (double v : blk) CHECK(v == 0.0);
    for (double v : g.input_gradient.data) CHECK(v == 0.0);
}

TEST_CASE("backward: hand chain rule through Dense(1,1)") {
    LayeredModel m = tiny_dense(1, 1);
    m.params[0] = {2.0, 0.0};  // w=2, b=0
    Tape tape;
    const Tensor out = forward(m, LayerRange::full(m), Tensor({1, 1}, {3.0}), &tape);
    CHECK(out.data[0] == 6.0);
    // squared-error target 0 seeds dL/dy = 2*y = 12; dL/dw = 12*3 = 36
    const GradientSet g = backward(m, LayerRange::full(m), tape, Tensor({1, 1}, {12.0}));
    CHECK(g.blocks[0][0] == 36.0);
    CHECK(g.blocks[0][1] == 12.0);
    CHECK(g.input_gradient.data[0] == 24.0);  // dL/dx = 12*w
}

TEST_CASE("backward rejects a tape from a different range") {
    LayeredModel m = init_model(paper_cnn_8x8(1, 3), 5);
    const Tensor x = random_tensor({1, 1, 8, 8}, 9);
    Tape tape;
    forward(m, {0, 3}, x, &tape);
    CHECK_THROWS_AS(backward(m, {0, 4}, tape, Tensor({1, 64, 3, 3})), std::invalid_argument);
}

TEST_CASE("gradients match central finite differences for every layer kind") {
    // conv, relu, pool, flatten, dense all sit in this stack
    LayeredModel m = init_model(paper_cnn_8x8(2, 4), 21);
    const Tensor x = random_tensor({2, 2, 8, 8}, 22);
    const auto labels = random_labels(2, 4, 23);

    Tape tape;
    Tensor dlogits;
    cross_entropy_grad(forward(m, LayerRange::full(m), x, &tape), labels, dlogits);
    const GradientSet g = backward(m, LayerRange::full(m), tape, dlogits);

    for (std::size_t li = 0; li < m.layer_count(); ++li) {
        if (m.params[li].empty()) continue;
        const std::size_t stride = std::max<std::size_t>(1, m.params[li].size() / 25);
        for (std::size_t j = 0; j < m.params[li].size(); j += stride) {
            const double fd = fd_param_grad(m, x, labels, li, j);
            CHECK(rel_err(fd, g.blocks[li][j]) <= 1e-4);
        }
    }
    // input gradient against the same oracle
    for (std::size_t j = 0; j < x.size(); j += 13) {
        const double fd = fd_input_grad(m, x, labels, j);
        CHECK(rel_err(fd, g.input_gradient.data[j]) <= 1e-4);
    }
}

TEST_CASE("forward/backward compose across any interior boundary") {
    LayeredModel m = init_model(paper_cnn_8x8(2, 4), 31);
    const Tensor x = random_tensor({3, 2, 8, 8}, 32);
    const auto labels = random_labels(3, 4, 33);
    const LayerRange full = LayerRange::full(m);

    Tape whole_tape;
    Tensor dlogits;
    const double loss = cross_entropy_grad(forward(m, full, x, &whole_tape), labels, dlogits);
    const GradientSet whole = backward(m, full, whole_tape, dlogits);

    for (std::size_t c = 1; c < m.layer_count(); ++c) {
        Tape front_tape, back_tape;
        const Tensor mid = forward(m, {0, c}, x, &front_tape);
        const Tensor out = forward(m, {c, m.layer_count()}, mid, &back_tape);
        Tensor dl;
        CHECK(cross_entropy_grad(out, labels, dl) == loss);
        const GradientSet back = backward(m, {c, m.layer_count()}, back_tape, dl);
        const GradientSet front = backward(m, {0, c}, front_tape, back.input_gradient);
        for (std::size_t li = 0; li < m.layer_count(); ++li) {
            const auto& split_blk = li < c ? front.blocks[li] : back.blocks[li];
            REQUIRE(split_blk.size() == whole.blocks[li].size());
            for (std::size_t j = 0; j < split_blk.size(); ++j)
                CHECK(std::abs(split_blk[j] - whole.blocks[li][j]) <= 1e-9);
        }
    }
}

TEST_CASE("sgd: eta 0 leaves the model bit-identical") {
    LayeredModel m = init_model(paper_cnn_8x8(1, 3), 41);
    const LayeredModel before = m;
    const Tensor x = random_tensor({2, 1, 8, 8}, 42);
    Tape tape;
    Tensor dlogits;
    cross_entropy_grad(forward(m, LayerRange::full(m), x, &tape), random_labels(2, 3, 43),
                       dlogits);
    const GradientSet g = backward(m, LayerRange::full(m), tape, dlogits);
    sgd_step(m, g, 0.0);
    CHECK(m.bit_equal(before));
}

TEST_CASE("sgd: direct arithmetic on a scalar parameter") {
    LayeredModel m = tiny_dense(1, 1);
    m.params[0] = {1.0, 0.0};
    GradientSet g;
    g.blocks = {{0.5, 0.0}};
    sgd_step(m, g, 0.1);
    CHECK(m.params[0][0] == doctest::Approx(0.95).epsilon(1e-15));
}

TEST_CASE("sgd: frozen layers keep their bits, full mask is the identity") {
    LayeredModel m = init_model(paper_cnn_8x8(1, 3), 44);
    const LayeredModel before = m;
    GradientSet g;
    g.blocks.resize(m.layer_count());
    for (std::size_t li = 0; li < m.layer_count(); ++li)
        g.blocks[li].assign(m.params[li].size(), 1.0);

    const std::size_t head = m.layer_count() - 1;
    std::vector<bool> freeze_head(m.layer_count(), false);
    freeze_head[head] = true;
    sgd_step(m, g, 0.1, &freeze_head);
    CHECK(m.params[head] == before.params[head]);
    CHECK(m.params[0] != before.params[0]);

    LayeredModel m2 = before;
    const std::vector<bool> all(m.layer_count(), true);
    sgd_step(m2, g, 0.1, &all);
    CHECK(m2.bit_equal(before));
}

TEST_CASE("sgd rejects non-finite gradients naming the layer") {
    LayeredModel m = tiny_dense(1, 1);
    GradientSet g;
    g.blocks = {{std::nan(""), 0.0}};
    CHECK_THROWS_WITH_AS(sgd_step(m, g, 0.1), doctest::Contains("layer 0"),
                         std::invalid_argument);
}

TEST_CASE("init: deterministic per seed, fan-in bounded") {
    const LayeredModel arch = paper_cnn_8x8(3, 10);
    const LayeredModel a = init_model(arch, 7);
    const LayeredModel b = init_model(arch, 7);
    const LayeredModel c = init_model(arch, 8);
    CHECK(a.bit_equal(b));
    CHECK_FALSE(a.bit_equal(c));

    // Dense(128,256) weights live in layer 7; bound is sqrt(6/128)
    const double bound = std::sqrt(6.0 / 128.0);
    const LayerSpec& spec = a.layers[7];
    REQUIRE(spec.kind == LayerKind::Dense);
    for (std::size_t j = 0; j + spec.out < a.params[7].size(); ++j)
        CHECK(std::abs(a.params[7][j]) <= bound);
}

TEST_CASE("model structural invariants: Z equals the per-layer sum") {
    const LayeredModel m = paper_cnn(3, 10);
    std::size_t z = 0;
    for (const auto& spec : m.layers) z += spec.param_count();
    CHECK(m.total_params() == z);
    // the full-scale stack flattens 128*2*2 = 512 into the first FC
    CHECK(m.shape_at(8) == Shape{512});
    CHECK(m.shape_at(m.layer_count()) == Shape{10});
}

TEST_CASE("checkpoint round-trip is bit-exact") {
    const LayeredModel m = init_model(paper_cnn_8x8(3, 10), 99);
    const std::string path = "nn_core_ckpt_test.phsfl";
    save_model(m, path);
    const LayeredModel back = load_model(path);
    CHECK(back.bit_equal(m));
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint rejects a bad magic") {
    const std::string path = "nn_core_ckpt_bad.phsfl";
    {
        std::FILE* f = std::fopen(path.c_str(), "wb");
        std::fputs("NOTPHSFL900000000000", f);
        std::fclose(f);
    }
    CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("magic"), std::runtime_error);
    std::filesystem::remove(path);
}
