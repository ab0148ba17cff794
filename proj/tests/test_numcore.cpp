#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "corolla/num/checkpoint.hpp"
#include "corolla/num/gradcheck.hpp"
#include "corolla/num/optim.hpp"
#include "corolla/num/ops.hpp"

using namespace corolla;
using namespace corolla::num;

namespace {

Tensor<double> rand_t(std::vector<size_t> shape, Pcg32& rng, double lo = -1.0,
                      double hi = 1.0) {
    return random_uniform<double>(std::move(shape), lo, hi, rng);
}

}  // namespace

TEST_CASE("matmul forward values") {
    auto eye = Var<double>::leaf(
        Tensor<double>({2, 2}, {1.0, 0.0, 0.0, 1.0}));
    auto x = Var<double>::leaf(Tensor<double>({2, 2}, {3.0, -1.0, 2.0, 5.0}));
    auto y = matmul(eye, x);
    CHECK(y.value().data == x.value().data);

    auto a = Var<double>::leaf(Tensor<double>({2, 2}, {1.0, 2.0, 3.0, 4.0}));
    auto b = Var<double>::leaf(Tensor<double>({2, 1}, {5.0, 6.0}));
    auto c = matmul(a, b);
    CHECK(c.value().at2(0, 0) == doctest::Approx(17.0).epsilon(1e-15));
    CHECK(c.value().at2(1, 0) == doctest::Approx(39.0).epsilon(1e-15));

    CHECK_THROWS_AS(matmul(a, Var<double>::leaf(Tensor<double>({3, 2}))), Error);
}

TEST_CASE("matmul gradient vs finite differences") {
    Pcg32 rng(11, 0);
    Tensor<double> b0 = rand_t({3, 2}, rng);
    auto f = [&](const Var<double>& a) {
        return sum(matmul(a, Var<double>::leaf(b0)));
    };
    auto rep = grad_check<double>(f, rand_t({2, 3}, rng), 1e-5, 1e-6);
    CHECK(rep.pass);
}

TEST_CASE("conv2d identity and box kernels") {
    Pcg32 rng(12, 0);
    Tensor<double> x = rand_t({2, 4, 5}, rng, 0.0, 1.0);
    // 1x1 kernel of value 1 per channel-pair diagonal acts as identity.
    Tensor<double> k({2, 2, 1, 1});
    k.at4(0, 0, 0, 0) = 1.0;
    k.at4(1, 1, 0, 0) = 1.0;
    auto y = conv2d(Var<double>::leaf(x), Var<double>::leaf(k));
    CHECK(y.value().data == x.data);

    Tensor<double> ones({1, 6, 6}, 0.7);
    Tensor<double> box({1, 1, 3, 3}, 1.0);
    auto z = conv2d(Var<double>::leaf(ones), Var<double>::leaf(box));
    for (double v : z.value().data)
        CHECK(v == doctest::Approx(0.7 * 9).epsilon(1e-12));
}

TEST_CASE("conv2d matches a direct loop oracle") {
    Pcg32 rng(13, 0);
    Tensor<double> x = rand_t({1, 4, 4}, rng);
    Tensor<double> k = rand_t({1, 1, 2, 2}, rng);
    auto y = conv2d(Var<double>::leaf(x), Var<double>::leaf(k), 1);
    for (size_t i = 0; i < 3; ++i)
        for (size_t j = 0; j < 3; ++j) {
            double acc = 0;
            for (size_t p = 0; p < 2; ++p)
                for (size_t q = 0; q < 2; ++q)
                    acc += x.at3(0, i + p, j + q) * k.at4(0, 0, p, q);
            CHECK(y.value().at3(0, i, j) == doctest::Approx(acc).epsilon(1e-12));
        }

    auto fx = [&](const Var<double>& v) {
        return sum(conv2d(v, Var<double>::leaf(k)));
    };
    CHECK(grad_check<double>(fx, x, 1e-5, 1e-6).pass);
    auto fk = [&](const Var<double>& v) {
        return sum(conv2d(Var<double>::leaf(x), v));
    };
    CHECK(grad_check<double>(fk, k, 1e-5, 1e-6).pass);
}

TEST_CASE("conv2d stride reduces output dims") {
    Pcg32 rng(14, 0);
    Tensor<double> x = rand_t({1, 5, 5}, rng);
    Tensor<double> k = rand_t({1, 1, 2, 2}, rng);
    auto y = conv2d(Var<double>::leaf(x), Var<double>::leaf(k), 2);
    CHECK(y.value().shape == std::vector<size_t>{1, 2, 2});
    auto f = [&](const Var<double>& v) {
        return sum(conv2d(v, Var<double>::leaf(k), 2));
    };
    CHECK(grad_check<double>(f, x, 1e-5, 1e-6).pass);
}

TEST_CASE("relu and avgpool basics") {
    auto x = Var<double>::leaf(Tensor<double>({3}, {-1.0, 0.0, 2.0}));
    auto y = relu(x);
    CHECK(y.value().data == std::vector<double>{0.0, 0.0, 2.0});

    Tensor<double> c({1, 4, 4}, 0.3);
    auto p = avgpool(Var<double>::leaf(c), 2, 2);
    CHECK(p.value().shape == std::vector<size_t>{1, 2, 2});
    for (double v : p.value().data) CHECK(v == doctest::Approx(0.3));

    // Trailing rows/cols that do not fill a window are dropped.
    Tensor<double> odd({1, 5, 5}, 1.0);
    auto q = avgpool(Var<double>::leaf(odd), 2, 2);
    CHECK(q.value().shape == std::vector<size_t>{1, 2, 2});
}

TEST_CASE("concat block identity and slice inverse") {
    Pcg32 rng(15, 0);
    Tensor<double> a = rand_t({2, 3}, rng);
    Tensor<double> b = rand_t({2, 5}, rng);
    auto cat = concat<double>({Var<double>::leaf(a), Var<double>::leaf(b)}, 1);
    CHECK(cat.value().shape == std::vector<size_t>{2, 8});
    for (size_t i = 0; i < 2; ++i) {
        for (size_t j = 0; j < 3; ++j)
            CHECK(cat.value().at2(i, j) == a.at2(i, j));
        for (size_t j = 0; j < 5; ++j)
            CHECK(cat.value().at2(i, 3 + j) == b.at2(i, j));
    }
    auto back = slice(cat, 1, 0, 3);
    CHECK(back.value().data == a.data);
    auto back2 = slice(cat, 1, 3, 5);
    CHECK(back2.value().data == b.data);
}

TEST_CASE("l2_normalize values and degenerate vector") {
    auto v = Var<double>::leaf(Tensor<double>({2}, {3.0, 4.0}));
    auto n = l2_normalize(v, 0);
    CHECK(n.value()[0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(n.value()[1] == doctest::Approx(0.8).epsilon(1e-15));

    auto z = l2_normalize(Var<double>::leaf(Tensor<double>({3})), 0);
    for (double x : z.value().data) CHECK(x == 0.0);

    Pcg32 rng(16, 0);
    auto f = [](const Var<double>& x) { return sum(l2_normalize(x, 0)); };
    CHECK(grad_check<double>(f, rand_t({6}, rng), 1e-6, 1e-6).pass);
    auto f2 = [](const Var<double>& x) { return sum(l2_normalize(x, 1)); };
    CHECK(grad_check<double>(f2, rand_t({3, 4}, rng), 1e-6, 1e-6).pass);
}

TEST_CASE("logsumexp closed forms") {
    auto two_zeros = logsumexp(Var<double>::leaf(Tensor<double>({2})));
    CHECK(two_zeros.value()[0] == doctest::Approx(std::log(2.0)).epsilon(1e-15));

    auto big = logsumexp(
        Var<double>::leaf(Tensor<double>({2}, {1000.0, 1000.0})));
    CHECK(big.value()[0] ==
          doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-15));

    auto single = logsumexp(Var<double>::leaf(Tensor<double>({1}, {3.25})));
    CHECK(single.value()[0] == 3.25);

    Pcg32 rng(17, 0);
    auto f = [](const Var<double>& x) { return logsumexp(x); };
    CHECK(grad_check<double>(f, rand_t({7}, rng, -3, 3), 1e-6, 1e-6).pass);
}

TEST_CASE("backward of a diamond graph accumulates both paths") {
    auto x = Var<double>::leaf(Tensor<double>({1}, {1.5}), true);
    auto a = scale(x, 2.0);
    auto b = scale(x, 3.0);
    auto y = add(a, b);  // y = 5x
    backward(y);
    CHECK(x.grad()[0] == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("backward of independent subgraph sums is additive") {
    Pcg32 rng(18, 0);
    Tensor<double> x0 = rand_t({5}, rng);

    auto xa = Var<double>::leaf(x0, true);
    auto ya = sum(mul(xa, xa));
    backward(ya);
    Tensor<double> ga = xa.grad();

    auto xb = Var<double>::leaf(x0, true);
    auto yb = logsumexp(xb);
    backward(yb);
    Tensor<double> gb = xb.grad();

    auto xc = Var<double>::leaf(x0, true);
    auto yc = add(sum(mul(xc, xc)), logsumexp(xc));
    backward(yc);
    for (size_t i = 0; i < x0.numel(); ++i)
        CHECK(xc.grad()[i] ==
              doctest::Approx(ga.data[i] + gb.data[i]).epsilon(1e-12));
}

TEST_CASE("grad_check flags a wrong gradient") {
    // Deliberately wrong backward: y = sum(2x) but gradient reported as 1.
    auto bad = [](const Var<double>& x) {
        Tensor<double> out = x.value();
        for (auto& v : out.data) v *= 2.0;
        auto y = make_op<double>("bad", std::move(out), {x}, [](Node<double>& n) {
            n.parents[0]->accumulate(Tensor<double>(n.parents[0]->value.shape,
                                                    n.grad[0]));
        });
        return sum(y);
    };
    Pcg32 rng(19, 0);
    auto rep = grad_check<double>(bad, rand_t({4}, rng), 1e-5, 1e-5);
    CHECK_FALSE(rep.pass);
}

TEST_CASE("adam zero gradient leaves parameters unchanged") {
    auto p = Var<double>::leaf(Tensor<double>({3}, {1.0, -2.0, 0.5}), true);
    std::vector<Var<double>> params{p};
    auto st = AdamState<double>::init(params);
    adam_step(params, st, 0.1);
    CHECK(st.step == 1);
    CHECK(p.value().data == std::vector<double>{1.0, -2.0, 0.5});
}

TEST_CASE("adam first step with unit gradient moves by ~lr") {
    auto p = Var<double>::leaf(Tensor<double>({1}, {2.0}), true);
    p.node()->accumulate(Tensor<double>({1}, {1.0}));
    std::vector<Var<double>> params{p};
    auto st = AdamState<double>::init(params);
    adam_step(params, st, 0.1);
    // bias-corrected m/sqrt(v) = 1, so the move is lr/(1 + eps) ~ lr
    CHECK(p.value()[0] == doctest::Approx(2.0 - 0.1).epsilon(1e-7));
}

TEST_CASE("adam updates are deterministic across identical copies") {
    Pcg32 rng(20, 0);
    Tensor<double> w = rand_t({4}, rng);
    Tensor<double> g = rand_t({4}, rng);
    auto run = [&] {
        auto p = Var<double>::leaf(w, true);
        p.node()->accumulate(g);
        std::vector<Var<double>> params{p};
        auto st = AdamState<double>::init(params);
        adam_step(params, st, 0.01);
        return p.value().data;
    };
    CHECK(run() == run());
}

TEST_CASE("cosine schedule endpoints") {
    CHECK(cosine_lr(0, 100, 1e-3) == doctest::Approx(1e-3).epsilon(1e-15));
    CHECK(cosine_lr(100, 100, 1e-3) == doctest::Approx(0.0).epsilon(1e-18));
    CHECK(cosine_lr(50, 100, 1e-3) == doctest::Approx(5e-4).epsilon(1e-12));
    CHECK_THROWS_AS(cosine_lr(0, 0, 1e-3), Error);
}

TEST_CASE("checkpoint round-trips bit-exactly") {
    Pcg32 rng(21, 0);
    Checkpoint ck;
    Tensor<float> tf = random_uniform<float>({3, 4}, -1.0f, 1.0f, rng);
    Tensor<double> td = rand_t({2, 2, 2}, rng);
    ck.add("weights", tf);
    ck.add("moments", td);
    ck.meta["note"] = "fixture";
    auto bytes = ck.serialize();

    auto back = Checkpoint::deserialize(bytes);
    CHECK(back.get<float>("weights").data == tf.data);
    CHECK(back.get<double>("moments").data == td.data);
    CHECK(back.meta["note"] == "fixture");
    CHECK(back.serialize() == bytes);

    CHECK_THROWS_AS(back.get<double>("weights"), Error);  // dtype mismatch
    CHECK_THROWS_AS(back.get<float>("absent"), Error);

    auto path = std::filesystem::temp_directory_path() / "corolla_ckpt_test.bin";
    ck.save(path.string());
    auto loaded = Checkpoint::load(path.string());
    CHECK(loaded.serialize() == bytes);
    std::filesystem::remove(path);

    std::vector<std::uint8_t> bad = bytes;
    bad[0] ^= 0xff;
    CHECK_THROWS_AS(Checkpoint::deserialize(bad), Error);
    std::vector<std::uint8_t> truncated(bytes.begin(), bytes.end() - 8);
    CHECK_THROWS_AS(Checkpoint::deserialize(truncated), Error);
}

TEST_CASE("debug checks trap non-finite results") {
    debug_checks() = true;
    auto x = Var<double>::leaf(Tensor<double>({1}, {1e308}));
    CHECK_THROWS_AS(mul(x, x), Error);
    debug_checks() = false;
    CHECK_NOTHROW(mul(x, x));
}

TEST_CASE("forward ops are bit-deterministic") {
    Pcg32 rng(22, 0);
    Tensor<double> a = rand_t({4, 4}, rng);
    Tensor<double> b = rand_t({4, 4}, rng);
    auto once = [&] {
        auto y = sum(relu(matmul(Var<double>::leaf(a), Var<double>::leaf(b))));
        return y.value()[0];
    };
    double v1 = once(), v2 = once();
    CHECK(v1 == v2);
}
