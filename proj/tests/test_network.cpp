#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "gevit/certify.hpp"
#include "gevit/network.hpp"
#include "gevit/train.hpp"

using namespace gevit;

namespace {

ModelConfig small_config() {
    ModelConfig cfg;
    cfg.group = "c4";
    cfg.image_width = 6;
    cfg.image_height = 6;
    cfg.neighborhood = 3;
    cfg.embed_dim = 8;
    cfg.heads = 2;
    cfg.head_dim = 4;
    cfg.blocks = 1;
    cfg.mlp_hidden = 16;
    cfg.pe_hidden_width = 8;
    return cfg;
}

std::vector<float> rand_image(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(u(rng));
    return v;
}

}  // namespace

TEST_CASE("config validation catches bad settings") {
    ModelConfig cfg = small_config();
    cfg.neighborhood = 4;
    CHECK_FALSE(cfg.validate().empty());
    cfg = small_config();
    cfg.group = "x9";
    CHECK_FALSE(cfg.validate().empty());
    CHECK_THROWS(Model<double>(cfg, 1));
    CHECK(small_config().validate().empty());
}

TEST_CASE("parameter names are unique and construction is deterministic") {
    Model<double> a(small_config(), 7), b(small_config(), 7), c(small_config(), 8);
    std::set<std::string> names;
    for (auto& [name, t] : a.params()) CHECK(names.insert(name).second);
    auto pa = a.params(), pb = b.params(), pc = c.params();
    REQUIRE(pa.size() == pb.size());
    bool all_equal = true, differs_from_c = false;
    for (size_t i = 0; i < pa.size(); ++i) {
        if (pa[i].second.value() != pb[i].second.value()) all_equal = false;
        if (pa[i].second.value() != pc[i].second.value()) differs_from_c = true;
    }
    CHECK(all_equal);
    CHECK(differs_from_c);
}

TEST_CASE("forward shapes, determinism, and stage bounds") {
    ModelConfig cfg = small_config();
    Model<double> m(cfg, 3);
    std::mt19937_64 rng(1);
    auto img = rand_image(rng, 36);
    auto t = Tensor<double>::constant({36, 1}, std::vector<double>(img.begin(), img.end()));
    auto logits = m.forward(t);
    CHECK(logits.shape() == std::vector<int>{10});
    CHECK(m.forward(t).value() == logits.value());
    CHECK(m.features(t, 0).shape() == std::vector<int>{36, 4, 8});
    CHECK(m.features(t, 1).shape() == std::vector<int>{36, 4, 8});
    CHECK_THROWS(m.features(t, 2));
    CHECK_THROWS(m.features(t, -1));
    CHECK_THROWS(m.forward(Tensor<double>::constant({35, 1}, std::vector<double>(35, 0.0))));
}

TEST_CASE("global pooling is max over the group axis then spatial mean and max") {
    // positions {1,5} and {3,2}: fiber maxima are 5 and 3.
    auto x = Tensor<double>::constant({2, 2, 1}, {1.0, 5.0, 3.0, 2.0});
    auto pooled = global_pool(x);
    CHECK(pooled.shape() == std::vector<int>{2});
    CHECK(pooled.value()[0] == doctest::Approx((5.0 + 3.0) / 2));  // spatial mean
    CHECK(pooled.value()[1] == doctest::Approx(5.0));              // spatial max
}

TEST_CASE("model logits are invariant to exact rotations and torus shifts") {
    ModelConfig cfg = small_config();
    Model<double> m(cfg, 9);
    std::mt19937_64 rng(2);
    auto img = rand_image(rng, 36);
    auto logits = [&](const std::vector<float>& im) {
        return m.forward(Tensor<double>::constant({36, 1},
                                                  std::vector<double>(im.begin(), im.end())))
            .value();
    };
    auto base = logits(img);
    auto rot = rotate_image_quarter(img, 6, 6);
    FiniteGroup c1 = FiniteGroup::from_spec("c1");
    auto shifted = transform_planar(c1, c1.identity(), 2, 3, img, 6, 6, 1);
    for (size_t c = 0; c < base.size(); ++c) {
        CHECK(logits(rot)[c] == doctest::Approx(base[c]).epsilon(1e-10));
        CHECK(logits(shifted)[c] == doctest::Approx(base[c]).epsilon(1e-10));
    }
}

TEST_CASE("uniform logits give log C loss; loss is positive") {
    auto logits = Tensor<double>::constant({10}, std::vector<double>(10, 0.0));
    CHECK(classification_loss(logits, 7).item() == doctest::Approx(std::log(10.0)));
}

TEST_CASE("training is deterministic and reduces the loss on a small set") {
    ModelConfig cfg = small_config();
    cfg.image_width = cfg.image_height = 14;
    cfg.neighborhood = 5;
    Dataset base = synth_digits(48, 17, 14, 14);
    Dataset data = make_rotmnist(base, 18, 48, RotateMode::exact90);
    Dataset train, val;
    train.width = val.width = 14;
    train.height = val.height = 14;
    for (size_t i = 0; i < data.count(); ++i) {
        Dataset& d = i < 40 ? train : val;
        d.images.insert(d.images.end(), data.image(i), data.image(i) + 196);
        d.labels.push_back(data.labels[i]);
    }
    TrainOptions topt;
    topt.epochs = 2;
    topt.batch_size = 8;
    topt.adam.lr = 0.01;
    topt.adam.weight_decay = 0.0;
    topt.seed = 4;
    topt.log_steps = false;

    Model<float> m1(cfg, 5);
    auto r1 = train_model(m1, train, val, topt);
    REQUIRE(r1.step_losses.size() == 10);  // 5 batches x 2 epochs
    CHECK(r1.epochs.back().mean_loss < r1.epochs.front().mean_loss);

    Model<float> m2(cfg, 5);
    auto r2 = train_model(m2, train, val, topt);
    CHECK(r1.step_losses == r2.step_losses);  // bit-identical replay
    CHECK(r1.best_val_accuracy == r2.best_val_accuracy);
}

TEST_CASE("evaluate fills a consistent confusion matrix") {
    ModelConfig cfg = small_config();
    cfg.image_width = cfg.image_height = 8;
    Model<float> m(cfg, 1);
    Dataset data = synth_digits(30, 3, 8, 8);
    auto res = evaluate(m, data);
    CHECK(res.count == 30);
    size_t total = 0;
    for (int t = 0; t < 10; ++t) {
        size_t row = 0, want = 0;
        for (int p = 0; p < 10; ++p) row += res.confusion[t * 10 + p];
        for (size_t i = 0; i < data.count(); ++i)
            if (data.labels[i] == t) ++want;
        CHECK(row == want);
        total += row;
    }
    CHECK(total == 30);
    Dataset bad = synth_digits(5, 3, 14, 14);
    CHECK_THROWS(evaluate(m, bad));
}
