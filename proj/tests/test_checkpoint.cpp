#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "gevit/checkpoint.hpp"
#include "gevit/network.hpp"

using namespace gevit;

namespace {

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.group = "c4";
    cfg.image_width = cfg.image_height = 6;
    cfg.neighborhood = 3;
    cfg.embed_dim = 6;
    cfg.heads = 2;
    cfg.head_dim = 3;
    cfg.blocks = 1;
    cfg.mlp_hidden = 8;
    cfg.pe_hidden_width = 6;
    return cfg;
}

}  // namespace

TEST_CASE("checkpoint round trip is exact") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "gevit_ckpt_test";
    fs::create_directories(dir);
    std::string path = (dir / "a.ckpt").string();

    Model<float> m(tiny_config(), 5);
    auto records = snapshot_params(m.params());
    save_checkpoint(path, records);
    auto back = load_checkpoint(path);
    REQUIRE(back.size() == records.size());
    for (size_t i = 0; i < records.size(); ++i) {
        CHECK(back[i].name == records[i].name);
        CHECK(back[i].shape == records[i].shape);
        CHECK(back[i].data == records[i].data);  // f32 payload is bit-exact
    }

    // restoring into a differently-seeded model reproduces the source logits
    Model<float> other(tiny_config(), 99);
    auto params = other.params();
    restore_params(params, back);
    std::vector<float> img(36, 0.25f);
    for (int i = 0; i < 36; i += 3) img[i] = 0.9f;
    auto t = Tensor<float>::constant({36, 1}, std::vector<float>(img.begin(), img.end()));
    CHECK(other.forward(t).value() == m.forward(t).value());
    fs::remove_all(dir);
}

TEST_CASE("mismatched and malformed checkpoints are rejected by name") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "gevit_ckpt_test2";
    fs::create_directories(dir);
    std::string path = (dir / "b.ckpt").string();

    Model<float> m(tiny_config(), 5);
    auto records = snapshot_params(m.params());

    auto missing = records;
    missing.erase(missing.begin());  // drop embed.w
    auto params = m.params();
    CHECK_THROWS_WITH_AS(restore_params(params, missing),
                         doctest::Contains("embed.w"), std::runtime_error);

    auto wrong = records;
    wrong[0].shape = {2, 2};
    wrong[0].data.assign(4, 0.0f);
    CHECK_THROWS_AS(restore_params(params, wrong), std::runtime_error);

    {
        std::ofstream bad(path, std::ios::binary);
        bad << "NOPE this is not a checkpoint";
    }
    CHECK_THROWS(load_checkpoint(path));
    CHECK_THROWS(load_checkpoint((dir / "absent.ckpt").string()));

    // truncated file
    save_checkpoint(path, records);
    auto size = fs::file_size(path);
    fs::resize_file(path, size / 2);
    CHECK_THROWS(load_checkpoint(path));
    fs::remove_all(dir);
}
