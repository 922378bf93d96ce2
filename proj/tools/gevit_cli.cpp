// Command-line harness: equivariance certification, error maps, training
// and evaluation for the group-equivariant vision transformer.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gevit/certify.hpp"
#include "gevit/checkpoint.hpp"
#include "gevit/config.hpp"
#include "gevit/data.hpp"
#include "gevit/network.hpp"
#include "gevit/train.hpp"

namespace fs = std::filesystem;
using namespace gevit;

namespace {

struct CommonArgs {
    std::string config_path;
    uint64_t seed = 0;
    std::string precision = "f32";
    std::string group;
    int neighborhood = 0;
    std::string pe_variant;
    std::string boundary;
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
    cmd->add_option("--config", a.config_path, "key=value model config file");
    cmd->add_option("--seed", a.seed, "random seed");
    cmd->add_option("--precision", a.precision, "f32 or f64")
        ->check(CLI::IsMember({"f32", "f64"}));
    cmd->add_option("--group", a.group, "point group")
        ->check(CLI::IsMember({"c1", "c4", "c8", "c12", "c16", "d4", "d8"}));
    cmd->add_option("--neighborhood", a.neighborhood, "odd attention window size");
    cmd->add_option("--pe-variant", a.pe_variant, "positional encoding variant")
        ->check(CLI::IsMember({"gevit", "baseline"}));
    cmd->add_option("--boundary", a.boundary, "torus or clamp")
        ->check(CLI::IsMember({"torus", "clamp"}));
    cmd->add_option("--out", a.out_dir, "output directory");
}

ModelConfig resolve_config(const CommonArgs& a) {
    ModelConfig cfg;
    if (!a.config_path.empty()) cfg = apply_config(cfg, parse_config_file(a.config_path));
    if (!a.group.empty()) cfg.group = a.group;
    if (a.neighborhood > 0) cfg.neighborhood = a.neighborhood;
    if (!a.pe_variant.empty())
        cfg.pe_variant = a.pe_variant == "baseline" ? PeVariant::baseline : PeVariant::gevit;
    if (!a.boundary.empty()) cfg.boundary = a.boundary == "clamp" ? Boundary::clamp : Boundary::torus;
    auto bad = cfg.validate();
    if (!bad.empty()) {
        std::string msg = "invalid configuration:";
        for (auto& b : bad) msg += "\n  - " + b;
        throw std::runtime_error(msg);
    }
    return cfg;
}

void ensure_out(const std::string& dir) {
    if (!dir.empty()) fs::create_directories(dir);
}

// Self-contained rotated-digit corpus (procedural glyph renders with a
// uniform multiple-of-90 rotation per image).
Dataset build_dataset(const std::string& data_dir, const std::string& split, uint64_t seed,
                      size_t count, int width, int height) {
    if (!data_dir.empty()) {
        return load_idx(data_dir + "/" + split + "-images-idx3-ubyte",
                        data_dir + "/" + split + "-labels-idx1-ubyte");
    }
    uint64_t pool_seed = seed ^ (split == "train" ? 0x7261696eull : 0x74657374ull);
    Dataset base = synth_digits(count, pool_seed, width, height);
    return make_rotmnist(base, pool_seed + 1, count, RotateMode::exact90);
}

int cmd_check(const CommonArgs& a) {
    ModelConfig cfg = resolve_config(a);
    CertOptions copt;
    copt.group = cfg.group;
    copt.neighborhood = std::min(cfg.neighborhood, 3);  // the suite's grids are small
    copt.pe_variant = cfg.pe_variant;
    copt.seed = a.seed + 7;
    CertReport rep = run_cert_suite(copt);
    std::cout << rep.to_text();
    if (!a.out_dir.empty()) {
        ensure_out(a.out_dir);
        std::ofstream(a.out_dir + "/report.txt") << rep.to_text();
        std::ofstream(a.out_dir + "/report.csv") << rep.to_csv();
    }
    return rep.all_pass() ? 0 : 1;
}

std::vector<float> load_pgm(const std::string& path, int& w, int& h) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open image " + path);
    std::string magic;
    int maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (magic != "P5" || maxval <= 0 || maxval > 255)
        throw std::runtime_error(path + " is not an 8-bit P5 PGM");
    in.get();
    std::vector<float> img(static_cast<size_t>(w) * h);
    for (auto& v : img) {
        int c = in.get();
        if (c < 0) throw std::runtime_error(path + " is truncated");
        v = static_cast<float>(c) / static_cast<float>(maxval);
    }
    return img;
}

template <class T>
int errormap_impl(const CommonArgs& a, const std::string& checkpoint, const std::string& image_path,
                  int turns, int stage) {
    ModelConfig cfg = resolve_config(a);
    std::vector<float> img;
    if (!image_path.empty()) {
        int w = 0, h = 0;
        img = load_pgm(image_path, w, h);
        if (w != cfg.image_width || h != cfg.image_height)
            throw std::runtime_error("image is " + std::to_string(w) + "x" + std::to_string(h) +
                                     ", model expects " + std::to_string(cfg.image_width) + "x" +
                                     std::to_string(cfg.image_height));
    } else {
        Dataset d = synth_digits(1, a.seed + 11, cfg.image_width, cfg.image_height);
        if (d.width != cfg.image_width || d.height != cfg.image_height)
            throw std::runtime_error("synthetic image size does not match the model config");
        img.assign(d.image(0), d.image(0) + d.width * d.height);
    }
    Model<T> model(cfg, a.seed);
    if (!checkpoint.empty()) {
        auto params = model.params();
        restore_params(params, load_checkpoint(checkpoint));
    } else {
        // Fresh encoders are the zero map; give the positional encoders
        // weight so the map is informative without a checkpoint.
        std::mt19937_64 rng(a.seed + 13);
        std::uniform_real_distribution<double> u(-1.5, 1.5);
        for (auto& [name, t] : model.params())
            if (name.find(".pe.w2") != std::string::npos ||
                name.find(".pe.b2") != std::string::npos)
                for (auto& v : t.mutable_value()) v = static_cast<T>(u(rng));
    }
    ErrorMapResult res = compute_error_map(model, img, turns, stage);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "layer stage %d, rotation %d deg\n", stage, 90 * turns);
    std::cout << buf;
    std::snprintf(buf, sizeof(buf), "average abs error %.6e (max %.6e)\n", res.avg_abs_err,
                  res.max_abs_err);
    std::cout << buf;
    if (!a.out_dir.empty()) {
        ensure_out(a.out_dir);
        write_error_csv(a.out_dir + "/errormap.csv", res);
        int P = res.width * res.height;
        std::vector<double> plane(P);
        for (int k = 0; k < res.group_order; ++k)
            for (int c = 0; c < res.channels; ++c) {
                for (int i = 0; i < P; ++i)
                    plane[i] =
                        res.error[(static_cast<size_t>(i) * res.group_order + k) * res.channels + c];
                std::snprintf(buf, sizeof(buf), "/errormap_g%d_c%d.pgm", k, c);
                write_pgm(a.out_dir + buf, res.width, res.height, plane);
            }
        std::cout << "wrote " << a.out_dir << "/errormap.csv and "
                  << res.group_order * res.channels << " PGM maps\n";
    }
    return 0;
}

int cmd_train(const CommonArgs& a, const std::string& data_dir, int epochs, int batch, double lr,
              double wd, double dropout, size_t train_count, size_t val_count, double target_acc) {
    CommonArgs args = a;
    ModelConfig cfg = resolve_config(args);
    if (dropout >= 0) {
        cfg.attn_dropout = dropout;
        cfg.value_dropout = dropout;
    }
    Dataset pool = build_dataset(data_dir, "train", a.seed, train_count + val_count,
                                 cfg.image_width, cfg.image_height);
    if (pool.count() < train_count + val_count)
        throw std::runtime_error("dataset has only " + std::to_string(pool.count()) + " images");
    Dataset train_set, val_set;
    train_set.width = val_set.width = pool.width;
    train_set.height = val_set.height = pool.height;
    size_t px = static_cast<size_t>(pool.width) * pool.height;
    train_set.images.assign(pool.images.begin(), pool.images.begin() + train_count * px);
    train_set.labels.assign(pool.labels.begin(), pool.labels.begin() + train_count);
    val_set.images.assign(pool.images.begin() + train_count * px,
                          pool.images.begin() + (train_count + val_count) * px);
    val_set.labels.assign(pool.labels.begin() + train_count,
                          pool.labels.begin() + train_count + val_count);
    cfg.image_width = pool.width;
    cfg.image_height = pool.height;

    Model<float> model(cfg, a.seed);
    TrainOptions topt;
    topt.epochs = epochs;
    topt.batch_size = batch;
    topt.adam.lr = lr;
    topt.adam.weight_decay = wd;
    topt.seed = a.seed;
    topt.target_accuracy = target_acc;

    std::string out = a.out_dir.empty() ? "out" : a.out_dir;
    ensure_out(out);
    std::ofstream log(out + "/train.log");
    log << "# group " << cfg.group << " neighborhood " << cfg.neighborhood << " seed " << a.seed
        << " lr " << lr << " wd " << wd << " dropout " << cfg.attn_dropout << " batch " << batch
        << "\n# data " << pool.provenance << "\n";
    TrainResult res = train_model(model, train_set, val_set, topt, &log);
    if (res.aborted_non_finite) {
        std::cerr << "training aborted on non-finite loss; last good state saved\n";
    }
    save_checkpoint(out + "/best.ckpt", res.best_params);
    std::cout << "best val accuracy " << res.best_val_accuracy << " (epoch " << res.best_epoch
              << "), checkpoint " << out << "/best.ckpt\n";
    return res.aborted_non_finite ? 1 : 0;
}

int cmd_eval(const CommonArgs& a, const std::string& data_dir, const std::string& checkpoint,
             size_t count, bool rotated) {
    ModelConfig cfg = resolve_config(a);
    Dataset test = build_dataset(data_dir, "test", a.seed + 101, count, cfg.image_width,
                                 cfg.image_height);
    cfg.image_width = test.width;
    cfg.image_height = test.height;
    Model<float> model(cfg, a.seed);
    auto params = model.params();
    restore_params(params, load_checkpoint(checkpoint));
    EvalResult res = evaluate(model, test);
    std::cout << "accuracy " << res.accuracy << " on " << res.count << " images\n";
    std::cout << "confusion (rows = truth):\n";
    for (int t = 0; t < cfg.classes; ++t) {
        for (int p = 0; p < cfg.classes; ++p)
            std::cout << res.confusion[static_cast<size_t>(t) * cfg.classes + p]
                      << (p + 1 == cfg.classes ? "\n" : " ");
    }
    if (rotated) {
        Dataset rot = test;
        for (size_t i = 0; i < rot.count(); ++i) {
            auto r = rotate_image(test.image(i), test.width, test.height, 90.0, RotateMode::exact90);
            std::copy(r.begin(), r.end(),
                      rot.images.begin() + i * static_cast<size_t>(test.width) * test.height);
        }
        EvalResult rres = evaluate(model, rot);
        std::cout << "accuracy on 90-degree rotated copy " << rres.accuracy << "\n";
    }
    return 0;
}

int cmd_synthdata(const CommonArgs& a, size_t count) {
    Dataset base = synth_digits(count, a.seed);
    Dataset rot = make_rotmnist(base, a.seed + 1, count, RotateMode::exact90);
    std::string out = a.out_dir.empty() ? "." : a.out_dir;
    ensure_out(out);
    save_idx(rot, out + "/train-images-idx3-ubyte", out + "/train-labels-idx1-ubyte");
    std::cout << "wrote " << rot.count() << " images (" << rot.provenance << ") to " << out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"group-equivariant vision transformer harness"};
    app.require_subcommand(1);

    CommonArgs ck, em, tr, ev, sd;
    auto* check = app.add_subcommand("check", "run the equivariance certification suite");
    add_common(check, ck);

    auto* errormap = app.add_subcommand("errormap", "feature-map equivariance error images");
    add_common(errormap, em);
    std::string em_ckpt, em_image;
    int em_turns = 1, em_stage = 0;
    errormap->add_option("--checkpoint", em_ckpt, "model checkpoint (optional)");
    errormap->add_option("--image", em_image, "input image as 8-bit P5 PGM (optional)");
    errormap->add_option("--turns", em_turns, "rotation in quarter turns")->check(CLI::Range(0, 3));
    errormap->add_option("--stage", em_stage, "0 = lifting output, k = after block k");

    auto* train = app.add_subcommand("train", "train on synthetic rotated digits or IDX data");
    add_common(train, tr);
    std::string tr_data;
    int tr_epochs = 10, tr_batch = 8;
    double tr_lr = 1e-3, tr_wd = 1e-4, tr_drop = 0.1, tr_target = 0.0;
    size_t tr_count = 2000, tr_val = 400;
    train->add_option("--data-dir", tr_data, "directory with IDX train files");
    train->add_option("--epochs", tr_epochs);
    train->add_option("--batch", tr_batch);
    train->add_option("--lr", tr_lr);
    train->add_option("--weight-decay", tr_wd);
    train->add_option("--dropout", tr_drop, "attention and value dropout rate");
    train->add_option("--train-count", tr_count);
    train->add_option("--val-count", tr_val);
    train->add_option("--target-acc", tr_target, "stop once validation reaches this accuracy");

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    add_common(eval, ev);
    std::string ev_data, ev_ckpt;
    size_t ev_count = 400;
    bool ev_rot = false;
    eval->add_option("--data-dir", ev_data, "directory with IDX test files");
    eval->add_option("--checkpoint", ev_ckpt)->required();
    eval->add_option("--count", ev_count);
    eval->add_flag("--rotated", ev_rot, "also evaluate a 90-degree rotated copy");

    auto* synth = app.add_subcommand("synthdata", "write a synthetic rotated-digit IDX dataset");
    add_common(synth, sd);
    size_t sd_count = 2400;
    synth->add_option("--count", sd_count);

    CLI11_PARSE(app, argc, argv);
    try {
        if (check->parsed()) return cmd_check(ck);
        if (errormap->parsed())
            return em.precision == "f64"
                       ? errormap_impl<double>(em, em_ckpt, em_image, em_turns, em_stage)
                       : errormap_impl<float>(em, em_ckpt, em_image, em_turns, em_stage);
        if (train->parsed())
            return cmd_train(tr, tr_data, tr_epochs, tr_batch, tr_lr, tr_wd, tr_drop, tr_count,
                             tr_val, tr_target);
        if (eval->parsed()) return cmd_eval(ev, ev_data, ev_ckpt, ev_count, ev_rot);
        if (synth->parsed()) return cmd_synthdata(sd, sd_count);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
