#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "gevit/checkpoint.hpp"
#include "gevit/data.hpp"
#include "gevit/network.hpp"
#include "gevit/optimizer.hpp"

namespace gevit {

struct TrainOptions {
    int epochs = 10;
    int batch_size = 8;
    AdamConfig adam;
    uint64_t seed = 0;
    double target_accuracy = 0.0;  // stop once validation reaches this; 0 disables
    bool log_steps = true;
};

struct EpochStats {
    int epoch = 0;
    double mean_loss = 0.0;
    double val_accuracy = 0.0;
    double seconds = 0.0;
};

struct TrainResult {
    std::vector<float> step_losses;
    std::vector<EpochStats> epochs;
    double best_val_accuracy = 0.0;
    int best_epoch = -1;
    bool aborted_non_finite = false;
    std::vector<TensorRecord> best_params;  // state the model is left in
};

struct EvalResult {
    double accuracy = 0.0;
    size_t count = 0;
    std::vector<size_t> confusion;  // classes x classes, row = true label
};

template <class T>
int predict(const Model<T>& model, const float* img) {
    int P = model.config().image_width * model.config().image_height;
    std::vector<T> v(img, img + P);
    const auto& logits = model.forward(Tensor<T>::constant({P, 1}, std::move(v))).value();
    int best = 0;
    for (size_t c = 1; c < logits.size(); ++c)
        if (logits[c] > logits[best]) best = static_cast<int>(c);
    return best;
}

template <class T>
EvalResult evaluate(const Model<T>& model, const Dataset& data) {
    if (data.width != model.config().image_width || data.height != model.config().image_height)
        throw std::invalid_argument("evaluate: dataset dimensions do not match the model");
    int C = model.config().classes;
    EvalResult res;
    res.count = data.count();
    res.confusion.assign(static_cast<size_t>(C) * C, 0);
    size_t hits = 0;
    for (size_t i = 0; i < data.count(); ++i) {
        int pred = predict(model, data.image(i));
        int truth = data.labels[i];
        ++res.confusion[static_cast<size_t>(truth) * C + pred];
        if (pred == truth) ++hits;
    }
    res.accuracy = res.count ? static_cast<double>(hits) / static_cast<double>(res.count) : 0.0;
    return res;
}

// Per-sample forward/backward with gradients averaged over the batch;
// keeps the best-validation parameter snapshot and restores it at the end.
// A non-finite loss aborts the run and rolls back to the last good state.
template <class T>
TrainResult train_model(Model<T>& model, const Dataset& train, const Dataset& val,
                        const TrainOptions& opt, std::ostream* log = nullptr) {
    if (train.width != model.config().image_width || train.height != model.config().image_height)
        throw std::invalid_argument("train_model: dataset dimensions do not match the model");
    auto params = model.params();
    Adam<T> optim(params, opt.adam);
    std::mt19937_64 drop_rng(opt.seed + 0x9e3779b97f4a7c15ull);
    AttnOptions attn;
    attn.attn_drop = model.config().attn_dropout;
    attn.value_drop = model.config().value_dropout;
    attn.rng = &drop_rng;
    attn.scale_scores = model.config().scale_scores;

    TrainResult res;
    std::vector<TensorRecord> last_good = snapshot_params(params);
    int P = train.width * train.height;
    auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    int step = 0;
    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        double loss_sum = 0.0;
        size_t loss_n = 0;
        for (const auto& batch : batches(train.count(), opt.batch_size, opt.seed, epoch)) {
            optim.zero_grad();
            T inv = static_cast<T>(1.0 / static_cast<double>(batch.size()));
            double batch_loss = 0.0;
            for (int idx : batch) {
                const float* img = train.image(idx);
                std::vector<T> v(img, img + P);
                Tensor<T> logits =
                    model.forward(Tensor<T>::constant({P, 1}, std::move(v)), attn);
                Tensor<T> loss = classification_loss(logits, train.labels[idx]);
                batch_loss += static_cast<double>(loss.item());
                backward(scale(loss, inv));
            }
            batch_loss /= static_cast<double>(batch.size());
            if (!std::isfinite(batch_loss)) {
                restore_params(params, last_good);
                res.aborted_non_finite = true;
                if (log) *log << "abort: non-finite loss at step " << step << "\n";
                res.best_params = snapshot_params(params);
                return res;
            }
            optim.step();
            res.step_losses.push_back(static_cast<float>(batch_loss));
            loss_sum += batch_loss;
            ++loss_n;
            if (log && opt.log_steps) {
                char line[128];
                std::snprintf(line, sizeof(line), "step %d loss %.6f lr %.6g wall %.2f\n", step,
                              batch_loss, opt.adam.lr, elapsed());
                *log << line;
            }
            ++step;
        }
        EpochStats es;
        es.epoch = epoch;
        es.mean_loss = loss_n ? loss_sum / static_cast<double>(loss_n) : 0.0;
        es.val_accuracy = evaluate(model, val).accuracy;
        es.seconds = elapsed();
        res.epochs.push_back(es);
        if (log) {
            char line[160];
            std::snprintf(line, sizeof(line),
                          "epoch %d mean_loss %.6f val_acc %.4f wall %.2f\n", epoch, es.mean_loss,
                          es.val_accuracy, es.seconds);
            *log << line;
        }
        last_good = snapshot_params(params);
        if (es.val_accuracy > res.best_val_accuracy || res.best_epoch < 0) {
            res.best_val_accuracy = es.val_accuracy;
            res.best_epoch = epoch;
            res.best_params = last_good;
        }
        if (opt.target_accuracy > 0.0 && es.val_accuracy >= opt.target_accuracy) break;
    }
    if (!res.best_params.empty()) restore_params(params, res.best_params);
    return res;
}

}  // namespace gevit
