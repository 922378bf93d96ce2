#include <random>

#include <benchmark/benchmark.h>

#include "gevit/attention.hpp"
#include "gevit/network.hpp"

using namespace gevit;

namespace {

template <class T>
void bench_group_attention(benchmark::State& state) {
    const int W = static_cast<int>(state.range(0));
    const int P = W * W;
    std::mt19937_64 rng(1);
    FiniteGroup g = FiniteGroup::from_spec("c4");
    int G = g.order();
    Neighborhood nb = Neighborhood::make(W, W, 5, Boundary::torus);
    auto p = AttentionParams<T>::init(4, 16, 8, 16, rng);
    EncoderNet<T> enc(g, EncoderKind::group, 16, 16, nb.radius(), PeVariant::gevit, rng);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<T> v(static_cast<size_t>(P) * G * 16);
    for (auto& x : v) x = static_cast<T>(u(rng));
    Tensor<T> f = Tensor<T>::constant({P, G, 16}, v);
    for (auto _ : state) {
        benchmark::DoNotOptimize(group_attention(f, p, nb, enc).value().data());
    }
}

template <class T>
void bench_forward_backward(benchmark::State& state) {
    ModelConfig cfg;
    cfg.image_width = cfg.image_height = static_cast<int>(state.range(0));
    cfg.blocks = 1;
    Model<T> model(cfg, 1);
    int P = cfg.image_width * cfg.image_height;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<T> img(P);
    for (auto& x : img) x = static_cast<T>(u(rng));
    for (auto _ : state) {
        Tensor<T> loss = classification_loss(
            model.forward(Tensor<T>::constant({P, 1}, img)), 3);
        backward(loss);
        benchmark::DoNotOptimize(loss.item());
    }
}

}  // namespace

BENCHMARK(bench_group_attention<float>)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);
BENCHMARK(bench_group_attention<double>)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(bench_forward_backward<float>)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
