#include <benchmark/benchmark.h>

#include "textsmooth/adam.hpp"
#include "textsmooth/autodiff.hpp"
#include "textsmooth/model.hpp"
#include "textsmooth/rng.hpp"
#include "textsmooth/smoothing.hpp"
#include "textsmooth/synthetic.hpp"
#include "textsmooth/tensor.hpp"

namespace {

using namespace textsmooth;

Tensor random_tensor(std::vector<int> shape, Rng& rng) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = rng.uniform() * 2.0 - 1.0;
    }
    return t;
}

void BM_Matmul(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(1);
    const Tensor a = random_tensor({n, n}, rng);
    const Tensor b = random_tensor({n, n}, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(matmul(a, b));
    }
    state.SetItemsProcessed(state.iterations() * 2LL * n * n * n);
}
BENCHMARK(BM_Matmul)->Arg(16)->Arg(64)->Arg(128);

void BM_SoftmaxRows(benchmark::State& state) {
    Rng rng(2);
    const Tensor m = random_tensor({16, static_cast<int>(state.range(0))}, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(softmax_rows(m));
    }
}
BENCHMARK(BM_SoftmaxRows)->Arg(64)->Arg(256);

ModelConfig bench_config(int layers) {
    ModelConfig c;
    c.n_layers = layers;
    c.emb_size = 64;
    c.n_heads = 4;
    c.ffn_size = 256;
    c.vocab_size = 200;
    c.max_seq_len = 16;
    c.dropout_rate = 0.0;
    return c;
}

void BM_EncoderForward(benchmark::State& state) {
    const ModelConfig config = bench_config(static_cast<int>(state.range(0)));
    const TransformerParams params = init_params(config, 7);
    std::vector<int> ids(16, 6), segs(16, 0), mask(16, 1);
    for (auto _ : state) {
        const Tensor emb = embed_input(params, ids, segs);
        benchmark::DoNotOptimize(forward_encoder(params, emb, mask));
    }
}
BENCHMARK(BM_EncoderForward)->Arg(1)->Arg(2);

void BM_TrainStep(benchmark::State& state) {
    const ModelConfig config = bench_config(1);
    TransformerParams params = init_params(config, 7);
    AdamState adam(AdamConfig{1e-3, 0.9, 0.999, 1e-8});
    std::vector<Tensor*> ptrs = params.param_list();
    std::vector<int> ids(16, 6), segs(16, 0), mask(16, 1);
    Tensor target({1, 2});
    target.at(0, 1) = 1.0;
    for (auto _ : state) {
        Tape tape;
        LiftedParams lp = lift_params(tape, params, true);
        Value emb = embed_input(tape, lp, ids, segs);
        Value hidden = forward_encoder(tape, lp, emb, mask, false);
        Value loss = cross_entropy(classify(tape, lp, hidden), target);
        tape.backward(loss);
        adam_step(ptrs, lp.grad_list(), adam);
        benchmark::DoNotOptimize(loss.val()[0]);
    }
}
BENCHMARK(BM_TrainStep);

void BM_SmoothInstance(benchmark::State& state) {
    SyntheticSpec spec;
    spec.corpus_size = 32;
    spec.n_train = 8;
    spec.n_test = 8;
    const SyntheticTask task = make_synthetic_task(spec);
    ModelConfig config = bench_config(2);
    config.vocab_size = task.vocab.size();
    const TransformerParams teacher = init_params(config, 7);
    SmoothingConfig smooth;
    for (auto _ : state) {
        const Tensor dist = mlm_distribution(teacher, task.train.instances[0]);
        benchmark::DoNotOptimize(smooth_text(task.train.instances[0], dist, smooth));
    }
}
BENCHMARK(BM_SmoothInstance);

} // namespace

BENCHMARK_MAIN();
