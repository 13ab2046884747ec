#include <benchmark/benchmark.h>

#include "cfready/eval.hpp"
#include "cfready/features.hpp"
#include "cfready/models.hpp"
#include "cfready/pipeline.hpp"
#include "cfready/preprocessing.hpp"
#include "cfready/synthetic.hpp"

using namespace cfready;

namespace {

const PreparedData& prepared() {
    static const PreparedData data = prepare_data(synthetic_records(SyntheticSpec{}), 0.2, 1);
    return data;
}

void BM_FeatureExtraction(benchmark::State& state) {
    const auto activity = synthesize_activity(archetype_profile(2));  // ~2600 solved problems
    for (auto _ : state) benchmark::DoNotOptimize(extract_feature_vector(activity));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(activity.submissions.size()));
}
BENCHMARK(BM_FeatureExtraction);

void BM_Transform(benchmark::State& state) {
    const auto data = generate_synthetic(SyntheticSpec{{10, 10, 10, 10}, 1.0, 1});
    const auto params = fit(data.vectors);
    std::size_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(transform(data.vectors[i++ % data.vectors.size()], params));
}
BENCHMARK(BM_Transform);

void BM_ForestTrain(benchmark::State& state) {
    const auto& d = prepared();
    Hyperparams hp;
    hp.forest.n_trees = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(train_forest(d.train.rows, d.train.labels, hp, 1));
}
BENCHMARK(BM_ForestTrain)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_ForestPredict(benchmark::State& state) {
    const auto& d = prepared();
    const auto model = train_forest(d.train.rows, d.train.labels, Hyperparams{}, 1);
    std::size_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(forest_predict(model, d.test.rows.row(i++ % d.test.rows.rows())));
}
BENCHMARK(BM_ForestPredict);

void BM_KnnPredict(benchmark::State& state) {
    const auto& d = prepared();
    const auto model = train_knn(d.train.rows, d.train.labels, Hyperparams{});
    std::size_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(knn_predict(model, d.test.rows.row(i++ % d.test.rows.rows())));
}
BENCHMARK(BM_KnnPredict);

void BM_SvmTrain(benchmark::State& state) {
    const auto& d = prepared();
    for (auto _ : state) benchmark::DoNotOptimize(train_svm(d.train.rows, d.train.labels, Hyperparams{}));
}
BENCHMARK(BM_SvmTrain)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
