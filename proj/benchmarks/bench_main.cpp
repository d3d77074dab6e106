#include <benchmark/benchmark.h>

#include <sstream>

#include "soe/dist.hpp"
#include "soe/effect_power.hpp"
#include "soe/evidence.hpp"
#include "soe/ingest.hpp"
#include "soe/mcc.hpp"
#include "soe/pipeline.hpp"
#include "soe/report.hpp"

namespace {

using namespace soe;

const Dataset& fixture() {
  static const Dataset ds = parse_dataset_file(SOE_SOURCE_DIR "/data/fixture.csv").dataset;
  return ds;
}

void BM_DefaultGrid(benchmark::State& state) {
  const AnalysisConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(run_grid(fixture(), cfg, static_cast<unsigned>(state.range(0))));
  state.SetItemsProcessed(state.iterations() * 36 * 200);
}
BENCHMARK(BM_DefaultGrid)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_GridExport(benchmark::State& state) {
  const AnalysisConfig cfg;
  ExportBundle b;
  b.metadata = make_metadata(cfg, fixture().provenance);
  b.rows = run_grid(fixture(), cfg);
  const auto format = state.range(0) ? ExportFormat::Csv : ExportFormat::JsonLines;
  for (auto _ : state) benchmark::DoNotOptimize(export_results(b, format));
}
BENCHMARK(BM_GridExport)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ParseFixture(benchmark::State& state) {
  const auto text = serialize_dataset(fixture());
  for (auto _ : state) {
    std::istringstream in(text);
    benchmark::DoNotOptimize(parse_dataset(in, "bench"));
  }
}
BENCHMARK(BM_ParseFixture);

void BM_Cdf(benchmark::State& state, dist::DistSpec spec, double x) {
  for (auto _ : state) benchmark::DoNotOptimize(dist::cdf(spec, x));
}
BENCHMARK_CAPTURE(BM_Cdf, normal, dist::DistSpec::normal(), 1.3);
BENCHMARK_CAPTURE(BM_Cdf, t_central, dist::DistSpec::student_t(50), 2.0);
BENCHMARK_CAPTURE(BM_Cdf, t_noncentral, dist::DistSpec::student_t(50, 2.04), 2.0);
BENCHMARK_CAPTURE(BM_Cdf, chi2_noncentral, dist::DistSpec::chi_square(1, 6.5), 3.84);
BENCHMARK_CAPTURE(BM_Cdf, f_noncentral, dist::DistSpec::fisher_f(2, 112, 9.0), 3.08);
BENCHMARK_CAPTURE(BM_Cdf, f_noncentral_large_ncp, dist::DistSpec::fisher_f(4, 995, 250.0), 2.4);

void BM_Quantile(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(dist::quantile(dist::DistSpec::student_t(30), 0.975));
}
BENCHMARK(BM_Quantile);

void BM_Power(benchmark::State& state) {
  PowerQuery q;
  q.family = static_cast<TestFamily>(state.range(0));
  q.n_total = 120;
  q.df1 = 2;
  for (auto _ : state) benchmark::DoNotOptimize(power_at_threshold(q));
}
BENCHMARK(BM_Power)->DenseRange(0, 5);

void BM_Holm(benchmark::State& state) {
  std::vector<double> ps;
  for (int i = 0; i < state.range(0); ++i) ps.push_back(0.001 * (i * 37 % 1000 + 1));
  for (auto _ : state) benchmark::DoNotOptimize(adjust_family(ps, MccMethod::Holm));
}
BENCHMARK(BM_Holm)->Arg(10)->Arg(1000);

void BM_Evaluate(benchmark::State& state) {
  const auto in = EvidenceInputs::make(0.01, 0.8, 0.2, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(in, 0.05));
}
BENCHMARK(BM_Evaluate);

}  // namespace

BENCHMARK_MAIN();
