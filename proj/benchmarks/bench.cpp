#include <benchmark/benchmark.h>

#include "chemstack/crc/crc.hpp"
#include "chemstack/flow/analysis.hpp"
#include "chemstack/sim/run.hpp"

using namespace chemstack;

// Raw stochastic stepping of a saturated token loop: the inner loop cost of
// every trial in the evolution experiments.
static void BM_CrcStochasticSecond(benchmark::State& state) {
  for (auto _ : state) {
    state.PauseTiming();
    crc::CrcConfig cfg;
    cfg.e0 = 100;
    cfg.k1 = 1.0;
    cfg.k2 = 1.0;
    crc::Crc c(cfg);
    c.attach_source(chem::constant_rate(150.0), 1000);
    Rng rng(42);
    state.ResumeTiming();
    c.run_until(rng, 1.0);
    benchmark::DoNotOptimize(c.transmitted_total());
  }
}
BENCHMARK(BM_CrcStochasticSecond);

// Newton solve of the loop's fixed point, as used by the capacity screens.
static void BM_SteadyState(benchmark::State& state) {
  const flow::CrcNetwork topo = flow::make_crc_network(1.0, 1.0, 0.0);
  flow::FlowModel model = flow::derive_odes(
      topo.net, {{topo.S, "v_src"}}, nullptr);
  Eigen::VectorXd c0 = Eigen::VectorXd::Zero(model.n_species());
  c0(topo.E) = 10.0;
  model.set_c0(c0);
  Eigen::VectorXd inflow(1);
  inflow << 5.0;
  for (auto _ : state) {
    auto ss = flow::steady_state(model, inflow);
    benchmark::DoNotOptimize(ss.c);
  }
}
BENCHMARK(BM_SteadyState);

// One short two-node trial of the known-good stack, the unit of work the
// generation loop repeats three times per generation.
static void BM_WorldTrial(benchmark::State& state) {
  sim::Scenario sc;
  sc.world.source.mean_rate = 2e5;
  sc.world.measure = 2.0;
  sc.world.min_settle = 1.0;
  sc.fitness.target = 1.5e5;
  sc.finalize();
  sim::TrialContext ctx(sc);
  const stack::Genome g =
      ctx.layout().parse("tcp 0 0 0 0 0|udp 0 0|crc 1 150 0|ipv4 1 0");
  std::uint64_t seed = 1;
  for (auto _ : state) {
    auto rec = ctx.run(g, seed++);
    benchmark::DoNotOptimize(rec.fitness);
  }
}
BENCHMARK(BM_WorldTrial);

BENCHMARK_MAIN();
