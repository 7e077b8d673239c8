#include "pflux/solver.hpp"

#include <benchmark/benchmark.h>

using namespace pflux;

namespace {

struct Problem {
  std::shared_ptr<const P2Space> space;
  Eigen::VectorXd x;
};

const Problem& problem() {
  static const Problem pb = [] {
    const DomainPtr d = shapes::strip();
    const auto mesh = std::make_shared<const Mesh>(mesh_cut_domain(cut_domain(d, 8.0), 1.0 / 16.0));
    auto space = std::make_shared<const P2Space>(mesh);
    const Eigen::VectorXd lift = carrier_lift(*space, build_carrier_2d(d, {-1.0, 1.0}));
    Eigen::VectorXd x = Eigen::VectorXd::Zero(2 * space->num_dofs() + space->num_vertices());
    x.head(lift.size()) = lift;
    return Problem{space, x};
  }();
  return pb;
}

void BM_AssembleSerial(benchmark::State& state) {
  const Problem& pb = problem();
  const Assembler a(pb.space, 3.0, 0.125, true);
  Eigen::VectorXd r;
  Eigen::SparseMatrix<double> J;
  for (auto _ : state) {
    a.assemble_serial(pb.x, Linearization::Newton, &r, &J);
    benchmark::DoNotOptimize(r.data());
  }
  state.counters["triangles"] = pb.space->mesh().num_triangles();
}

void BM_AssembleOpenMP(benchmark::State& state) {
  const Problem& pb = problem();
  const Assembler a(pb.space, 3.0, 0.125, true);
  Eigen::VectorXd r;
  Eigen::SparseMatrix<double> J;
  for (auto _ : state) {
    a.assemble(pb.x, Linearization::Newton, &r, &J);
    benchmark::DoNotOptimize(r.data());
  }
  state.counters["triangles"] = pb.space->mesh().num_triangles();
}

void BM_ResidualOpenMP(benchmark::State& state) {
  const Problem& pb = problem();
  const Assembler a(pb.space, 3.0, 0.125, true);
  for (auto _ : state) benchmark::DoNotOptimize(a.residual(pb.x).data());
}

}  // namespace

BENCHMARK(BM_AssembleSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AssembleOpenMP)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ResidualOpenMP)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
