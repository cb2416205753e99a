// Generates one synthetic day, replays its history and runs the optimized
// dispatcher on it, then prints both KPI rows.

#include <iostream>

#include "cloudkitchen/dataset.hpp"
#include "cloudkitchen/kpi.hpp"
#include "cloudkitchen/simulator.hpp"

int main() {
  ck::GeneratorSpec spec;
  spec.days = 1;
  spec.seed = 7;
  const auto ds = ck::generate_dataset(spec);
  const auto provider = ck::make_provider(ds);
  const double factor = ck::calibrate(ds, *provider).factor;

  ck::RunConfig cfg;
  cfg.calibration_factor = factor;
  cfg.mode = ck::RunMode::Baseline;
  const auto base = ck::compute_kpis(ck::run(ds, *provider, cfg).log, ds);
  cfg.mode = ck::RunMode::Optimized;
  const auto opt = ck::compute_kpis(ck::run(ds, *provider, cfg).log, ds);

  std::cout << "orders " << ds.orders.size() << ", calibration factor " << factor << '\n';
  std::cout << ck::to_csv(ck::compare(opt, base));
  return 0;
}
