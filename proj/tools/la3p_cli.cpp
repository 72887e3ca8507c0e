#include <iostream>
#include <stdexcept>

#include "la3p/experiment.hpp"

int main(int argc, char** argv) {
  try {
    const auto request = la3p::parse_cli(argc, argv);
    if (!request) return 0;
    const auto& config = request->config;

    if (request->probe) {
      std::cout << la3p::run_probe(config, *request->probe, config.seeds.front()) << '\n';
      return 0;
    }

    la3p::ExperimentResult result;
    if (!request->lambda_sweep.empty()) {
      result = la3p::lambda_sweep(config, request->lambda_sweep);
    } else {
      result = la3p::run(config);
    }
    std::cout << la3p::format_aggregate_table(result.rows);

    if (request->timing) {
      std::cout << '\n' << la3p::format_timing_table(la3p::timing_report(result.runs));
    }
    std::cout << "results written to " << config.out_dir.string() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "la3p: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
