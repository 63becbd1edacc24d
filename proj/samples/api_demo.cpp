// Library walk-through on the hiring sample: audit, verdict, then where the
// worst-case transport moves people.
//
//   api_demo [samples/hiring]

#include <filesystem>
#include <iostream>

#include "faith/localization.hpp"
#include "faith/pipeline.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  const fs::path dir = argc > 1 ? fs::path(argv[1]) : fs::path(FAITH_SAMPLES_DIR) / "hiring";
  try {
    auto config = faith::load_config(dir / "config.json");
    auto inputs = faith::load_audit_inputs(config, dir / "audit.csv");
    auto r = faith::run_audit(inputs.records, config, inputs.sources());

    std::cout << "n = " << r.prepared.fn.n << ", " << r.prepared.space.size() << " support points\n";
    std::cout << "error rate " << r.mean_loss << ", FaiTH " << r.solution.value << "\n";
    std::cout << "95% CI [" << r.two_sided.lower << ", " << r.two_sided.upper << "]\n";
    std::cout << (r.verdict.reject ? "unfair" : "no evidence of unfairness") << " at delta " << config.delta
              << " (one-sided lower bound " << r.one_sided.lower << ")\n";
    if (r.groups && r.groups->spd) std::cout << "statistical parity difference " << *r.groups->spd << "\n";

    auto diff = faith::transport_diff(r.solution, r.prepared.space, r.prepared.fn);
    auto grid = faith::marginal_heatmap(diff, r.prepared.space, {"gender"}, {"experience"}, std::string("1"));
    std::cout << "\nnet change in qualified candidates:\n" << faith::heatmap_csv(grid);
  } catch (const faith::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
