// Smallest end-to-end use of the library: synthesize a bimodal dataset,
// run all four setups on it and print the results table.
//
//   jmml_sample [seed]

#include <cstdlib>
#include <iostream>

#include "jmml/jmml.hpp"

int main(int argc, char** argv) {
  using namespace jmml::pipeline;

  ExperimentConfig cfg;
  cfg.seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 0;
  cfg.data.synthetic.n_per_class = 120;
  cfg.data.synthetic.dims = {24, 12};
  cfg.data.synthetic.latent_dim = 4;

  // small grids so this finishes in a few seconds
  cfg.jecl.width_factor = 1.0;
  cfg.jecl.train.max_epochs = 30;
  cfg.mbpls.lv_start = 2;
  cfg.mbpls.lv_stop = 12;
  cfg.mbpls.folds = 3;
  cfg.edcc.width_factor = 1.0;
  cfg.edcc.projection_dim = 6;
  cfg.edcc.train.epochs = 10;
  cfg.forest.n_estimators = {50};
  cfg.forest.max_depth = {8};

  try {
    const auto rows = run_experiment(cfg);
    std::cout << render_table(rows, cfg.dimension);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
