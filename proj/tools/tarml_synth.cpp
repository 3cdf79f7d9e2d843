// Writes a synthetic dataset with the canonical 16 columns, for trying the
// pipeline without experimental data.

#include <iostream>

#include "CLI11.hpp"
#include "tarml/data/dataset.hpp"
#include "tarml/data/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthetic tar reforming dataset"};
  std::size_t rows = 600;
  std::uint64_t seed = 1;
  double noise = 0.02;
  std::string out;
  app.add_option("--rows", rows, "Number of rows")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Random seed")->capture_default_str();
  app.add_option("--noise", noise, "Noise as a fraction of each target's range")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  app.add_option("--out", out, "Output CSV")->required();
  CLI11_PARSE(app, argc, argv);
  try {
    tarml::data::write_dataset(tarml::data::make_synthetic(rows, seed, noise), out);
  } catch (const std::exception& e) {
    std::cerr << "tarml_synth: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
