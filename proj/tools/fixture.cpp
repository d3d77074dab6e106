// Writes the reference synthetic dataset in the coded-test CSV schema.
#include <iostream>

#include "CLI11.hpp"
#include "soe/ingest.hpp"
#include "soe/report.hpp"
#include "soe/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write the reference synthetic fixture"};
  std::string out;
  app.add_option("--out", out, "Destination CSV; stdout when absent");
  CLI11_PARSE(app, argc, argv);
  try {
    const auto csv = soe::serialize_dataset(soe::reference_fixture());
    if (out.empty()) {
      std::cout << csv;
    } else {
      soe::write_file(out, csv);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
