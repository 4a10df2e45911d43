// Runs every acceptance criterion and prints one line per criterion.
// Usage: acceptance_test [--only <module|id>[,...]] [--seed N] [--json path]
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include "mkv/verify/verify.hpp"

int main(int argc, char** argv) {
  mkv::VerifyOptions opts;
  std::string json_path;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      opts.only = argv[++i];
    } else if (a == "--seed" && i + 1 < argc) {
      opts.seed = std::stoull(argv[++i]);
    } else if (a == "--json" && i + 1 < argc) {
      json_path = argv[++i];
    } else {
      std::cerr << "unknown argument: " << a << "\n";
      return 3;
    }
  }
  try {
    const auto results = mkv::verify_suite(opts, &std::cout);
    std::cout << "\n" << mkv::format_table(results);
    if (!json_path.empty()) std::ofstream(json_path) << mkv::to_json(results).dump(2) << "\n";
    int failed = 0;
    for (const auto& r : results) failed += r.pass ? 0 : 1;
    std::cout << (results.size() - failed) << "/" << results.size() << " criteria pass\n";
    return failed == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
