#include <cstring>
#include <iostream>

#include "typecrowd/acceptance.hpp"

int main(int argc, char** argv) {
  typecrowd::AcceptanceOptions options;
  for (int k = 1; k < argc; ++k) {
    if (std::strcmp(argv[k], "--quick") == 0) {
      options.quick = true;
    } else if (std::strcmp(argv[k], "--only") == 0 && k + 1 < argc) {
      options.only.push_back(std::atoi(argv[++k]));
    } else {
      std::cerr << "usage: acceptance [--quick] [--only N]...\n";
      return 2;
    }
  }
  int failed = 0;
  typecrowd::run_acceptance(options, [&](const typecrowd::CriterionResult& r) {
    std::cout << typecrowd::format_result(r) << std::endl;
    failed += !r.pass;
  });
  std::cout << (failed ? "acceptance: " + std::to_string(failed) + " criteria failed" : std::string("acceptance: all passed"))
            << std::endl;
  return failed ? 1 : 0;
}
