#include <cstdlib>
#include <iostream>
#include <string>

#include "acceptance.hpp"

// Usage: acceptance [id ...]; no arguments runs every criterion.
int main(int argc, char** argv) {
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
  if (ids.empty()) ids = setrec::acceptance::criterion_ids();
  try {
    return setrec::acceptance::run_suite(ids, std::cout) ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "acceptance: " << e.what() << "\n";
    return 2;
  }
}
