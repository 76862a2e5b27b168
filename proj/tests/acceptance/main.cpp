#include <chrono>
#include <exception>
#include <iostream>
#include <string>

#include "criteria.hpp"

using deskcloud::acceptance::criteria;
using deskcloud::acceptance::Outcome;

int main(int argc, char** argv) {
  std::string only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      only = argv[++i];
    } else {
      std::cerr << "usage: deskcloud_acceptance [--only NAME]\n";
      return 2;
    }
  }
  int ran = 0, failed = 0;
  for (const auto& c : criteria()) {
    if (!only.empty() && c.name != only) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("unexpected exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << " " << o.detail << " (" << secs << "s)" << std::endl;
  }
  if (ran == 0) {
    std::cerr << "no criterion named " << only << "\n";
    return 2;
  }
  return failed == 0 ? 0 : 1;
}
