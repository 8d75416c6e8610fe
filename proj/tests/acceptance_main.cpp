#include <iostream>

#include "mhpsc/acceptance.hpp"

int main() {
    const auto results = mhpsc::accept::run_all("data", "out/verify", std::cout);
    const bool ok = mhpsc::accept::all_passed(results);
    std::cout << (ok ? "all 9 criteria passed\n" : "acceptance suite FAILED\n");
    return ok ? 0 : 1;
}
