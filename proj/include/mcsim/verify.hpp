#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mcsim::verify {

// One self-check outcome.  `detail` is deterministic for a given seed (it
// never contains wall-clock or address data), so whole reports are
// byte-comparable across runs of the same build.
struct CheckResult {
    std::string suite;
    std::string name;
    bool passed = false;
    std::string detail;
};

struct Options {
    std::uint64_t seed = 1;
    // Test-only hook: perturb one stored sum-tree node before the dispenser
    // checks run, to prove the harness actually detects a broken build.
    bool inject_tree_fault = false;
};

// Suites in report order.  "all" runs every suite in this order.
const std::vector<std::string>& suite_names();
bool is_suite(const std::string& s);

// Run one suite ("dispenser", "billiards", "parallel", "timedriven") or
// "all".  Throws std::invalid_argument for an unknown suite id.
std::vector<CheckResult> run_suite(const std::string& suite, const Options& opt);

// Machine-readable table: header `suite,check,status,detail`, one row per
// check, status `pass` or `fail`.
std::string report(const std::vector<CheckResult>& checks);

bool all_passed(const std::vector<CheckResult>& checks);

} // namespace mcsim::verify
