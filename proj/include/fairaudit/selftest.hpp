#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace fairaudit {

struct SelfTestResult {
  bool passed = false;
  std::vector<std::string> lines;  // human-readable, one per checked file
};

/// Runs the bundled fixture pipeline end-to-end (replay backend) into
/// work_dir and byte-diffs every produced file against the goldens.
/// Any diff fails with a first-divergence report.
SelfTestResult run_selftest(const std::filesystem::path& fixtures_dir,
                            const std::filesystem::path& work_dir);

}  // namespace fairaudit
