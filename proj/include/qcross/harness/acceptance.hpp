// Copyright 2026 The qcross Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace qcross {

struct AcceptanceOptions {
  std::size_t cells = 50;              ///< matched cells for the experiment criteria
  std::size_t bootstrap_reps = 2000;
  std::uint64_t seed = 7;
  bool parallel = true;
  std::filesystem::path work_dir;      ///< scratch space for the determinism check
  std::vector<int> only;               ///< empty runs criteria 1 to 12
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

/// Runs the acceptance criteria in order, reporting each as it finishes.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts,
                                            const std::function<void(const CriterionResult&)>& on_result = {});

/// "[PASS] 6 architecture: ... (12.3 s)"
std::string format_criterion(const CriterionResult& r);

}  // namespace qcross
