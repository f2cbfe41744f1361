// Copyright 2026  The gnt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <string>

namespace gnt {

/// Largest relative errors between analytic gradients and central finite
/// differences over a batch of random instances. Relative error of a
/// gradient vector is max_i |a_i - n_i| / max(max_i |a_i|, max_i |n_i|).
struct GradCheckReport {
  double occupancy = 0;      // forward score vs its edge posteriors
  double local = 0;          // local_nll
  double global = 0;         // global_nbest_loss
  double interpolated = 0;   // interpolated_loss, random alpha
  double regularizer = 0;    // normalization_regularizer
  double parameters = 0;     // total_objective through the model, |H| = 3
  int instances = 0;

  double grid_max() const;
};

GradCheckReport run_grad_check(std::uint64_t seed, int instances = 10);

std::string to_json(const GradCheckReport& r);

}  // namespace gnt
