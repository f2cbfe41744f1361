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

#include <algorithm>
#include <cmath>
#include <limits>
#include <initializer_list>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "gnt/error.hpp"

namespace gnt {

template <typename Scalar>
inline constexpr Scalar kLogZero = -std::numeric_limits<Scalar>::infinity();

/// log(exp(a) + exp(b)). Exact when either side is log-zero.
template <typename Scalar>
Scalar log_add(Scalar a, Scalar b) {
  if (a < b) std::swap(a, b);
  if (b == kLogZero<Scalar>) return a;
  return a + std::log1p(std::exp(b - a));
}

/// Max-shifted log-sum-exp over a non-empty list.
template <typename Scalar>
Scalar logsumexp(std::span<const Scalar> values) {
  if (values.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "logsumexp of an empty list");
  }
  if (values.size() == 1) return values[0];
  const Scalar top = *std::max_element(values.begin(), values.end());
  if (top == kLogZero<Scalar>) return top;
  Scalar acc = 0;
  for (Scalar v : values) acc += std::exp(v - top);
  return top + std::log(acc);
}

template <typename Scalar>
Scalar logsumexp(const std::vector<Scalar>& values) {
  return logsumexp(std::span<const Scalar>(values));
}

template <typename Scalar>
Scalar logsumexp(std::initializer_list<Scalar> values) {
  return logsumexp(std::span<const Scalar>(values.begin(), values.size()));
}

template <typename Derived>
typename Derived::Scalar logsumexp(const Eigen::DenseBase<Derived>& values) {
  using Scalar = typename Derived::Scalar;
  if (values.size() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "logsumexp of an empty list");
  }
  if (values.size() == 1) return values.derived().coeff(0);
  const Scalar top = values.maxCoeff();
  if (top == kLogZero<Scalar>) return top;
  return top + std::log((values.derived().array() - top).exp().sum());
}

/// Softmax of a row given its log-sum-exp.
template <typename Derived>
auto softmax(const Eigen::DenseBase<Derived>& values,
             typename Derived::Scalar lse) {
  return (values.derived().array() - lse).exp();
}

}  // namespace gnt
