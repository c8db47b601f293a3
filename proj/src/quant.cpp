/*
 * Copyright 2026 The PocketRAG Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "prag/quant.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "prag/errors.hpp"

namespace prag {

float quantize_symmetric(std::span<const float> values, std::span<std::int8_t> out) {
  if (out.size() != values.size()) throw ValueError("quantize: output size mismatch");
  double max_abs = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) throw ValueError("quantize: non-finite component at index " + std::to_string(i));
    max_abs = std::max(max_abs, std::fabs(static_cast<double>(values[i])));
  }
  if (max_abs == 0.0) {
    std::fill(out.begin(), out.end(), std::int8_t{0});
    return 0.0f;
  }
  const float scale = static_cast<float>(max_abs / kInt8Max);
  const double s = scale;
  const double half = s / 2.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    double q = std::nearbyint(v / s);
    // The quotient is rounded once, so it can land on the wrong side of a
    // half step. q * s and v - q * s are exact in double, so this check is too.
    if (v - q * s > half) q += 1.0;
    if (q * s - v > half) q -= 1.0;
    q = std::clamp(q, -static_cast<double>(kInt8Max), static_cast<double>(kInt8Max));
    out[i] = static_cast<std::int8_t>(q);
  }
  return scale;
}

void dequantize_symmetric(std::span<const std::int8_t> q, float scale, std::span<float> out) {
  if (out.size() != q.size()) throw ValueError("dequantize: output size mismatch");
  for (std::size_t i = 0; i < q.size(); ++i) out[i] = static_cast<float>(q[i] * static_cast<double>(scale));
}

}  // namespace prag
