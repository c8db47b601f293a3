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

#pragma once

#include <cstdint>
#include <span>

namespace prag {

inline constexpr int kInt8Max = 127;

// Symmetric max-abs INT8 quantization of one row.
//
//   scale = max|v_i| / 127   (0 for an all-zero row)
//   q_i   = round(v_i / scale), clamped to [-127, 127]
//
// The returned scale is the f32 value that gets persisted. Rounding is
// applied against that stored scale so |q_i * scale - v_i| <= scale / 2
// holds exactly for every component. Throws ValueError on NaN/Inf.
float quantize_symmetric(std::span<const float> values, std::span<std::int8_t> out);

void dequantize_symmetric(std::span<const std::int8_t> q, float scale, std::span<float> out);

}  // namespace prag
