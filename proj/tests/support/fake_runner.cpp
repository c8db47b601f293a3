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

// Minimal stdio runner for ExternalProcessBackend tests. It counts prefilled
// tokens and, on decode, replies with "tokens=<n>" followed by two echo
// pieces of the last prefilled token, then EOS. The count resets after EOS.
#include <iostream>
#include <string>

#include <json.hpp>

int main() {
  std::size_t prefilled = 0;
  std::string last;
  int step = 0;
  std::string line;
  while (std::getline(std::cin, line)) {
    const auto msg = nlohmann::json::parse(line, nullptr, false);
    if (msg.is_discarded()) return 3;
    const auto op = msg.value("op", std::string{});
    if (op == "prefill") {
      for (const auto& t : msg["tokens"]) {
        last = t.get<std::string>();
        ++prefilled;
      }
      continue;
    }
    if (op != "decode") return 4;
    nlohmann::json out;
    if (step == 0) {
      out = {{"token", "tokens=" + std::to_string(prefilled)}, {"eos", false}};
    } else if (step <= 2) {
      out = {{"token", " " + last}, {"eos", false}};
    } else {
      out = {{"token", ""}, {"eos", true}};
      prefilled = 0;
      step = -1;
    }
    ++step;
    std::cout << out.dump() << std::endl;
  }
  return 0;
}
