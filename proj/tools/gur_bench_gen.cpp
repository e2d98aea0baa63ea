// Copyright 2026 The GUR Authors
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

#include <iostream>

#include <CLI11.hpp>

#include "gur/bench.hpp"
#include "gur/common.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate the synthetic topical benchmark"};
  std::string out_dir;
  gur::BenchSpec spec;
  app.add_option("--out", out_dir, "Output directory")->required();
  app.add_option("--topics", spec.topics, "Topic count, at most 100")
      ->check(CLI::Range(2, 100));
  CLI11_PARSE(app, argc, argv);
  try {
    gur::write_synthetic_benchmark(out_dir, spec);
    std::cout << "wrote benchmark with " << spec.topics << " topics to "
              << out_dir << "\n";
    return 0;
  } catch (const gur::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
