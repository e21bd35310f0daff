// Copyright 2026 The photonic-vqc Authors
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

#include "CLI11.hpp"
#include "photonic/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Photonic circuit training and simulation"};
  app.set_version_flag("--version", photonic::cli::kToolVersion);
  photonic::cli::Options opt;
  std::string config;
  app.add_option("--config", config, "experiment config (JSON)")->required();
  app.add_option("--seed", opt.seed, "override the config seed");
  app.add_option("--jobs", opt.jobs, "worker threads (default: hardware concurrency)")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", opt.out, "output directory");
  app.add_option("--mode", opt.mode, "exact or sampled")->check(CLI::IsMember({"exact", "sampled"}));
  app.add_option("--shots", opt.shots, "shots per measurement setting")->check(CLI::PositiveNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : photonic::cli::kInputError;
  }
  opt.config = config;
  return photonic::cli::run(opt);
}
