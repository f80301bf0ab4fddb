// Copyright 2026 The Sentry Authors. All rights reserved.
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
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>

#include <doctest.h>
#include <json.hpp>

#include "sentry/io.hpp"
#include "sentry/stereo.hpp"

#include <httplib.h>

extern char** environ;

using namespace sentry;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

CommandResult run_cli(const std::string& args) {
  const std::string command = std::string(SENTRY_CLI_PATH) + " " + args + " 2>&1";
  CommandResult r;
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("sentry_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

json read_json(const fs::path& path) { return json::parse(io::read_file(path)); }

// Textured wall facing the rig at the given depth.
std::string wall_scene(double z) {
  json quad = {{"billboard", false},
               {"color", {0.8, 0.8, 0.8}},
               {"label", ""},
               {"shape", {{"type", "quad"}, {"center", {0.0, 0.0, z}}, {"edge_u", {6.0, 0.0, 0.0}}, {"edge_v", {0.0, 4.0, 0.0}}}},
               {"texture", {{"type", "noise"}, {"scale", 0.01}, {"seed", 3}}}};
  json scene = {{"background", 0.1}, {"light", {0.0, 0.0, 1.0}}, {"objects", {quad}}};
  return scene.dump();
}

}  // namespace

TEST_CASE("cli usage errors exit with 2") {
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("nonsense").exit_code == 2);
  CHECK(run_cli("--help").exit_code == 0);
  const auto missing = run_cli("depth --left /nonexistent/l.ppm --right /nonexistent/r.ppm --out /tmp/x");
  CHECK(missing.exit_code == 2);
  CHECK(missing.output.find("/nonexistent/l.ppm") != std::string::npos);
}

TEST_CASE("cli run with a missing scene names the path") {
  const fs::path dir = scratch("missing_scene");
  std::ofstream(dir / "cfg.json") << R"({"scene": "nowhere/scene.json"})";
  const auto r = run_cli("run --config " + (dir / "cfg.json").string());
  CHECK(r.exit_code == 2);
  CHECK(r.output.find((dir / "nowhere/scene.json").string()) != std::string::npos);
  CHECK(r.output.find("scene") != std::string::npos);
}

TEST_CASE("cli bad config field is named") {
  const fs::path dir = scratch("bad_field");
  std::ofstream(dir / "cfg.json") << R"({"service": {"fps": -3}})";
  const auto r = run_cli("bench --duration 1 --config " + (dir / "cfg.json").string());
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("fps") != std::string::npos);
}

TEST_CASE("cli calibrate: noiseless views, too few views, rig round-trip") {
  const fs::path dir = scratch("calibrate");
  REQUIRE(run_cli("chessboard --stereo --views 5 --output " + (dir / "views.json").string()).exit_code == 0);
  const auto ok = run_cli("calibrate --input " + (dir / "views.json").string() + " --output " + (dir / "rig.json").string());
  CHECK(ok.exit_code == 0);
  INFO(ok.output);
  // Every printed rms value is far below a micro-pixel.
  std::size_t pos = 0;
  int reported = 0;
  while ((pos = ok.output.find(": rms ", pos)) != std::string::npos) {
    pos += 6;
    CHECK(std::stod(ok.output.substr(pos)) < 1e-6);
    ++reported;
  }
  CHECK(reported == 2);
  const StereoRig rig = io::load_rig(dir / "rig.json");
  CHECK(rig.baseline() == doctest::Approx(0.072).epsilon(1e-6));
  io::save_rig(dir / "rig2.json", rig);
  const StereoRig again = io::load_rig(dir / "rig2.json");
  CHECK(again.left == rig.left);
  CHECK(again.right == rig.right);
  CHECK(again.relative_rotation == rig.relative_rotation);
  CHECK(again.relative_translation == rig.relative_translation);
  CHECK(io::read_file(dir / "rig2.json") == io::read_file(dir / "rig.json"));

  REQUIRE(run_cli("chessboard --views 2 --output " + (dir / "two.json").string()).exit_code == 0);
  const auto few = run_cli("calibrate --input " + (dir / "two.json").string() + " --output " + (dir / "cam.json").string());
  CHECK(few.exit_code == 3);
  CHECK(few.output.find("needs >= 3 views") != std::string::npos);
}

TEST_CASE("cli depth on a rendered 1 m wall") {
  const fs::path dir = scratch("depth_1m");
  std::ofstream(dir / "scene.json") << wall_scene(1.0);
  REQUIRE(run_cli("render --scene " + (dir / "scene.json").string() + " --out " + dir.string()).exit_code == 0);
  const auto r = run_cli("depth --left " + (dir / "left.ppm").string() + " --right " + (dir / "right.ppm").string() +
                         " --out " + (dir / "out").string());
  REQUIRE(r.exit_code == 0);
  const json stats = read_json(dir / "out/depth_stats.json");
  CHECK(stats["median_m"].get<double>() == doctest::Approx(1.0).epsilon(0.05));
  for (const char* f : {"rectified_left.ppm", "rectified_right.ppm", "disparity.pgm", "disparity.json", "disparity_jet.ppm"}) {
    CHECK(fs::is_regular_file(dir / "out" / f));
  }

  // Jet output is black exactly where the disparity PGM is 0.
  const ImageBuffer pgm = io::read_pnm(dir / "out/disparity.pgm");
  const ImageBuffer jet = io::read_pnm(dir / "out/disparity_jet.ppm");
  REQUIRE(pgm.channels == 1);
  REQUIRE(jet.channels == 3);
  REQUIRE(pgm.width == jet.width);
  REQUIRE(pgm.height == jet.height);
  std::size_t zero = 0;
  std::size_t mismatches = 0;
  for (int v = 0; v < pgm.height; ++v) {
    for (int u = 0; u < pgm.width; ++u) {
      const bool black = jet.at(u, v, 0) == 0 && jet.at(u, v, 1) == 0 && jet.at(u, v, 2) == 0;
      const bool invalid = pgm.at(u, v, 0) == 0;
      zero += invalid;
      mismatches += black != invalid;
    }
  }
  CHECK(zero > 0);
  CHECK(mismatches == 0);
}

TEST_CASE("cli depth on uniform images is almost all invalid") {
  const fs::path dir = scratch("uniform");
  const ImageBuffer flat(kDefaultWidth, kDefaultHeight, 1, 128);
  io::write_pnm(dir / "l.pgm", flat);
  io::write_pnm(dir / "r.pgm", flat);
  const auto r = run_cli("depth --left " + (dir / "l.pgm").string() + " --right " + (dir / "r.pgm").string() +
                         " --out " + (dir / "out").string());
  REQUIRE(r.exit_code == 0);
  CHECK(read_json(dir / "out/disparity.json")["invalid_fraction"].get<double>() > 0.99);
}

TEST_CASE("cli depth rejects mismatched sizes") {
  const fs::path dir = scratch("mismatch");
  io::write_pnm(dir / "l.pgm", ImageBuffer(64, 48, 1));
  io::write_pnm(dir / "r.pgm", ImageBuffer(32, 48, 1));
  const auto r = run_cli("depth --left " + (dir / "l.pgm").string() + " --right " + (dir / "r.pgm").string() +
                         " --out " + (dir / "out").string());
  CHECK(r.exit_code == 3);
}

TEST_CASE("cli run serves health and honours --fps") {
  const std::string bin = SENTRY_CLI_PATH;
  std::array<std::string, 7> args = {bin, "run", "--port", "0", "--fps", "5", "--serial-port=0"};
  std::array<char*, 8> argv{};
  for (std::size_t i = 0; i < args.size(); ++i) argv[i] = args[i].data();
  int out[2];
  REQUIRE(pipe(out) == 0);
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, out[1], STDOUT_FILENO);
  posix_spawn_file_actions_addclose(&actions, out[0]);
  pid_t pid = 0;
  const auto t0 = std::chrono::steady_clock::now();
  REQUIRE(posix_spawn(&pid, bin.c_str(), &actions, nullptr, argv.data(), environ) == 0);
  posix_spawn_file_actions_destroy(&actions);
  close(out[1]);

  std::string line;
  char c = 0;
  while (read(out[0], &c, 1) == 1 && c != '\n') line += c;
  const auto colon = line.rfind(':');
  REQUIRE(line.rfind("serving on http://", 0) == 0);
  const int port = std::stoi(line.substr(colon + 1));

  httplib::Client client("127.0.0.1", port);
  bool healthy = false;
  while (std::chrono::steady_clock::now() - t0 < std::chrono::seconds(2)) {
    auto res = client.Get("/health");
    if (res && res->status == 200) {
      healthy = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  CHECK(healthy);

  std::this_thread::sleep_for(std::chrono::milliseconds(2500));
  auto status = client.Get("/status");
  REQUIRE(status);
  const double fps = json::parse(status->body)["fps_1s"].get<double>();
  CHECK(fps == doctest::Approx(5.0).epsilon(0.2));

  kill(pid, SIGINT);
  int wstatus = 0;
  waitpid(pid, &wstatus, 0);
  CHECK(WIFEXITED(wstatus));
  CHECK(WEXITSTATUS(wstatus) == 0);
  close(out[0]);
}
