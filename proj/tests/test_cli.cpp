/*
 * facefit - 3D morphable face model fitting from 2D observations.
 *
 * File: tests/test_cli.cpp
 *
 * Copyright 2026 The facefit authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 * Exit-code and end-to-end behavior of the command-line tool.
 */
#include "facefit/util.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <random>

namespace {

struct TempDir
{
    std::filesystem::path path;

    TempDir()
    {
        path = std::filesystem::temp_directory_path() /
               ("facefit_cli_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }

    std::string file(const std::string& name) const { return (path / name).string(); }
};

int run_cli(const std::string& args, const std::string& log)
{
    const std::string cmd = std::string(FACEFIT_CLI_PATH) + " " + args + " > " + log + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("exit codes: 0 success, 1 data failure, 2 usage error")
{
    TempDir dir;
    const std::string log = dir.file("out.log");

    // Usage errors.
    CHECK(run_cli("no-such-command", log) == 2);
    CHECK(run_cli("check-grad --trials 0", log) == 2);
    CHECK(run_cli("fit --model missing.json", log) == 2); // missing required --landmarks
    CHECK(run_cli("--help", log) == 0);

    // Data failures.
    CHECK(run_cli("synth-model --seed 1 -Q 100 --id 2 --exp 1 --out " + dir.file("m.json"), log) == 1);
    REQUIRE(run_cli("synth-model --seed 1 -Q 42 --id 2 --exp 1 --out " + dir.file("m.json"), log) == 0);
    CHECK(run_cli("fit --model " + dir.file("m.json") + " --landmarks " + dir.file("absent.csv"), log) ==
          1);

    // Gradient check: pass and the corrupted negative control.
    CHECK(run_cli("check-grad --trials 3 --seed 2 -Q 42 --id 2 --exp 1", log) == 0);
    CHECK(run_cli("check-grad --trials 3 --seed 2 -Q 42 --id 2 --exp 1 --corrupt", log) == 1);
}

TEST_CASE("zero contour weight gives the same fit as omitting the contour file")
{
    TempDir dir;
    const std::string log = dir.file("out.log");
    REQUIRE(run_cli("synth-model --seed 5 -Q 162 --id 3 --exp 2 --out " + dir.file("m.json"), log) == 0);
    REQUIRE(run_cli("synth-scene --model " + dir.file("m.json") + " --out-prefix " + dir.file("s") +
                        " --yaw-deg 30 --p-sigma 0.3 --noise 1 --seed 6",
                    log) == 0);

    REQUIRE(run_cli("fit --model " + dir.file("m.json") + " --landmarks " + dir.file("s.landmarks.csv") +
                        " --contour " + dir.file("s.contour.csv") + " --lambda-pr 0 --lambda-c 0" +
                        " --out-dir " + dir.file("with_contour"),
                    log) == 0);
    REQUIRE(run_cli("fit --model " + dir.file("m.json") + " --landmarks " + dir.file("s.landmarks.csv") +
                        " --no-contour --lambda-pr 0 --lambda-c 0 --out-dir " + dir.file("without"),
                    log) == 0);

    const auto a = nlohmann::json::parse(
        facefit::read_file(dir.file("with_contour") + "/s.landmarks.fit.json"));
    const auto b = nlohmann::json::parse(facefit::read_file(dir.file("without") + "/s.landmarks.fit.json"));
    CHECK(a.at("m") == b.at("m"));
    CHECK(a.at("p") == b.at("p"));
}

TEST_CASE("batch fit continues past a broken input and reports failure")
{
    TempDir dir;
    const std::string log = dir.file("out.log");
    REQUIRE(run_cli("synth-model --seed 7 -Q 162 --id 3 --exp 2 --out " + dir.file("m.json"), log) == 0);
    REQUIRE(run_cli("synth-scene --model " + dir.file("m.json") + " --out-prefix " + dir.file("ok") +
                        " --yaw-deg 10 --noise 0.5 --seed 8",
                    log) == 0);
    CHECK(run_cli("fit --model " + dir.file("m.json") + " --landmarks " + dir.file("ok.landmarks.csv") +
                      " --landmarks " + dir.file("broken.csv") + " --lambda-pr 0 --out-dir " +
                      dir.file("out"),
                  log) == 1);
    // The good input was still written.
    CHECK(std::filesystem::exists(dir.file("out") + "/ok.landmarks.fit.json"));
}

TEST_SUITE_END();
