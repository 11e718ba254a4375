#include "vandisc/cli.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace vandisc;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out, err;
};

Run invoke(std::vector<std::string> args)
{
    std::ostringstream out, err;
    Run r;
    r.code = cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("vandisc_cli_test_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& file)
{
    std::ifstream in(file, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("cli rejects bad arguments with exit code 1")
{
    const auto dir = scratch("bad");
    auto r = invoke({"solve-hjb", "--problem", "builtin:decay_quadratic", "--lambda", "0", "--out", dir.string()});
    CHECK(r.code == cli::kExitError);
    CHECK(r.err.find("lambda must be positive") != std::string::npos);

    r = invoke({"solve-hjb", "--problem", "builtin:decay_quadratic", "--lambda", "-1", "--out", dir.string()});
    CHECK(r.code == cli::kExitError);

    CHECK(invoke({"no-such-command"}).code == cli::kExitError);
    CHECK(invoke({}).code == cli::kExitError);
    CHECK(invoke({"solve-hjb", "--problem", "builtin:nope", "--out", dir.string()}).code == cli::kExitError);
    CHECK(invoke({"sweep-lambda", "--problem", "builtin:constant_cost", "--lambdas", "1,x", "--out", dir.string()})
              .code == cli::kExitError);
    CHECK(invoke({"sweep-lambda", "--problem", "builtin:constant_cost", "--lambdas", "1,2,3", "--out", dir.string()})
              .code == cli::kExitError);
    CHECK(invoke({"bsde", "--problem", "builtin:decay_quadratic", "--x0", "3", "--out", dir.string()}).code ==
          cli::kExitError);
    CHECK(invoke({"--version"}).code == cli::kExitPass);
    fs::remove_all(dir);
}

TEST_CASE("solve-hjb writes the field, summary and manifest")
{
    const auto dir = scratch("hjb");
    const auto r = invoke({"solve-hjb", "--problem", "builtin:decay_quadratic", "--lambda", "0.5", "--grid-n", "41",
                           "--out", dir.string()});
    REQUIRE(r.code == cli::kExitPass);
    const auto summary = nlohmann::json::parse(slurp(dir / "hjb_summary.json"));
    CHECK(summary["residual_norm"].get<double>() < 1e-8);

    std::ifstream csv(dir / "hjb_field.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "x1,lambda_V,policy_index");
    std::size_t rows = 0;
    for (std::string line; std::getline(csv, line);)
        ++rows;
    CHECK(rows == 41);

    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest["subcommand"] == "solve-hjb");
    CHECK(manifest["problem_name"] == "decay_quadratic");
    CHECK(manifest["seed"] == 1);
    CHECK(manifest["status"] == "pass");
    CHECK(manifest["problem_hash"].get<std::string>().size() == 16);
    CHECK(manifest["outputs"].size() == 2);
    CHECK(manifest["argv"][0] == "solve-hjb");
    fs::remove_all(dir);
}

TEST_CASE("condition failures exit with code 2")
{
    const auto dir = scratch("cond");
    auto r = invoke({"check-conditions", "--problem", "builtin:expanding", "--skip-probe", "--pairs", "200", "--out",
                     dir.string()});
    CHECK(r.code == cli::kExitConditionFailed);
    auto report = nlohmann::json::parse(slurp(dir / "conditions.json"));
    CHECK(report["h3"]["status"] == "fail");
    CHECK(nlohmann::json::parse(slurp(dir / "manifest.json"))["status"] == "condition_failed");

    r = invoke({"check-conditions", "--problem", "builtin:split_homogeneous", "--skip-probe", "--pairs", "200",
                "--out", dir.string()});
    CHECK(r.code == cli::kExitPass);
    report = nlohmann::json::parse(slurp(dir / "conditions.json"));
    CHECK(report["h3"]["status"] == "pass");
    CHECK(report["radial"]["status"] == "pass");
    fs::remove_all(dir);
}

TEST_CASE("same seed replays byte-identical outputs across thread counts")
{
    const auto a = scratch("replay_a");
    const auto b = scratch("replay_b");
    const std::vector<std::string> base = {"bsde", "--problem", "builtin:decay_quadratic", "--paths", "200",
                                           "--dt", "0.02", "--dump-paths", "1", "--seed", "5"};
    auto args_a = base;
    args_a.insert(args_a.end(), {"--threads", "1", "--out", a.string()});
    auto args_b = base;
    args_b.insert(args_b.end(), {"--threads", "3", "--out", b.string()});
    REQUIRE(invoke(args_a).code == cli::kExitPass);
    REQUIRE(invoke(args_b).code == cli::kExitPass);
    for (const char* file : {"bsde_summary.json", "bsde_path.csv", "state_path_0.csv"})
        CHECK(slurp(a / file) == slurp(b / file));
    CHECK(!slurp(a / "bsde_summary.json").empty());
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("rerunning a manifest reproduces every output")
{
    const auto a = scratch("manifest_a");
    const auto b = scratch("manifest_b");
    REQUIRE(invoke({"sweep-lambda", "--problem", "builtin:decay_quadratic", "--lambdas", "1,0.25,0.0625", "--grid-n",
                    "51", "--seed", "3", "--out", a.string()})
                .code == cli::kExitPass);
    const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
    auto argv = manifest["argv"].get<std::vector<std::string>>();
    for (std::size_t i = 0; i + 1 < argv.size(); ++i)
        if (argv[i] == "--out")
            argv[i + 1] = b.string();
    REQUIRE(invoke(argv).code == cli::kExitPass);
    for (const auto& file : manifest["outputs"])
        CHECK(slurp(a / file.get<std::string>()) == slurp(b / file.get<std::string>()));
    CHECK(manifest["outputs"].size() == 5);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("remaining subcommands run end to end")
{
    const auto dir = scratch("misc");
    CHECK(invoke({"sweep-lambda", "--problem", "builtin:constant_cost", "--grid-n", "21", "--lambdas", "1,0.5,0.25",
                  "--out", dir.string()})
              .code == cli::kExitPass);
    CHECK(fs::exists(dir / "sweep_summary.json"));
    CHECK(fs::exists(dir / "w0.csv"));

    CHECK(invoke({"represent", "--problem", "builtin:decay_quadratic", "--x", "0.5", "--paths", "100", "--tgrid-n",
                  "4", "--out", dir.string()})
              .code == cli::kExitPass);
    const auto rep = nlohmann::json::parse(slurp(dir / "representation.json"));
    CHECK(rep["value"].get<double>() >= 0.0);
    // Two constant controls, no feedback policy without a solved field.
    CHECK(rep["cells"].size() == 4 * 2);

    CHECK(invoke({"dpp-check", "--problem", "builtin:constant_cost", "--grid-n", "21", "--paths", "50", "--out",
                  dir.string()})
              .code == cli::kExitPass);
    CHECK(invoke({"audit", "--problem", "builtin:decay_quadratic", "--samples", "200", "--paths", "2", "--out",
                  dir.string()})
              .code == cli::kExitPass);
    fs::remove_all(dir);
}
