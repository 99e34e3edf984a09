#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mte/dataset.hpp"

namespace fs = std::filesystem;

namespace {

const char* kCli = MTE_CLI_PATH;

struct Sandbox {
    fs::path dir;
    Sandbox() {
        dir = fs::temp_directory_path() /
              ("mte_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        fs::create_directories(dir);
    }
    ~Sandbox() { fs::remove_all(dir); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string path(const std::string& name) const { return (dir / name).string(); }
};

int run(const std::string& args, int workers = 1) {
    const std::string cmd = "MTE_WORKERS=" + std::to_string(workers) + " " + std::string(kCli) +
                            " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_world_config(const std::string& path, int states, int agents) {
    std::ofstream out(path);
    out << "[run]\nseed = 5\n"
        << "[population]\nstates = " << states << "\nagents_per_state = " << agents
        << "\nhours_cap = 80\nseed = 5\nkappa0 = 90\nkappa1 = 25\n"
        << "[population.theta2]\nfamily = constant\nvalue = 0.625\n"
        << "[population.nu]\nfamily = uniform\nlow = 0\nhigh = 300\n"
        << "[population.instrument]\nmeanlog = 0\nsdlog = 1.2\n"
        << "[population.program]\ng = 300\nt = 0.5\nr = 0\n"
        << "[population.wage]\nintercept = 2.302585092994046\nsd = 0\n"
        << "[population.nonlabor]\np_zero = 1\n"
        << "[estimate]\nknots = 5\nwindow = 0.25:0.66\ninteractions = none\n"
        << "[bootstrap]\nreplicates = 30\n"
        << "[counterfactual]\nscenarios = demo\n"
        << "[scenario.demo]\np_target = 0.45\nguarantee = 350\n";
}

}  // namespace

TEST_CASE("cli: simulate -> estimate -> bootstrap -> diagnose -> counterfactual") {
    Sandbox sb;
    write_world_config(sb.path("world.conf"), 25, 120);

    REQUIRE(run("simulate --config " + sb.path("world.conf") + " --truth --out " + sb.path("sim")) == 0);
    REQUIRE(fs::exists(sb.path("sim/dataset.csv")));
    REQUIRE(fs::exists(sb.path("sim/true_mte.csv")));
    const mte::Dataset data = mte::read_dataset(sb.path("sim/dataset.csv"));
    CHECK(data.n() == 25 * 120);

    REQUIRE(run("estimate --config " + sb.path("world.conf") + " --in " + sb.path("sim/dataset.csv") +
                " --out " + sb.path("est")) == 0);
    for (const char* name : {"mte_curve.csv", "first_stage.csv", "second_stage.csv",
                             "mte_curve.svg", "summary.json"}) {
        CHECK(fs::exists(sb.path("est") + "/" + name));
    }
    const std::string curve = slurp(sb.path("est/mte_curve.csv"));
    CHECK(curve.rfind("F,mte,lo95,hi95\n", 0) == 0);

    REQUIRE(run("bootstrap --config " + sb.path("world.conf") + " --in " + sb.path("sim/dataset.csv") +
                " --boot 25 --seed 7 --out " + sb.path("boot")) == 0);
    const std::string banded = slurp(sb.path("boot/mte_curve.csv"));
    // bands populated: no ",," in data rows
    CHECK(banded.find(",,") == std::string::npos);

    REQUIRE(run("diagnose --config " + sb.path("world.conf") + " --in " + sb.path("sim/dataset.csv") +
                " --out " + sb.path("diag")) == 0);
    const std::string diag = slurp(sb.path("diag/diagnostics.csv"));
    CHECK(diag.find("segment_f_tercile") != std::string::npos);
    CHECK(diag.find("gcv,selected") != std::string::npos);
    CHECK(diag.find("gps_balance") != std::string::npos);

    REQUIRE(run("counterfactual --config " + sb.path("world.conf") + " --in " +
                sb.path("sim/dataset.csv") + " --boot 25 --seed 7 --out " + sb.path("cf")) == 0);
    const std::string cf = slurp(sb.path("cf/counterfactual.csv"));
    CHECK(cf.find("demo,") != std::string::npos);
}

TEST_CASE("cli: reruns are byte-identical and worker-count invariant") {
    Sandbox sb;
    write_world_config(sb.path("world.conf"), 20, 80);
    REQUIRE(run("simulate --config " + sb.path("world.conf") + " --out " + sb.path("s1"), 1) == 0);
    REQUIRE(run("simulate --config " + sb.path("world.conf") + " --out " + sb.path("s2"), 4) == 0);
    CHECK(slurp(sb.path("s1/dataset.csv")) == slurp(sb.path("s2/dataset.csv")));

    REQUIRE(run("bootstrap --config " + sb.path("world.conf") + " --in " + sb.path("s1/dataset.csv") +
                " --boot 20 --seed 11 --out " + sb.path("b1"), 1) == 0);
    REQUIRE(run("bootstrap --config " + sb.path("world.conf") + " --in " + sb.path("s2/dataset.csv") +
                " --boot 20 --seed 11 --out " + sb.path("b2"), 4) == 0);
    for (const char* name : {"mte_curve.csv", "first_stage.csv", "second_stage.csv",
                             "mte_curve.svg", "summary.json"}) {
        CHECK(slurp(sb.path("b1") + "/" + name) == slurp(sb.path("b2") + "/" + name));
    }
}

TEST_CASE("cli: missing input fails with nonzero exit and no artifacts") {
    Sandbox sb;
    write_world_config(sb.path("world.conf"), 5, 20);
    CHECK(run("estimate --config " + sb.path("world.conf") + " --in " + sb.path("nope.csv") +
              " --out " + sb.path("fail")) != 0);
    CHECK_FALSE(fs::exists(sb.path("fail/mte_curve.csv")));
    CHECK_FALSE(fs::exists(sb.path("fail/first_stage.csv")));
}

TEST_CASE("cli: bad subcommand or missing config fail cleanly") {
    Sandbox sb;
    CHECK(run("frobnicate") != 0);
    CHECK(run("simulate --config " + sb.path("missing.conf")) != 0);
}
