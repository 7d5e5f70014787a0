// Exit-code contract and determinism of the command-line tool.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

struct CliFixture {
    fs::path dir;
    std::string cli = ROITR_CLI_PATH;

    CliFixture() {
        dir = fs::temp_directory_path() / "roitr_cli_test";
        fs::remove_all(dir);
        fs::create_directories(dir);
        std::ofstream cfg(file("cfg.json"));
        cfg << R"({"k_neighbors": 4,
                   "encoder": [{"ratio":1,"channels":16,"num_pal":1},
                               {"ratio":4,"channels":16,"num_pal":1}],
                   "global": {"blocks":1,"channels":16},
                   "match": {"num_superpoint_corr":16,"min_confidence":0.0}})";
    }
    ~CliFixture() { fs::remove_all(dir); }

    std::string file(const std::string& name) const { return (dir / name).string(); }

    int run(const std::string& args) const {
        const std::string cmd = "\"" + cli + "\" " + args + " > /dev/null 2>&1";
        const int rc = std::system(cmd.c_str());
        return WEXITSTATUS(rc);
    }

    std::string slurp(const std::string& path) const {
        std::ifstream in(path);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }
};

}  // namespace

TEST_CASE("cli end to end") {
    CliFixture fx;

    SUBCASE("gen is deterministic per seed") {
        REQUIRE(fx.run("gen --n 64 --seed 5 --out-a " + fx.file("a1.xyz") + " --out-b " +
                       fx.file("b1.xyz")) == 0);
        REQUIRE(fx.run("gen --n 64 --seed 5 --out-a " + fx.file("a2.xyz") + " --out-b " +
                       fx.file("b2.xyz")) == 0);
        CHECK(fx.slurp(fx.file("a1.xyz")) == fx.slurp(fx.file("a2.xyz")));
        CHECK(fx.slurp(fx.file("b1.xyz")) == fx.slurp(fx.file("b2.xyz")));
    }

    SUBCASE("match is deterministic and honors the exit contract") {
        REQUIRE(fx.run("gen --n 128 --overlap 0.9 --seed 7 --out-a " + fx.file("a.xyz") +
                       " --out-b " + fx.file("b.xyz")) == 0);
        const std::string base_args = "match " + fx.file("a.xyz") + " " + fx.file("b.xyz") +
                                      " --config " + fx.file("cfg.json") + " --seed 3 --output ";
        CHECK(fx.run(base_args + fx.file("c1.txt")) == 0);
        CHECK(fx.run(base_args + fx.file("c2.txt")) == 0);
        // header embeds the output-independent hash; bodies must agree
        CHECK(fx.slurp(fx.file("c1.txt")) == fx.slurp(fx.file("c2.txt")));

        // unreadable cloud -> parse failure
        CHECK(fx.run("match " + fx.file("missing.xyz") + " " + fx.file("b.xyz")) == 1);
    }

    SUBCASE("normals are required unless estimation is requested") {
        std::ofstream bare(fx.file("bare.xyz"));
        for (int i = 0; i < 128; ++i)
            bare << (i % 8) * 0.1 << " " << (i / 8 % 4) * 0.1 << " " << (i / 32) * 0.37 + 0.01 * (i % 5)
                 << "\n";
        bare.close();
        const std::string pair = fx.file("bare.xyz") + " " + fx.file("bare.xyz");
        CHECK(fx.run("match " + pair + " --config " + fx.file("cfg.json")) == 1);
        const int rc = fx.run("match " + pair + " --config " + fx.file("cfg.json") +
                              " --estimate-normals --output " + fx.file("bare_corr.txt"));
        CHECK((rc == 0 || rc == 2));
    }

    SUBCASE("weight files round-trip through match and selftest") {
        REQUIRE(fx.run("init-weights --config " + fx.file("cfg.json") + " --seed 9 --output " +
                       fx.file("model.rtw")) == 0);
        REQUIRE(fx.run("gen --n 128 --overlap 0.9 --seed 8 --out-a " + fx.file("wa.xyz") +
                       " --out-b " + fx.file("wb.xyz")) == 0);
        CHECK(fx.run("match " + fx.file("wa.xyz") + " " + fx.file("wb.xyz") + " --config " +
                     fx.file("cfg.json") + " --weights " + fx.file("model.rtw")) == 0);

        // weights built for a different architecture -> config mismatch
        CHECK(fx.run("match " + fx.file("wa.xyz") + " " + fx.file("wb.xyz") + " --weights " +
                     fx.file("model.rtw")) == 3);

        // corrupted weight file -> config mismatch through selftest
        std::fstream f(fx.file("model.rtw"),
                       std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.write("GARBAGE!", 8);
        f.close();
        CHECK(fx.run("selftest --weights " + fx.file("model.rtw")) == 3);
    }

    SUBCASE("unknown config keys fail fast") {
        std::ofstream bad(fx.file("bad.json"));
        bad << R"({"surprise": true})";
        bad.close();
        REQUIRE(fx.run("gen --n 64 --seed 1 --out-a " + fx.file("ka.xyz") + " --out-b " +
                       fx.file("kb.xyz")) == 0);
        CHECK(fx.run("match " + fx.file("ka.xyz") + " " + fx.file("kb.xyz") + " --config " +
                     fx.file("bad.json")) == 3);
    }
}
