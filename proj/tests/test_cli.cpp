// End-to-end checks of the command-line tool. Each case drives the real
// binary (path injected by the build) on small datasets in a scratch
// directory.

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "mvrep/field.hpp"
#include "mvrep/model.hpp"
#include "support/synthetic.hpp"
#include "support/testutil.hpp"

using namespace mvrep;
using mvrep::testsupport::TempDir;

#ifndef MVREP_CLI_PATH
#error "MVREP_CLI_PATH must point at the CLI binary"
#endif

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(MVREP_CLI_PATH) + " " + args +
                            " >/dev/null 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Fixture {
    TempDir tmp;
    std::filesystem::path data_manifest;

    Fixture() {
        MultiField field = testsupport::make_synthetic_field({12, 12, 8});
        data_manifest = save_dataset(field, tmp.path() / "data", "synth");
    }
    std::string dir(const std::string& name) const {
        return (tmp.path() / name).string();
    }
};

}  // namespace

TEST_CASE("cli: usage errors exit with 2") {
    CHECK(run_cli("definitely-not-a-command") == 2);
    CHECK(run_cli("train") == 2);                       // missing required flags
    CHECK(run_cli("train --data x --out y --blocks 0") == 2);
    CHECK(run_cli("train --data x --out y --epochs -3") == 2);
}

TEST_CASE("cli: missing dataset exits with 3") {
    Fixture fx;
    CHECK(run_cli("info --data " + fx.dir("nope.json")) == 3);
    CHECK(run_cli("train --data " + fx.dir("nope.json") + " --out " +
                  fx.dir("m.mvnf") + " --epochs 1") == 3);
}

TEST_CASE("cli: info on a dataset") {
    Fixture fx;
    CHECK(run_cli("info --data " + fx.data_manifest.string()) == 0);
}

TEST_CASE("cli: train, reconstruct, eval round trip") {
    Fixture fx;
    const std::string model = fx.dir("model.mvnf");
    CHECK(run_cli("train --data " + fx.data_manifest.string() + " --out " + model +
                  " --width 8 --blocks 1 --epochs 2 --batch 256 --seed 7") == 0);
    CHECK(std::filesystem::exists(model));
    CHECK(std::filesystem::exists(fx.dir("model.mvnf.train_report.json")));
    CHECK(std::filesystem::exists(fx.dir("model.run_manifest.json")));

    // model file is loadable and self-describing
    auto loaded = load_model(model);
    CHECK(loaded.config().hidden_width == 8);
    CHECK(loaded.normalizer().shape == std::vector<std::int64_t>{12, 12, 8});
    CHECK(run_cli("info --model " + model + " --data " +
                  fx.data_manifest.string()) == 0);

    CHECK(run_cli("reconstruct --model " + model + " --out " + fx.dir("recon")) == 0);
    const std::string recon_manifest = fx.dir("recon") + "/recon.json";
    MultiField recon = load_dataset(recon_manifest);
    CHECK(recon.grid().shape == std::vector<std::int64_t>{12, 12, 8});
    CHECK(recon.variable_count() == 4);

    CHECK(run_cli("eval --reference " + fx.data_manifest.string() +
                  " --candidate model=" + recon_manifest + " --which psnr stats" +
                  " --out " + fx.dir("eval")) == 0);
    CHECK(std::filesystem::exists(fx.dir("eval") + "/psnr.csv"));
    CHECK(std::filesystem::exists(fx.dir("eval") + "/stats.csv"));
    CHECK(std::filesystem::exists(fx.dir("eval") + "/eval_model.json"));
}

TEST_CASE("cli: eval of the reference against itself reports exact recovery") {
    Fixture fx;
    CHECK(run_cli("eval --reference " + fx.data_manifest.string() +
                  " --candidate self=" + fx.data_manifest.string() +
                  " --which psnr stats --out " + fx.dir("eval_self")) == 0);
    const std::string psnr_csv = slurp(fx.dir("eval_self") + "/psnr.csv");
    CHECK(psnr_csv.find("inf") != std::string::npos);
    const std::string stats_csv = slurp(fx.dir("eval_self") + "/stats.csv");
    CHECK(stats_csv.find("MEAN,self,0,0,0") != std::string::npos);
}

TEST_CASE("cli: eval rejects grid mismatch with exit 3") {
    Fixture fx;
    MultiField other = testsupport::make_synthetic_field({8, 8, 8});
    auto other_manifest = save_dataset(other, fx.tmp.path() / "other", "other");
    CHECK(run_cli("eval --reference " + fx.data_manifest.string() +
                  " --candidate bad=" + other_manifest.string() +
                  " --which psnr --out " + fx.dir("eval_bad")) == 3);
}

TEST_CASE("cli: eval rejects unknown sections with exit 2") {
    Fixture fx;
    CHECK(run_cli("eval --reference " + fx.data_manifest.string() +
                  " --candidate self=" + fx.data_manifest.string() +
                  " --which nonsense --out " + fx.dir("eval_x")) == 2);
}

TEST_CASE("cli: lerp baseline emits a loadable dataset") {
    Fixture fx;
    CHECK(run_cli("baseline lerp --data " + fx.data_manifest.string() +
                  " --factor 2,2,2 --out " + fx.dir("lerp")) == 0);
    MultiField lerp = load_dataset(fx.dir("lerp") + "/lerp.json");
    CHECK(lerp.grid().shape == std::vector<std::int64_t>{12, 12, 8});

    CHECK(run_cli("baseline lerp --data " + fx.data_manifest.string() +
                  " --factor 2,2 --out " + fx.dir("lerp2")) == 2);  // wrong arity
}

TEST_CASE("cli: copula baseline emits summary and dataset") {
    Fixture fx;
    CHECK(run_cli("baseline copula --data " + fx.data_manifest.string() +
                  " --block 4,4,4 --out " + fx.dir("cop") + " --seed 3") == 0);
    CHECK(std::filesystem::exists(fx.dir("cop") + "/copula.mvcs"));
    MultiField rec = load_dataset(fx.dir("cop") + "/copula.json");
    CHECK(rec.variable_count() == 4);

    CHECK(run_cli("baseline copula --data " + fx.data_manifest.string() +
                  " --block 4,4,4 --out " + fx.dir("cop2") + " --mode banana") == 2);
}

TEST_CASE("cli: query computes dice and masks") {
    Fixture fx;
    SUBCASE("reference against itself gives dice 1") {
        CHECK(run_cli("query --reference " + fx.data_manifest.string() +
                      " --candidate self=" + fx.data_manifest.string() +
                      " --predicate \"bump_a > 0.2 & bump_a < 0.8\" --out " +
                      fx.dir("q1")) == 0);
        const std::string csv = slurp(fx.dir("q1") + "/qdv.csv");
        CHECK(csv.find("self,1,") != std::string::npos);
        CHECK(std::filesystem::exists(fx.dir("q1") + "/mask_reference.ppm"));
        CHECK(std::filesystem::exists(fx.dir("q1") + "/mask_self.ppm"));
    }
    SUBCASE("empty-empty selection is dice 1 by convention") {
        CHECK(run_cli("query --reference " + fx.data_manifest.string() +
                      " --candidate self=" + fx.data_manifest.string() +
                      " --predicate \"bump_a > 90 & bump_a < 95\" --out " +
                      fx.dir("q2")) == 0);
        const std::string csv = slurp(fx.dir("q2") + "/qdv.csv");
        CHECK(csv.find("self,1,0,0") != std::string::npos);
    }
    SUBCASE("malformed predicate exits with 2") {
        CHECK(run_cli("query --reference " + fx.data_manifest.string() +
                      " --candidate self=" + fx.data_manifest.string() +
                      " --predicate \"bump_a >> 3\" --out " + fx.dir("q3")) == 2);
    }
    SUBCASE("unknown variable exits with 3") {
        CHECK(run_cli("query --reference " + fx.data_manifest.string() +
                      " --candidate self=" + fx.data_manifest.string() +
                      " --predicate \"nope > 0 & nope < 1\" --out " +
                      fx.dir("q4")) == 3);
    }
}

TEST_CASE("cli: render writes a ppm") {
    Fixture fx;
    CHECK(run_cli("render --data " + fx.data_manifest.string() +
                  " --var bump_a --out " + fx.dir("img.ppm")) == 0);
    std::ifstream in(fx.dir("img.ppm"), std::ios::binary);
    std::string magic(2, '\0');
    in.read(magic.data(), 2);
    CHECK(magic == "P6");

    CHECK(run_cli("render --data " + fx.data_manifest.string() +
                  " --var nope --out " + fx.dir("img2.ppm")) == 3);
}

TEST_CASE("cli: sweep emits a csv with one row per point") {
    Fixture fx;
    CHECK(run_cli("sweep --data " + fx.data_manifest.string() +
                  " --sweep blocks --blocks-list 1,2 --width 8 --epochs 1" +
                  " --batch 256 --out " + fx.dir("sweep")) == 0);
    const std::string csv = slurp(fx.dir("sweep") + "/sweep_blocks.csv");
    CHECK(csv.find("blocks=1") != std::string::npos);
    CHECK(csv.find("blocks=2") != std::string::npos);

    // storage strictly increases with depth
    MultiField field = testsupport::make_synthetic_field({12, 12, 8});
    ModelConfig c1, c2;
    c1.in_dim = c2.in_dim = 3;
    c1.out_dim = c2.out_dim = 4;
    c1.hidden_width = c2.hidden_width = 8;
    c1.num_res_blocks = 1;
    c2.num_res_blocks = 2;
    CHECK(c2.param_count() > c1.param_count());
}

TEST_CASE("cli: train rerun with identical seeds reproduces artifact checksums") {
    Fixture fx;
    const std::string args = "train --data " + fx.data_manifest.string() +
                             " --width 8 --blocks 1 --epochs 2 --batch 256 --seed 9";
    CHECK(run_cli(args + " --out " + fx.dir("a.mvnf")) == 0);
    CHECK(run_cli(args + " --out " + fx.dir("b.mvnf")) == 0);
    CHECK(fnv1a64_file(fx.dir("a.mvnf")) == fnv1a64_file(fx.dir("b.mvnf")));
}

TEST_CASE("cli: train accepts a JSON config file, flags override it") {
    Fixture fx;
    {
        std::ofstream cfg(fx.dir("train.json"));
        cfg << R"({"learning_rate": 2e-4, "epochs": 1, "batch_size": 128, "seed": 4})";
    }
    CHECK(run_cli("train --data " + fx.data_manifest.string() + " --config " +
                  fx.dir("train.json") + " --width 8 --blocks 1 --out " +
                  fx.dir("cfg.mvnf")) == 0);
    const std::string report = slurp(fx.dir("cfg.mvnf.train_report.json"));
    CHECK(report.find("\"epoch\": 0") != std::string::npos);
    CHECK(report.find("\"epoch\": 1") == std::string::npos);  // 1 epoch total

    // the same file with --epochs 2 on the command line wins
    CHECK(run_cli("train --data " + fx.data_manifest.string() + " --config " +
                  fx.dir("train.json") + " --epochs 2 --width 8 --blocks 1 --out " +
                  fx.dir("cfg2.mvnf")) == 0);
    const std::string report2 = slurp(fx.dir("cfg2.mvnf.train_report.json"));
    CHECK(report2.find("\"epoch\": 1") != std::string::npos);
}

TEST_CASE("cli: commands never mutate their input dataset") {
    Fixture fx;
    const auto before = fnv1a64_file(fx.data_manifest);
    const auto data_before = fnv1a64_file(fx.tmp.path() / "data" / "synth_bump_a.f32");
    run_cli("train --data " + fx.data_manifest.string() + " --out " +
            fx.dir("m.mvnf") + " --width 8 --blocks 1 --epochs 1 --batch 256");
    run_cli("baseline lerp --data " + fx.data_manifest.string() +
            " --factor 2,2,2 --out " + fx.dir("l"));
    run_cli("eval --reference " + fx.data_manifest.string() + " --candidate x=" +
            fx.dir("l") + "/lerp.json --which psnr --out " + fx.dir("e"));
    CHECK(fnv1a64_file(fx.data_manifest) == before);
    CHECK(fnv1a64_file(fx.tmp.path() / "data" / "synth_bump_a.f32") == data_before);
}

TEST_CASE("cli: variables sweep sizes track the parameter-count formula") {
    Fixture fx;
    CHECK(run_cli("sweep --data " + fx.data_manifest.string() +
                  " --sweep variables --counts 1,2,4 --width 8 --blocks 1" +
                  " --epochs 1 --batch 256 --out " + fx.dir("vs")) == 0);
    const std::string csv = slurp(fx.dir("vs") + "/sweep_variables.csv");

    // parse param_count column for the three rows
    std::vector<long> params;
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);  // header
    while (std::getline(lines, line)) {
        std::stringstream ss(line);
        std::string cell;
        for (int c = 0; c <= 2 && std::getline(ss, cell, ','); ++c) {
        }
        if (!cell.empty()) params.push_back(std::stol(cell));
    }
    REQUIRE(params.size() == 3);
    // output layer only: each extra variable adds W+1 = 9 parameters
    CHECK(params[1] - params[0] == 9);
    CHECK(params[2] - params[1] == 18);
}
