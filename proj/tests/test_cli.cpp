#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fgsm/cli.hpp"
#include "fgsm/harness.hpp"

using namespace fgsm;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code;
    std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
    args.insert(args.begin(), "fgsm_lab");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("fgsm_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

const char* kReport = "epochs,mode,epsilon,seed,n_samples,clean_acc,success_rate,failures,mean_adv_conf,max_adv_conf\n"
                      "10,targeted,0.05,0,5,1,0.4,3,0.589,0.9\n"
                      "10,untargeted,0.04,0,5,1,1,0,0.3861,0.5\n";

} // namespace

TEST_F(CliTest, UsageErrors) {
    EXPECT_EQ(cli({}).code, exit_usage);
    EXPECT_EQ(cli({"fly"}).code, exit_usage);
    EXPECT_EQ(cli({"train", "--data", "synth"}).code, exit_usage);  // --out missing
    EXPECT_EQ(cli({"attack", "--model", "m", "--image", "i", "--mode", "sideways", "--epsilon", "0.1", "--label", "0",
                   "--out", "o.ppm"})
                  .code,
              exit_usage);
    EXPECT_EQ(cli({"report", "--in", "x.csv", "--format", "xml"}).code, exit_usage);
    EXPECT_EQ(cli({"shapes", "--input", "32,x,3"}).code, exit_usage);
    EXPECT_EQ(cli({"--help"}).code, exit_ok);
}

TEST_F(CliTest, ShapesPrintsVggTable) {
    const CliRun r = cli({"shapes"});
    ASSERT_EQ(r.code, exit_ok) << r.err;
    EXPECT_NE(r.out.find("(224, 224, 64)"), std::string::npos);
    EXPECT_NE(r.out.find("(7, 7, 512)"), std::string::npos);
    EXPECT_NE(r.out.find("(25088)"), std::string::npos);
    EXPECT_EQ(r.out.substr(r.out.size() - 4), "(5)\n");

    const CliRun s = cli({"shapes", "--config", "small", "--input", "8,8,1", "--classes", "3"});
    ASSERT_EQ(s.code, exit_ok) << s.err;
    EXPECT_NE(s.out.find("(8, 8, 1)"), std::string::npos);
    EXPECT_EQ(s.out.substr(s.out.size() - 4), "(3)\n");
    EXPECT_EQ(cli({"shapes", "--config", "small", "--input", "3,3,1"}).code, exit_data);
}

TEST_F(CliTest, ReportFormats) {
    std::ofstream(path("r.csv")) << kReport;
    const CliRun summary = cli({"report", "--in", path("r.csv"), "--format", "summary"});
    ASSERT_EQ(summary.code, exit_ok) << summary.err;
    EXPECT_EQ(summary.out, "10, Targeted, 0.05, 58.90%\n10, Untargeted, 0.04, 38.61%\n");

    const CliRun rate = cli({"report", "--in", path("r.csv"), "--format", "summary", "--metric", "success_rate"});
    EXPECT_EQ(rate.out, "10, Targeted, 0.05, 40.00%\n10, Untargeted, 0.04, 100.00%\n");

    const CliRun csv = cli({"report", "--in", path("r.csv"), "--format", "csv"});
    EXPECT_EQ(csv.out, kReport);

    const CliRun filtered = cli({"report", "--in", path("r.csv"), "--format", "csv", "--filter", "mode=untargeted"});
    EXPECT_EQ(filtered.out, std::string(report_csv_header) + "\n10,untargeted,0.04,0,5,1,1,0,0.3861,0.5\n");

    const CliRun table = cli({"report", "--in", path("r.csv")});
    EXPECT_NE(table.out.find("Untargeted"), std::string::npos);
    EXPECT_NE(table.out.find("38.61%"), std::string::npos);

    EXPECT_EQ(cli({"report", "--in", path("r.csv"), "--filter", "colour=red"}).code, exit_usage);
}

TEST_F(CliTest, ReportBadInputs) {
    EXPECT_EQ(cli({"report", "--in", path("missing.csv")}).code, exit_data);
    std::ofstream(path("bad.csv")) << "epochs,mode\n1,targeted\n";
    const CliRun r = cli({"report", "--in", path("bad.csv")});
    EXPECT_EQ(r.code, exit_data);
    EXPECT_NE(r.err.find("bad.csv"), std::string::npos);
}

TEST_F(CliTest, TrainThenAttack) {
    const CliRun t = cli({"train", "--data", "synth", "--epochs", "2", "--seed", "3", "--out", path("m.fgsm"), "--history",
                       path("h.csv")});
    ASSERT_EQ(t.code, exit_ok) << t.err;
    EXPECT_NE(t.out.find("epoch   2"), std::string::npos);
    EXPECT_TRUE(fs::exists(path("m.fgsm")));
    const std::string history = slurp(path("h.csv"));
    EXPECT_EQ(std::count(history.begin(), history.end(), '\n'), 3);

    const Dataset ds = synth_dataset(5, 1, 32, 9);
    write_image(path("x.tnsr"), ds.images[0]);
    const CliRun a = cli({"attack", "--model", path("m.fgsm"), "--image", path("x.tnsr"), "--mode", "untargeted",
                       "--epsilon", "0.05", "--label", std::to_string(ds.labels[0]), "--out", path("adv.tnsr"),
                       "--eta", path("eta.tnsr")});
    ASSERT_EQ(a.code, exit_ok) << a.err;
    EXPECT_NE(a.out.find("mode untargeted, epsilon 0.05"), std::string::npos);
    const Tensor adv = read_image(path("adv.tnsr"));
    const Tensor eta = load_tensor(path("eta.tnsr"));
    for (std::size_t i = 0; i < adv.size(); ++i) {
        EXPECT_LE(std::abs(adv[i] - ds.images[0][i]), 0.05f + 1e-6f);
        EXPECT_LE(std::abs(eta[i]), 0.05f + 1e-6f);
    }

    // A small grayscale PGM is resized to the model input; PPM outputs are written.
    write_image(path("g.pgm"), Tensor(Shape{10, 12, 1}, 0.5f));
    const CliRun g = cli({"attack", "--model", path("m.fgsm"), "--image", path("g.pgm"), "--mode", "targeted",
                       "--epsilon", "0.02", "--target", "4", "--label", "0", "--out", path("adv.ppm"), "--eta",
                       path("eta.ppm")});
    ASSERT_EQ(g.code, exit_ok) << g.err;
    EXPECT_NE(g.out.find("target 4"), std::string::npos);
    EXPECT_EQ(read_image(path("adv.ppm")).shape(), (Shape{32, 32, 3}));

    EXPECT_EQ(cli({"attack", "--model", path("m.fgsm"), "--image", path("x.tnsr"), "--mode", "untargeted",
                   "--epsilon", "0.05", "--target", "1", "--label", "0", "--out", path("o.tnsr")})
                  .code,
              exit_usage);
    EXPECT_EQ(cli({"attack", "--model", path("m.fgsm"), "--image", path("x.tnsr"), "--mode", "targeted", "--epsilon",
                   "0.05", "--target", "9", "--label", "0", "--out", path("o.tnsr")})
                  .code,
              exit_usage);
}

TEST_F(CliTest, AttackBadFiles) {
    std::ofstream(path("junk.fgsm")) << "not a model";
    write_image(path("x.tnsr"), Tensor(Shape{32, 32, 3}, 0.5f));
    const CliRun r = cli({"attack", "--model", path("junk.fgsm"), "--image", path("x.tnsr"), "--mode", "untargeted",
                       "--epsilon", "0.05", "--label", "0", "--out", path("o.tnsr")});
    EXPECT_EQ(r.code, exit_data);
    EXPECT_FALSE(r.err.empty());
    EXPECT_EQ(cli({"train", "--data", path("nowhere"), "--out", path("m.fgsm")}).code, exit_data);
}

TEST_F(CliTest, SweepIsByteIdentical) {
    const std::vector<std::string> common = {"sweep",     "--data",    "synth",     "--epochs", "1,2",
                                             "--epsilons", "0.01,0.05", "--seeds",  "7",        "--samples",
                                             "5",         "--quiet"};
    auto with_out = [&](const std::string& out) {
        auto args = common;
        args.insert(args.end(), {"--out", out});
        return args;
    };
    const CliRun a = cli(with_out(path("a.csv")));
    ASSERT_EQ(a.code, exit_ok) << a.err;
    EXPECT_EQ(a.out, "wrote 8 rows to " + path("a.csv") + "\n");
    ASSERT_EQ(cli(with_out(path("b.csv"))).code, exit_ok);
    EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
    EXPECT_EQ(parse_csv(slurp(path("a.csv"))).size(), 8u);
}
