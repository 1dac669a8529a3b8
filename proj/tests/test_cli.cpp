#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <fstream>
#include <sstream>

#include "hetcouple/cli.hpp"

using namespace hetcouple;
namespace fs = std::filesystem;

namespace {

KeyValues parse(const std::string& text) {
    std::istringstream in(text);
    return parse_key_values(in);
}

fs::path scratch_dir(const std::string& tag) {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    auto p = fs::temp_directory_path() /
             ("hetcouple_" + std::string(info->name()) + "_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string first_line(const fs::path& p) {
    std::ifstream f(p);
    std::string line;
    std::getline(f, line);
    return line;
}

RunConfig config(KeyValues over) { return resolve_config({}, over); }

int run_binary(const std::string& args) {
    const std::string cmd = std::string(HETCOUPLE_BIN) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(ParseKeyValues, CommentsAndWhitespace) {
    const auto kv = parse("# header\n\n  L0 = 14   # interface\nlambda=opt\r\n\tsweep_values = 8, 10 ,12\n");
    ASSERT_EQ(kv.size(), 3u);
    EXPECT_EQ(kv.at("L0"), "14");
    EXPECT_EQ(kv.at("lambda"), "opt");
    EXPECT_EQ(kv.at("sweep_values"), "8, 10 ,12");
}

TEST(ParseKeyValues, Errors) {
    EXPECT_THROW(parse("L0 14\n"), ConfigError);
    EXPECT_THROW(parse("bogus = 1\n"), ConfigError);
    EXPECT_THROW(parse("L0 =\n"), ConfigError);
    EXPECT_THROW(parse("L0 = 1\nL0 = 2\n"), ConfigError);
    EXPECT_THROW(read_config_file("/nonexistent/hetcouple.cfg"), ConfigError);
}

TEST(ResolveConfig, PresetDefaults) {
    const auto r = resolve_config({});
    EXPECT_EQ(r.preset, "rect1");
    EXPECT_EQ(r.scenario, Scenario::Rect);
    EXPECT_EQ(r.L0, 16.0);
    EXPECT_FALSE(r.lambda.has_value());
    EXPECT_EQ(r.nz(), 10);
    EXPECT_EQ(r.sweep_values.size(), 9u);
    EXPECT_EQ(r.defaults_used.size(), r.entries.size());
    const auto f = config({{"preset", "funnel2"}});
    EXPECT_EQ(f.scenario, Scenario::Funnel);
    EXPECT_EQ(f.forcing, ForcingKind::Constant);
    EXPECT_EQ(f.length(), 2.0);
    EXPECT_EQ(f.nz(), 10);
    EXPECT_THROW(config({{"preset", "rect2"}}), ConfigError);
}

TEST(ResolveConfig, OverridesWinOverFile) {
    const auto r = resolve_config({{"L0", "12"}, {"tol", "1e-9"}}, {{"L0", "14"}, {"lambda", "0.5"}});
    EXPECT_EQ(r.L0, 14.0);
    EXPECT_EQ(r.tol, 1e-9);
    EXPECT_EQ(*r.lambda, 0.5);
    for (const char* k : {"L0", "tol", "lambda"})
        EXPECT_EQ(std::count(r.defaults_used.begin(), r.defaults_used.end(), k), 0) << k;
    EXPECT_EQ(std::count(r.defaults_used.begin(), r.defaults_used.end(), "kappa"), 1);
}

TEST(ResolveConfig, CellCountsReplaceSpacings) {
    const auto r = config({{"nx", "200"}, {"nz", "5"}});
    EXPECT_DOUBLE_EQ(r.hx, 0.1);
    EXPECT_DOUBLE_EQ(r.hz, 0.1);
    EXPECT_EQ(r.nz(), 5);
}

TEST(ResolveConfig, RejectsBadValues) {
    EXPECT_THROW(config({{"L0", "abc"}}), ConfigError);
    EXPECT_THROW(config({{"L0", "14x"}}), ConfigError);
    EXPECT_THROW(config({{"lambda", "-1"}}), ConfigError);
    EXPECT_THROW(config({{"tol", "0"}}), ConfigError);
    EXPECT_THROW(config({{"max_iter", "2.5"}}), ConfigError);
    EXPECT_THROW(config({{"sweep", "random"}}), ConfigError);
    EXPECT_THROW(config({{"scenario", "disc"}}), ConfigError);
    EXPECT_THROW(config({{"jobs", "-2"}}), ConfigError);
    EXPECT_THROW(config({{"hx", "0"}}), ConfigError);
    EXPECT_THROW(config({{"unknown", "1"}}), ConfigError);
}

TEST(ConfigHash, CanonicalAndSelective) {
    const auto h = config_hash(config({}));
    EXPECT_EQ(h.size(), 16u);
    EXPECT_EQ(h.find_first_not_of("0123456789abcdef"), std::string::npos);
    EXPECT_EQ(config_hash(config({{"L0", "16.0"}})), h);
    EXPECT_EQ(config_hash(config({{"L0", "1.6e1"}})), h);
    EXPECT_EQ(config_hash(config({{"out", "elsewhere"}, {"jobs", "3"}})), h);
    EXPECT_EQ(config_hash(config({{"sweep_values", " 8,10, 12,14,16 ,17,18,18.50,19"}})), h);
    EXPECT_NE(config_hash(config({{"sweep_values", "8,10"}})), h);
    EXPECT_NE(config_hash(config({{"L0", "14"}})), h);
    EXPECT_NE(config_hash(config({{"preset", "funnel2"}})), h);
}

TEST(Format, FullPrecision) {
    EXPECT_EQ(cli::fmt(0.1), "1.0000000000000001e-01");
    EXPECT_EQ(cli::fmt(-2.0), "-2.0000000000000000e+00");
    EXPECT_EQ(cli::fmt(NAN), "nan");
}

TEST(Commands, ReferenceCreatesNestedOutputDirectory) {
    const auto root = scratch_dir("ref");
    const auto out = root / "a" / "b";
    auto c = config({{"preset", "funnel2"}, {"out", out.string()}});
    std::ostringstream log;
    EXPECT_EQ(cli::cmd_reference(c, log), cli::Ok);
    const std::string header = "# config_hash=" + config_hash(c);
    EXPECT_EQ(first_line(out / "field.csv"), header);
    EXPECT_EQ(first_line(out / "reference.plt"), header);
    const auto meta = nlohmann::json::parse(slurp(out / "meta.json"));
    EXPECT_EQ(meta["config_hash"], config_hash(c));
    EXPECT_EQ(meta["command"], "reference");
    EXPECT_EQ(nlohmann::ordered_json::parse(slurp(out / "meta.json")).begin().key(), "config_hash");
    fs::remove_all(root);
}

TEST(Commands, CoupleWritesTraceAndMeta) {
    const auto out = scratch_dir("couple");
    auto c = config({{"out", out.string()}});
    std::ostringstream log;
    EXPECT_EQ(cli::cmd_couple(c, log), cli::Ok);
    for (const char* f : {"u1.csv", "u2.csv", "trace.csv", "convergence.plt"})
        EXPECT_EQ(first_line(out / f), "# config_hash=" + config_hash(c)) << f;
    std::ifstream trace(out / "trace.csv");
    std::string line;
    std::getline(trace, line);
    std::getline(trace, line);
    EXPECT_EQ(line, "iter,diff1,diff2,alpha,res_value,res_flux");
    const auto meta = nlohmann::json::parse(slurp(out / "meta.json"));
    EXPECT_TRUE(meta["converged"].get<bool>());
    EXPECT_LE(meta["constraint_value_residual"].get<double>(), 1e-7);
    EXPECT_NEAR(meta["lambda"].get<double>(), 0.0728194671512512930, 1e-15);
    fs::remove_all(out);
}

TEST(Commands, CoupleReportsNonConvergence) {
    const auto out = scratch_dir("slow");
    auto c = config({{"out", out.string()}, {"lambda", "0.001"}, {"max_iter", "5"}});
    std::ostringstream log;
    EXPECT_EQ(cli::cmd_couple(c, log), cli::NotConverged);
    EXPECT_TRUE(fs::exists(out / "trace.csv"));
    const auto meta = nlohmann::json::parse(slurp(out / "meta.json"));
    EXPECT_FALSE(meta["converged"].get<bool>());
    EXPECT_EQ(meta["iterations"].get<int>(), 5);
    fs::remove_all(out);
}

TEST(Commands, SweepIsDeterministicAcrossWorkerCounts) {
    const auto a = scratch_dir("a"), b = scratch_dir("b");
    std::ostringstream log;
    const KeyValues common{{"sweep_values", "18,10,14"}};
    auto ca = resolve_config(common, {{"out", a.string()}, {"jobs", "1"}});
    auto cb = resolve_config(common, {{"out", b.string()}, {"jobs", "3"}});
    EXPECT_EQ(cli::cmd_sweep(ca, log), cli::Ok);
    EXPECT_EQ(cli::cmd_sweep(cb, log), cli::Ok);
    const auto ra = slurp(a / "report.csv");
    EXPECT_EQ(ra, slurp(b / "report.csv"));
    EXPECT_EQ(slurp(a / "sweep.plt"), slurp(b / "sweep.plt"));
    EXPECT_EQ(first_line(a / "report.csv"), "# config_hash=" + config_hash(ca));
    // header, column names and three rows; L0 = 18 lies outside the validity region
    std::istringstream rows(ra);
    std::vector<std::string> lines;
    for (std::string l; std::getline(rows, l);) lines.push_back(l);
    ASSERT_EQ(lines.size(), 5u);
    EXPECT_EQ(lines[2].rfind("L0,1.0000000000000000e+01,", 0), 0u);
    EXPECT_NE(lines[4].find(",out_of_validity,inf,"), std::string::npos);
    const auto meta = nlohmann::json::parse(slurp(a / "meta.json"));
    EXPECT_TRUE(meta["M"].is_number());
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(Commands, EpsilonAndLambdaSweeps) {
    const auto e = scratch_dir("eps"), l = scratch_dir("lam");
    std::ostringstream log;
    auto ce = config({{"out", e.string()}, {"sweep", "epsilon"}, {"sweep_values", "0.0125,0.025"}, {"L0", "14"},
                      {"kappa", "0.01"}, {"jobs", "1"}});
    EXPECT_EQ(cli::cmd_sweep(ce, log), cli::Ok);
    const auto meta = nlohmann::json::parse(slurp(e / "meta.json"));
    EXPECT_GT(meta["loglog_slope"].get<double>(), 1.0);
    auto cl = config({{"out", l.string()}, {"sweep", "lambda"}, {"sweep_values", "0.02,1"}, {"jobs", "1"}});
    EXPECT_EQ(cli::cmd_sweep(cl, log), cli::Ok);
    EXPECT_TRUE(fs::exists(l / "lambda_traces.csv"));
    EXPECT_EQ(nlohmann::json::parse(slurp(l / "meta.json"))["runs"].size(), 3u);
    fs::remove_all(e);
    fs::remove_all(l);
}

TEST(Commands, SweepNeedsValues) {
    std::ostringstream log;
    const auto out = scratch_dir("none");
    EXPECT_THROW(cli::cmd_sweep(config({{"out", out.string()}, {"sweep", "none"}}), log), ConfigError);
    EXPECT_THROW(cli::cmd_sweep(config({{"out", out.string()}, {"sweep_values", ","}}), log), ConfigError);
    EXPECT_FALSE(fs::exists(out));
}

TEST(Commands, VerifySkipsOrderChecksOnCoarseGrids) {
    std::ostringstream log;
    const int code = cli::cmd_verify(config({{"nz", "2"}}), log);
    EXPECT_TRUE(code == cli::Ok || code == cli::VerifyFailed);
    const std::string text = log.str();
    EXPECT_NE(text.find("[SKIP] order 1-D"), std::string::npos);
    EXPECT_NE(text.find("[SKIP] order 2-D funnel"), std::string::npos);
    EXPECT_NE(text.find("two-iteration optimality"), std::string::npos);
}

TEST(Binary, ExitCodes) {
    const auto out = scratch_dir("bin");
    EXPECT_EQ(run_binary("frobnicate"), cli::Usage);
    EXPECT_EQ(run_binary(""), cli::Usage);
    EXPECT_EQ(run_binary("couple --config /nonexistent.cfg"), cli::Usage);
    EXPECT_EQ(run_binary("couple --l0 16.03 --out " + out.string()), cli::Usage);
    EXPECT_EQ(run_binary("couple --tol abc --out " + out.string()), cli::Usage);
    EXPECT_EQ(run_binary("couple --preset funnel2 --out " + out.string()), cli::Ok);
    EXPECT_EQ(run_binary("couple --lambda 0.001 --out " + out.string()), cli::NotConverged);
    fs::remove_all(out);
}
