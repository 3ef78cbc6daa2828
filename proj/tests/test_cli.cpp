#include <doctest.h>

#include <gradsel/cli.hpp>
#include <gradsel/csv.hpp>
#include <gradsel/errors.hpp>
#include <gradsel/json_writer.hpp>
#include <gradsel/sim.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <unistd.h>
#include <sstream>
#include <string>
#include <vector>

using namespace gradsel;

namespace {

std::string temp_dir() {
    static int counter = 0;
    std::string d = "/tmp/gradsel_test_" + std::to_string(getpid()) + "_" +
                    std::to_string(counter++);
    REQUIRE(system(("mkdir -p " + d).c_str()) == 0);
    return d;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    REQUIRE(out.good());
    out << text;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("gradsel");
    for (const std::string& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("csv round trip preserves values") {
    Dataset d = sim_generate(SimModel::m2, 40, 3, 2026);
    std::string dir = temp_dir();
    write_csv(dir + "/data.csv", d);

    Dataset back = load_csv(dir + "/data.csv");
    REQUIRE(back.n() == 40);
    REQUIRE(back.p() == 3);
    CHECK((back.y - d.y).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.feature_names == d.feature_names);

    // The loader standardizes, so compare against the standardized original.
    Eigen::MatrixXd xs = d.x;
    standardize(xs);
    CHECK((back.x - xs).cwiseAbs().maxCoeff() <= 1e-12);

    // A second round trip reproduces the values up to the loader's fresh
    // standardization pass (already-standard columns move by at most a few
    // ulps), and the label column exactly.
    Dataset b2;
    b2.x = back.x;
    b2.y = back.y;
    b2.feature_names = back.feature_names;
    write_csv(dir + "/data2.csv", b2);
    Dataset again = load_csv(dir + "/data2.csv");
    CHECK((again.x - back.x).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((again.y - back.y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("csv loader accepts 0/1 and string labels") {
    std::string dir = temp_dir();
    write_file(dir + "/zeroone.csv", "a,b,y\n1,4,0\n2,5,1\n3,7,0\n");
    Dataset d = load_csv(dir + "/zeroone.csv");
    CHECK(d.y[0] == -1.0);
    CHECK(d.y[1] == 1.0);
    CHECK(d.y[2] == -1.0);
    CHECK(d.feature_names == std::vector<std::string>{"a", "b"});

    write_file(dir + "/named.csv", "a,b,cls\n1,4,case\n2,5,control\n3,7,case\n");
    LoadOptions opts;
    opts.label_column = "cls";
    opts.positive_label = "case";
    Dataset s = load_csv(dir + "/named.csv", opts);
    CHECK(s.y[0] == 1.0);
    CHECK(s.y[1] == -1.0);
    CHECK(s.y[2] == 1.0);
}

TEST_CASE("csv loader reports structural problems") {
    std::string dir = temp_dir();

    write_file(dir + "/nolabel.csv", "a,b\n1,2\n3,4\n");
    CHECK_THROWS_AS(load_csv(dir + "/nolabel.csv"), Error);

    write_file(dir + "/badnum.csv", "a,y\noops,1\n2,-1\n");
    CHECK_THROWS_AS(load_csv(dir + "/badnum.csv"), Error);

    write_file(dir + "/badlabel.csv", "a,y\n1,2\n2,-1\n");
    CHECK_THROWS_AS(load_csv(dir + "/badlabel.csv"), Error);

    write_file(dir + "/ragged.csv", "a,b,y\n1,2,1\n3,-1\n");
    CHECK_THROWS_AS(load_csv(dir + "/ragged.csv"), Error);

    write_file(dir + "/constant.csv", "a,b,y\n1,2,1\n1,3,-1\n1,4,1\n");
    CHECK_THROWS_AS(load_csv(dir + "/constant.csv"), Error);

    CHECK_THROWS_AS(load_csv(dir + "/missing.csv"), Error);
}

TEST_CASE("json writer emits stable bytes") {
    Json j = Json::object();
    j.set("b", Json::num(0.1));
    j.set("a", Json::integer(-3));
    j.set("list", Json::array().push(Json::boolean(true)).push(Json::null()));
    j.set("text", Json::str("quote \" slash \\ tab \t"));
    std::string s = j.dump();
    // Insertion order, not alphabetical.
    CHECK(s.find("\"b\"") < s.find("\"a\""));
    CHECK(s.find("0.1") != std::string::npos);
    CHECK(s.find("\\\"") != std::string::npos);
    CHECK(s.find("\\\\") != std::string::npos);
    CHECK(s.find("\\t") != std::string::npos);
    CHECK(j.dump() == s);

    // Doubles reload to the identical bit pattern.
    CHECK(Json::format_double(0.25) == "0.25");
    CHECK(Json::format_double(2.0) == "2");
    for (double v : {0.1, 0.078, 1e300, -3.14159e-7, 2.0 / 3.0}) {
        CHECK(std::strtod(Json::format_double(v).c_str(), nullptr) == v);
    }
}

TEST_CASE("simulate subcommand writes a loadable pair") {
    std::string dir = temp_dir();
    int rc = run({"simulate", "--model", "2", "--n", "60", "--n-test", "40", "--p", "4",
                  "--seed", "11", "--out", dir});
    REQUIRE(rc == 0);

    Dataset train = load_csv(dir + "/sim_train.csv");
    Dataset test = load_csv(dir + "/sim_test.csv");
    CHECK(train.n() == 60);
    CHECK(test.n() == 40);
    CHECK(train.p() == 4);

    std::string meta = read_file(dir + "/sim_meta.json");
    CHECK(meta.find("\"model\": \"m2\"") != std::string::npos);
    CHECK(meta.find("\"seed\": 11") != std::string::npos);

    // Identical invocation gives identical bytes.
    std::string dir2 = temp_dir();
    REQUIRE(run({"simulate", "--model", "2", "--n", "60", "--n-test", "40", "--p", "4",
                 "--seed", "11", "--out", dir2}) == 0);
    CHECK(read_file(dir2 + "/sim_train.csv") == read_file(dir + "/sim_train.csv"));
    CHECK(read_file(dir2 + "/sim_test.csv") == read_file(dir + "/sim_test.csv"));
}

TEST_CASE("fit and path subcommands run end to end") {
    std::string dir = temp_dir();
    REQUIRE(run({"simulate", "--model", "1", "--n", "80", "--n-test", "10", "--p", "4",
                 "--seed", "21", "--out", dir}) == 0);

    int rc = run({"fit", "--data", dir + "/sim_train.csv", "--lambda", "1e-4", "--out", dir});
    REQUIRE(rc == 0);
    std::string fit = read_file(dir + "/fit.json");
    CHECK(fit.find("\"subcommand\": \"fit\"") != std::string::npos);
    CHECK(fit.find("\"active_set\"") != std::string::npos);

    rc = run({"path", "--data", dir + "/sim_train.csv", "--n-lambda", "8", "--out", dir});
    REQUIRE(rc == 0);
    std::string path = read_file(dir + "/path.json");
    CHECK(path.find("\"lambda_max\"") != std::string::npos);
    CHECK(path.find("\"points\"") != std::string::npos);

    // A single grid point is exactly the null boundary: nothing active.
    std::string dir1 = temp_dir();
    rc = run({"path", "--data", dir + "/sim_train.csv", "--n-lambda", "1", "--out", dir1});
    REQUIRE(rc == 0);
    std::string single = read_file(dir1 + "/path.json");
    CHECK(single.find("\"active_set\": []") != std::string::npos);
}

TEST_CASE("cv subcommand selects the true pair on an easy export") {
    std::string dir = temp_dir();
    REQUIRE(run({"simulate", "--model", "1", "--n", "200", "--n-test", "10", "--p", "5",
                 "--seed", "31", "--out", dir}) == 0);
    int rc = run({"cv", "--data", dir + "/sim_train.csv", "--folds", "5", "--n-lambda", "30",
                  "--seed", "31", "--out", dir});
    REQUIRE(rc == 0);
    std::string sel = read_file(dir + "/selection.json");
    CHECK(sel.find("\"selected\": [1,2]") != std::string::npos);
    CHECK(sel.find("\"selected_names\": [\"x1\",\"x2\"]") != std::string::npos);
}

TEST_CASE("outputs are byte-identical across thread counts") {
    std::string dir = temp_dir();
    REQUIRE(run({"simulate", "--model", "1", "--n", "100", "--n-test", "10", "--p", "4",
                 "--seed", "41", "--out", dir}) == 0);

    std::string d1 = temp_dir();
    std::string d4 = temp_dir();
    REQUIRE(run({"cv", "--data", dir + "/sim_train.csv", "--folds", "4", "--n-lambda", "12",
                 "--seed", "41", "--threads", "1", "--out", d1}) == 0);
    REQUIRE(run({"cv", "--data", dir + "/sim_train.csv", "--folds", "4", "--n-lambda", "12",
                 "--seed", "41", "--threads", "4", "--out", d4}) == 0);
    CHECK(read_file(d1 + "/selection.json") == read_file(d4 + "/selection.json"));
    CHECK(read_file(d1 + "/cv_curve.csv") == read_file(d4 + "/cv_curve.csv"));

    std::string b1 = temp_dir();
    std::string b3 = temp_dir();
    REQUIRE(run({"bench", "--model", "1", "--n", "90", "--p", "4", "--reps", "3", "--n-test",
                 "50", "--folds", "4", "--n-lambda", "10", "--seed", "41", "--threads", "1",
                 "--out", b1}) == 0);
    REQUIRE(run({"bench", "--model", "1", "--n", "90", "--p", "4", "--reps", "3", "--n-test",
                 "50", "--folds", "4", "--n-lambda", "10", "--seed", "41", "--threads", "3",
                 "--out", b3}) == 0);
    CHECK(read_file(b1 + "/bench_summary.json") == read_file(b3 + "/bench_summary.json"));

    // The rows CSV carries wall times, which legitimately differ; strip the
    // final column before comparing.
    auto strip_seconds = [](const std::string& text) {
        std::istringstream in(text);
        std::string line, outp;
        while (std::getline(in, line)) {
            outp += line.substr(0, line.rfind(','));
            outp += '\n';
        }
        return outp;
    };
    CHECK(strip_seconds(read_file(b1 + "/bench_rows.csv")) ==
          strip_seconds(read_file(b3 + "/bench_rows.csv")));
}

TEST_CASE("cli reports bad arguments without crashing") {
    CHECK(run({"fit", "--data", "/nonexistent.csv", "--lambda", "1e-4"}) != 0);
    CHECK(run({"cv"}) != 0);
    CHECK(run({"bench", "--model", "9"}) != 0);
    CHECK(run({"nonsense"}) != 0);
}
