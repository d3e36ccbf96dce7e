#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "mlkf/io.hpp"
#include "mlkf/toml_lite.hpp"

using namespace mlkf;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / (std::string("mlkf_io_") + info->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }

  std::string write(const std::string& name, const std::string& content) const {
    const auto p = (path_ / name).string();
    io::write_file(p, content);
    return p;
  }

 private:
  fs::path path_;
};

template <typename F>
std::string error_of(F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(MatrixCsv, ReadsNumbersAndTolerantWhitespace) {
  TempDir dir;
  const auto p = dir.write("x.csv", "1, 2.5,-3\r\n4,5e-1,+6\n\n");
  const auto m = io::read_matrix_csv(p);
  ASSERT_EQ(m.rows(), 2);
  ASSERT_EQ(m.cols(), 3);
  EXPECT_EQ(m(0, 1), 2.5);
  EXPECT_EQ(m(1, 1), 0.5);
  EXPECT_EQ(m(1, 2), 6.0);
}

TEST(MatrixCsv, ErrorsNameFileAndRow) {
  TempDir dir;
  const auto ragged = dir.write("ragged.csv", "1,2\n3\n");
  auto msg = error_of([&] { io::read_matrix_csv(ragged); });
  EXPECT_NE(msg.find("ragged.csv"), std::string::npos) << msg;
  EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
  const auto bad = dir.write("bad.csv", "1,2\n3,abc\n");
  msg = error_of([&] { io::read_matrix_csv(bad); });
  EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("abc"), std::string::npos) << msg;
  const auto nan = dir.write("nan.csv", "1,nan\n");
  EXPECT_THROW(io::read_matrix_csv(nan), input_error);
  EXPECT_THROW(io::read_matrix_csv(dir.write("empty.csv", "")), input_error);
  EXPECT_THROW(io::read_matrix_csv("/nonexistent/file.csv"), input_error);
}

TEST(VectorCsv, SingleColumnOnly) {
  TempDir dir;
  EXPECT_EQ(io::read_vector_csv(dir.write("y.csv", "1\n2\n3\n")).size(), 3);
  EXPECT_THROW(io::read_vector_csv(dir.write("y2.csv", "1,2\n")), input_error);
}

TEST(LayerSpecCsv, RoundTrip) {
  const LayerSpec spec(6, {Partition::singletons(6), Partition::contiguous(6, 3), Partition::from_labels({0, 1, 0, 1, 0, 1})});
  std::ostringstream os;
  io::write_layer_spec_csv(os, spec);
  TempDir dir;
  const auto file = io::read_layer_spec_csv(dir.write("g.csv", os.str()));
  ASSERT_EQ(file.spec.num_layers(), 3u);
  for (Index m = 0; m < 3; ++m) {
    for (Index j = 0; j < 6; ++j) EXPECT_EQ(file.spec.group_of(j, m), spec.group_of(j, m));
  }
  EXPECT_EQ(file.group_labels, io::default_labels(spec));
}

TEST(LayerSpecCsv, SparseLabelsAreOrderedAndRowOrderIsFree) {
  TempDir dir;
  const auto p = dir.write("g.csv", "variable,layer,group\n3,1,70\n1,1,5\n2,1,70\n");
  const auto file = io::read_layer_spec_csv(p);
  EXPECT_EQ(file.group_labels[0], (std::vector<long long>{5, 70}));
  EXPECT_EQ(file.spec.group_of(0, 0), 0u);
  EXPECT_EQ(file.spec.group_of(1, 0), 1u);
  EXPECT_EQ(file.spec.group_of(2, 0), 1u);
}

TEST(LayerSpecCsv, Errors) {
  TempDir dir;
  EXPECT_THROW(io::read_layer_spec_csv(dir.write("h.csv", "var,layer,group\n1,1,1\n")), input_error);
  const auto twice = dir.write("t.csv", "variable,layer,group\n1,1,1\n1,1,2\n");
  EXPECT_NE(error_of([&] { io::read_layer_spec_csv(twice); }).find("row 3"), std::string::npos);
  const auto partial = dir.write("p.csv", "variable,layer,group\n1,1,1\n2,1,1\n1,2,1\n");
  EXPECT_NE(error_of([&] { io::read_layer_spec_csv(partial); }).find("partial"), std::string::npos);
  EXPECT_THROW(io::read_layer_spec_csv(dir.write("gap.csv", "variable,layer,group\n1,1,1\n1,3,1\n")), input_error);
  EXPECT_THROW(io::read_layer_spec_csv(dir.write("z.csv", "variable,layer,group\n0,1,1\n")), input_error);
  EXPECT_THROW(io::read_layer_spec_csv(dir.write("e.csv", "variable,layer,group\n")), input_error);
}

TEST(PvalueCsv, VariableFile) {
  TempDir dir;
  const auto p = io::read_variable_pvalues_csv(dir.write("p.csv", "variable,pvalue\n2,0.5\n1,0.01\n"), 2);
  EXPECT_EQ(p, (std::vector<double>{0.01, 0.5}));
  EXPECT_THROW(io::read_variable_pvalues_csv(dir.write("m.csv", "variable,pvalue\n1,0.5\n"), 2), input_error);
  const auto big = dir.write("b.csv", "variable,pvalue\n1,0.5\n2,1.5\n");
  const auto msg = error_of([&] { io::read_variable_pvalues_csv(big, 2); });
  EXPECT_NE(msg.find("row 3"), std::string::npos);
  EXPECT_NE(msg.find("[0,1]"), std::string::npos);
  EXPECT_THROW(io::read_variable_pvalues_csv(dir.write("r.csv", "variable,pvalue\n3,0.5\n"), 2), input_error);
}

TEST(PvalueCsv, GroupFile) {
  TempDir dir;
  const auto layers = io::read_layer_spec_csv(dir.write("g.csv", "variable,layer,group\n1,1,10\n2,1,20\n1,2,1\n2,2,1\n"));
  const auto p = io::read_group_pvalues_csv(dir.write("p.csv", "layer,group,pvalue\n1,20,0.3\n1,10,0.1\n2,1,0.2\n"), layers);
  EXPECT_EQ(p[0], (std::vector<double>{0.1, 0.3}));
  EXPECT_EQ(p[1], (std::vector<double>{0.2}));
  EXPECT_THROW(io::read_group_pvalues_csv(dir.write("u.csv", "layer,group,pvalue\n1,30,0.3\n"), layers), input_error);
  EXPECT_THROW(io::read_group_pvalues_csv(dir.write("m.csv", "layer,group,pvalue\n1,10,0.3\n"), layers), input_error);
}

TEST(Json, CanonicalFormatting) {
  io::json j;
  j["b"] = io::number(0.1);
  j["a"] = io::number(std::numeric_limits<double>::infinity());
  j["c"] = {1, 2};
  j["d"] = io::number(-std::numeric_limits<double>::infinity());
  EXPECT_EQ(io::to_string(j, 0), R"({"a":"inf","b":0.10000000000000001,"c":[1,2],"d":"-inf"})");
  EXPECT_EQ(io::to_string(io::json::object(), 2), "{}\n");
  io::json nested;
  nested["x"]["y"] = "q\"uote";
  EXPECT_EQ(io::to_string(nested, 2), "{\n  \"x\": {\n    \"y\": \"q\\\"uote\"\n  }\n}\n");
}

TEST(Json, DigestIgnoresInsertionOrder) {
  io::json a;
  a["alpha"] = 1;
  a["beta"] = io::number(2.5);
  io::json b;
  b["beta"] = io::number(2.5);
  b["alpha"] = 1;
  EXPECT_EQ(io::digest(a), io::digest(b));
  EXPECT_EQ(io::digest(a).size(), 16u);
  b["alpha"] = 2;
  EXPECT_NE(io::digest(a), io::digest(b));
}

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(io::fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(io::fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(io::fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Toml, ParsesTheConfigSubset) {
  const auto j = toml::parse(R"(# experiment
profile = "desk"   # trailing comment
"quoted key" = 'lit'
reps = 20
snr = 0.5
neg = -3
flag = true
methods = ["KF", "MKF+"]
mixed = [1, 2.5]

[sweep]
param = "snr"
values = [0.0, 1e-1]

[a.b]
c = 1
)");
  EXPECT_EQ(j.at("profile"), "desk");
  EXPECT_EQ(j.at("quoted key"), "lit");
  EXPECT_EQ(j.at("reps"), 20);
  EXPECT_TRUE(j.at("reps").is_number_integer());
  EXPECT_EQ(j.at("snr"), 0.5);
  EXPECT_EQ(j.at("neg"), -3);
  EXPECT_EQ(j.at("flag"), true);
  EXPECT_EQ(j.at("methods").size(), 2u);
  EXPECT_EQ(j.at("sweep").at("values")[1], 0.1);
  EXPECT_EQ(j.at("a").at("b").at("c"), 1);
}

TEST(Toml, ErrorsCarrySourceAndLine) {
  auto msg = error_of([] { toml::parse("a = 1\nb = \n", "cfg.toml"); });
  EXPECT_NE(msg.find("cfg.toml: line 2"), std::string::npos) << msg;
  msg = error_of([] { toml::parse("a = 1\na = 2\n", "cfg.toml"); });
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
  EXPECT_THROW(toml::parse("s = \"open\n"), config_error);
  EXPECT_THROW(toml::parse("x = [1, 2\n"), config_error);
  EXPECT_THROW(toml::parse("[table\n"), config_error);
  EXPECT_THROW(toml::parse("= 3\n"), config_error);
  EXPECT_THROW(toml::parse_file("/nonexistent.toml"), input_error);
}
