#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <unistd.h>

#include "unbiased_mcmc/io.hpp"
#include "unbiased_mcmc/models/varsel_data.hpp"

namespace umcmc {
namespace {

namespace fs = std::filesystem;

std::string data_file(const std::string& name) { return std::string(UMCMC_DATA_DIR) + "/" + name; }

class TempFile {
 public:
  explicit TempFile(const std::string& contents) {
    static int counter = 0;
    path_ = fs::temp_directory_path() / ("umcmc_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + ".csv");
    std::ofstream(path_) << contents;
  }
  ~TempFile() { fs::remove(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const IngestionError& e) {
    return e.what();
  }
  return {};
}

TEST(Checksum, KnownFnvVectors) {
  EXPECT_EQ(io::checksum_hex(""), "cbf29ce484222325");
  EXPECT_EQ(io::checksum_hex("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(io::checksum_hex("foobar"), "85944171f73967e8");
}

TEST(Checksum, ShippedDataIsPinned) {
  EXPECT_EQ(io::file_checksum(data_file("pump.csv")), "d1bd7f2576e80e60");
  EXPECT_EQ(io::file_checksum(data_file("hpv.csv")), "9c159600a582902d");
  EXPECT_EQ(io::file_checksum(data_file("cancer.csv")), "68d68199190ca88b");
  EXPECT_EQ(io::file_checksum(data_file("cancer_raw.csv")), "1a7f5df34485aa1c");
}

TEST(Pump, LoadsShippedFile) {
  const auto d = io::load_pump_data(data_file("pump.csv"));
  EXPECT_DOUBLE_EQ(d.t[0], 94.32);
  EXPECT_EQ(d.s[0], 5);
  EXPECT_DOUBLE_EQ(d.t[9], 10.48);
  EXPECT_EQ(d.s[9], 22);
  int total = 0;
  for (int s : d.s) total += s;
  EXPECT_EQ(total, 75);
}

TEST(Pump, MalformedRowIsNamed) {
  std::string body = "t,s\n1,2\n3,x\n";
  for (int i = 0; i < 8; ++i) body += "1,1\n";
  const TempFile f(body);
  const auto msg = message_of([&] { io::load_pump_data(f.path()); });
  EXPECT_NE(msg.find("row 2 (line 3)"), std::string::npos) << msg;
}

TEST(Pump, WrongRowCountOrHeader) {
  const TempFile few("t,s\n1,2\n");
  EXPECT_THROW(io::load_pump_data(few.path()), IngestionError);
  const TempFile header("time,s\n1,2\n");
  EXPECT_THROW(io::load_pump_data(header.path()), IngestionError);
  std::string body = "t,s\n";
  for (int i = 0; i < 9; ++i) body += "1,1\n";
  body += "0,1\n";
  const TempFile zero_time(body);
  const auto msg = message_of([&] { io::load_pump_data(zero_time.path()); });
  EXPECT_NE(msg.find("row 10"), std::string::npos) << msg;
  EXPECT_THROW(io::load_pump_data("/nonexistent/pump.csv"), IngestionError);
}

TEST(Pump, ExtraFieldNamesRowAndLine) {
  const TempFile f("# comment\nt,s\n1,2\n3,4,5\n");  // field count is checked before the row count
  const auto msg = message_of([&] { io::load_pump_data(f.path()); });
  EXPECT_NE(msg.find("row 2 (line 4)"), std::string::npos) << msg;
}

TEST(Cut, HpvAndCancerShapes) {
  const auto hpv = io::load_hpv_data(data_file("hpv.csv"));
  const auto cancer = io::load_cancer_data(data_file("cancer.csv"));
  ASSERT_EQ(hpv.size(), 13u);
  ASSERT_EQ(cancer.size(), 13u);
  EXPECT_EQ(hpv[0].ncases, 7);
  EXPECT_EQ(hpv[0].npop, 111);
  EXPECT_EQ(cancer[12].ncases, 194);
}

TEST(Cut, RawPyearsMatchLoggedOffsets) {
  const auto logged = io::load_cancer_data(data_file("cancer.csv"));
  const auto raw = io::load_cancer_data(data_file("cancer_raw.csv"), true);
  ASSERT_EQ(logged.size(), raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    EXPECT_EQ(raw[i].ncases, logged[i].ncases);
    EXPECT_NEAR(raw[i].log_pyears, logged[i].log_pyears, 1e-12);
  }
  EXPECT_NEAR(raw[0].log_pyears, std::log(26.983), 1e-12);
  // Loading the raw file in logged mode fails on the header.
  EXPECT_THROW(io::load_cancer_data(data_file("cancer_raw.csv")), IngestionError);
}

TEST(Cut, InvalidCounts) {
  const TempFile f("ncases,npop\n5,4\n");
  const auto msg = message_of([&] { io::load_hpv_data(f.path()); });
  EXPECT_NE(msg.find("row 1 (line 2)"), std::string::npos) << msg;
  const TempFile g("ncases,pyears\n5,-1\n");
  EXPECT_THROW(io::load_cancer_data(g.path(), true), IngestionError);
}

TEST(CsvWriter, ShortestRoundTrip) {
  io::CsvWriter w({"a", "b", "c"});
  w.add(0.1, 3, "x");
  EXPECT_EQ(w.str(), "a,b,c\n0.1,3,x\n");
  EXPECT_THROW(w.add(1.0), ContractError);
  EXPECT_EQ(std::stod(io::format_double(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(VarSelData, FirstCoefficient) {
  const auto d = models::generate_varsel_data(1000, 500, 1.0, 1.0, 1);
  EXPECT_NEAR(d.beta_star(0), 0.23507, 1e-5);
  EXPECT_NEAR(d.beta_star(0), 2.0 * std::sqrt(std::log(1000.0) / 500.0), 1e-15);
  EXPECT_NEAR(d.beta_star(1), -1.5 * d.beta_star(0), 1e-15);
  for (Eigen::Index j = 10; j < d.beta_star.size(); ++j) ASSERT_EQ(d.beta_star(j), 0.0);
  EXPECT_EQ(d.X.rows(), 500);
  EXPECT_EQ(d.X.cols(), 1000);
}

TEST(VarSelData, DeterministicPerSeed) {
  const auto a = models::generate_varsel_data(50, 30, 1.0, 1.0, 9);
  const auto b = models::generate_varsel_data(50, 30, 1.0, 1.0, 9);
  const auto c = models::generate_varsel_data(50, 30, 1.0, 1.0, 10);
  EXPECT_EQ(a.X, b.X);
  EXPECT_EQ(a.Y, b.Y);
  EXPECT_NE(a.X, c.X);
}

TEST(VarSelData, NoiseHasUnitVariance) {
  const auto d = models::generate_varsel_data(10, 20000, 1.0, 1.0, 3);
  const Point resid = d.Y - d.X * d.beta_star;
  const double var = resid.squaredNorm() / static_cast<double>(resid.size());
  EXPECT_NEAR(var, 1.0, 0.04);
  EXPECT_NEAR(d.X.array().square().mean(), 1.0, 0.02);
}

TEST(VarSelData, RejectsTooFewColumns) {
  EXPECT_THROW(models::generate_varsel_data(9, 10, 1.0, 1.0, 0), ParameterError);
  EXPECT_THROW(models::generate_varsel_data(10, 0, 1.0, 1.0, 0), ParameterError);
}

}  // namespace
}  // namespace umcmc
