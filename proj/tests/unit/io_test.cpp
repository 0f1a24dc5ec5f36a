#include "contiv/io.hpp"
#include "support.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace contiv;

namespace {

Dataset
parse(const std::string& text, io::TreatmentKind kind = io::TreatmentKind::Binary)
{
  std::istringstream in(text);
  return io::read_csv(in, {kind}, "test.csv");
}

std::string
message_of(const std::string& text)
{
  try {
    parse(text);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

} // namespace

TEST_CASE("well-formed file")
{
  const auto d = parse("x1,x2,z,a,y\n0.1,0.2,1.5,1,3.0\n0.3,0.4,2.5,0,4.0\n-1,2,0.5,1,5\n");
  CHECK(d.size() == 3);
  CHECK(d.dim() == 2);
  CHECK(d.z()[1] == 2.5);
  CHECK(d.y()[2] == 5.0);
  CHECK(d.x()(2, 1) == 2.0);
}

TEST_CASE("column order and covariate indices")
{
  const auto d = parse("y,x2,a,z,x1\n1,2,0,4,5\n");
  CHECK(d.dim() == 2);
  CHECK(d.x()(0, 0) == 5.0);
  CHECK(d.x()(0, 1) == 2.0);
  CHECK(d.z()[0] == 4.0);
}

TEST_CASE("ingest errors")
{
  CHECK_ERRC(parse("x1,z,a,y\n0,1,0,1\n0,1,2,1\n"), Errc::NonBinaryTreatment);
  CHECK(message_of("x1,z,a,y\n0,1,0,1\n0,1,2,1\n").find("row 2") != std::string::npos);
  CHECK_ERRC(parse("x1,z,a\n0,1,0\n"), Errc::MissingColumn);
  CHECK(message_of("x1,z,a\n0,1,0\n").find("\"y\"") != std::string::npos);
  CHECK_ERRC(parse("x1,z,a,y\n0,abc,0,1\n"), Errc::NonNumericCell);
  CHECK_ERRC(parse(""), Errc::EmptyFile);
  CHECK_ERRC(parse("x1,z,a,y\n"), Errc::EmptyFile);
  CHECK_ERRC(io::ingest_csv("/nonexistent/file.csv"), Errc::FileNotFound);
}

TEST_CASE("continuous treatment")
{
  const auto d = parse("x1,z,a,y\n0,1,0.25,1\n", io::TreatmentKind::Continuous);
  CHECK(d.a()[0] == 0.25);
}

TEST_CASE("write then ingest is lossless")
{
  const auto d = parse("x1,x2,z,a,y\n0.1,0.2,1.5,1,3.0\n0.30000000000000004,-4e-300,2.5,0,4.0\n");
  const auto path = std::filesystem::temp_directory_path() / "contiv_io_roundtrip.csv";
  {
    std::ofstream out(path);
    io::write_csv(out, d);
  }
  const auto back = io::ingest_csv(path);
  std::filesystem::remove(path);
  REQUIRE(back.size() == d.size());
  CHECK(back.x() == d.x());
  CHECK(back.z() == d.z());
  CHECK(back.a() == d.a());
  CHECK(back.y() == d.y());
}
