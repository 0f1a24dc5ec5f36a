#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace contiv {

//! Every failure the library can report. The numeric value doubles as the
//! CLI exit status, so entries are append-only.
enum class Errc : int
{
  // kernels
  InvalidBandwidth = 10,
  InvalidKernelOrder = 11,
  UnknownKernel = 12,
  // localpoly
  NotEnoughLocalData = 20,
  SingularDesign = 21,
  InvalidDensity = 22,
  // nuisance
  EmptyFold = 30,
  RankDeficientDesign = 31,
  NonPositiveVarianceEstimate = 32,
  InvalidRate = 33,
  FoldOverlap = 34,
  UnknownLearner = 35,
  // pseudo
  NonFiniteResult = 40,
  InvalidGrid = 41,
  // smooth
  QuadratureUnderResolved = 50,
  // effects
  WeakInstrumentRegion = 60,
  WeakInstrument = 61,
  ZeroDenominator = 62,
  MisalignedFolds = 63,
  NegativeDensity = 64,
  // bandwidth
  GridTooCoarse = 70,
  AllCandidatesFailed = 71,
  // sim
  InvalidSimConfig = 80,
  // cli / io
  MissingColumn = 90,
  NonBinaryTreatment = 91,
  NonNumericCell = 92,
  EmptyFile = 93,
  FileNotFound = 94,
  InvalidConfig = 95,
};

//! Module-qualified name, e.g. "localpoly.SingularDesign".
std::string_view errc_name(Errc code);

class Error : public std::runtime_error
{
public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }
  std::string_view code_name() const { return errc_name(code_); }

private:
  Errc code_;
};

} // namespace contiv
