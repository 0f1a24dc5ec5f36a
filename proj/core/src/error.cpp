#include "contiv/error.hpp"

namespace contiv {

std::string_view
errc_name(Errc code)
{
  switch (code) {
    case Errc::InvalidBandwidth: return "kernels.InvalidBandwidth";
    case Errc::InvalidKernelOrder: return "kernels.InvalidKernelOrder";
    case Errc::UnknownKernel: return "kernels.UnknownKernel";
    case Errc::NotEnoughLocalData: return "localpoly.NotEnoughLocalData";
    case Errc::SingularDesign: return "localpoly.SingularDesign";
    case Errc::InvalidDensity: return "localpoly.InvalidDensity";
    case Errc::EmptyFold: return "nuisance.EmptyFold";
    case Errc::RankDeficientDesign: return "nuisance.RankDeficientDesign";
    case Errc::NonPositiveVarianceEstimate:
      return "nuisance.NonPositiveVarianceEstimate";
    case Errc::InvalidRate: return "nuisance.InvalidRate";
    case Errc::FoldOverlap: return "nuisance.FoldOverlap";
    case Errc::UnknownLearner: return "nuisance.UnknownLearner";
    case Errc::NonFiniteResult: return "pseudo.NonFiniteResult";
    case Errc::InvalidGrid: return "pseudo.InvalidGrid";
    case Errc::QuadratureUnderResolved: return "smooth.QuadratureUnderResolved";
    case Errc::WeakInstrumentRegion: return "effects.WeakInstrumentRegion";
    case Errc::WeakInstrument: return "effects.WeakInstrument";
    case Errc::ZeroDenominator: return "effects.ZeroDenominator";
    case Errc::MisalignedFolds: return "effects.MisalignedFolds";
    case Errc::NegativeDensity: return "effects.NegativeDensity";
    case Errc::GridTooCoarse: return "bandwidth.GridTooCoarse";
    case Errc::AllCandidatesFailed: return "bandwidth.AllCandidatesFailed";
    case Errc::InvalidSimConfig: return "sim.InvalidSimConfig";
    case Errc::MissingColumn: return "cli.MissingColumn";
    case Errc::NonBinaryTreatment: return "cli.NonBinaryTreatment";
    case Errc::NonNumericCell: return "cli.NonNumericCell";
    case Errc::EmptyFile: return "cli.EmptyFile";
    case Errc::FileNotFound: return "cli.FileNotFound";
    case Errc::InvalidConfig: return "cli.InvalidConfig";
  }
  return "unknown";
}

Error::Error(Errc code, const std::string& message)
  : std::runtime_error(std::string(errc_name(code)) + ": " + message)
  , code_(code)
{}

} // namespace contiv
