#pragma once

#include "contiv/dataset.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace contiv::io {

enum class TreatmentKind
{
  Binary,
  Continuous
};

struct IngestOptions
{
  TreatmentKind treatment = TreatmentKind::Binary;
};

//! Reads a header CSV with columns z, a, y and x1..xd (any order; the x
//! columns are ordered by index). Throws FileNotFound, EmptyFile,
//! MissingColumn, NonNumericCell (row and column in the message) and, for
//! binary treatment, NonBinaryTreatment.
Dataset
ingest_csv(const std::filesystem::path& path, const IngestOptions& options = {});

//! Same as ingest_csv on an already open stream; origin names it in errors.
Dataset
read_csv(std::istream& in, const IngestOptions& options = {}, const std::string& origin = "<stream>");

//! Columns x1..xd, z, a, y at full precision.
void
write_csv(std::ostream& out, const Dataset& data);

} // namespace contiv::io
