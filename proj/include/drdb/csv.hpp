#pragma once

#include <string>

#include "drdb/data.hpp"

namespace drdb {

struct CsvOptions {
  char delimiter = ',';
};

/// Reads an observational dataset from a UTF-8 CSV file with a header naming
/// columns `y`, `t`, `x1..xp` (any column order; x columns must be
/// consecutively numbered from 1). Throws MissingColumn, NonBinaryTreatment
/// or NonFiniteValue with the offending row/column.
ObservedData load_csv(const std::string& path, const CsvOptions& options = {});

}  // namespace drdb
