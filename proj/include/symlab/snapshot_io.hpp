#pragma once

#include <string>

#include "symlab/linalg.hpp"
#include "symlab/measures.hpp"
#include "symlab/training.hpp"

namespace symlab {

// Snapshot CSV: first line "N,D", then N rows of D values (%.17g).
// Measure CSV: first line "m,D", then m rows of D coordinates plus the weight.

void write_matrix_csv(const std::string& path, const Matrix& m);
/// Throws IoError on a missing file, a bad header, a short or ragged body or
/// a non-numeric entry.
Matrix read_matrix_csv(const std::string& path);

void write_measure_csv(const std::string& path, const EmpiricalMeasure& mu);
EmpiricalMeasure read_measure_csv(const std::string& path);

/// Run directory: config.json, snapshots/epoch_<k>.csv, final.csv and
/// trajectory.csv (epoch,loss).
void write_run_dir(const std::string& dir, const RunRecord& record, const std::string& config_json);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace symlab
