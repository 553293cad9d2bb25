#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "pcdm/datagen.hpp"
#include "pcdm/sampling.hpp"
#include "pcdm/sparse_matrix.hpp"

namespace pcdm {

/// Text instance format:
///   pcdm-instance v1 <m> <n> <nnz>
///   <row> <col> <value>        (nnz lines, 0-based)
///   b:      <m numbers>        optional sections, in any order
///   xstar:  <n numbers>
///   lambda: <number>
///   Fstar:  <number>
GeneratedInstance read_instance(std::istream& in);
GeneratedInstance read_instance(const std::string& path);
void write_instance(std::ostream& out, const GeneratedInstance& inst);
void write_instance(const std::string& path, const GeneratedInstance& inst);

struct LabeledData {
  SparseMatrix examples;  // one example per row
  std::vector<double> labels;
};

/// LIBSVM text: "label index:value ...", 1-based indices. The column count is
/// the largest index seen (or `min_features` if larger). Errors carry the line.
LabeledData read_libsvm(std::istream& in, std::size_t min_features = 0);
LabeledData read_libsvm(const std::string& path, std::size_t min_features = 0);
/// Values are written with 17 significant digits, so a round trip is exact.
void write_libsvm(std::ostream& out, const LabeledData& data);
void write_libsvm(const std::string& path, const LabeledData& data);

/// "serial", "full", "nice:T", "indep:T", "binom:T:P", "nu:<file>", "du:<file>".
/// A partition file holds one cell per line; a q file holds n + 1 numbers.
SamplingLaw parse_law(const std::string& text);

}  // namespace pcdm
