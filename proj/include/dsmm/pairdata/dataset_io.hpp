#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "dsmm/pairdata/dataset.hpp"

namespace dsmm::pairs {

// Text dataset format:
//
//   dsmm-pairs v1, N=<n>, d=<d>, mode=<linear|nonlinear>, rho=<r>, sigma=<s>, seed=<seed>
//   <family_id>,<parent|child>,<f_1>,...,<f_d>
//   ...
//
// Floats use 17 significant digits, so reading back is exact.

std::string format_header(const GeneratorMeta& meta, std::size_t families, std::size_t dim);
GeneratorMeta parse_header(const std::string& line);

void write_dataset(const PairDataset& dataset, std::ostream& out);
PairDataset read_dataset(std::istream& in);

void save_dataset(const PairDataset& dataset, const std::filesystem::path& path);
PairDataset load_dataset(const std::filesystem::path& path);

// "%.17g"
std::string format_double(double value);
// Whole-string parse; throws ContractError on trailing junk.
double parse_double(std::string_view text);

}  // namespace dsmm::pairs
