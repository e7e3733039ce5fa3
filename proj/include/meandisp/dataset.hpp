#ifndef MEANDISP_DATASET_HPP
#define MEANDISP_DATASET_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "meandisp/terms.hpp"

namespace meandisp {

// Column roles for load_csv. Leaving mixture/process empty selects every
// header named x<k> (respectively z<k>) in index order; an "id" column named
// here (or a header literally called "run") carries row labels.
struct CsvSchema {
  std::string response = "y";
  std::vector<std::string> mixture;
  std::vector<std::string> process;
  std::string id;
  double sum_tol = 1e-6;
};

struct Dataset {
  DesignTable design;
  Eigen::VectorXd y;
  std::vector<std::string> row_ids;

  int n() const { return design.n_runs(); }
};

// Reads a comma-separated file with a header row and dot decimals. Rejects
// missing values, malformed numbers and mixture rows that do not sum to one,
// naming the offending row and column.
Dataset load_csv(const std::string& path, const CsvSchema& schema = {});

// Serialization round-trips through load_csv losslessly (17 significant
// digits per value).
std::string dataset_to_csv(const Dataset& data);
void save_csv(const Dataset& data, const std::string& path);

// FNV-1a over the raw file bytes; pins the bundled data file in tests.
std::uint64_t fnv1a_file(const std::string& path);

}  // namespace meandisp

#endif
