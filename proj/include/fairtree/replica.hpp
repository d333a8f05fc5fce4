#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fairtree {

// Deterministic synthetic stand-ins for the four benchmark CSVs, for offline
// runs where the real files have not been fetched. They carry the published
// schemas, raw row counts, filter structure (rows that each filter removes)
// and exact post-load (a, y) contingency cells, with feature distributions
// shaped to preserve the benchmarks' accuracy/fairness tension. They are NOT
// the real datasets and results on them are labeled accordingly.
//
// Returns the path of the written CSV.
std::string write_replica(const std::string& name, const std::string& out_dir, std::uint64_t seed);

std::vector<std::string> replica_names();

}  // namespace fairtree
