#pragma once

#include <boost/dynamic_bitset.hpp>

#include <cstdint>
#include <vector>

namespace putput {

// A set of database rows (bit r set <=> row r is a member).
using RowSet = boost::dynamic_bitset<std::uint64_t>;

// Column-major boolean view of a binarized database: columns[v] has bit r set
// iff boolean variable v is true in row r.
struct BooleanColumns {
  std::size_t rows = 0;
  std::vector<RowSet> columns;
};

}  // namespace putput
