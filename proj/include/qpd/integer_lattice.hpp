#pragma once

#include <vector>

namespace qpd::lattice {

using IntMatrix = std::vector<std::vector<long long>>;

/// Basis (as rows) of the integer kernel { v in Z^cols : A v = 0 }.
/// `rank` receives the rank of A.
IntMatrix integer_kernel(const IntMatrix& a, int cols, int* rank = nullptr);

/// Row-style Hermite normal form: pivots positive and strictly moving right,
/// entries above each pivot reduced into [0, pivot). Zero rows dropped.
IntMatrix hermite_normal_form(IntMatrix rows);

/// True when `v` is an integer combination of the HNF rows.
bool in_lattice(const IntMatrix& hnf, std::vector<long long> v);

}  // namespace qpd::lattice
