#include "qpd/integer_lattice.hpp"

#include <cstdlib>
#include <stdexcept>
#include <utility>

namespace qpd::lattice {
namespace {

long long floor_div(long long a, long long b) {
  long long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

IntMatrix integer_kernel(const IntMatrix& a, int cols, int* rank) {
  IntMatrix m = a;
  for (const auto& row : m) {
    if (static_cast<int>(row.size()) != cols) {
      throw std::invalid_argument("integer_kernel: ragged matrix");
    }
  }
  // u holds the accumulated unimodular column operations, stored by column.
  IntMatrix u(cols, std::vector<long long>(cols, 0));
  for (int c = 0; c < cols; ++c) u[c][c] = 1;

  auto add_col = [&](int dst, int src, long long factor) {
    for (auto& row : m) row[dst] += factor * row[src];
    for (int i = 0; i < cols; ++i) u[dst][i] += factor * u[src][i];
  };
  auto swap_col = [&](int x, int y) {
    for (auto& row : m) std::swap(row[x], row[y]);
    std::swap(u[x], u[y]);
  };

  int pivot = 0;
  for (std::size_t r = 0; r < m.size() && pivot < cols; ++r) {
    while (true) {
      int best = -1;
      for (int c = pivot; c < cols; ++c) {
        if (m[r][c] != 0 &&
            (best < 0 || std::llabs(m[r][c]) < std::llabs(m[r][best]))) {
          best = c;
        }
      }
      if (best < 0) break;
      swap_col(pivot, best);
      bool reduced = true;
      for (int c = pivot + 1; c < cols; ++c) {
        if (m[r][c] == 0) continue;
        add_col(c, pivot, -(m[r][c] / m[r][pivot]));
        if (m[r][c] != 0) reduced = false;
      }
      if (reduced) {
        ++pivot;
        break;
      }
    }
  }
  if (rank != nullptr) *rank = pivot;
  IntMatrix kernel;
  for (int c = pivot; c < cols; ++c) kernel.push_back(u[c]);
  return kernel;
}

IntMatrix hermite_normal_form(IntMatrix rows) {
  if (rows.empty()) return rows;
  const std::size_t cols = rows.front().size();
  std::size_t pivot_row = 0;
  for (std::size_t c = 0; c < cols && pivot_row < rows.size(); ++c) {
    while (true) {
      std::size_t best = rows.size();
      for (std::size_t r = pivot_row; r < rows.size(); ++r) {
        if (rows[r][c] != 0 &&
            (best == rows.size() ||
             std::llabs(rows[r][c]) < std::llabs(rows[best][c]))) {
          best = r;
        }
      }
      if (best == rows.size()) break;
      std::swap(rows[pivot_row], rows[best]);
      bool reduced = true;
      for (std::size_t r = pivot_row + 1; r < rows.size(); ++r) {
        if (rows[r][c] == 0) continue;
        const long long q = rows[r][c] / rows[pivot_row][c];
        for (std::size_t k = 0; k < cols; ++k) rows[r][k] -= q * rows[pivot_row][k];
        if (rows[r][c] != 0) reduced = false;
      }
      if (!reduced) continue;
      if (rows[pivot_row][c] < 0) {
        for (auto& v : rows[pivot_row]) v = -v;
      }
      const long long p = rows[pivot_row][c];
      for (std::size_t r = 0; r < pivot_row; ++r) {
        const long long q = floor_div(rows[r][c], p);
        for (std::size_t k = 0; k < cols; ++k) rows[r][k] -= q * rows[pivot_row][k];
      }
      ++pivot_row;
      break;
    }
  }
  rows.resize(pivot_row);
  return rows;
}

bool in_lattice(const IntMatrix& hnf, std::vector<long long> v) {
  std::size_t col = 0;
  for (const auto& row : hnf) {
    std::size_t p = 0;
    while (p < row.size() && row[p] == 0) ++p;
    if (p == row.size()) continue;
    for (; col < p; ++col) {
      if (v[col] != 0) return false;
    }
    if (v[p] % row[p] != 0) return false;
    const long long q = v[p] / row[p];
    for (std::size_t k = 0; k < v.size(); ++k) v[k] -= q * row[k];
    col = p + 1;
  }
  for (long long x : v) {
    if (x != 0) return false;
  }
  return true;
}

}  // namespace qpd::lattice
