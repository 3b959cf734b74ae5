#pragma once

#include <functional>
#include <vector>

// Finite-difference reference derivatives for the tests. Iterated central
// differences with one Richardson step, so the truncation error is O(h^4).
namespace fd {

using Fn = std::function<double(const std::vector<double>&)>;

inline double central(const Fn& f, const std::vector<double>& p, std::vector<int> vars, double h) {
  if (vars.empty()) return f(p);
  const int v = vars.back();
  vars.pop_back();
  auto plus = p;
  auto minus = p;
  plus[static_cast<std::size_t>(v)] += h;
  minus[static_cast<std::size_t>(v)] -= h;
  return (central(f, plus, vars, h) - central(f, minus, vars, h)) / (2 * h);
}

inline double partial(const Fn& f, const std::vector<double>& p, const std::vector<int>& vars, double h = 0.0) {
  if (h == 0.0) h = vars.size() <= 1 ? 1e-3 : (vars.size() == 2 ? 4e-3 : 1.5e-2);
  return (4 * central(f, p, vars, h / 2) - central(f, p, vars, h)) / 3;
}

}  // namespace fd
