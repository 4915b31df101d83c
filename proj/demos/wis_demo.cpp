// Weighted interval scheduling recorded with DPArray. Compared with a plain
// std::vector implementation only two lines change: the array declaration and
// the display() call at the end.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <vector>

#include "dpkit/dpkit.hpp"

int main(int argc, char** argv) {
  // (s, f, w), sorted by finish time.
  const std::vector<dpkit::corpus::Interval> intervals = {{1, 3, 2}, {2, 5, 4}, {4, 6, 4}};
  const auto p = dpkit::corpus::predecessors(intervals);
  const std::size_t n = intervals.size();

  dpkit::DPArray<double> arr(n + 1, "OPT");
  arr[0] = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    const double skip = arr[i - 1];
    const double take = intervals[i - 1].w + arr[p[i - 1]];
    arr[i] = std::max(skip, take);
  }
  const dpkit::Trace trace = dpkit::display(arr);

  std::cout << "OPT(" << n << ") = " << *arr.snapshot()[n] << ", " << trace.frames.size() << " frames\n";
  if (argc > 1) {
    dpkit::export_static(trace, argv[1]);
    std::cout << "wrote " << argv[1] << "\n";
  }
  return 0;
}
