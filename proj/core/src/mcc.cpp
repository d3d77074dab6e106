#include "soe/mcc.hpp"

#include <algorithm>
#include <numeric>

#include "soe/error.hpp"

namespace soe {

std::vector<double> adjust_family(std::span<const double> ps, MccMethod method) {
  for (double p : ps) {
    if (!(p > 0.0 && p <= 1.0)) throw Error(ErrorKind::Parameter, "adjust_family: p must lie in (0, 1]");
  }
  std::vector<double> out(ps.begin(), ps.end());
  const auto m = static_cast<double>(ps.size());
  switch (method) {
    case MccMethod::None:
      break;
    case MccMethod::Bonferroni:
      for (double& p : out) p = std::min(1.0, m * p);
      break;
    case MccMethod::Holm: {
      std::vector<std::size_t> order(ps.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ps[a] < ps[b]; });
      double running = 0.0;
      for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const double scaled = std::min(1.0, (m - static_cast<double>(rank)) * ps[order[rank]]);
        running = std::max(running, scaled);
        out[order[rank]] = running;
      }
      break;
    }
  }
  return out;
}

}  // namespace soe
