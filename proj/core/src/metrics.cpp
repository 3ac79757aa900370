#include "modip/metrics.hpp"

#include <cmath>

namespace modip {

double nrmse(Volume const &pred, Volume const &truth, Mask const &region)
{
  require_same_geometry(pred.grid(), truth.grid(), "nrmse");
  require_same_geometry(pred.grid(), region.grid(), "nrmse region");
  double num = 0, den = 0;
  for (Index i = 0; i < pred.size(); ++i) {
    if (!region[i]) { continue; }
    double const d = double(pred[i]) - truth[i];
    num += d * d;
    den += double(truth[i]) * truth[i];
  }
  if (den == 0) { throw ConfigError("nrmse undefined: ground truth is zero over the region"); }
  return std::sqrt(num / den);
}

RoiStats roi_stats(Volume const &v, Mask const &region)
{
  require_same_geometry(v.grid(), region.grid(), "roi_stats");
  RoiStats s;
  s.count = region.count();
  for (Index i = 0; i < v.size(); ++i) {
    if (region[i]) { s.mean += v[i]; }
  }
  s.mean /= double(s.count);
  double var = 0;
  for (Index i = 0; i < v.size(); ++i) {
    if (region[i]) { var += (v[i] - s.mean) * (v[i] - s.mean); }
  }
  s.std = std::sqrt(var / double(s.count));
  return s;
}

std::vector<RegionReport> region_reports(Volume const &pred, Volume const &truth, std::vector<NamedRegion> const &regions)
{
  std::vector<RegionReport> out;
  for (auto const &r : regions) {
    RoiStats const s = roi_stats(pred, r.mask);
    out.push_back({r.name, nrmse(pred, truth, r.mask), s.mean, s.std, s.count});
  }
  return out;
}

} // namespace modip
