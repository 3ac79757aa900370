#pragma once

#include "volume.hpp"

#include <string>
#include <vector>

namespace modip {

// ||R (pred - truth)||_2 / ||R truth||_2
double nrmse(Volume const &pred, Volume const &truth, Mask const &region);

struct RoiStats
{
  double mean = 0;
  double std = 0; // population
  Index count = 0;
};

RoiStats roi_stats(Volume const &v, Mask const &region);

struct RegionReport
{
  std::string name;
  double nrmse = 0;
  double mean_ppm = 0;
  double std_ppm = 0;
  Index count = 0;
};

struct NamedRegion
{
  std::string name;
  Mask mask;
};

std::vector<RegionReport> region_reports(Volume const &pred, Volume const &truth, std::vector<NamedRegion> const &regions);

} // namespace modip
