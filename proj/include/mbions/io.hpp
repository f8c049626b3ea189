#pragma once

#include <iosfwd>
#include <string>

#include "mbions/kinetics.hpp"

namespace mbions {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Text header `MBIONS v1 <dx> <dv> <nx...> <nv...> <t>` and a newline,
/// then the values as little-endian float64, spatial cell major.
void write_snapshot(std::ostream& os, const PhaseDistribution& f, double t);
void write_snapshot(const std::string& path, const PhaseDistribution& f, double t);

struct Snapshot {
  PhaseDistribution f;
  double t = 0.0;
};

/// Reads a snapshot onto `domain`; the header must match its grid sizes.
Snapshot read_snapshot(std::istream& is, const DomainPtr& domain, Species species);
Snapshot read_snapshot(const std::string& path, const DomainPtr& domain, Species species);

/// One number per line (blank lines and `#` comments skipped), one per
/// spatial cell in flattened order.
SpatialField read_density_file(const std::string& path, const DomainPtr& domain);

}  // namespace mbions
