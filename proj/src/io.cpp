#include "mbions/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mbions/diagnostics.hpp"

namespace mbions {
namespace {

std::uint64_t to_little_endian(std::uint64_t x) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t y = 0;
    for (int i = 0; i < 8; ++i) y |= ((x >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return y;
  }
  return x;
}

}  // namespace

void write_snapshot(std::ostream& os, const PhaseDistribution& f, double t) {
  const Domain& dom = *f.domain;
  os << "MBIONS v1 " << dom.x.dim << ' ' << dom.v.dim;
  for (int a = 0; a < dom.x.dim; ++a) os << ' ' << dom.x.n;
  for (int a = 0; a < dom.v.dim; ++a) os << ' ' << dom.v.n;
  os << ' ' << format_number(t) << '\n';
  for (Eigen::Index c = 0; c < f.values.rows(); ++c) {
    for (Eigen::Index k = 0; k < f.values.cols(); ++k) {
      std::uint64_t bits;
      const double v = f.values(c, k);
      std::memcpy(&bits, &v, 8);
      bits = to_little_endian(bits);
      os.write(reinterpret_cast<const char*>(&bits), 8);
    }
  }
  if (!os) throw std::runtime_error("write_snapshot: stream failure");
}

void write_snapshot(const std::string& path, const PhaseDistribution& f, double t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_snapshot: cannot open " + path);
  write_snapshot(os, f, t);
}

Snapshot read_snapshot(std::istream& is, const DomainPtr& domain, Species species) {
  std::string header;
  if (!std::getline(is, header)) throw FormatError("read_snapshot: missing header line");
  std::istringstream hs(header);
  std::string magic, version;
  int dx = 0, dv = 0;
  hs >> magic >> version >> dx >> dv;
  if (magic != "MBIONS" || version != "v1") throw FormatError("read_snapshot: not an MBIONS v1 snapshot");
  if (dx != domain->x.dim || dv != domain->v.dim) throw FormatError("read_snapshot: dimensions do not match the domain");
  for (int a = 0; a < dx; ++a) {
    int n = 0;
    hs >> n;
    if (n != domain->x.n) throw FormatError("read_snapshot: spatial cell count does not match the domain");
  }
  for (int a = 0; a < dv; ++a) {
    int n = 0;
    hs >> n;
    if (n != domain->v.n) throw FormatError("read_snapshot: velocity cell count does not match the domain");
  }
  Snapshot s;
  std::string t_text;
  hs >> t_text;
  try {
    std::size_t used = 0;
    s.t = std::stod(t_text, &used);
    if (used != t_text.size()) throw std::invalid_argument(t_text);
  } catch (const std::exception&) {
    throw FormatError("read_snapshot: bad time field '" + t_text + "'");
  }
  s.f = PhaseDistribution::zeros(domain, species);
  for (Eigen::Index c = 0; c < s.f.values.rows(); ++c) {
    for (Eigen::Index k = 0; k < s.f.values.cols(); ++k) {
      std::uint64_t bits;
      if (!is.read(reinterpret_cast<char*>(&bits), 8)) throw FormatError("read_snapshot: truncated data");
      bits = to_little_endian(bits);
      std::memcpy(&s.f.values(c, k), &bits, 8);
    }
  }
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("read_snapshot: trailing bytes after data");
  return s;
}

Snapshot read_snapshot(const std::string& path, const DomainPtr& domain, Species species) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_snapshot: cannot open " + path);
  return read_snapshot(is, domain, species);
}

SpatialField read_density_file(const std::string& path, const DomainPtr& domain) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_density_file: cannot open " + path);
  std::vector<double> values;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double v;
    if (!(ls >> v)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw FormatError("read_density_file: line " + std::to_string(line_no) + " is not a number");
    }
    std::string rest;
    if (ls >> rest) throw FormatError("read_density_file: line " + std::to_string(line_no) + " has extra text");
    values.push_back(v);
  }
  if (static_cast<Eigen::Index>(values.size()) != domain->x.size())
    throw FormatError("read_density_file: expected " + std::to_string(domain->x.size()) + " values, found " +
                      std::to_string(values.size()));
  return SpatialField(domain, Eigen::Map<Eigen::VectorXd>(values.data(), values.size()));
}

}  // namespace mbions
