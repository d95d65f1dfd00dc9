#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nlmd/tensor3.hpp"

namespace nlmd {

// ---------------------------------------------------------------------------
// Bit-exact array interchange format ("NLMD"), independent of host byte
// order (everything is serialized little-endian):
//
//   magic "NLMD" | u16 format version | u16 dtype | u32 rank
//   per axis: u16 name length + bytes | u64 length | f64 spacing | f64 origin
//   u32 flag count; per flag: u16 name length + bytes | f64 value
//   payload, row-major: f64 (dtype 0) or (re, im) f64 pairs (dtype 1)
//
// Flags carry the run conventions (eta, transform normalization powers,
// unit constants, seed) so a consumer can reproduce numbers exactly.
// ---------------------------------------------------------------------------

constexpr std::uint16_t kDtypeReal64 = 0;
constexpr std::uint16_t kDtypeComplex128 = 1;

struct ArrayAxis {
  std::string name;
  std::uint64_t length = 0;
  double spacing = 0.0;
  double origin = 0.0;
};

struct ArrayFile {
  std::uint16_t dtype = kDtypeReal64;
  std::vector<ArrayAxis> axes;
  std::vector<std::pair<std::string, double>> flags;
  std::vector<double> real_data;    // dtype 0
  std::vector<cplx> complex_data;   // dtype 1

  std::size_t element_count() const {
    std::size_t n = 1;
    for (const ArrayAxis& a : axes) n *= static_cast<std::size_t>(a.length);
    return axes.empty() ? 0 : n;
  }
  double flag(const std::string& name, double fallback) const;
};

// both throw io_error naming the path; write_array also validates that the
// payload size matches the axis lengths (shape_error)
void write_array(const std::string& path, const ArrayFile& file);
ArrayFile read_array(const std::string& path);

}  // namespace nlmd
