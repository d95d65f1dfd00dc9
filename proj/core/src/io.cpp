#include "nlmd/io.hpp"

#include <bit>
#include <cstdio>
#include <fstream>

#include "nlmd/errors.hpp"
#include "nlmd/version.hpp"

namespace nlmd {

namespace {

constexpr char kMagic[4] = {'N', 'L', 'M', 'D'};

void put_bytes(std::string& buf, std::uint64_t v, int n) {
  for (int i = 0; i < n; ++i) {
    buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

void put_f64(std::string& buf, double v) {
  put_bytes(buf, std::bit_cast<std::uint64_t>(v), 8);
}

void put_name(std::string& buf, const std::string& name) {
  if (name.size() > 0xffff) throw io_error("array write: name too long");
  put_bytes(buf, name.size(), 2);
  buf.append(name);
}

struct Reader {
  std::string data;
  std::size_t pos = 0;
  std::string path;

  [[noreturn]] void fail(const std::string& why) const {
    throw io_error("array read " + path + ": " + why);
  }
  std::uint64_t bytes(int n) {
    if (pos + static_cast<std::size_t>(n) > data.size()) {
      fail("truncated header");
    }
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(
               static_cast<unsigned char>(data[pos + i]))
           << (8 * i);
    }
    pos += static_cast<std::size_t>(n);
    return v;
  }
  double f64() { return std::bit_cast<double>(bytes(8)); }
  std::string name() {
    const std::size_t n = static_cast<std::size_t>(bytes(2));
    if (pos + n > data.size()) fail("truncated name");
    std::string s = data.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

double ArrayFile::flag(const std::string& name, double fallback) const {
  for (const auto& [key, value] : flags) {
    if (key == name) return value;
  }
  return fallback;
}

void write_array(const std::string& path, const ArrayFile& file) {
  const std::size_t count = file.element_count();
  if (file.dtype == kDtypeReal64) {
    if (file.real_data.size() != count) {
      throw shape_error("array write: payload size mismatch");
    }
  } else if (file.dtype == kDtypeComplex128) {
    if (file.complex_data.size() != count) {
      throw shape_error("array write: payload size mismatch");
    }
  } else {
    throw config_error("array write: unknown dtype");
  }

  std::string buf;
  buf.append(kMagic, 4);
  put_bytes(buf, kFormatVersion, 2);
  put_bytes(buf, file.dtype, 2);
  put_bytes(buf, file.axes.size(), 4);
  for (const ArrayAxis& a : file.axes) {
    put_name(buf, a.name);
    put_bytes(buf, a.length, 8);
    put_f64(buf, a.spacing);
    put_f64(buf, a.origin);
  }
  put_bytes(buf, file.flags.size(), 4);
  for (const auto& [key, value] : file.flags) {
    put_name(buf, key);
    put_f64(buf, value);
  }
  if (file.dtype == kDtypeReal64) {
    for (double v : file.real_data) put_f64(buf, v);
  } else {
    for (const cplx& v : file.complex_data) {
      put_f64(buf, v.real());
      put_f64(buf, v.imag());
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("array write " + path + ": cannot open");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  out.flush();
  if (!out) throw io_error("array write " + path + ": write failed");
}

ArrayFile read_array(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("array read " + path + ": cannot open");
  Reader r;
  r.path = path;
  r.data.assign(std::istreambuf_iterator<char>(in),
                std::istreambuf_iterator<char>());
  if (in.bad()) throw io_error("array read " + path + ": read failed");

  if (r.data.size() < 4 || r.data.compare(0, 4, kMagic, 4) != 0) {
    r.fail("bad magic");
  }
  r.pos = 4;
  const std::uint64_t version = r.bytes(2);
  if (version != kFormatVersion) r.fail("unsupported format version");

  ArrayFile file;
  file.dtype = static_cast<std::uint16_t>(r.bytes(2));
  if (file.dtype != kDtypeReal64 && file.dtype != kDtypeComplex128) {
    r.fail("unknown dtype");
  }
  const std::size_t rank = static_cast<std::size_t>(r.bytes(4));
  file.axes.resize(rank);
  for (ArrayAxis& a : file.axes) {
    a.name = r.name();
    a.length = r.bytes(8);
    a.spacing = r.f64();
    a.origin = r.f64();
  }
  const std::size_t nflags = static_cast<std::size_t>(r.bytes(4));
  file.flags.resize(nflags);
  for (auto& [key, value] : file.flags) {
    key = r.name();
    value = r.f64();
  }

  const std::size_t count = file.element_count();
  const std::size_t scalar_bytes = file.dtype == kDtypeReal64 ? 8 : 16;
  if (r.data.size() - r.pos != count * scalar_bytes) {
    r.fail("payload size mismatch");
  }
  if (file.dtype == kDtypeReal64) {
    file.real_data.resize(count);
    for (double& v : file.real_data) v = r.f64();
  } else {
    file.complex_data.resize(count);
    for (cplx& v : file.complex_data) {
      const double re = r.f64();
      const double im = r.f64();
      v = cplx(re, im);
    }
  }
  return file;
}

}  // namespace nlmd
