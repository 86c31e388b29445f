#include "ptme/npy.hpp"

#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

namespace ptme {
namespace {

constexpr unsigned char kMagic[6] = {0x93, 'N', 'U', 'M', 'P', 'Y'};

double decode_f8(const unsigned char* p) {
  std::uint64_t u = 0;
  for (int k = 7; k >= 0; --k) u = (u << 8) | p[k];
  return std::bit_cast<double>(u);
}

float decode_f4(const unsigned char* p) {
  std::uint32_t u = 0;
  for (int k = 3; k >= 0; --k) u = (u << 8) | p[k];
  return std::bit_cast<float>(u);
}

void encode_f8(double x, unsigned char* p) {
  std::uint64_t u = std::bit_cast<std::uint64_t>(x);
  for (int k = 0; k < 8; ++k) {
    p[k] = static_cast<unsigned char>(u & 0xff);
    u >>= 8;
  }
}

// Pulls the value following "'key':" out of the header dict literal.
std::string header_field(const std::string& header, const std::string& key) {
  const std::string needle = "'" + key + "'";
  const std::size_t at = header.find(needle);
  if (at == std::string::npos)
    fail(ErrorKind::BadHeader, "missing '" + key + "' in NPY header");
  std::size_t pos = header.find(':', at + needle.size());
  if (pos == std::string::npos)
    fail(ErrorKind::BadHeader, "malformed NPY header near '" + key + "'");
  ++pos;
  while (pos < header.size() && std::isspace(static_cast<unsigned char>(header[pos])))
    ++pos;
  if (pos >= header.size())
    fail(ErrorKind::BadHeader, "malformed NPY header near '" + key + "'");
  if (header[pos] == '\'') {
    const std::size_t end = header.find('\'', pos + 1);
    if (end == std::string::npos)
      fail(ErrorKind::BadHeader, "unterminated string in NPY header");
    return header.substr(pos + 1, end - pos - 1);
  }
  if (header[pos] == '(') {
    const std::size_t end = header.find(')', pos);
    if (end == std::string::npos)
      fail(ErrorKind::BadHeader, "unterminated shape tuple in NPY header");
    return header.substr(pos, end - pos + 1);
  }
  // bare token (True / False)
  std::size_t end = pos;
  while (end < header.size() && (std::isalnum(static_cast<unsigned char>(header[end]))))
    ++end;
  return header.substr(pos, end - pos);
}

std::vector<std::size_t> parse_shape(const std::string& tuple) {
  std::vector<std::size_t> dims;
  std::string inner = tuple.substr(1, tuple.size() - 2);  // strip parens
  std::size_t pos = 0;
  while (pos < inner.size()) {
    while (pos < inner.size() &&
           (std::isspace(static_cast<unsigned char>(inner[pos])) || inner[pos] == ','))
      ++pos;
    if (pos >= inner.size()) break;
    std::size_t end = pos;
    while (end < inner.size() && std::isdigit(static_cast<unsigned char>(inner[end])))
      ++end;
    if (end == pos)
      fail(ErrorKind::BadHeader, "malformed shape tuple in NPY header");
    std::size_t dim = 0;
    std::from_chars(inner.data() + pos, inner.data() + end, dim);
    dims.push_back(dim);
    pos = end;
  }
  return dims;
}

std::string index_name(std::size_t flat, const std::vector<std::size_t>& shape) {
  std::vector<std::size_t> idx(shape.size(), 0);
  for (std::size_t d = shape.size(); d-- > 0;) {
    idx[d] = flat % shape[d];
    flat /= shape[d];
  }
  std::ostringstream out;
  out << '(';
  for (std::size_t d = 0; d < idx.size(); ++d) {
    if (d) out << ',';
    out << idx[d];
  }
  out << ')';
  return out.str();
}

std::string shape_literal(const std::vector<std::size_t>& shape) {
  std::ostringstream out;
  out << '(';
  for (std::size_t d = 0; d < shape.size(); ++d) {
    if (d) out << ' ';
    out << shape[d] << ',';
  }
  std::string s = out.str();
  if (shape.size() > 1) s.pop_back();  // (2, 3) not (2, 3,)
  return s + ')';
}

}  // namespace

std::size_t NpyArray::count() const {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return shape.empty() ? 0 : n;
}

NpyArray read_npy(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) fail(ErrorKind::IoFailure, "cannot open " + path.string());
  std::vector<unsigned char> bytes(
      (std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  if (file.bad()) fail(ErrorKind::IoFailure, "read failed for " + path.string());

  if (bytes.size() < 10 || std::memcmp(bytes.data(), kMagic, 6) != 0)
    fail(ErrorKind::BadMagic, path.string() + " is not an NPY file");
  if (bytes[6] != 1 || bytes[7] != 0)
    fail(ErrorKind::BadMagic,
         path.string() + ": only NPY version 1.0 is accepted, got " +
             std::to_string(int(bytes[6])) + "." + std::to_string(int(bytes[7])));

  const std::size_t header_len = bytes[8] | (std::size_t(bytes[9]) << 8);
  if (bytes.size() < 10 + header_len)
    fail(ErrorKind::BadHeader, path.string() + ": header extends past end of file");
  const std::string header(bytes.begin() + 10, bytes.begin() + 10 + header_len);

  const std::string descr = header_field(header, "descr");
  std::size_t itemsize = 0;
  if (descr == "<f4") itemsize = 4;
  else if (descr == "<f8") itemsize = 8;
  else
    fail(ErrorKind::UnsupportedDtype,
         path.string() + ": dtype '" + descr + "' is not <f4 or <f8");

  const std::string order = header_field(header, "fortran_order");
  if (order == "True")
    fail(ErrorKind::FortranOrder, path.string() + ": Fortran-ordered payloads are not accepted");
  if (order != "False")
    fail(ErrorKind::BadHeader, path.string() + ": malformed fortran_order flag");

  const std::string tuple = header_field(header, "shape");
  if (tuple.size() < 2 || tuple.front() != '(' || tuple.back() != ')')
    fail(ErrorKind::BadHeader, path.string() + ": malformed shape tuple");
  NpyArray out;
  out.shape = parse_shape(tuple);
  if (out.shape.empty() || out.shape.size() > 3)
    fail(ErrorKind::BadHeader,
         path.string() + ": rank " + std::to_string(out.shape.size()) +
             " not supported (need 1-, 2-, or 3-D)");

  const std::size_t n = out.count();
  const std::size_t payload = bytes.size() - 10 - header_len;
  if (payload != n * itemsize)
    fail(ErrorKind::TruncatedPayload,
         path.string() + ": payload is " + std::to_string(payload) +
             " bytes, expected " + std::to_string(n * itemsize));

  out.data.resize(n);
  const unsigned char* p = bytes.data() + 10 + header_len;
  for (std::size_t k = 0; k < n; ++k, p += itemsize)
    out.data[k] = (itemsize == 4) ? double(decode_f4(p)) : decode_f8(p);

  for (std::size_t k = 0; k < n; ++k)
    if (!std::isfinite(out.data[k]))
      fail(ErrorKind::NonFinite,
           path.string() + ": non-finite value at index " + index_name(k, out.shape));
  return out;
}

void write_npy(const std::filesystem::path& path, const NpyArray& array) {
  if (array.shape.empty() || array.shape.size() > 3)
    fail(ErrorKind::InvalidArgument, "write_npy handles 1-, 2-, or 3-D arrays only");
  if (array.data.size() != array.count())
    fail(ErrorKind::Internal, "write_npy: shape does not match element count");

  std::string dict = "{'descr': '<f8', 'fortran_order': False, 'shape': " +
                     shape_literal(array.shape) + ", }";
  // Pad with spaces so the payload starts on a 64-byte boundary; newline last.
  std::size_t total = 10 + dict.size() + 1;
  const std::size_t pad = (64 - total % 64) % 64;
  dict.append(pad, ' ');
  dict.push_back('\n');

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) fail(ErrorKind::IoFailure, "cannot open " + path.string() + " for writing");
  file.write(reinterpret_cast<const char*>(kMagic), 6);
  const unsigned char version[2] = {1, 0};
  file.write(reinterpret_cast<const char*>(version), 2);
  const std::size_t hlen = dict.size();
  const unsigned char lenb[2] = {static_cast<unsigned char>(hlen & 0xff),
                                 static_cast<unsigned char>((hlen >> 8) & 0xff)};
  file.write(reinterpret_cast<const char*>(lenb), 2);
  file.write(dict.data(), static_cast<std::streamsize>(dict.size()));

  std::vector<unsigned char> buf(array.data.size() * 8);
  for (std::size_t k = 0; k < array.data.size(); ++k)
    encode_f8(array.data[k], buf.data() + 8 * k);
  file.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size()));
  if (!file) fail(ErrorKind::IoFailure, "write failed for " + path.string());
}

PaeLogits pae_from_npy(const NpyArray& array) {
  if (array.ndim() != 3)
    fail(ErrorKind::BadHeader, "expected a 3-D logits tensor, got rank " +
                                   std::to_string(array.ndim()));
  Tensor3 t(array.shape[0], array.shape[1], array.shape[2]);
  t.v = array.data;
  return PaeLogits::from_tensor(std::move(t));
}

Matrix matrix_from_npy(const NpyArray& array) {
  if (array.ndim() != 2)
    fail(ErrorKind::BadHeader,
         "expected a 2-D array, got rank " + std::to_string(array.ndim()));
  Matrix m(array.shape[0], array.shape[1]);
  m.v = array.data;
  return m;
}

std::vector<double> vector_from_npy(const NpyArray& array) {
  if (array.ndim() != 1)
    fail(ErrorKind::BadHeader,
         "expected a 1-D array, got rank " + std::to_string(array.ndim()));
  return array.data;
}

PaeLogits PaeLogits::from_tensor(Tensor3 t) {
  if (t.n0 != t.n1)
    fail(ErrorKind::BadHeader, "logits tensor must be square in its leading dims, got " +
                                   std::to_string(t.n0) + "x" + std::to_string(t.n1));
  if (t.n0 < 2)
    fail(ErrorKind::InvalidArgument, "logits tensor needs at least 2 residues");
  if (t.n2 < 1)
    fail(ErrorKind::InvalidArgument, "logits tensor needs at least 1 bin");
  if (t.v.size() != t.n0 * t.n1 * t.n2)
    fail(ErrorKind::Internal, "logits tensor storage does not match its shape");
  for (double x : t.v)
    if (!std::isfinite(x))
      fail(ErrorKind::NonFinite, "logits tensor contains a non-finite value");
  return PaeLogits(std::move(t));
}

}  // namespace ptme
