#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hypoco/basis.hpp"
#include "hypoco/error.hpp"
#include "hypoco/operators.hpp"

namespace hypoco {

/// Binary container layout, all integers and doubles little-endian:
///
///   bytes 0..4   magic "HYPO1"
///   u32          kind (1 basis, 2 coefficient vector, 3 operator bundle)
///   u64          dimension of H
///   payload
///
/// basis payload: i32 d, i32 n_q, i32 n_p, f64 beta, f64 mass, f64 torus
/// length, u8 has_xi, i32 n_xi, string potential, u64 fingerprint.
/// vector payload: u64 basis fingerprint, f64[dimension].
/// bundle payload: basis payload, u32 model, f64 gamma, f64 epsilon, u32
/// operator count, then per operator: string name, u32 symmetry tag, u64
/// rows, u64 cols, u64 nnz, nnz x (u64 row, u64 col, f64 value) in
/// column-major order.
/// Strings are u64 length followed by the bytes.
enum class ContainerKind : std::uint32_t { basis = 1, vector = 2, bundle = 3 };

namespace detail {

class Writer {
 public:
  template <class T>
  void put(T v) {
    static_assert(std::is_arithmetic_v<T>);
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    bytes_.insert(bytes_.end(), b, b + sizeof(T));
  }
  void put(const std::string& s) {
    put<std::uint64_t>(s.size());
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  const std::vector<unsigned char>& bytes() const { return bytes_; }

 private:
  std::vector<unsigned char> bytes_;
};

class Reader {
 public:
  explicit Reader(std::vector<unsigned char> b) : bytes_(std::move(b)) {}
  template <class T>
  T get() {
    static_assert(std::is_arithmetic_v<T>);
    need(sizeof(T));
    unsigned char b[sizeof(T)];
    std::memcpy(b, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
  std::string get_string() {
    const auto n = get<std::uint64_t>();
    need(n);
    std::string s(bytes_.begin() + pos_, bytes_.begin() + pos_ + n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > bytes_.size() - pos_) fail(ErrorKind::config, "serialize", "truncated container");
  }
  std::vector<unsigned char> bytes_;
  std::size_t pos_ = 0;
};

inline void write_header(Writer& w, ContainerKind kind, std::uint64_t dim) {
  for (char c : std::string("HYPO1")) w.put<std::uint8_t>(static_cast<std::uint8_t>(c));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(kind));
  w.put<std::uint64_t>(dim);
}

inline std::uint64_t read_header(Reader& r, ContainerKind kind) {
  std::string magic;
  for (int i = 0; i < 5; ++i) magic.push_back(static_cast<char>(r.get<std::uint8_t>()));
  if (magic != "HYPO1") fail(ErrorKind::config, "serialize", "bad magic bytes (not a HYPO1 container)");
  if (r.get<std::uint32_t>() != static_cast<std::uint32_t>(kind))
    fail(ErrorKind::config, "serialize", "container holds a different object kind");
  return r.get<std::uint64_t>();
}

inline void write_basis(Writer& w, const BasisSet& b) {
  const BasisSpec& s = b.spec();
  w.put<std::int32_t>(s.d);
  w.put<std::int32_t>(s.n_q);
  w.put<std::int32_t>(s.n_p);
  w.put<double>(s.beta);
  w.put<double>(s.mass);
  w.put<double>(s.torus_length);
  w.put<std::uint8_t>(s.has_xi ? 1 : 0);
  w.put<std::int32_t>(s.n_xi);
  w.put(b.potential().to_string());
  w.put<std::uint64_t>(b.fingerprint());
}

/// Rebuilds the basis from its parameters and checks the fingerprint.
inline BasisSet read_basis(Reader& r, const BuildOptions& options) {
  BasisSpec s;
  s.d = r.get<std::int32_t>();
  s.n_q = r.get<std::int32_t>();
  s.n_p = r.get<std::int32_t>();
  s.beta = r.get<double>();
  s.mass = r.get<double>();
  s.torus_length = r.get<double>();
  s.has_xi = r.get<std::uint8_t>() != 0;
  s.n_xi = r.get<std::int32_t>();
  const std::string potential = r.get_string();
  const auto fingerprint = r.get<std::uint64_t>();
  BasisSet b = build_basis(s, Potential::parse(potential, s.d, s.torus_length), options);
  if (b.fingerprint() != fingerprint) fail(ErrorKind::config, "serialize", "basis mismatch: fingerprint differs");
  return b;
}

inline void write_matrix(Writer& w, const SparseOperator& op) {
  w.put(op.name);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(op.tag));
  w.put<std::uint64_t>(op.matrix.rows());
  w.put<std::uint64_t>(op.matrix.cols());
  w.put<std::uint64_t>(op.matrix.nonZeros());
  for (int k = 0; k < op.matrix.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(op.matrix, k); it; ++it) {
      w.put<std::uint64_t>(it.row());
      w.put<std::uint64_t>(it.col());
      w.put<double>(it.value());
    }
}

inline SparseOperator read_matrix(Reader& r) {
  SparseOperator op;
  op.name = r.get_string();
  const auto tag = r.get<std::uint32_t>();
  if (tag > 2) fail(ErrorKind::config, "serialize", "unknown symmetry tag");
  op.tag = static_cast<Symmetry>(tag);
  const auto rows = r.get<std::uint64_t>(), cols = r.get<std::uint64_t>(), nnz = r.get<std::uint64_t>();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(nnz);
  for (std::uint64_t i = 0; i < nnz; ++i) {
    const auto row = r.get<std::uint64_t>(), col = r.get<std::uint64_t>();
    const double v = r.get<double>();
    if (row >= rows || col >= cols) fail(ErrorKind::config, "serialize", "matrix entry out of range");
    t.emplace_back(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col), v);
  }
  op.matrix.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  op.matrix.setFromTriplets(t.begin(), t.end());
  return op;
}

inline void save_bytes(const std::string& path, const std::vector<unsigned char>& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::config, "serialize", "cannot write '" + path + "'");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline std::vector<unsigned char> load_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::config, "serialize", "cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace detail

inline std::vector<unsigned char> encode_basis(const BasisSet& b) {
  detail::Writer w;
  detail::write_header(w, ContainerKind::basis, b.dimension());
  detail::write_basis(w, b);
  return w.bytes();
}

inline BasisSet decode_basis(std::vector<unsigned char> bytes, const BuildOptions& options = BuildOptions::from_environment()) {
  detail::Reader r(std::move(bytes));
  const auto dim = detail::read_header(r, ContainerKind::basis);
  BasisSet b = detail::read_basis(r, options);
  if (static_cast<std::uint64_t>(b.dimension()) != dim || !r.done())
    fail(ErrorKind::config, "serialize", "inconsistent basis container");
  return b;
}

inline std::vector<unsigned char> encode_vector(const CoefficientVector& v) {
  detail::Writer w;
  detail::write_header(w, ContainerKind::vector, v.values.size());
  w.put<std::uint64_t>(v.basis_id);
  for (double x : v.values) w.put<double>(x);
  return w.bytes();
}

inline CoefficientVector decode_vector(std::vector<unsigned char> bytes) {
  detail::Reader r(std::move(bytes));
  const auto dim = detail::read_header(r, ContainerKind::vector);
  CoefficientVector v;
  v.basis_id = r.get<std::uint64_t>();
  v.values.resize(static_cast<Eigen::Index>(dim));
  for (auto& x : v.values) x = r.get<double>();
  if (!r.done()) fail(ErrorKind::config, "serialize", "trailing bytes in vector container");
  return v;
}

inline std::vector<unsigned char> encode_bundle(const OperatorBundle& ops) {
  detail::Writer w;
  detail::write_header(w, ContainerKind::bundle, ops.basis->dimension());
  detail::write_basis(w, *ops.basis);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ops.model.model));
  w.put<double>(ops.model.gamma);
  w.put<double>(ops.model.epsilon);
  w.put<std::uint32_t>(6);
  for (const SparseOperator* op : {&ops.A, &ops.S, &ops.Pi0, &ops.R, &ops.L_ham, &ops.L_FD}) detail::write_matrix(w, *op);
  return w.bytes();
}

inline OperatorBundle decode_bundle(std::vector<unsigned char> bytes,
                                    const BuildOptions& options = BuildOptions::from_environment()) {
  detail::Reader r(std::move(bytes));
  const auto dim = detail::read_header(r, ContainerKind::bundle);
  OperatorBundle ops;
  ops.basis = std::make_shared<const BasisSet>(detail::read_basis(r, options));
  const auto model = r.get<std::uint32_t>();
  if (model > 2) fail(ErrorKind::config, "serialize", "unknown model");
  ops.model.model = static_cast<Model>(model);
  ops.model.gamma = r.get<double>();
  ops.model.epsilon = r.get<double>();
  const BasisSpec& s = ops.basis->spec();
  ops.model.beta = s.beta;
  ops.model.mass = s.mass;
  ops.model.d = s.d;
  ops.model.potential = ops.basis->potential();
  if (r.get<std::uint32_t>() != 6) fail(ErrorKind::config, "serialize", "bundle must hold six operators");
  for (SparseOperator* op : {&ops.A, &ops.S, &ops.Pi0, &ops.R, &ops.L_ham, &ops.L_FD}) *op = detail::read_matrix(r);
  if (!r.done()) fail(ErrorKind::config, "serialize", "trailing bytes in bundle container");
  for (const SparseOperator* op : {&ops.A, &ops.S, &ops.Pi0, &ops.R})
    if (op->matrix.rows() != static_cast<Eigen::Index>(dim) || op->matrix.cols() != static_cast<Eigen::Index>(dim))
      fail(ErrorKind::config, "serialize", "basis mismatch: operator " + op->name + " has the wrong size");
  return ops;
}

inline void save_bundle(const std::string& path, const OperatorBundle& ops) { detail::save_bytes(path, encode_bundle(ops)); }

inline OperatorBundle load_bundle(const std::string& path, const BuildOptions& options = BuildOptions::from_environment()) {
  return decode_bundle(detail::load_bytes(path), options);
}

inline nlohmann::json basis_json(const BasisSet& b) {
  const BasisSpec& s = b.spec();
  return {{"d", s.d},
          {"n_q", s.n_q},
          {"n_p", s.n_p},
          {"n_xi", s.n_xi},
          {"has_xi", s.has_xi},
          {"beta", s.beta},
          {"mass", s.mass},
          {"torus_length", s.torus_length},
          {"potential", b.potential().to_string()},
          {"dimension", b.dimension()},
          {"fingerprint", b.fingerprint()}};
}

/// JSON is meant for small cases: the full coefficient list is written.
inline nlohmann::json vector_json(const CoefficientVector& v) {
  return {{"basis_id", v.basis_id}, {"values", std::vector<double>(v.values.begin(), v.values.end())}};
}

inline CoefficientVector vector_from_json(const nlohmann::json& j) {
  CoefficientVector v;
  v.basis_id = j.at("basis_id").get<std::uint64_t>();
  const auto values = j.at("values").get<std::vector<double>>();
  v.values = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  return v;
}

}  // namespace hypoco
