/// @file field_io.hpp
/// @brief FLD file format: one header line plus node data, text or binary.
///
/// Header:
///   FLD1 dim=<n> shape=<k1,...,kn> spacing=<h> origin=<o1,...,on> kind=<scalar|vector|symmat> [enc=bin]
///
/// Text payload is whitespace-separated decimal, node-major, component index
/// fastest, written with enough digits to round-trip exactly.  With enc=bin
/// the payload after the header newline is raw little-endian IEEE-754 doubles
/// in the same order.  Masks travel as scalar fields of 0/1.

#pragma once

#include <string>

#include "s2lab/fields.hpp"

namespace s2lab {

enum class FldEncoding { text, binary };

void write_fld(const std::string& path, const ScalarField& f, FldEncoding enc = FldEncoding::text);
void write_fld(const std::string& path, const VectorField& f, FldEncoding enc = FldEncoding::text);
void write_fld(const std::string& path, const SymmetricMatrixField& f, FldEncoding enc = FldEncoding::text);
void write_fld(const std::string& path, const RegionMask& mask, FldEncoding enc = FldEncoding::text);

ScalarField read_fld_scalar(const std::string& path);
VectorField read_fld_vector(const std::string& path);
SymmetricMatrixField read_fld_symmat(const std::string& path);
RegionMask read_fld_mask(const std::string& path);

}  // namespace s2lab
