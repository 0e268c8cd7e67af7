#include "s2lab/field_io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace s2lab {

namespace {

constexpr const char* kMagic = "FLD1";

std::string join_csv_int(const std::vector<int>& v) {
    std::ostringstream os;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) os << ',';
        os << v[i];
    }
    return os.str();
}

std::string join_csv_double(const std::vector<double>& v) {
    std::ostringstream os;
    os.precision(std::numeric_limits<double>::max_digits10);
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) os << ',';
        os << v[i];
    }
    return os.str();
}

void write_header(std::ostream& os, const Grid& g, const char* kind, FldEncoding enc) {
    os.precision(std::numeric_limits<double>::max_digits10);
    os << kMagic << " dim=" << g.dim << " shape=" << join_csv_int(g.shape)
       << " spacing=" << g.spacing << " origin=" << join_csv_double(g.origin)
       << " kind=" << kind;
    if (enc == FldEncoding::binary) os << " enc=bin";
    os << '\n';
}

void write_payload(std::ostream& os, const std::vector<double>& data, FldEncoding enc, int per_line) {
    if (enc == FldEncoding::binary) {
        static_assert(sizeof(double) == 8);
        os.write(reinterpret_cast<const char*>(data.data()),
                 static_cast<std::streamsize>(data.size() * sizeof(double)));
        return;
    }
    os.precision(std::numeric_limits<double>::max_digits10);
    for (size_t i = 0; i < data.size(); ++i) {
        os << data[i];
        os << (((i + 1) % per_line == 0) ? '\n' : ' ');
    }
    if (data.size() % per_line != 0) os << '\n';
}

struct FldHeader {
    Grid grid;
    std::string kind;
    FldEncoding enc = FldEncoding::text;
};

std::vector<int> parse_csv_int(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
    return out;
}

std::vector<double> parse_csv_double(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

FldHeader parse_header(std::istream& is, const std::string& path) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("FLD: cannot read header of " + path);
    std::stringstream ss(line);
    std::string magic;
    ss >> magic;
    if (magic != kMagic) throw std::runtime_error("FLD: bad magic in " + path);

    int dim = -1;
    std::vector<int> shape;
    double spacing = 0;
    std::vector<double> origin;
    std::string kind;
    FldEncoding enc = FldEncoding::text;

    std::string tok;
    while (ss >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw std::runtime_error("FLD: malformed token '" + tok + "' in " + path);
        const std::string key = tok.substr(0, eq);
        const std::string val = tok.substr(eq + 1);
        if (key == "dim") dim = std::stoi(val);
        else if (key == "shape") shape = parse_csv_int(val);
        else if (key == "spacing") spacing = std::stod(val);
        else if (key == "origin") origin = parse_csv_double(val);
        else if (key == "kind") kind = val;
        else if (key == "enc" && val == "bin") enc = FldEncoding::binary;
        else throw std::runtime_error("FLD: unknown header token '" + key + "' in " + path);
    }
    if (dim < 1 || kind.empty()) throw std::runtime_error("FLD: incomplete header in " + path);
    FldHeader h;
    h.grid = Grid(dim, std::move(shape), spacing, std::move(origin));
    h.kind = kind;
    h.enc = enc;
    return h;
}

std::vector<double> read_payload(std::istream& is, Index count, FldEncoding enc, const std::string& path) {
    std::vector<double> data(count);
    if (enc == FldEncoding::binary) {
        is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(count * sizeof(double)));
        if (is.gcount() != static_cast<std::streamsize>(count * sizeof(double)))
            throw std::runtime_error("FLD: truncated binary payload in " + path);
        return data;
    }
    for (Index i = 0; i < count; ++i)
        if (!(is >> data[i])) throw std::runtime_error("FLD: truncated text payload in " + path);
    return data;
}

template <class Field>
void write_generic(const std::string& path, const Field& f, const char* kind, int per_node, FldEncoding enc) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("FLD: cannot open for writing: " + path);
    write_header(os, f.grid, kind, enc);
    write_payload(os, f.v, enc, per_node);
    if (!os) throw std::runtime_error("FLD: write failed: " + path);
}

FldHeader open_and_check(std::ifstream& is, const std::string& path, const char* want_kind) {
    is.open(path, std::ios::binary);
    if (!is) throw std::runtime_error("FLD: cannot open: " + path);
    FldHeader h = parse_header(is, path);
    if (h.kind != want_kind)
        throw std::runtime_error("FLD: expected kind=" + std::string(want_kind) + " but found kind=" + h.kind +
                                 " in " + path);
    return h;
}

}  // namespace

void write_fld(const std::string& path, const ScalarField& f, FldEncoding enc) {
    write_generic(path, f, "scalar", 1, enc);
}

void write_fld(const std::string& path, const VectorField& f, FldEncoding enc) {
    write_generic(path, f, "vector", f.grid.dim, enc);
}

void write_fld(const std::string& path, const SymmetricMatrixField& f, FldEncoding enc) {
    write_generic(path, f, "symmat", sym_size(f.grid.dim), enc);
}

void write_fld(const std::string& path, const RegionMask& mask, FldEncoding enc) {
    ScalarField f(mask.grid);
    for (Index i = 0; i < mask.grid.size(); ++i) f.v[i] = mask.m[i] ? 1.0 : 0.0;
    write_fld(path, f, enc);
}

ScalarField read_fld_scalar(const std::string& path) {
    std::ifstream is;
    FldHeader h = open_and_check(is, path, "scalar");
    ScalarField f(h.grid);
    f.v = read_payload(is, h.grid.size(), h.enc, path);
    return f;
}

VectorField read_fld_vector(const std::string& path) {
    std::ifstream is;
    FldHeader h = open_and_check(is, path, "vector");
    VectorField f(h.grid);
    f.v = read_payload(is, h.grid.size() * h.grid.dim, h.enc, path);
    return f;
}

SymmetricMatrixField read_fld_symmat(const std::string& path) {
    std::ifstream is;
    FldHeader h = open_and_check(is, path, "symmat");
    SymmetricMatrixField f(h.grid);
    f.v = read_payload(is, h.grid.size() * sym_size(h.grid.dim), h.enc, path);
    return f;
}

RegionMask read_fld_mask(const std::string& path) {
    ScalarField f = read_fld_scalar(path);
    RegionMask mask(f.grid);
    for (Index i = 0; i < f.size(); ++i) {
        if (f.v[i] != 0.0 && f.v[i] != 1.0)
            throw std::runtime_error("FLD: mask payload must be 0/1 in " + path);
        mask.m[i] = f.v[i] != 0.0 ? 1 : 0;
    }
    return mask;
}

}  // namespace s2lab
