#include "temu/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "temu/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "TEMU1 readers/writers assume a little-endian host");

namespace temu {

void put_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_f64(std::ostream& out, double v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_f64s(std::ostream& out, const double* xs, std::size_t n) {
    out.write(reinterpret_cast<const char*>(xs), static_cast<std::streamsize>(n * sizeof(double)));
}

void put_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
    put_u64(out, static_cast<std::uint64_t>(m.rows()));
    put_u64(out, static_cast<std::uint64_t>(m.cols()));
    put_f64s(out, m.data(), static_cast<std::size_t>(m.size()));
}

std::uint64_t get_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw IoError("unexpected end of stream (u64)");
    return v;
}

double get_f64(std::istream& in) {
    double v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw IoError("unexpected end of stream (f64)");
    return v;
}

void get_f64s(std::istream& in, double* xs, std::size_t n) {
    in.read(reinterpret_cast<char*>(xs), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw IoError("unexpected end of stream (f64 array)");
}

Eigen::MatrixXd get_matrix(std::istream& in) {
    const auto rows = get_u64(in);
    const auto cols = get_u64(in);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    get_f64s(in, m.data(), rows * cols);
    return m;
}

void write_tensor(std::ostream& out, const Tensor& t) {
    out << "TEMU1\n" << t.order();
    for (std::size_t d : t.dims()) out << ' ' << d;
    out << '\n';
    put_f64s(out, t.data().data(), t.size());
    if (!out) throw IoError("tensor write failed");
}

Tensor read_tensor(std::istream& in) {
    std::string magic;
    if (!std::getline(in, magic) || magic != "TEMU1") throw IoError("not a TEMU1 tensor file");
    std::string header;
    if (!std::getline(in, header)) throw IoError("missing TEMU1 header line");
    std::istringstream hs(header);
    std::size_t order = 0;
    if (!(hs >> order) || order == 0) throw IoError("bad TEMU1 header: order");
    std::vector<std::size_t> dims(order);
    for (auto& d : dims)
        if (!(hs >> d) || d == 0) throw IoError("bad TEMU1 header: dims");
    std::size_t n = 1;
    for (std::size_t d : dims) n *= d;
    std::vector<double> data(n);
    get_f64s(in, data.data(), n);
    return Tensor(std::move(dims), std::move(data));
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_tensor(out, t);
}

Tensor read_tensor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return read_tensor(in);
}

std::vector<std::vector<double>> read_csv(const std::filesystem::path& path,
                                          const std::vector<std::string>& header) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::string expected;
    for (std::size_t j = 0; j < header.size(); ++j) expected += (j ? "," : "") + header[j];
    if (line != expected)
        throw IoError(path.string() + ":1: expected header '" + expected + "', got '" + line +
                      "'");

    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        row.reserve(header.size());
        std::size_t pos = 0;
        while (true) {
            const std::size_t comma = line.find(',', pos);
            const std::string cell = line.substr(pos, comma - pos);
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw IoError(path.string() + ":" + std::to_string(lineno) +
                              ": not a number: '" + cell + "'");
            }
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (row.size() != header.size())
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                          std::to_string(header.size()) + " fields, got " +
                          std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << "\n";
    char buf[32];
    for (const auto& row : rows) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", row[j]);
            out << (j ? "," : "") << buf;
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace temu
