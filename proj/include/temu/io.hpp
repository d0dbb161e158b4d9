#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "temu/tensor.hpp"

namespace temu {

// TEMU1 tensor file: magic "TEMU1\n", ASCII header "K n_1 ... n_K\n", then
// prod(n_k) little-endian IEEE-754 doubles in linearization order.
void write_tensor(const std::filesystem::path& path, const Tensor& t);
[[nodiscard]] Tensor read_tensor(const std::filesystem::path& path);
void write_tensor(std::ostream& out, const Tensor& t);
[[nodiscard]] Tensor read_tensor(std::istream& in);

// Little-endian binary primitives for the emulator container.
void put_u64(std::ostream& out, std::uint64_t v);
void put_f64(std::ostream& out, double v);
void put_f64s(std::ostream& out, const double* xs, std::size_t n);
void put_matrix(std::ostream& out, const Eigen::MatrixXd& m);
[[nodiscard]] std::uint64_t get_u64(std::istream& in);
[[nodiscard]] double get_f64(std::istream& in);
void get_f64s(std::istream& in, double* xs, std::size_t n);
[[nodiscard]] Eigen::MatrixXd get_matrix(std::istream& in);

/// Parse a CSV file with the exact expected header. Returns one row per
/// record; throws IoError naming the line on schema violations.
[[nodiscard]] std::vector<std::vector<double>> read_csv(const std::filesystem::path& path,
                                                        const std::vector<std::string>& header);

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

}  // namespace temu
