#include <fstream>

#include "temu/emulator.hpp"
#include "temu/error.hpp"
#include "temu/io.hpp"

namespace temu {

// Container layout: magic "TEMUEM1\n"; u64 K; u64 dims[K]; u64 ranks[K];
// per mode a u8-sized tag (0 grid, 1 learned); the core in TEMU1 format;
// K factor matrices; for each learned mode its kind, input matrix, residual
// matrix and r_k serialized surrogates. All integers and reals little endian.

void save_emulator(const std::filesystem::path& path, const TensorEmulator& e) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "TEMUEM1\n";
    const std::size_t order = e.order();
    put_u64(out, order);
    for (std::size_t k = 0; k < order; ++k)
        put_u64(out, static_cast<std::uint64_t>(e.factors.factors[k].rows()));
    for (std::size_t k = 0; k < order; ++k) put_u64(out, e.factors.ranks[k]);
    for (std::size_t k = 0; k < order; ++k)
        out.put(e.specs[k].learned ? char(1) : char(0));
    write_tensor(out, e.factors.core);
    for (std::size_t k = 0; k < order; ++k) put_matrix(out, e.factors.factors[k]);
    for (std::size_t k = 0; k < order; ++k) {
        if (!e.specs[k].learned) continue;
        put_u64(out, static_cast<std::uint64_t>(e.specs[k].kind));
        put_matrix(out, e.specs[k].inputs);
        put_matrix(out, e.residuals[k]);
        put_u64(out, e.surrogates[k].size());
        for (const auto& s : e.surrogates[k]) s.save(out);
    }
    if (!out) throw IoError("emulator write failed: " + path.string());
}

TensorEmulator load_emulator(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string magic;
    if (!std::getline(in, magic) || magic != "TEMUEM1")
        throw IoError(path.string() + ": not a TEMUEM1 emulator file");

    TensorEmulator e;
    const std::size_t order = get_u64(in);
    if (order == 0 || order > 64) throw IoError("emulator file: bad order");
    std::vector<std::size_t> dims(order);
    for (auto& d : dims) d = get_u64(in);
    e.factors.ranks.resize(order);
    for (auto& r : e.factors.ranks) r = get_u64(in);
    e.specs.resize(order);
    for (std::size_t k = 0; k < order; ++k) {
        const int tag = in.get();
        if (tag != 0 && tag != 1) throw IoError("emulator file: bad mode tag");
        e.specs[k].learned = tag == 1;
    }
    e.factors.core = read_tensor(in);
    e.factors.factors.resize(order);
    for (std::size_t k = 0; k < order; ++k) e.factors.factors[k] = get_matrix(in);
    e.surrogates.resize(order);
    e.residuals.assign(order, Eigen::MatrixXd());
    for (std::size_t k = 0; k < order; ++k) {
        if (!e.specs[k].learned) continue;
        e.specs[k].kind = static_cast<SurrogateKind>(get_u64(in));
        e.specs[k].inputs = get_matrix(in);
        e.residuals[k] = get_matrix(in);
        const std::size_t nsur = get_u64(in);
        e.surrogates[k].reserve(nsur);
        for (std::size_t j = 0; j < nsur; ++j) e.surrogates[k].push_back(Surrogate::load(in));
    }
    return e;
}

}  // namespace temu
