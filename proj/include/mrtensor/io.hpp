#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "mrtensor/dense.hpp"
#include "mrtensor/experiments.hpp"
#include "mrtensor/ms.hpp"

namespace mrt {

enum class IoErrc {
    FileOpen,
    BadMagic,
    UnsupportedVersion,
    UnsupportedDtype,
    BadHeader,
    Truncated,
    RankMismatch,
    UnsupportedMaxval,
};

const char* to_string(IoErrc code);

class IoError : public std::runtime_error {
public:
    IoError(IoErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    IoErrc code() const { return code_; }

private:
    IoErrc code_;
};

// Dense tensor file: "MRT0", u8 version, u8 dtype (0 = f64), u8 order,
// order x u64 shape, row-major little-endian doubles.
std::string serialize_tensor(const DenseTensor& t);
DenseTensor parse_tensor(const std::string& bytes);
void write_tensor(const std::filesystem::path& path, const DenseTensor& t);
DenseTensor read_tensor(const std::filesystem::path& path);

// Multiresolution archive: "MRTC", u8 version, u8 base format, u32 batch,
// u32 levels, u8 order, order x u64 base shape, then per level a u8 presence
// flag followed by its rank descriptor and payload:
//   TT: (order - 1) x u64 rank chain, cores in order, each (left, mode, right) row-major;
//   CP: u64 rank, weights, then each factor column-major.
std::string serialize_archive(const MSTensor& x);
MSTensor parse_archive(const std::string& bytes);
void write_archive(const std::filesystem::path& path, const MSTensor& x);
MSTensor read_archive(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

enum class FitPolicy { None, Crop, Pad };

struct PgmImage {
    DenseTensor pixels;
    /// Original height and width before cropping or padding.
    Index source_rows = 0;
    Index source_cols = 0;
    /// Human-readable description of what was done to fit the grid.
    std::string policy;
};

/// Binary greyscale PGM (P5), maxval 255 or 65535, scaled to [0, 1].
/// Crop takes the largest centered block divisible by `block`; Pad extends
/// the image symmetrically by edge replication to the next multiple.
PgmImage parse_pgm(const std::string& bytes, Index block = 1, FitPolicy policy = FitPolicy::None);
PgmImage ingest_pgm(const std::filesystem::path& path, Index block = 1, FitPolicy policy = FitPolicy::None);

/// "method,rank,relative_error,compression_ratio,seconds" with one row per entry.
std::string format_csv(const std::vector<BenchRow>& rows);

}  // namespace mrt
