#include "mrtensor/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace mrt {

static_assert(std::endian::native == std::endian::little, "archive I/O assumes a little-endian host");

const char* to_string(IoErrc code) {
    switch (code) {
        case IoErrc::FileOpen: return "file open failed";
        case IoErrc::BadMagic: return "bad magic";
        case IoErrc::UnsupportedVersion: return "unsupported version";
        case IoErrc::UnsupportedDtype: return "unsupported dtype";
        case IoErrc::BadHeader: return "malformed header";
        case IoErrc::Truncated: return "truncated";
        case IoErrc::RankMismatch: return "rank/extent mismatch";
        case IoErrc::UnsupportedMaxval: return "unsupported maxval";
    }
    return "unknown";
}

namespace {

constexpr std::uint8_t kTensorVersion = 1;
constexpr std::uint8_t kArchiveVersion = 1;
constexpr std::uint64_t kMaxMode = std::uint64_t{1} << 40;

[[noreturn]] void fail(IoErrc code, const std::string& detail) {
    throw IoError(code, std::string(to_string(code)) + ": " + detail);
}

class Writer {
public:
    template <typename T>
    void put(T value) {
        char buf[sizeof(T)];
        std::memcpy(buf, &value, sizeof(T));
        out_.append(buf, sizeof(T));
    }
    void put_bytes(const char* p, std::size_t n) { out_.append(p, n); }
    void put_doubles(const double* p, std::size_t n) { out_.append(reinterpret_cast<const char*>(p), n * sizeof(double)); }
    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    template <typename T>
    T get(const char* what) {
        need(sizeof(T), what);
        T value;
        std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }
    void get_doubles(double* p, std::size_t n, const char* what) {
        if (n > remaining() / sizeof(double)) fail(IoErrc::Truncated, std::string("payload ends inside ") + what);
        std::memcpy(p, bytes_.data() + pos_, n * sizeof(double));
        pos_ += n * sizeof(double);
    }
    std::string get_bytes(std::size_t n, const char* what) {
        need(n, what);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n, const char* what) {
        if (remaining() < n) fail(IoErrc::Truncated, std::string("file ends inside ") + what);
    }
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

Shape read_shape(Reader& in, std::uint8_t order) {
    if (order == 0) fail(IoErrc::BadHeader, "order 0");
    Shape shape;
    for (std::uint8_t j = 0; j < order; ++j) {
        const auto n = in.get<std::uint64_t>("shape");
        if (n == 0 || n > kMaxMode) fail(IoErrc::BadHeader, "mode size " + std::to_string(n));
        shape.push_back(static_cast<Index>(n));
    }
    return shape;
}

void write_shape(Writer& out, const Shape& shape) {
    if (shape.size() > 255) throw std::invalid_argument("order above 255 cannot be stored");
    out.put<std::uint8_t>(static_cast<std::uint8_t>(shape.size()));
    for (Index n : shape) out.put<std::uint64_t>(static_cast<std::uint64_t>(n));
}

}  // namespace

std::string serialize_tensor(const DenseTensor& t) {
    Writer out;
    out.put_bytes("MRT0", 4);
    out.put<std::uint8_t>(kTensorVersion);
    out.put<std::uint8_t>(0);
    write_shape(out, t.shape());
    out.put_doubles(t.values().data(), static_cast<std::size_t>(t.size()));
    return out.take();
}

DenseTensor parse_tensor(const std::string& bytes) {
    Reader in(bytes);
    if (in.get_bytes(4, "magic") != "MRT0") fail(IoErrc::BadMagic, "expected MRT0");
    const auto version = in.get<std::uint8_t>("version");
    if (version != kTensorVersion) fail(IoErrc::UnsupportedVersion, "version " + std::to_string(version));
    const auto dtype = in.get<std::uint8_t>("dtype");
    if (dtype != 0) fail(IoErrc::UnsupportedDtype, "dtype " + std::to_string(dtype));
    const Shape shape = read_shape(in, in.get<std::uint8_t>("order"));
    DenseTensor t(shape);
    in.get_doubles(t.values().data(), static_cast<std::size_t>(t.size()), "tensor data");
    if (in.remaining() != 0) fail(IoErrc::BadHeader, std::to_string(in.remaining()) + " trailing bytes");
    return t;
}

std::string serialize_archive(const MSTensor& x) {
    const GridSpec& g = x.grid();
    Writer out;
    out.put_bytes("MRTC", 4);
    out.put<std::uint8_t>(kArchiveVersion);
    out.put<std::uint8_t>(static_cast<std::uint8_t>(x.format()));
    out.put<std::uint32_t>(static_cast<std::uint32_t>(g.batch));
    out.put<std::uint32_t>(static_cast<std::uint32_t>(g.levels));
    write_shape(out, g.base_shape);
    for (const auto& p : x.payloads()) {
        if (payload_is_zero(p)) {
            out.put<std::uint8_t>(0);
            continue;
        }
        out.put<std::uint8_t>(1);
        if (const auto* tt = std::get_if<TTTensor>(&p)) {
            for (Index r : tt->ranks()) out.put<std::uint64_t>(static_cast<std::uint64_t>(r));
            for (const auto& core : tt->cores()) out.put_doubles(core.data.data(), static_cast<std::size_t>(core.data.size()));
        } else {
            const auto& cp = std::get<CPTensor>(p);
            out.put<std::uint64_t>(static_cast<std::uint64_t>(cp.rank()));
            out.put_doubles(cp.weights().data(), static_cast<std::size_t>(cp.rank()));
            for (const auto& f : cp.factors()) out.put_doubles(f.data(), static_cast<std::size_t>(f.size()));
        }
    }
    return out.take();
}

MSTensor parse_archive(const std::string& bytes) {
    Reader in(bytes);
    if (in.get_bytes(4, "magic") != "MRTC") fail(IoErrc::BadMagic, "expected MRTC");
    const auto version = in.get<std::uint8_t>("version");
    if (version != kArchiveVersion) fail(IoErrc::UnsupportedVersion, "version " + std::to_string(version));
    const auto format_byte = in.get<std::uint8_t>("base format");
    if (format_byte > 1) fail(IoErrc::BadHeader, "base format " + std::to_string(format_byte));
    const auto format = static_cast<BaseFormat>(format_byte);
    const auto batch = in.get<std::uint32_t>("batch size");
    const auto levels = in.get<std::uint32_t>("level count");
    const Shape base = read_shape(in, in.get<std::uint8_t>("order"));
    if (levels > 64) fail(IoErrc::BadHeader, "level count " + std::to_string(levels));
    GridSpec grid;
    try {
        grid = GridSpec(batch, levels, base);
    } catch (const std::exception& e) {
        fail(IoErrc::BadHeader, e.what());
    }
    const std::size_t d = base.size();
    std::vector<Payload> payloads;
    for (Index k = 0; k <= grid.levels; ++k) {
        const Shape s = grid.level_shape(k);
        const auto present = in.get<std::uint8_t>("presence flag");
        if (present > 1) fail(IoErrc::BadHeader, "presence flag " + std::to_string(present));
        if (present == 0) {
            payloads.push_back(format == BaseFormat::TT ? Payload(TTTensor::zero(s)) : Payload(CPTensor::zero(s)));
            continue;
        }
        if (format == BaseFormat::TT) {
            const TTRanks maximal = maximal_ranks(s);
            std::vector<TTCore> cores;
            Index left = 1;
            TTRanks chain;
            for (std::size_t j = 0; j + 1 < d; ++j) {
                const auto r = in.get<std::uint64_t>("rank chain");
                if (r == 0 || r > static_cast<std::uint64_t>(maximal[j])) {
                    fail(IoErrc::RankMismatch, "level " + std::to_string(k) + " rank " + std::to_string(r) +
                                                   " outside 1.." + std::to_string(maximal[j]));
                }
                chain.push_back(static_cast<Index>(r));
            }
            for (std::size_t j = 0; j < d; ++j) {
                const Index right = j + 1 < d ? chain[j] : 1;
                TTCore core(left, s[j], right);
                in.get_doubles(core.data.data(), static_cast<std::size_t>(core.data.size()), "TT core");
                cores.push_back(std::move(core));
                left = right;
            }
            payloads.emplace_back(TTTensor(std::move(cores)));
        } else {
            const auto r = in.get<std::uint64_t>("CP rank");
            if (r == 0 || r > (in.remaining() / sizeof(double))) {
                fail(IoErrc::RankMismatch, "level " + std::to_string(k) + " CP rank " + std::to_string(r));
            }
            const auto rank = static_cast<Index>(r);
            Eigen::VectorXd w(rank);
            in.get_doubles(w.data(), r, "CP weights");
            std::vector<Eigen::MatrixXd> factors;
            for (Index n : s) {
                Eigen::MatrixXd f(n, rank);
                in.get_doubles(f.data(), static_cast<std::size_t>(f.size()), "CP factor");
                factors.push_back(std::move(f));
            }
            payloads.emplace_back(CPTensor::from_normalized(std::move(w), std::move(factors)));
        }
    }
    if (in.remaining() != 0) {
        fail(IoErrc::RankMismatch, std::to_string(in.remaining()) + " bytes beyond the declared payload extents");
    }
    return MSTensor(grid, format, std::move(payloads));
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(IoErrc::FileOpen, path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(IoErrc::FileOpen, tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) fail(IoErrc::FileOpen, "write to " + tmp.string() + " failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        fail(IoErrc::FileOpen, "rename to " + path.string() + ": " + ec.message());
    }
}

void write_tensor(const std::filesystem::path& path, const DenseTensor& t) { write_file_atomic(path, serialize_tensor(t)); }
DenseTensor read_tensor(const std::filesystem::path& path) { return parse_tensor(read_file(path)); }
void write_archive(const std::filesystem::path& path, const MSTensor& x) { write_file_atomic(path, serialize_archive(x)); }
MSTensor read_archive(const std::filesystem::path& path) { return parse_archive(read_file(path)); }

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(const std::string& bytes, std::size_t& pos) {
    while (pos < bytes.size()) {
        const char c = bytes[pos];
        if (c == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            ++pos;
        } else {
            break;
        }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos])) && bytes[pos] != '#') ++pos;
    if (start == pos) fail(IoErrc::Truncated, "PGM header ends early");
    return bytes.substr(start, pos - start);
}

long pgm_number(const std::string& bytes, std::size_t& pos, const char* what) {
    const std::string tok = pgm_token(bytes, pos);
    char* end = nullptr;
    const long v = std::strtol(tok.c_str(), &end, 10);
    if (*end != '\0' || v <= 0) fail(IoErrc::BadHeader, std::string("PGM ") + what + " '" + tok + "'");
    return v;
}

}  // namespace

PgmImage parse_pgm(const std::string& bytes, Index block, FitPolicy policy) {
    std::size_t pos = 0;
    if (bytes.size() < 2 || bytes.compare(0, 2, "P5") != 0) fail(IoErrc::BadMagic, "expected binary PGM (P5)");
    pos = 2;
    const long cols = pgm_number(bytes, pos, "width");
    const long rows = pgm_number(bytes, pos, "height");
    const long maxval = pgm_number(bytes, pos, "maxval");
    if (maxval != 255 && maxval != 65535) fail(IoErrc::UnsupportedMaxval, "maxval " + std::to_string(maxval));
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        fail(IoErrc::BadHeader, "missing whitespace after maxval");
    }
    ++pos;
    const std::size_t depth = maxval == 255 ? 1 : 2;
    const auto count = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    if (bytes.size() - pos < count * depth) fail(IoErrc::Truncated, "PGM raster shorter than header declares");

    DenseTensor raw({rows, cols});
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
    for (std::size_t i = 0; i < count; ++i) {
        const unsigned v = depth == 1 ? p[i] : (unsigned{p[2 * i]} << 8) | p[2 * i + 1];
        raw.values()[static_cast<Index>(i)] = static_cast<double>(v) / static_cast<double>(maxval);
    }

    PgmImage out;
    out.source_rows = rows;
    out.source_cols = cols;
    if (block < 1) throw std::invalid_argument("block size must be positive");
    const bool fits = rows % block == 0 && cols % block == 0;
    if (policy == FitPolicy::None || fits) {
        out.pixels = std::move(raw);
        out.policy = "none";
        return out;
    }
    Index new_rows = 0;
    Index new_cols = 0;
    if (policy == FitPolicy::Crop) {
        new_rows = rows / block * block;
        new_cols = cols / block * block;
        if (new_rows == 0 || new_cols == 0) {
            throw std::invalid_argument("image " + std::to_string(rows) + "x" + std::to_string(cols) +
                                        " is smaller than block " + std::to_string(block));
        }
    } else {
        new_rows = (rows + block - 1) / block * block;
        new_cols = (cols + block - 1) / block * block;
    }
    // Offset of the new frame relative to the source; negative when padding.
    const Index r0 = (rows - new_rows) / 2;
    const Index c0 = (cols - new_cols) / 2;
    out.pixels = DenseTensor({new_rows, new_cols});
    for (Index i = 0; i < new_rows; ++i)
        for (Index j = 0; j < new_cols; ++j) {
            const Index si = std::clamp<Index>(i + r0, 0, rows - 1);
            const Index sj = std::clamp<Index>(j + c0, 0, cols - 1);
            out.pixels({i, j}) = raw({si, sj});
        }
    std::ostringstream desc;
    desc << (policy == FitPolicy::Crop ? "center-crop " : "edge-pad ") << rows << 'x' << cols << " -> " << new_rows
         << 'x' << new_cols;
    out.policy = desc.str();
    return out;
}

PgmImage ingest_pgm(const std::filesystem::path& path, Index block, FitPolicy policy) {
    return parse_pgm(read_file(path), block, policy);
}

std::string format_csv(const std::vector<BenchRow>& rows) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << "method,rank,relative_error,compression_ratio,seconds\n";
    os << std::setprecision(17);
    for (const auto& r : rows) {
        os << r.method << ',' << r.rank << ',' << r.relative_error << ',' << r.compression_ratio << ',' << r.seconds
           << '\n';
    }
    return os.str();
}

}  // namespace mrt
