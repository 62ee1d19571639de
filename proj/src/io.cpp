#include "ragent/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "ragent/error.hpp"

namespace ragent::io {
namespace {

static_assert(std::numeric_limits<float>::is_iec559, "float32 payloads require IEEE-754");

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>((v >> (8 * b)) & 0xFFu));
}

void put_f32(std::vector<std::uint8_t>& out, double v)
{
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t off)
{
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(in[off + b]) << (8 * b);
    return v;
}

double get_f32(const std::vector<std::uint8_t>& in, std::size_t off)
{
    return static_cast<double>(std::bit_cast<float>(get_u32(in, off)));
}

void check_magic(const std::vector<std::uint8_t>& in, const char* magic, std::size_t header)
{
    if (in.size() < header || std::memcmp(in.data(), magic, 4) != 0)
        throw Error(ErrorCode::FormatError, std::string("bad magic, expected ") + magic);
}

}  // namespace

std::vector<std::uint8_t> encode_cube(const RadarCube& cube)
{
    std::vector<std::uint8_t> out;
    out.reserve(16 + cube.data().size() * 8);
    out.insert(out.end(), {'R', 'G', 'C', '1'});
    put_u32(out, static_cast<std::uint32_t>(cube.frames()));
    put_u32(out, static_cast<std::uint32_t>(cube.chirps()));
    put_u32(out, static_cast<std::uint32_t>(cube.samples()));
    for (const cplx& s : cube.data()) {
        put_f32(out, s.real());
        put_f32(out, s.imag());
    }
    return out;
}

RadarCube decode_cube(const std::vector<std::uint8_t>& bytes, const RadarMeta& meta)
{
    check_magic(bytes, "RGC1", 16);
    const std::size_t nf = get_u32(bytes, 4), ni = get_u32(bytes, 8), ns = get_u32(bytes, 12);
    if (nf == 0 || ni == 0 || ns == 0) throw Error(ErrorCode::FormatError, "cube dimensions must be >= 1");
    if (bytes.size() != 16 + nf * ni * ns * 8)
        throw Error(ErrorCode::FormatError, "cube payload length does not match header");
    RadarCube cube(nf, ni, ns, meta);
    std::size_t off = 16;
    for (cplx& s : cube.data()) {
        s = {get_f32(bytes, off), get_f32(bytes, off + 4)};
        off += 8;
    }
    return cube;
}

std::vector<std::uint8_t> encode_matrix(const Matrix& m)
{
    std::vector<std::uint8_t> out;
    out.reserve(12 + m.data().size() * 4);
    out.insert(out.end(), {'R', 'G', 'M', '1'});
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    for (double v : m.data()) put_f32(out, v);
    return out;
}

Matrix decode_matrix(const std::vector<std::uint8_t>& bytes)
{
    check_magic(bytes, "RGM1", 12);
    const std::size_t rows = get_u32(bytes, 4), cols = get_u32(bytes, 8);
    if (bytes.size() != 12 + rows * cols * 4)
        throw Error(ErrorCode::FormatError, "matrix payload length does not match header");
    std::vector<double> data(rows * cols);
    for (std::size_t k = 0; k < data.size(); ++k) data[k] = get_f32(bytes, 12 + 4 * k);
    return Matrix(rows, cols, std::move(data));
}

std::string encode_meta(const RadarMeta& meta)
{
    std::ostringstream os;
    os << std::setprecision(17);
    os << "frame_rate=" << meta.frame_rate << '\n'
       << "wavelength=" << meta.wavelength << '\n'
       << "chirp_slope=" << meta.chirp_slope << '\n'
       << "sample_rate=" << meta.sample_rate << '\n'
       << "range_resolution=" << meta.range_resolution << '\n';
    if (meta.chirp_interval > 0.0) os << "chirp_interval=" << meta.chirp_interval << '\n';
    return os.str();
}

RadarMeta decode_meta(const std::string& text)
{
    std::map<std::string, double> kv;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::FormatError, "meta line without '=': " + line);
        const std::string key = line.substr(0, eq);
        try {
            kv[key] = std::stod(line.substr(eq + 1));
        } catch (const std::exception&) {
            throw Error(ErrorCode::FormatError, "meta value for '" + key + "' is not a number");
        }
    }
    RadarMeta meta;
    auto take = [&](const char* key, double& field, bool required) {
        auto it = kv.find(key);
        if (it != kv.end())
            field = it->second;
        else if (required)
            throw Error(ErrorCode::FormatError, std::string("meta is missing ") + key);
    };
    take("frame_rate", meta.frame_rate, true);
    take("wavelength", meta.wavelength, true);
    take("chirp_slope", meta.chirp_slope, true);
    take("sample_rate", meta.sample_rate, true);
    take("range_resolution", meta.range_resolution, true);
    take("chirp_interval", meta.chirp_interval, false);
    return meta;
}

std::filesystem::path meta_path_for(const std::filesystem::path& cube_path)
{
    return std::filesystem::path(cube_path.string() + ".meta");
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

RadarCube read_cube(const std::filesystem::path& path)
{
    RadarCube cube = decode_cube(read_bytes(path), decode_meta(read_text(meta_path_for(path))));
    cube.validate();
    return cube;
}

void write_cube(const std::filesystem::path& path, const RadarCube& cube)
{
    write_bytes(path, encode_cube(cube));
    write_text(meta_path_for(path), encode_meta(cube.meta()));
}

Matrix read_matrix(const std::filesystem::path& path) { return decode_matrix(read_bytes(path)); }

void write_matrix(const std::filesystem::path& path, const Matrix& m) { write_bytes(path, encode_matrix(m)); }

}  // namespace ragent::io
