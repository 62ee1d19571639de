#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ragent/matrix.hpp"
#include "ragent/radar_dsp.hpp"

namespace ragent::io {

// RGC1: "RGC1", u32 LE N_F, N_I, N_S, then interleaved (re, im) float32 LE, frame -> chirp -> sample.
std::vector<std::uint8_t> encode_cube(const RadarCube& cube);
RadarCube decode_cube(const std::vector<std::uint8_t>& bytes, const RadarMeta& meta = {});

// RGM1: "RGM1", u32 LE rows, u32 LE cols, row-major float32 LE.
std::vector<std::uint8_t> encode_matrix(const Matrix& m);
Matrix decode_matrix(const std::vector<std::uint8_t>& bytes);

/// Sidecar key=value text (frame_rate, wavelength, chirp_slope, sample_rate, range_resolution[, chirp_interval]).
std::string encode_meta(const RadarMeta& meta);
RadarMeta decode_meta(const std::string& text);

/// Sidecar path used for a cube file: "<cube>.meta".
std::filesystem::path meta_path_for(const std::filesystem::path& cube_path);

RadarCube read_cube(const std::filesystem::path& path);
void write_cube(const std::filesystem::path& path, const RadarCube& cube);

Matrix read_matrix(const std::filesystem::path& path);
void write_matrix(const std::filesystem::path& path, const Matrix& m);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace ragent::io
