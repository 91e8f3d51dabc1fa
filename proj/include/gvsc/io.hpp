#pragma once

#include <map>
#include <string>
#include <vector>

#include "gvsc/filter.hpp"
#include "gvsc/gsm.hpp"
#include "gvsc/tensor.hpp"

namespace gvsc {

// "GVTF" tensor container: magic, version 0x01, dtype (0x01 f32, 0x02 i32),
// rank, little-endian u32 dims, row-major payload.
std::vector<uint8_t> tensor_to_gvtf(const Tensor3& t);
std::vector<uint8_t> tensor_to_gvtf(const QuantizedTensor& t);
std::vector<uint8_t> matrix_to_gvtf(const Matrix& m);

Tensor3 tensor_from_gvtf(const std::vector<uint8_t>& bytes);
Matrix matrix_from_gvtf(const std::vector<uint8_t>& bytes);

void write_file(const std::string& path, const std::vector<uint8_t>& bytes);
std::vector<uint8_t> read_file(const std::string& path);

void save_tensor(const std::string& path, const Tensor3& t);
Tensor3 load_tensor(const std::string& path);

// Binary PPM (P6, maxval 255).
void save_ppm(const std::string& path, const ImageTensor& img);
ImageTensor load_ppm(const std::string& path);

// Binary PGM (P5), for masks and grayscale maps scaled to [0, 255].
void save_pgm(const std::string& path, const MaskMatrix& mask);
void save_pgm(const std::string& path, const Matrix& m);

// Text table, one "id,r,nominal_psnr_db,description" line per profile.
std::string profile_table_to_text(const ProfileTable& table);
ProfileTable profile_table_from_text(const std::string& text);
ProfileTable load_profile_table(const std::string& path);
void save_profile_table(const std::string& path, const ProfileTable& table);

// Class model = GVTF feature maps + "label,w_1,...,w_Cf" weight lines.
ClassModel load_class_model(const std::string& tensor_path, const std::string& weights_path);

// Line-oriented "key = value" configuration files; '#' starts a comment.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> load_config(const std::string& path);

}  // namespace gvsc
