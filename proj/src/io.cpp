#include "gvsc/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace gvsc {

namespace {

constexpr uint8_t kDtypeF32 = 0x01;
constexpr uint8_t kDtypeI32 = 0x02;

std::vector<uint8_t> gvtf_header(uint8_t dtype, const std::vector<uint32_t>& dims) {
    ByteWriter w;
    w.str("GVTF");
    w.u8(0x01);
    w.u8(dtype);
    w.u8(uint8_t(dims.size()));
    for (uint32_t d : dims) w.u32(d);
    return w.take();
}

struct GvtfParsed {
    uint8_t dtype = 0;
    std::vector<uint32_t> dims;
    ByteReader payload;
};

GvtfParsed parse_gvtf(const std::vector<uint8_t>& bytes) {
    ByteReader rd(bytes);
    if (rd.str(4) != "GVTF") throw DecodeError("tensor file: bad magic");
    if (rd.u8() != 0x01) throw DecodeError("tensor file: unsupported version");
    const uint8_t dtype = rd.u8();
    if (dtype != kDtypeF32 && dtype != kDtypeI32) throw DecodeError("tensor file: unknown dtype");
    const uint8_t rank = rd.u8();
    if (rank == 0 || rank > 4) throw DecodeError("tensor file: unsupported rank");
    std::vector<uint32_t> dims;
    size_t total = 1;
    for (uint8_t i = 0; i < rank; ++i) {
        dims.push_back(rd.u32());
        if (dims.back() == 0) throw DecodeError("tensor file: zero dimension");
        total *= dims.back();
    }
    if (rd.remaining() != total * 4) throw DecodeError("tensor file: payload size mismatch");
    return {dtype, std::move(dims), rd};
}

}  // namespace

std::vector<uint8_t> tensor_to_gvtf(const Tensor3& t) {
    const Shape3 s = t.shape();
    auto out = gvtf_header(kDtypeF32, {s.w, s.h, s.c});
    ByteWriter w;
    for (size_t n = 0; n < t.size(); ++n) w.f32(float(t[n]));
    const auto& body = w.data();
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

std::vector<uint8_t> tensor_to_gvtf(const QuantizedTensor& t) {
    const Shape3 s = t.shape();
    auto out = gvtf_header(kDtypeI32, {s.w, s.h, s.c});
    ByteWriter w;
    for (size_t n = 0; n < t.size(); ++n) w.i32(t[n]);
    const auto& body = w.data();
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

std::vector<uint8_t> matrix_to_gvtf(const Matrix& m) {
    auto out = gvtf_header(kDtypeF32, {m.width(), m.height()});
    ByteWriter w;
    for (size_t n = 0; n < m.size(); ++n) w.f32(float(m[n]));
    const auto& body = w.data();
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

Tensor3 tensor_from_gvtf(const std::vector<uint8_t>& bytes) {
    auto parsed = parse_gvtf(bytes);
    if (parsed.dims.size() != 3) throw DecodeError("tensor file: expected rank 3");
    Tensor3 t(parsed.dims[0], parsed.dims[1], parsed.dims[2]);
    for (size_t n = 0; n < t.size(); ++n)
        t[n] = parsed.dtype == kDtypeF32 ? double(parsed.payload.f32())
                                         : double(parsed.payload.i32());
    return t;
}

Matrix matrix_from_gvtf(const std::vector<uint8_t>& bytes) {
    auto parsed = parse_gvtf(bytes);
    if (parsed.dims.size() != 2) throw DecodeError("tensor file: expected rank 2");
    Matrix m(parsed.dims[0], parsed.dims[1]);
    for (size_t n = 0; n < m.size(); ++n)
        m[n] = parsed.dtype == kDtypeF32 ? double(parsed.payload.f32())
                                         : double(parsed.payload.i32());
    return m;
}

void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!f) throw Error("write failed: " + path);
}

std::vector<uint8_t> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    return bytes;
}

void save_tensor(const std::string& path, const Tensor3& t) { write_file(path, tensor_to_gvtf(t)); }
Tensor3 load_tensor(const std::string& path) { return tensor_from_gvtf(read_file(path)); }

void save_ppm(const std::string& path, const ImageTensor& img) {
    const Shape3 s = img.shape();
    if (s.c != 3) throw std::invalid_argument("PPM requires 3 channels");
    ByteWriter w;
    w.str("P6\n" + std::to_string(s.w) + " " + std::to_string(s.h) + "\n255\n");
    for (uint32_t j = 0; j < s.h; ++j)
        for (uint32_t i = 0; i < s.w; ++i)
            for (uint32_t c = 0; c < 3; ++c) {
                const double v = std::clamp(img.at(i, j, c), 0.0, 255.0);
                w.u8(uint8_t(std::lround(v)));
            }
    write_file(path, w.data());
}

namespace {

// Reads one whitespace-delimited token, skipping '#' comment lines.
std::string ppm_token(ByteReader& rd) {
    std::string tok;
    while (rd.remaining()) {
        char ch = char(rd.u8());
        if (ch == '#') {
            while (rd.remaining() && char(rd.u8()) != '\n') {
            }
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(ch);
    }
    if (tok.empty()) throw DecodeError("PPM: truncated header");
    return tok;
}

}  // namespace

ImageTensor load_ppm(const std::string& path) {
    const auto bytes = read_file(path);
    ByteReader rd(bytes);
    if (ppm_token(rd) != "P6") throw DecodeError("PPM: expected P6");
    const uint32_t w = uint32_t(std::stoul(ppm_token(rd)));
    const uint32_t h = uint32_t(std::stoul(ppm_token(rd)));
    const uint32_t maxval = uint32_t(std::stoul(ppm_token(rd)));
    if (maxval != 255) throw DecodeError("PPM: only maxval 255 supported");
    if (rd.remaining() < size_t(w) * h * 3) throw DecodeError("PPM: truncated pixel data");
    ImageTensor img(w, h, 3);
    for (uint32_t j = 0; j < h; ++j)
        for (uint32_t i = 0; i < w; ++i)
            for (uint32_t c = 0; c < 3; ++c) img.at(i, j, c) = double(rd.u8());
    return img;
}

void save_pgm(const std::string& path, const MaskMatrix& mask) {
    ByteWriter w;
    w.str("P5\n" + std::to_string(mask.width()) + " " + std::to_string(mask.height()) + "\n255\n");
    for (uint32_t j = 0; j < mask.height(); ++j)
        for (uint32_t i = 0; i < mask.width(); ++i) w.u8(mask.at(i, j) ? 255 : 0);
    write_file(path, w.data());
}

void save_pgm(const std::string& path, const Matrix& m) {
    ByteWriter w;
    w.str("P5\n" + std::to_string(m.width()) + " " + std::to_string(m.height()) + "\n255\n");
    for (uint32_t j = 0; j < m.height(); ++j)
        for (uint32_t i = 0; i < m.width(); ++i) {
            const double v = std::clamp(m.at(i, j), 0.0, 1.0);
            w.u8(uint8_t(std::lround(v * 255.0)));
        }
    write_file(path, w.data());
}

// ---------------------------------------------------------------------------
// Text tables.
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

std::string profile_table_to_text(const ProfileTable& table) {
    std::ostringstream out;
    out << "# id,r,nominal_psnr_db,description\n";
    for (const auto& p : table.profiles()) {
        char line[256];
        std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%s\n", p.id, p.shrink_ratio,
                      p.nominal_psnr_db, p.description.c_str());
        out << line;
    }
    return out.str();
}

ProfileTable profile_table_from_text(const std::string& text) {
    std::vector<CoderProfile> ps;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split(line, ',');
        if (fields.size() < 3) throw Error("profile table: malformed line: " + line);
        CoderProfile p;
        p.id = std::stoi(trim(fields[0]));
        p.shrink_ratio = std::stod(trim(fields[1]));
        p.nominal_psnr_db = std::stod(trim(fields[2]));
        if (fields.size() > 3) p.description = trim(fields[3]);
        ps.push_back(p);
    }
    return ProfileTable(std::move(ps));
}

ProfileTable load_profile_table(const std::string& path) {
    const auto bytes = read_file(path);
    return profile_table_from_text(std::string(bytes.begin(), bytes.end()));
}

void save_profile_table(const std::string& path, const ProfileTable& table) {
    const std::string text = profile_table_to_text(table);
    write_file(path, std::vector<uint8_t>(text.begin(), text.end()));
}

ClassModel load_class_model(const std::string& tensor_path, const std::string& weights_path) {
    ClassModel model;
    model.feature_maps = load_tensor(tensor_path);
    const auto bytes = read_file(weights_path);
    std::istringstream in(std::string(bytes.begin(), bytes.end()));
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split(line, ',');
        if (fields.size() < 2) throw Error("class weights: malformed line: " + line);
        model.labels.push_back(trim(fields[0]));
        std::vector<double> w;
        for (size_t i = 1; i < fields.size(); ++i) w.push_back(std::stod(trim(fields[i])));
        model.weights.push_back(std::move(w));
    }
    model.validate();
    return model;
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos) throw Error("config: expected 'key = value': " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty()) throw Error("config: empty key");
        out[key] = val;
    }
    return out;
}

std::map<std::string, std::string> load_config(const std::string& path) {
    const auto bytes = read_file(path);
    return parse_config_text(std::string(bytes.begin(), bytes.end()));
}

}  // namespace gvsc
