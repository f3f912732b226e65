#include "crossfuse/dataio.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include <png.h>

#include "crossfuse/errors.hpp"

namespace crossfuse {

namespace {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw IoError("cannot write " + path.string());
    }
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) {
        throw IoError("failed writing " + path.string());
    }
}

void put_f32(std::vector<std::uint8_t>& out, float f)
{
    const auto v = std::bit_cast<std::uint32_t>(f);
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& b, std::size_t at)
{
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(b[at + i]) << (8 * i);
    }
    return v;
}

float get_f32(const std::vector<std::uint8_t>& b, std::size_t at)
{
    return std::bit_cast<float>(get_u32(b, at));
}

std::string lower_extension(const std::filesystem::path& path)
{
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

// ---- netpbm

// Reads the next header token, skipping whitespace and '#' comments.
std::string pnm_token(const std::vector<std::uint8_t>& b, std::size_t& at, const std::string& name)
{
    while (at < b.size()) {
        if (b[at] == '#') {
            while (at < b.size() && b[at] != '\n') {
                ++at;
            }
        } else if (std::isspace(b[at])) {
            ++at;
        } else {
            break;
        }
    }
    std::string tok;
    while (at < b.size() && !std::isspace(b[at]) && b[at] != '#') {
        tok.push_back(static_cast<char>(b[at++]));
    }
    if (tok.empty()) {
        throw FormatError(name + ": truncated header");
    }
    return tok;
}

int pnm_int(const std::string& tok, const std::string& name)
{
    int v = 0;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || p != tok.data() + tok.size() || v <= 0) {
        throw FormatError(name + ": bad header value '" + tok + "'");
    }
    return v;
}

Image8 read_pnm(const std::vector<std::uint8_t>& b, const std::string& name)
{
    std::size_t at = 0;
    const std::string magic = pnm_token(b, at, name);
    int channels = 0;
    if (magic == "P6") {
        channels = 3;
    } else if (magic == "P5") {
        channels = 1;
    } else {
        throw FormatError(name + ": unsupported netpbm magic '" + magic + "'");
    }
    const int w = pnm_int(pnm_token(b, at, name), name);
    const int h = pnm_int(pnm_token(b, at, name), name);
    const int maxval = pnm_int(pnm_token(b, at, name), name);
    if (maxval != 255) {
        throw FormatError(name + ": only 8-bit netpbm images are supported (maxval " + std::to_string(maxval) +
                          ")");
    }
    ++at;  // single whitespace before the raster
    Image8 img(w, h, channels);
    if (b.size() < at + img.data.size()) {
        throw FormatError(name + ": raster truncated at byte " + std::to_string(b.size()));
    }
    std::copy_n(b.begin() + static_cast<std::ptrdiff_t>(at), img.data.size(), img.data.begin());
    return img;
}

std::vector<std::uint8_t> encode_pnm(const Image8& img)
{
    const std::string header = std::string(img.channels == 3 ? "P6" : "P5") + "\n" + std::to_string(img.width) +
                               " " + std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.data.begin(), img.data.end());
    return out;
}

// ---- png

Image8 read_png(const std::vector<std::uint8_t>& b, const std::string& name)
{
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, b.data(), b.size())) {
        throw FormatError(name + ": " + image.message);
    }
    const bool gray = (image.format & PNG_FORMAT_FLAG_COLOR) == 0;
    image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    Image8 img(static_cast<int>(image.width), static_cast<int>(image.height), gray ? 1 : 3);
    if (!png_image_finish_read(&image, nullptr, img.data.data(), 0, nullptr)) {
        png_image_free(&image);
        throw FormatError(name + ": " + image.message);
    }
    return img;
}

void write_png(const Image8& img, const std::filesystem::path& path)
{
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width);
    image.height = static_cast<png_uint_32>(img.height);
    image.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.data.data(), 0, nullptr)) {
        throw IoError(path.string() + ": " + image.message);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.data.data(), 0, nullptr)) {
        throw IoError(path.string() + ": " + image.message);
    }
    out.resize(size);
    write_bytes(path, out);
}

// ---- calibration

struct CalibEntry {
    std::vector<double> values;
    int line = 0;
};

// Keys whose values are free text in some calibration layouts.
bool is_text_key(const std::string& key)
{
    return key == "calib_time" || key == "corner_dist";
}

const CalibEntry* find_key(const std::map<std::string, CalibEntry>& entries, std::initializer_list<std::string> keys)
{
    for (const std::string& k : keys) {
        auto it = entries.find(k);
        if (it != entries.end()) {
            return &it->second;
        }
    }
    return nullptr;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

Eigen::Matrix4d homogeneous_rigid(const std::vector<double>& v, const std::string& key, int line)
{
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    if (v.size() == 12 || v.size() == 16) {
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 4; ++c) {
                m(r, c) = v[static_cast<std::size_t>(r * 4 + c)];
            }
        }
        return m;
    }
    throw ParseError("calibration line " + std::to_string(line) + ": " + key + " needs 12 values, got " +
                     std::to_string(v.size()));
}

Eigen::Matrix4d homogeneous_rotation(const std::vector<double>& v, const std::string& key, int line)
{
    if (v.size() != 9) {
        throw ParseError("calibration line " + std::to_string(line) + ": " + key + " needs 9 values, got " +
                         std::to_string(v.size()));
    }
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            m(r, c) = v[static_cast<std::size_t>(r * 3 + c)];
        }
    }
    return m;
}

std::string manifest_field(const std::string& s)
{
    return s.empty() ? "-" : s;
}

}  // namespace

// ---- point clouds

PointCloud read_cloud(const std::filesystem::path& path)
{
    const std::vector<std::uint8_t> b = read_bytes(path);
    if (b.size() % 16 != 0) {
        throw FormatError(path.string() + ": truncated point record at byte offset " +
                          std::to_string(b.size() - b.size() % 16) + " (file length " + std::to_string(b.size()) +
                          " is not a multiple of 16)");
    }
    PointCloud cloud;
    cloud.points.resize(b.size() / 16);
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        LidarPoint& p = cloud.points[i];
        p.x = get_f32(b, i * 16);
        p.y = get_f32(b, i * 16 + 4);
        p.z = get_f32(b, i * 16 + 8);
        p.reflectance = get_f32(b, i * 16 + 12);
    }
    return cloud;
}

void write_cloud(const PointCloud& cloud, const std::filesystem::path& path)
{
    std::vector<std::uint8_t> out;
    out.reserve(cloud.points.size() * 16);
    for (const LidarPoint& p : cloud.points) {
        put_f32(out, p.x);
        put_f32(out, p.y);
        put_f32(out, p.z);
        put_f32(out, p.reflectance);
    }
    write_bytes(path, out);
}

// ---- calibration

CalibrationSet parse_calibration(const std::string& text, const CalibrationKeys& keys)
{
    std::map<std::string, CalibEntry> entries;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') {
            continue;
        }
        const auto colon = t.find(':');
        if (colon == std::string::npos || colon == 0) {
            throw ParseError("calibration line " + std::to_string(lineno) + ": expected 'KEY: values', got '" + t +
                             "'");
        }
        const std::string key = trim(t.substr(0, colon));
        if (is_text_key(key)) {
            continue;
        }
        CalibEntry entry;
        entry.line = lineno;
        std::istringstream vs(t.substr(colon + 1));
        std::string tok;
        while (vs >> tok) {
            double v = 0.0;
            const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (ec != std::errc{} || p != tok.data() + tok.size()) {
                throw ParseError("calibration line " + std::to_string(lineno) + ": non-numeric token '" + tok +
                                 "' for key " + key);
            }
            entry.values.push_back(v);
        }
        entries[key] = std::move(entry);
    }

    CalibrationSet calib;
    std::string raw_projection = keys.projection;
    if (keys.projection.size() == 2 && keys.projection[0] == 'P') {
        raw_projection = std::string("P_rect_0") + keys.projection[1];
    }
    const CalibEntry* p = find_key(entries, {keys.projection, raw_projection});
    if (p == nullptr) {
        throw ParseError("calibration: missing key " + keys.projection);
    }
    if (p->values.size() != 12) {
        throw ParseError("calibration line " + std::to_string(p->line) + ": " + keys.projection +
                         " needs 12 values, got " + std::to_string(p->values.size()));
    }
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 4; ++c) {
            calib.P(r, c) = p->values[static_cast<std::size_t>(r * 4 + c)];
        }
    }

    const CalibEntry* r = find_key(entries, {"R0_rect", "R_rect_00", "R_rect"});
    if (r == nullptr) {
        throw ParseError("calibration: missing key R0_rect");
    }
    calib.R = homogeneous_rotation(r->values, "R0_rect", r->line);

    if (const CalibEntry* t = find_key(entries, {"Tr_velo_to_cam", "Tr_velo_cam"})) {
        calib.T = homogeneous_rigid(t->values, "Tr_velo_to_cam", t->line);
    } else {
        // Split layout: "R:" (9 values) and "T:" (3 values).
        const CalibEntry* rot = find_key(entries, {"R"});
        const CalibEntry* tr = find_key(entries, {"T"});
        if (rot == nullptr || tr == nullptr) {
            throw ParseError("calibration: missing key Tr_velo_to_cam");
        }
        calib.T = homogeneous_rotation(rot->values, "R", rot->line);
        if (tr->values.size() != 3) {
            throw ParseError("calibration line " + std::to_string(tr->line) + ": T needs 3 values, got " +
                             std::to_string(tr->values.size()));
        }
        for (int i = 0; i < 3; ++i) {
            calib.T(i, 3) = tr->values[static_cast<std::size_t>(i)];
        }
    }
    return calib;
}

CalibrationSet read_calibration(const std::filesystem::path& path, const CalibrationKeys& keys)
{
    const std::vector<std::uint8_t> b = read_bytes(path);
    try {
        return parse_calibration(std::string(b.begin(), b.end()), keys);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_calibration(const CalibrationSet& calib, const std::filesystem::path& path, const CalibrationKeys& keys)
{
    std::ostringstream os;
    char buf[64];
    auto row = [&](const std::string& key, auto&& value, int rows, int cols) {
        os << key << ":";
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                std::snprintf(buf, sizeof buf, " %.17g", value(r, c));
                os << buf;
            }
        }
        os << "\n";
    };
    row(keys.projection, calib.P, 3, 4);
    row("R0_rect", calib.R, 3, 3);
    row("Tr_velo_to_cam", calib.T, 3, 4);
    const std::string s = os.str();
    write_bytes(path, std::vector<std::uint8_t>(s.begin(), s.end()));
}

// ---- images

Image8 read_image(const std::filesystem::path& path)
{
    const std::vector<std::uint8_t> b = read_bytes(path);
    static constexpr std::uint8_t png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (b.size() >= 8 && std::equal(b.begin(), b.begin() + 8, png_sig)) {
        return read_png(b, path.string());
    }
    return read_pnm(b, path.string());
}

void write_image(const Image8& img, const std::filesystem::path& path)
{
    if (img.channels != 1 && img.channels != 3) {
        throw ShapeError("write_image: channels must be 1 or 3, got " + std::to_string(img.channels));
    }
    const std::string ext = lower_extension(path);
    if (ext == ".png") {
        write_png(img, path);
        return;
    }
    if (ext == ".ppm" && img.channels != 3) {
        throw ShapeError("write_image: .ppm needs 3 channels");
    }
    if (ext == ".pgm" && img.channels != 1) {
        throw ShapeError("write_image: .pgm needs 1 channel");
    }
    if (ext != ".ppm" && ext != ".pgm") {
        throw IoError("write_image: unsupported extension '" + ext + "' for " + path.string());
    }
    write_bytes(path, encode_pnm(img));
}

// ---- ground truth

LabelMap decode_ground_truth(const Image8& img)
{
    if (img.channels != 3) {
        throw ShapeError("decode_ground_truth: expected an RGB image");
    }
    LabelMap labels(1, img.height, img.width, kIgnoreLabel);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const std::uint8_t r = img.at(x, y, 0);
            const std::uint8_t g = img.at(x, y, 1);
            const std::uint8_t b = img.at(x, y, 2);
            if (r == kRoadColor[0] && g == kRoadColor[1] && b == kRoadColor[2]) {
                labels.at(0, y, x) = 1;
            } else if (r == kNotRoadColor[0] && g == kNotRoadColor[1] && b == kNotRoadColor[2]) {
                labels.at(0, y, x) = 0;
            }
        }
    }
    return labels;
}

Image8 encode_ground_truth(const LabelMap& labels)
{
    Image8 img(labels.width, labels.height, 3, 0);
    for (int y = 0; y < labels.height; ++y) {
        for (int x = 0; x < labels.width; ++x) {
            const std::uint8_t l = labels.at(0, y, x);
            const std::uint8_t* color = l == 1 ? kRoadColor : l == 0 ? kNotRoadColor : nullptr;
            if (color != nullptr) {
                for (int c = 0; c < 3; ++c) {
                    img.at(x, y, c) = color[c];
                }
            }
        }
    }
    return img;
}

// ---- canvas

Image8 pad_to_canvas(const Image8& img, int height, int width)
{
    if (img.height > height || img.width > width) {
        throw ShapeError("pad_to_canvas: image " + std::to_string(img.height) + "x" + std::to_string(img.width) +
                         " exceeds canvas " + std::to_string(height) + "x" + std::to_string(width));
    }
    Image8 out(width, height, img.channels, 0);
    for (int y = 0; y < img.height; ++y) {
        std::copy_n(&img.data[static_cast<std::size_t>(y) * img.width * img.channels],
                    static_cast<std::size_t>(img.width) * img.channels,
                    &out.data[static_cast<std::size_t>(y) * width * img.channels]);
    }
    return out;
}

LabelMap pad_to_canvas(const LabelMap& labels, int height, int width)
{
    if (labels.height > height || labels.width > width) {
        throw ShapeError("pad_to_canvas: labels " + std::to_string(labels.height) + "x" +
                         std::to_string(labels.width) + " exceed canvas " + std::to_string(height) + "x" +
                         std::to_string(width));
    }
    LabelMap out(labels.batch, height, width, kIgnoreLabel);
    for (int n = 0; n < labels.batch; ++n) {
        for (int y = 0; y < labels.height; ++y) {
            for (int x = 0; x < labels.width; ++x) {
                out.at(n, y, x) = labels.at(n, y, x);
            }
        }
    }
    return out;
}

Image8 crop_canvas(const Image8& img, int height, int width)
{
    if (height > img.height || width > img.width) {
        throw ShapeError("crop_canvas: crop larger than image");
    }
    Image8 out(width, height, img.channels);
    for (int y = 0; y < height; ++y) {
        std::copy_n(&img.data[static_cast<std::size_t>(y) * img.width * img.channels],
                    static_cast<std::size_t>(width) * img.channels,
                    &out.data[static_cast<std::size_t>(y) * width * img.channels]);
    }
    return out;
}

LabelMap crop_canvas(const LabelMap& labels, int height, int width)
{
    if (height > labels.height || width > labels.width) {
        throw ShapeError("crop_canvas: crop larger than labels");
    }
    LabelMap out(labels.batch, height, width);
    for (int n = 0; n < labels.batch; ++n) {
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                out.at(n, y, x) = labels.at(n, y, x);
            }
        }
    }
    return out;
}

// ---- segmentation outputs

Image8 confidence_image(std::span<const double> confidence, int width, int height)
{
    if (confidence.size() != static_cast<std::size_t>(width) * height) {
        throw ShapeError("confidence_image: " + std::to_string(confidence.size()) + " values for " +
                         std::to_string(width) + "x" + std::to_string(height));
    }
    Image8 img(width, height, 1);
    for (std::size_t i = 0; i < confidence.size(); ++i) {
        const double c = confidence[i];
        if (!(c >= 0.0 && c <= 1.0)) {
            throw DomainError("confidence_image: value " + std::to_string(c) + " outside [0, 1]");
        }
        img.data[i] = static_cast<std::uint8_t>(std::lround(255.0 * c));
    }
    return img;
}

void write_segmentation(std::span<const double> confidence, int width, int height,
                        const std::filesystem::path& path, std::optional<double> binarize_threshold,
                        const std::filesystem::path& binary_path)
{
    write_image(confidence_image(confidence, width, height), path);
    if (binarize_threshold) {
        if (binary_path.empty()) {
            throw IoError("write_segmentation: binarized output requested without a path");
        }
        Image8 bin(width, height, 1);
        for (std::size_t i = 0; i < confidence.size(); ++i) {
            bin.data[i] = confidence[i] >= *binarize_threshold ? 255 : 0;
        }
        write_image(bin, binary_path);
    }
}

Image8 overlay_image(const Image8& rgb, std::span<const double> confidence, const LabelMap& gt, double threshold)
{
    if (rgb.channels != 3 || confidence.size() != static_cast<std::size_t>(rgb.width) * rgb.height ||
        gt.width != rgb.width || gt.height != rgb.height) {
        throw ShapeError("overlay_image: RGB, confidence and ground truth sizes differ");
    }
    static constexpr std::uint8_t green[3] = {0, 255, 0};
    static constexpr std::uint8_t red[3] = {255, 0, 0};
    static constexpr std::uint8_t blue[3] = {0, 0, 255};
    Image8 out = rgb;
    for (int y = 0; y < rgb.height; ++y) {
        for (int x = 0; x < rgb.width; ++x) {
            const std::uint8_t label = gt.at(0, y, x);
            if (label == kIgnoreLabel) {
                continue;
            }
            const bool predicted = confidence[static_cast<std::size_t>(y) * rgb.width + x] >= threshold;
            const std::uint8_t* color = nullptr;
            if (label == 1) {
                color = predicted ? green : red;
            } else if (predicted) {
                color = blue;
            }
            for (int c = 0; c < 3; ++c) {
                const int base = rgb.at(x, y, c) / 2;
                out.at(x, y, c) = static_cast<std::uint8_t>(color != nullptr ? base + color[c] / 2 : base);
            }
        }
    }
    return out;
}

// ---- dense ZYX files

void write_dense_zyx(const DenseZyxImage& img, const std::filesystem::path& path)
{
    const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
    std::vector<std::uint8_t> out = {'Z', 'Y', 'X', 'D'};
    out.reserve(12 + n * 13);
    put_u32(out, static_cast<std::uint32_t>(img.width));
    put_u32(out, static_cast<std::uint32_t>(img.height));
    for (const std::vector<double>* plane : {&img.z, &img.y, &img.x}) {
        for (double v : *plane) {
            put_f32(out, static_cast<float>(v));
        }
    }
    for (FillState f : img.fill) {
        out.push_back(static_cast<std::uint8_t>(f));
    }
    write_bytes(path, out);
}

DenseZyxImage read_dense_zyx(const std::filesystem::path& path)
{
    const std::vector<std::uint8_t> b = read_bytes(path);
    if (b.size() < 12 || std::memcmp(b.data(), "ZYXD", 4) != 0) {
        throw FormatError(path.string() + ": not a dense ZYX file");
    }
    DenseZyxImage img;
    img.width = static_cast<int>(get_u32(b, 4));
    img.height = static_cast<int>(get_u32(b, 8));
    const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
    if (b.size() != 12 + n * 13) {
        throw FormatError(path.string() + ": expected " + std::to_string(12 + n * 13) + " bytes, found " +
                          std::to_string(b.size()));
    }
    std::size_t at = 12;
    for (std::vector<double>* plane : {&img.z, &img.y, &img.x}) {
        plane->resize(n);
        for (std::size_t i = 0; i < n; ++i, at += 4) {
            (*plane)[i] = get_f32(b, at);
        }
    }
    img.fill.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (b[at + i] > 2) {
            throw FormatError(path.string() + ": invalid fill state at pixel " + std::to_string(i));
        }
        img.fill[i] = static_cast<FillState>(b[at + i]);
    }
    return img;
}

// ---- manifests

std::vector<FrameRecord> read_manifest(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is) {
        throw IoError("cannot open manifest " + path.string());
    }
    std::vector<FrameRecord> frames;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (trim(line).empty() || trim(line)[0] == '#') {
            continue;
        }
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const auto tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
            if (tab == std::string::npos) {
                break;
            }
            start = tab + 1;
        }
        if (fields.size() != 7) {
            throw ParseError(path.string() + " line " + std::to_string(lineno) + ": expected 7 tab-separated fields, got " +
                             std::to_string(fields.size()));
        }
        auto path_field = [](const std::string& s) { return s == "-" ? std::string() : s; };
        FrameRecord r;
        r.id = fields[0];
        r.category = fields[1];
        const auto [p, ec] = std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), r.camera);
        if (ec != std::errc{} || p != fields[2].data() + fields[2].size()) {
            throw ParseError(path.string() + " line " + std::to_string(lineno) + ": camera field '" + fields[2] +
                             "' is not an integer");
        }
        r.rgb = path_field(fields[3]);
        r.cloud = path_field(fields[4]);
        r.calib = path_field(fields[5]);
        r.gt = path_field(fields[6]);
        frames.push_back(std::move(r));
    }
    return frames;
}

void write_manifest(const std::vector<FrameRecord>& frames, const std::filesystem::path& path)
{
    std::ostringstream os;
    os << "# id\tcategory\tcamera\trgb\tcloud\tcalib\tgt\n";
    for (const FrameRecord& r : frames) {
        os << r.id << '\t' << r.category << '\t' << r.camera << '\t' << manifest_field(r.rgb) << '\t'
           << manifest_field(r.cloud) << '\t' << manifest_field(r.calib) << '\t' << manifest_field(r.gt) << '\n';
    }
    const std::string s = os.str();
    write_bytes(path, std::vector<std::uint8_t>(s.begin(), s.end()));
}

std::filesystem::path resolve_path(const std::string& path, const std::filesystem::path& base_dir)
{
    const std::filesystem::path p(path);
    if (p.is_absolute()) {
        return p;
    }
    if (const char* root = std::getenv("CROSSFUSE_DATA_ROOT"); root != nullptr && *root != '\0') {
        return std::filesystem::path(root) / p;
    }
    return base_dir / p;
}

void check_frame_files(const FrameRecord& frame, const std::filesystem::path& base_dir)
{
    for (const std::string* f : {&frame.rgb, &frame.cloud, &frame.calib, &frame.gt}) {
        if (!f->empty() && !std::filesystem::exists(resolve_path(*f, base_dir))) {
            throw IoError("frame " + frame.id + ": missing file " + resolve_path(*f, base_dir).string());
        }
    }
}

}  // namespace crossfuse
