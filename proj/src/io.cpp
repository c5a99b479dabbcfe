#include "superpix/io.hpp"

#include <png.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

namespace superpix {

namespace {

namespace fs = std::filesystem;

constexpr std::uint16_t kPngUnlabeled = 65535;

struct RawRaster {
    int width = 0;
    int height = 0;
    int channels = 0;
    int bit_depth = 0;
    std::vector<std::uint16_t> samples;
};

struct FileCloser {
    void operator()(std::FILE* f) const noexcept {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw IoError("cannot open '" + path.string() + "'");
    return f;
}

void png_error_handler(png_structp png, png_const_charp msg) {
    auto* message = static_cast<std::string*>(png_get_error_ptr(png));
    if (message) *message = msg;
    png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

RawRaster read_png(const fs::path& path) {
    FilePtr file = open_file(path, "rb");
    unsigned char header[8] = {};
    if (std::fread(header, 1, 8, file.get()) != 8 || png_sig_cmp(header, 0, 8) != 0) {
        throw IoError("'" + path.string() + "' is not a PNG file");
    }
    std::string message;
    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, png_error_handler, png_warning_handler);
    if (!png) throw IoError("libpng initialisation failed");
    png_infop info = png_create_info_struct(png);
    RawRaster raster;
    std::vector<png_bytep> rows;
    std::vector<unsigned char> buffer;
    std::string unsupported;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("error reading '" + path.string() + "': " + message);
    }
    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    const int color = png_get_color_type(png, info);
    raster.width = static_cast<int>(png_get_image_width(png, info));
    raster.height = static_cast<int>(png_get_image_height(png, info));
    raster.bit_depth = png_get_bit_depth(png, info);
    const bool interlaced = png_get_interlace_type(png, info) != PNG_INTERLACE_NONE;
    if (color == PNG_COLOR_TYPE_GRAY) {
        raster.channels = 1;
    } else if (color == PNG_COLOR_TYPE_RGB) {
        raster.channels = 3;
    } else {
        unsupported = "unsupported PNG color type (palette or alpha)";
    }
    if (unsupported.empty() && raster.bit_depth != 8 && raster.bit_depth != 16) {
        unsupported = "unsupported PNG bit depth " + std::to_string(raster.bit_depth);
    }
    if (unsupported.empty() && png_get_valid(png, info, PNG_INFO_tRNS)) {
        unsupported = "PNG transparency chunk not supported";
    }
    if (!unsupported.empty()) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("'" + path.string() + "': " + unsupported);
    }
    if (interlaced) png_set_interlace_handling(png);
    png_read_update_info(png, info);
    const std::size_t bytes_per_sample = raster.bit_depth / 8;
    const std::size_t row_bytes = png_get_rowbytes(png, info);
    buffer.resize(row_bytes * raster.height);
    rows.resize(raster.height);
    for (int y = 0; y < raster.height; ++y) rows[y] = buffer.data() + y * row_bytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    const std::size_t n = static_cast<std::size_t>(raster.width) * raster.height * raster.channels;
    raster.samples.resize(n);
    for (int y = 0; y < raster.height; ++y) {
        const unsigned char* row = rows[y];
        for (std::size_t i = 0; i < static_cast<std::size_t>(raster.width) * raster.channels; ++i) {
            std::uint16_t v = row[i * bytes_per_sample];
            if (bytes_per_sample == 2) v = static_cast<std::uint16_t>((v << 8) | row[i * 2 + 1]);
            raster.samples[static_cast<std::size_t>(y) * raster.width * raster.channels + i] = v;
        }
    }
    return raster;
}

void write_png(const fs::path& path, int width, int height, int channels, int bit_depth,
               const std::vector<std::uint16_t>& samples) {
    FilePtr file = open_file(path, "wb");
    std::string message;
    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, png_error_handler, png_warning_handler);
    if (!png) throw IoError("libpng initialisation failed");
    png_infop info = png_create_info_struct(png);
    const std::size_t bytes_per_sample = bit_depth / 8;
    const std::size_t row_bytes = static_cast<std::size_t>(width) * channels * bytes_per_sample;
    std::vector<unsigned char> buffer(row_bytes * height);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (bytes_per_sample == 2) {
            buffer[2 * i] = static_cast<unsigned char>(samples[i] >> 8);
            buffer[2 * i + 1] = static_cast<unsigned char>(samples[i] & 0xff);
        } else {
            buffer[i] = static_cast<unsigned char>(samples[i]);
        }
    }
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y) rows[y] = buffer.data() + y * row_bytes;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("error writing '" + path.string() + "': " + message);
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, width, height, bit_depth, channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// Binary PGM (P5) / PPM (P6) with maxval 255.
Image read_pnm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::string magic;
    in >> magic;
    if (magic != "P5" && magic != "P6") throw IoError("'" + path.string() + "': only binary P5/P6 supported");
    auto next_int = [&]() {
        int value = 0;
        while (in >> std::ws && in.peek() == '#') in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
        if (!(in >> value)) throw IoError("'" + path.string() + "': malformed header");
        return value;
    };
    const int width = next_int();
    const int height = next_int();
    const int maxval = next_int();
    if (maxval != 255) throw IoError("'" + path.string() + "': unsupported bit depth (maxval != 255)");
    in.get();
    const int channels = magic == "P5" ? 1 : 3;
    std::vector<unsigned char> bytes(static_cast<std::size_t>(width) * height * channels);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!in) throw IoError("'" + path.string() + "': truncated pixel data");
    return Image(width, height, channels, std::vector<double>(bytes.begin(), bytes.end()));
}

std::string lower_extension(const fs::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

}  // namespace

Image load_image(const fs::path& path) {
    const std::string ext = lower_extension(path);
    if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return read_pnm(path);
    RawRaster raw = read_png(path);
    if (raw.bit_depth != 8) {
        throw IoError("'" + path.string() + "': unsupported bit depth " + std::to_string(raw.bit_depth) +
                      " (images must be 8-bit)");
    }
    return Image(raw.width, raw.height, raw.channels, std::vector<double>(raw.samples.begin(), raw.samples.end()));
}

void save_image(const Image& img, const fs::path& path) {
    std::vector<std::uint16_t> samples(img.data().size());
    std::transform(img.data().begin(), img.data().end(), samples.begin(), [](double v) {
        return static_cast<std::uint16_t>(std::clamp(std::lround(v), 0L, 255L));
    });
    write_png(path, img.width(), img.height(), img.channels(), 8, samples);
}

std::string label_map_to_csv(const LabelMap& map) {
    std::string out;
    out.reserve(map.size() * 4);
    char buf[16];
    for (int y = 0; y < map.height(); ++y) {
        for (int x = 0; x < map.width(); ++x) {
            if (x) out.push_back(',');
            auto [end, ec] = std::to_chars(buf, buf + sizeof buf, map.at(x, y));
            out.append(buf, end);
        }
        if (y + 1 < map.height()) out.push_back('\n');
    }
    return out;
}

LabelMap label_map_from_csv(const std::string& text) {
    std::vector<Label> labels;
    int width = -1;
    int height = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string_view line(text.data() + pos, eol - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = eol + 1;
        if (line.empty()) continue;
        int count = 0;
        const char* p = line.data();
        const char* end = line.data() + line.size();
        while (p <= end) {
            Label v = 0;
            auto [next, ec] = std::from_chars(p, end, v);
            if (ec != std::errc() || (v < 0 && v != kUnlabeled)) {
                throw IoError("malformed label CSV at row " + std::to_string(height));
            }
            labels.push_back(v);
            ++count;
            if (next == end) break;
            if (*next != ',') throw IoError("malformed label CSV at row " + std::to_string(height));
            p = next + 1;
        }
        if (width < 0) width = count;
        if (count != width) throw IoError("ragged label CSV at row " + std::to_string(height));
        ++height;
    }
    if (height == 0) throw IoError("empty label CSV");
    return LabelMap(width, height, std::move(labels));
}

void save_label_map(const LabelMap& map, const fs::path& path, LabelFormat format) {
    if (format == LabelFormat::csv) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
        out << label_map_to_csv(map);
        if (!out) throw IoError("write failed for '" + path.string() + "'");
        return;
    }
    std::vector<std::uint16_t> samples(map.size());
    for (std::size_t p = 0; p < map.size(); ++p) {
        const Label l = map[p];
        if (l == kUnlabeled) {
            samples[p] = kPngUnlabeled;
        } else if (l >= kPngUnlabeled) {
            throw InvalidArgument("label " + std::to_string(l) + " does not fit a 16-bit PNG label map");
        } else {
            samples[p] = static_cast<std::uint16_t>(l);
        }
    }
    write_png(path, map.width(), map.height(), 1, 16, samples);
}

void save_label_map(const LabelMap& map, const fs::path& path) {
    const std::string ext = lower_extension(path);
    if (ext == ".csv") return save_label_map(map, path, LabelFormat::csv);
    if (ext == ".png") return save_label_map(map, path, LabelFormat::png16);
    throw InvalidArgument("unknown label map extension '" + ext + "' (use .csv or .png)");
}

LabelMap load_label_map(const fs::path& path) {
    if (lower_extension(path) == ".csv") {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open '" + path.string() + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        try {
            return label_map_from_csv(ss.str());
        } catch (const IoError& e) {
            throw IoError("'" + path.string() + "': " + e.what());
        }
    }
    RawRaster raw = read_png(path);
    if (raw.channels != 1) throw IoError("'" + path.string() + "': label maps must be single-channel");
    std::vector<Label> labels(raw.samples.size());
    const bool sixteen = raw.bit_depth == 16;
    std::transform(raw.samples.begin(), raw.samples.end(), labels.begin(), [sixteen](std::uint16_t v) {
        return sixteen && v == kPngUnlabeled ? kUnlabeled : static_cast<Label>(v);
    });
    return LabelMap(raw.width, raw.height, std::move(labels));
}

void save_mask(const BinaryMask& mask, const fs::path& path) {
    std::vector<std::uint16_t> samples(mask.size());
    for (std::size_t p = 0; p < mask.size(); ++p) samples[p] = mask[p] ? 255 : 0;
    write_png(path, mask.width(), mask.height(), 1, 8, samples);
}

BinaryMask load_mask(const fs::path& path) {
    RawRaster raw = read_png(path);
    if (raw.channels != 1 || raw.bit_depth != 8) {
        throw IoError("'" + path.string() + "': masks must be 8-bit single-channel PNG");
    }
    BinaryMask mask(raw.width, raw.height);
    for (std::size_t p = 0; p < raw.samples.size(); ++p) mask.set(p, raw.samples[p] != 0);
    return mask;
}

}  // namespace superpix
