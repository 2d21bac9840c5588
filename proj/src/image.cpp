#include "matchnav/image.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace matchnav {

void write_pgm(const Image& img, const std::string& path) {
    if (img.width <= 0 || img.height <= 0)
        throw Error("io-error", "cannot write empty image to " + path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io-error", "cannot open " + path + " for writing");
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> row(static_cast<size_t>(img.width));
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            float v = img.at(x, y);
            if (v < 0.0f) v = 0.0f;
            if (v > 1.0f) v = 1.0f;
            row[static_cast<size_t>(x)] = static_cast<unsigned char>(std::lround(v * 255.0f));
        }
        out.write(reinterpret_cast<const char*>(row.data()), img.width);
    }
    if (!out) throw Error("io-error", "short write to " + path);
}

namespace {

// Skips whitespace and '#' comments in a PGM header.
int next_header_int(std::istream& in, const std::string& path) {
    while (true) {
        int c = in.peek();
        if (c == EOF) throw Error("io-error", "truncated PGM header in " + path);
        if (std::isspace(c)) {
            in.get();
            continue;
        }
        if (c == '#') {
            std::string line;
            std::getline(in, line);
            continue;
        }
        break;
    }
    int value = 0;
    in >> value;
    if (!in) throw Error("io-error", "bad PGM header in " + path);
    return value;
}

} // namespace

Image read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io-error", "cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic != "P5" && magic != "P2")
        throw Error("io-error", path + " is not an 8-bit grayscale PGM (P5/P2)");
    const int w = next_header_int(in, path);
    const int h = next_header_int(in, path);
    const int maxval = next_header_int(in, path);
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255)
        throw Error("io-error", path + ": unsupported PGM geometry or maxval");
    Image img(w, h);
    if (magic == "P5") {
        in.get(); // single whitespace after maxval
        std::vector<unsigned char> buf(static_cast<size_t>(w) * h);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() != static_cast<std::streamsize>(buf.size()))
            throw Error("io-error", path + ": truncated pixel data");
        for (size_t i = 0; i < buf.size(); ++i)
            img.pixels[i] = static_cast<float>(buf[i]) / static_cast<float>(maxval);
    } else {
        for (size_t i = 0; i < img.pixels.size(); ++i) {
            int v = 0;
            in >> v;
            if (!in) throw Error("io-error", path + ": truncated pixel data");
            img.pixels[i] = static_cast<float>(v) / static_cast<float>(maxval);
        }
    }
    return img;
}

} // namespace matchnav
